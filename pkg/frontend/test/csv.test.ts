import { mkdtempSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { describe, expect, it } from "vitest";
import { loadCsv, numberColumn, requireColumns, SchemaError } from "../src/csv.js";

function writeTmp(name: string, text: string): string {
  const dir = mkdtempSync(join(tmpdir(), "plots-"));
  const path = join(dir, name);
  writeFileSync(path, text);
  return path;
}

describe("loadCsv", () => {
  it("parses numeric columns", () => {
    const path = writeTmp("a.csv", "x,y\n1,2.5\n3,4e-2\n");
    const table = loadCsv(path);
    expect(table.columns).toEqual(["x", "y"]);
    expect(numberColumn(table, "y")).toEqual([2.5, 0.04]);
  });

  it("keeps non-numeric cells as strings", () => {
    const path = writeTmp("b.csv", "geometry,alpha\nladder_1d,2\n");
    const table = loadCsv(path);
    expect(table.rows[0].geometry).toBe("ladder_1d");
    expect(table.rows[0].alpha).toBe(2);
  });

  it("names the missing column in schema errors", () => {
    const path = writeTmp("c.csv", "x,y\n1,2\n");
    const table = loadCsv(path);
    expect(() => requireColumns(table, ["x", "growth_rate"])).toThrowError(
      /missing column "growth_rate"/,
    );
    expect(() => requireColumns(table, ["x", "growth_rate"])).toThrowError(SchemaError);
  });

  it("rejects non-numeric values where numbers are required", () => {
    const path = writeTmp("d.csv", "x,y\n1,oops\n");
    const table = loadCsv(path);
    expect(() => numberColumn(table, "y")).toThrowError(/non-numeric value/);
  });
});
