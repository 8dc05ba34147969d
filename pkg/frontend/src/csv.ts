/**
 * CSV loading with strict schema validation.
 *
 * Every figure kind declares the columns it needs; a missing column is
 * reported by name so upstream pipeline mismatches are easy to spot.
 */
import { readFileSync } from "fs";
import Papa from "papaparse";

export class SchemaError extends Error {}

export interface Table {
  path: string;
  columns: string[];
  rows: Record<string, number | string>[];
}

export function loadCsv(path: string): Table {
  const text = readFileSync(path, "utf8");
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0];
    throw new SchemaError(`${path}: malformed CSV (${e.message} at row ${e.row})`);
  }
  const columns = parsed.meta.fields ?? [];
  const rows = parsed.data.map((raw) => {
    const row: Record<string, number | string> = {};
    for (const key of columns) {
      const value = raw[key];
      const num = Number(value);
      row[key] = value !== "" && Number.isFinite(num) ? num : value;
    }
    return row;
  });
  return { path, columns, rows };
}

export function requireColumns(table: Table, needed: string[]): void {
  for (const column of needed) {
    if (!table.columns.includes(column)) {
      throw new SchemaError(`${table.path}: missing column "${column}"`);
    }
  }
}

export function numberColumn(table: Table, name: string): number[] {
  requireColumns(table, [name]);
  return table.rows.map((r, i) => {
    const v = r[name];
    if (typeof v !== "number" || !Number.isFinite(v)) {
      throw new SchemaError(`${table.path}: column "${name}" has a non-numeric value at row ${i + 1}`);
    }
    return v;
  });
}
