#!/usr/bin/env node
/**
 * plots render --kind <kind> --in <paths> --out <file> [--log-x] [--log-y]
 *
 * Renders a deterministic SVG figure from the toolkit's CSV outputs.
 */
import { writeFileSync } from "fs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { KINDS, Kind, renderFigure } from "./figures.js";
import { SchemaError } from "./csv.js";

export async function main(argv: string[]): Promise<number> {
  const parsed = await yargs(argv)
    .command("render", "render a figure from CSV inputs", (y) =>
      y
        .option("kind", { type: "string", choices: [...KINDS], demandOption: true })
        .option("in", { type: "string", demandOption: true, describe: "comma-separated CSV paths" })
        .option("out", { type: "string", demandOption: true })
        .option("log-x", { type: "boolean", default: false })
        .option("log-y", { type: "boolean", default: false }),
    )
    .demandCommand(1)
    .strict()
    .fail((msg, err) => {
      throw err ?? new Error(msg);
    })
    .parse();

  const paths = String(parsed.in)
    .split(",")
    .map((s) => s.trim())
    .filter(Boolean);
  const svg = renderFigure(parsed.kind as Kind, paths, {
    logX: Boolean(parsed["log-x"]),
    logY: Boolean(parsed["log-y"]),
  });
  writeFileSync(String(parsed.out), svg);
  console.error(`wrote ${parsed.out}`);
  return 0;
}

const isMain = process.argv[1] && process.argv[1].endsWith("cli.js");
if (isMain) {
  main(hideBin(process.argv))
    .then((code) => process.exit(code))
    .catch((err) => {
      const prefix = err instanceof SchemaError ? "schema error" : "error";
      console.error(`${prefix}: ${err.message}`);
      process.exit(1);
    });
}
