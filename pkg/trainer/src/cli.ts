/**
 * train --csv data.csv --out model.json [--max-depth 10]
 *       [--max-leaves 1000] [--seed 0] [--subsample 1.0]
 */

import { writeFileSync } from "node:fs";
import process from "node:process";

import { train } from "./cart.js";
import { prepareDatasetFile } from "./dataset.js";
import { documentText, exportModel } from "./export.js";

interface Args {
  csv: string;
  out: string;
  maxDepth: number;
  maxLeaves: number;
  seed: number;
  subsample: number;
}

function usage(): never {
  console.error(
    "usage: train --csv <file> --out <file> [--max-depth N] [--max-leaves N] [--seed K] [--subsample F]"
  );
  process.exit(2);
}

function parseArgs(argv: string[]): Args {
  const values = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (flag === undefined || !flag.startsWith("--") || value === undefined) usage();
    values.set(flag.slice(2), value);
  }
  const known = new Set(["csv", "out", "max-depth", "max-leaves", "seed", "subsample"]);
  for (const key of values.keys()) {
    if (!known.has(key)) usage();
  }
  const csv = values.get("csv");
  const out = values.get("out");
  if (csv === undefined || out === undefined) usage();
  return {
    csv,
    out,
    maxDepth: parseInt(values.get("max-depth") ?? "10", 10),
    maxLeaves: parseInt(values.get("max-leaves") ?? "1000", 10),
    seed: parseInt(values.get("seed") ?? "0", 10),
    subsample: parseFloat(values.get("subsample") ?? "1.0"),
  };
}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch {
    return 2;
  }
  try {
    const table = prepareDatasetFile(args.csv, {
      subsampleFraction: args.subsample,
      seed: args.seed,
    });
    const result = train(table, {
      maxDepth: args.maxDepth,
      maxLeaves: args.maxLeaves,
      seed: args.seed,
    });
    const doc = exportModel(result.tree, table.nClasses);
    writeFileSync(args.out, documentText(doc));
    console.log(
      `wrote ${args.out}: depth ${result.depth}, ${result.nLeaves} leaves, ` +
        `holdout accuracy ${(result.holdoutAccuracy * 100).toFixed(2)}% ` +
        `(${result.trainRows} train / ${result.holdoutRows} holdout rows)`
    );
    return 0;
  } catch (error) {
    console.error(`error: ${error instanceof Error ? error.message : String(error)}`);
    return 1;
  }
}

if (import.meta.url === `file://${process.argv[1]}`) {
  process.exit(main(process.argv.slice(2)));
}
