/** Synthetic tables for the trainer tests. */

import { mulberry32 } from "../src/rng.js";
import { FEATURE_NAMES, type TrainingTable } from "../src/types.js";

export const PKT_LEN_IDX = FEATURE_NAMES.indexOf("pkt_len");

/**
 * Linearly separable by packet length with a dead zone around 500:
 * below 480 is label 0, above 520 is label 1. No row sits near the
 * boundary, so a depth-1 tree classifies the holdout perfectly.
 */
export function separableTable(n: number, seed = 1): TrainingTable {
  const rand = mulberry32(seed);
  const rows: number[][] = [];
  const labels: number[] = [];
  for (let i = 0; i < n; i++) {
    const benign = i % 2 === 0;
    const pktLen = benign ? 100 + Math.floor(rand() * 380) : 521 + Math.floor(rand() * 480);
    const row = FEATURE_NAMES.map(() => Math.floor(rand() * 1000) / 8);
    row[PKT_LEN_IDX] = pktLen;
    rows.push(row);
    labels.push(benign ? 0 : 1);
  }
  return { rows, labels, nClasses: 2 };
}

export function tableToCsv(table: TrainingTable, headers?: string[]): string {
  const names = headers ?? [...FEATURE_NAMES, "label"];
  const lines = [names.join(",")];
  table.rows.forEach((row, i) => {
    lines.push([...row, table.labels[i]!].join(","));
  });
  return lines.join("\n") + "\n";
}
