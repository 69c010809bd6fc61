/**
 * CSV ingestion: map dataset columns onto the canonical 12 features,
 * convert units to (bytes, microseconds, 0/1), and subsample
 * deterministically. Dataset schemas vary; the mapping lives here so
 * the exchange format itself stays frozen.
 */

import { readFileSync } from "node:fs";
import Papa from "papaparse";

import { mulberry32, shuffledIndices } from "./rng.js";
import { FEATURE_NAMES, type FeatureName, type TrainingTable } from "./types.js";

interface ColumnTarget {
  name: FeatureName;
  /** multiplier applied to the raw value (unit conversion) */
  scale?: number;
}

/** Normalized-header aliases; canonical names always map to themselves. */
const COLUMN_ALIASES: Record<string, ColumnTarget> = {
  source_port: { name: "src_port" },
  sport: { name: "src_port" },
  destination_port: { name: "dst_port" },
  dport: { name: "dst_port" },
  proto: { name: "protocol" },
  protocol_identifier: { name: "protocol" },
  packet_length: { name: "pkt_len" },
  pkt_len_bytes: { name: "pkt_len" },
  interarrival_time: { name: "iat" },
  iat_us: { name: "iat" },
  iat_ms: { name: "iat", scale: 1000 },
  iat_s: { name: "iat", scale: 1_000_000 },
  mean_iat_ms: { name: "mean_iat", scale: 1000 },
  mean_iat_s: { name: "mean_iat", scale: 1_000_000 },
  mad_iat_ms: { name: "mad_iat", scale: 1000 },
  mad_iat_s: { name: "mad_iat", scale: 1_000_000 },
  mean_pkt_len: { name: "mean_len" },
  mad_pkt_len: { name: "mad_len" },
};

const LABEL_COLUMNS = new Set(["label", "class", "target"]);

export function normalizeHeader(header: string): string {
  return header.trim().toLowerCase().replace(/[\s/-]+/g, "_");
}

function resolveColumn(normalized: string): ColumnTarget | undefined {
  if ((FEATURE_NAMES as readonly string[]).includes(normalized)) {
    return { name: normalized as FeatureName };
  }
  return COLUMN_ALIASES[normalized];
}

export interface PrepareOptions {
  subsampleFraction?: number;
  seed?: number;
}

export function prepareTable(csvText: string, options: PrepareOptions = {}): TrainingTable {
  const fraction = options.subsampleFraction ?? 1.0;
  const seed = options.seed ?? 0;
  if (!(fraction > 0 && fraction <= 1)) {
    throw new Error(`subsample fraction ${fraction} would produce an empty table (need 0 < f <= 1)`);
  }

  const parsed = Papa.parse<Record<string, string>>(csvText, {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0]!;
    throw new Error(`CSV parse error at row ${first.row}: ${first.message}`);
  }
  const headers = parsed.meta.fields ?? [];

  const featureColumn = new Map<FeatureName, { header: string; scale: number }>();
  let labelHeader: string | undefined;
  for (const header of headers) {
    const normalized = normalizeHeader(header);
    if (LABEL_COLUMNS.has(normalized)) {
      labelHeader = header;
      continue;
    }
    const target = resolveColumn(normalized);
    if (target !== undefined && !featureColumn.has(target.name)) {
      featureColumn.set(target.name, { header, scale: target.scale ?? 1 });
    }
  }

  const missing = FEATURE_NAMES.filter((name) => !featureColumn.has(name));
  if (missing.length > 0 || labelHeader === undefined) {
    const parts = [];
    if (missing.length > 0) parts.push(`missing feature column(s): ${missing.join(", ")}`);
    if (labelHeader === undefined) parts.push("missing label column (label/class/target)");
    throw new Error(`cannot map CSV columns: ${parts.join("; ")}`);
  }

  const rows: number[][] = [];
  const rawLabels: string[] = [];
  for (const record of parsed.data) {
    const row: number[] = [];
    for (const name of FEATURE_NAMES) {
      const { header, scale } = featureColumn.get(name)!;
      const value = Number(record[header]);
      if (!Number.isFinite(value)) {
        throw new Error(`row ${rows.length}: column ${header!} is not numeric: ${record[header]}`);
      }
      row.push(value * scale);
    }
    rows.push(row);
    rawLabels.push((record[labelHeader] ?? "").trim());
  }
  if (rows.length === 0) {
    throw new Error("CSV has no data rows");
  }

  // integer labels pass through; anything else maps by sorted distinct value
  const allNumeric = rawLabels.every((v) => /^-?\d+$/.test(v));
  let labels: number[];
  let nClasses: number;
  if (allNumeric) {
    labels = rawLabels.map((v) => parseInt(v, 10));
    const lo = Math.min(...labels);
    if (lo < 0) throw new Error(`labels must be non-negative integers, saw ${lo}`);
    nClasses = Math.max(...labels) + 1;
  } else {
    const distinct = [...new Set(rawLabels)].sort();
    const index = new Map(distinct.map((v, i) => [v, i]));
    labels = rawLabels.map((v) => index.get(v)!);
    nClasses = distinct.length;
  }
  if (nClasses < 2) {
    throw new Error("dataset has a single class; training needs at least two");
  }

  if (fraction < 1) {
    const keep = Math.max(1, Math.round(rows.length * fraction));
    const order = shuffledIndices(rows.length, mulberry32(seed)).slice(0, keep);
    order.sort((a, b) => a - b); // keep original row order for readability
    return { rows: order.map((i) => rows[i]!), labels: order.map((i) => labels[i]!), nClasses };
  }
  return { rows, labels, nClasses };
}

export function prepareDatasetFile(path: string, options: PrepareOptions = {}): TrainingTable {
  return prepareTable(readFileSync(path, "utf8"), options);
}
