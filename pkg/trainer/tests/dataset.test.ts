import { describe, expect, it } from "vitest";

import { normalizeHeader, prepareTable } from "../src/dataset.js";
import { FEATURE_NAMES } from "../src/types.js";
import { separableTable, tableToCsv } from "./util.js";

describe("prepareTable", () => {
  it("maps exact canonical headers one to one", () => {
    const source = separableTable(30);
    const table = prepareTable(tableToCsv(source));
    expect(table.rows).toEqual(source.rows);
    expect(table.labels).toEqual(source.labels);
    expect(table.nClasses).toBe(2);
  });

  it("rejects a zero subsample fraction", () => {
    expect(() => prepareTable(tableToCsv(separableTable(10)), { subsampleFraction: 0 })).toThrow(
      /empty table/
    );
  });

  it("subsamples deterministically", () => {
    const csv = tableToCsv(separableTable(100));
    const a = prepareTable(csv, { subsampleFraction: 0.5, seed: 3 });
    const b = prepareTable(csv, { subsampleFraction: 0.5, seed: 3 });
    expect(a).toEqual(b);
    expect(a.rows.length).toBe(50);
    const c = prepareTable(csv, { subsampleFraction: 0.5, seed: 4 });
    expect(c.rows.length).toBe(50);
    expect(c.rows).not.toEqual(a.rows);
  });

  it("maps aliased headers and converts units", () => {
    const csv = [
      "Source Port,Destination Port,proto,Packet Length,iat_ms,direction,mean_len,mean_iat_ms,mean_dir,mad_len,mad_iat_ms,mad_dir,Class",
      "1234,80,17,100,1.5,0,100,2,0,0,0.25,0,benign",
      "4321,443,6,900,0.5,1,800,1,0.5,12,0.5,0.1,attack",
    ].join("\n");
    const table = prepareTable(csv);
    const iatIdx = FEATURE_NAMES.indexOf("iat");
    const meanIatIdx = FEATURE_NAMES.indexOf("mean_iat");
    const madIatIdx = FEATURE_NAMES.indexOf("mad_iat");
    expect(table.rows[0]![iatIdx]).toBe(1500); // ms -> us
    expect(table.rows[0]![meanIatIdx]).toBe(2000);
    expect(table.rows[0]![madIatIdx]).toBe(250);
    // string labels map by sorted distinct value: attack=0, benign=1
    expect(table.labels).toEqual([1, 0]);
  });

  it("lists every missing feature in the error", () => {
    const csv = "pkt_len,iat,label\n1,2,0\n3,4,1\n";
    expect(() => prepareTable(csv)).toThrow(/src_port/);
    expect(() => prepareTable(csv)).toThrow(/mad_dir/);
  });

  it("requires a label column", () => {
    const csv = [...FEATURE_NAMES].join(",") + "\n" + new Array(12).fill(1).join(",") + "\n";
    expect(() => prepareTable(csv)).toThrow(/label/);
  });

  it("rejects non-numeric feature cells", () => {
    const csv = [...FEATURE_NAMES, "label"].join(",") + "\n" + [...new Array(11).fill(1), "oops", 0].join(",") + "\n";
    expect(() => prepareTable(csv)).toThrow(/not numeric/);
  });

  it("rejects single-class data", () => {
    const source = separableTable(10);
    source.labels.fill(0);
    expect(() => prepareTable(tableToCsv(source))).toThrow(/single class/);
  });

  it("normalizes headers", () => {
    expect(normalizeHeader(" Source Port ")).toBe("source_port");
    expect(normalizeHeader("MAD-IAT/ms")).toBe("mad_iat_ms");
  });
});
