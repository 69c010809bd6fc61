/**
 * Serialize a trained tree into the model-exchange document the
 * classifier package loads. Node ids are assigned in preorder with the
 * root at id 0; thresholds are written as full-precision decimal
 * strings ("<=" goes left on both sides of the exchange).
 */

import { FEATURE_NAMES, type ModelDocument, type NodeRecord, type TreeNode } from "./types.js";
import { treeStats } from "./cart.js";

const CANONICAL = new Set<string>(FEATURE_NAMES);

export const DEFAULT_MAX_DEPTH = 10;
export const DEFAULT_MAX_LEAVES = 1000;

export interface ExportWarnings {
  warnings: string[];
}

export function exportModel(
  tree: TreeNode,
  nClasses: number,
  featureNames: readonly string[] = FEATURE_NAMES,
  onWarning: (message: string) => void = (m) => console.warn(m)
): ModelDocument {
  if (!Number.isInteger(nClasses) || nClasses < 2) {
    throw new Error(`n_classes must be an integer >= 2, got ${nClasses}`);
  }
  const nodes: NodeRecord[] = [];

  const emit = (node: TreeNode): number => {
    const id = nodes.length;
    if (node.kind === "leaf") {
      if (node.label < 0 || node.label >= nClasses) {
        throw new Error(`leaf label ${node.label} outside [0, ${nClasses})`);
      }
      nodes.push({ id, kind: "leaf", label: node.label });
      return id;
    }
    const name = featureNames[node.featureIndex];
    if (name === undefined || !CANONICAL.has(name)) {
      throw new Error(`feature ${name ?? node.featureIndex} is not one of the canonical 12`);
    }
    if (!Number.isFinite(node.threshold)) {
      throw new Error(`non-finite threshold on feature ${name}`);
    }
    const record = {
      id,
      kind: "split" as const,
      feature: name,
      threshold: String(node.threshold),
      left: -1,
      right: -1,
    };
    nodes.push(record);
    record.left = emit(node.left);
    record.right = emit(node.right);
    return id;
  };
  emit(tree);

  const stats = treeStats(tree);
  if (stats.depth > DEFAULT_MAX_DEPTH) {
    onWarning(`exported tree depth ${stats.depth} exceeds the default loader limit ${DEFAULT_MAX_DEPTH}`);
  }
  if (stats.nLeaves > DEFAULT_MAX_LEAVES) {
    onWarning(`exported tree has ${stats.nLeaves} leaves, above the default loader limit ${DEFAULT_MAX_LEAVES}`);
  }

  return {
    format_version: 1,
    n_classes: nClasses,
    feature_names: [...FEATURE_NAMES],
    nodes,
  };
}

export function documentText(doc: ModelDocument): string {
  return JSON.stringify(doc, null, 2) + "\n";
}
