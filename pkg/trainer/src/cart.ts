/**
 * CART trainer with Gini impurity and best-first leaf growth.
 *
 * Growth order is by impurity decrease so a leaf budget (maxLeaves)
 * keeps the most useful splits, mirroring how the downstream limits
 * (depth 10, 1000 leaves) are meant to be spent. Everything is
 * deterministic: features are scanned in canonical order, candidate
 * thresholds in sorted order, and ties keep the earliest candidate,
 * so the same table and seed always yield the same tree.
 */

import { mulberry32, shuffledIndices } from "./rng.js";
import type { TrainingTable, TreeNode } from "./types.js";

export interface TrainOptions {
  maxDepth?: number;
  maxLeaves?: number;
  seed?: number;
  /** Fraction of rows used for training; the rest is the holdout. */
  trainFraction?: number;
}

export interface TrainResult {
  tree: TreeNode;
  holdoutAccuracy: number;
  depth: number;
  nLeaves: number;
  trainRows: number;
  holdoutRows: number;
}

interface BestSplit {
  featureIndex: number;
  threshold: number;
  gain: number;
  leftIndices: number[];
  rightIndices: number[];
}

interface Builder {
  indices: number[];
  depth: number;
  label: number;
  split?: BestSplit;
  left?: Builder;
  right?: Builder;
  order: number;
}

const MIN_GAIN = 1e-12;

function giniFromCounts(counts: number[], n: number): number {
  let impurity = 1;
  for (const c of counts) {
    const p = c / n;
    impurity -= p * p;
  }
  return impurity;
}

function classCounts(labels: number[], indices: number[], nClasses: number): number[] {
  const counts = new Array<number>(nClasses).fill(0);
  for (const i of indices) {
    counts[labels[i]!]! += 1;
  }
  return counts;
}

function majorityLabel(counts: number[]): number {
  let best = 0;
  let bestCount = -1;
  for (let label = 0; label < counts.length; label++) {
    if (counts[label]! > bestCount) {
      bestCount = counts[label]!;
      best = label;
    }
  }
  return best;
}

function findBestSplit(
  rows: number[][],
  labels: number[],
  indices: number[],
  nClasses: number
): BestSplit | undefined {
  const n = indices.length;
  if (n < 2) return undefined;
  const totalCounts = classCounts(labels, indices, nClasses);
  const parentCost = giniFromCounts(totalCounts, n) * n;
  if (parentCost < MIN_GAIN) return undefined; // already pure

  const nFeatures = rows[indices[0]!]!.length;
  let best: BestSplit | undefined;

  for (let f = 0; f < nFeatures; f++) {
    const sorted = [...indices].sort((a, b) => rows[a]![f]! - rows[b]![f]!);
    const leftCounts = new Array<number>(nClasses).fill(0);
    const rightCounts = [...totalCounts];

    for (let i = 0; i < n - 1; i++) {
      const idx = sorted[i]!;
      const label = labels[idx]!;
      leftCounts[label]! += 1;
      rightCounts[label]! -= 1;

      const value = rows[idx]![f]!;
      const nextValue = rows[sorted[i + 1]!]![f]!;
      if (value === nextValue) continue; // cannot split between equal values

      const nl = i + 1;
      const nr = n - nl;
      const cost = giniFromCounts(leftCounts, nl) * nl + giniFromCounts(rightCounts, nr) * nr;
      const gain = parentCost - cost;
      if (gain > MIN_GAIN && (best === undefined || gain > best.gain)) {
        best = {
          featureIndex: f,
          threshold: (value + nextValue) / 2,
          gain,
          leftIndices: sorted.slice(0, nl),
          rightIndices: sorted.slice(nl),
        };
      }
    }
  }
  return best;
}

function growTree(
  rows: number[][],
  labels: number[],
  indices: number[],
  nClasses: number,
  maxDepth: number,
  maxLeaves: number
): TreeNode {
  let nextOrder = 0;
  const makeBuilder = (idx: number[], depth: number): Builder => ({
    indices: idx,
    depth,
    label: majorityLabel(classCounts(labels, idx, nClasses)),
    order: nextOrder++,
  });

  const root = makeBuilder(indices, 0);
  const frontier: Builder[] = [];
  const offer = (builder: Builder) => {
    if (builder.depth >= maxDepth) return;
    const split = findBestSplit(rows, labels, builder.indices, nClasses);
    if (split !== undefined) {
      builder.split = split;
      frontier.push(builder);
    }
  };

  offer(root);
  let leaves = 1;
  while (leaves < maxLeaves && frontier.length > 0) {
    let bestAt = 0;
    for (let i = 1; i < frontier.length; i++) {
      const candidate = frontier[i]!;
      const best = frontier[bestAt]!;
      if (
        candidate.split!.gain > best.split!.gain ||
        (candidate.split!.gain === best.split!.gain && candidate.order < best.order)
      ) {
        bestAt = i;
      }
    }
    const builder = frontier.splice(bestAt, 1)[0]!;
    builder.left = makeBuilder(builder.split!.leftIndices, builder.depth + 1);
    builder.right = makeBuilder(builder.split!.rightIndices, builder.depth + 1);
    leaves += 1;
    offer(builder.left);
    offer(builder.right);
  }

  const finalize = (builder: Builder): TreeNode => {
    if (builder.left === undefined || builder.right === undefined) {
      return { kind: "leaf", label: builder.label };
    }
    return {
      kind: "split",
      featureIndex: builder.split!.featureIndex,
      threshold: builder.split!.threshold,
      left: finalize(builder.left),
      right: finalize(builder.right),
    };
  };
  return finalize(root);
}

export function predict(tree: TreeNode, row: number[]): number {
  let node = tree;
  while (node.kind === "split") {
    node = row[node.featureIndex]! <= node.threshold ? node.left : node.right;
  }
  return node.label;
}

export function treeStats(tree: TreeNode): { depth: number; nLeaves: number } {
  if (tree.kind === "leaf") return { depth: 0, nLeaves: 1 };
  const left = treeStats(tree.left);
  const right = treeStats(tree.right);
  return { depth: 1 + Math.max(left.depth, right.depth), nLeaves: left.nLeaves + right.nLeaves };
}

/**
 * Shuffle, hold out a third, grow the tree on the rest, score on the
 * holdout. Throws if the table has fewer than two classes present.
 */
export function train(table: TrainingTable, options: TrainOptions = {}): TrainResult {
  const maxDepth = options.maxDepth ?? 10;
  const maxLeaves = options.maxLeaves ?? 1000;
  const seed = options.seed ?? 0;
  const trainFraction = options.trainFraction ?? 2 / 3;

  if (!Number.isInteger(maxDepth) || maxDepth < 0) {
    throw new Error(`maxDepth must be a non-negative integer, got ${maxDepth}`);
  }
  if (!Number.isInteger(maxLeaves) || maxLeaves < 1) {
    throw new Error(`maxLeaves must be a positive integer, got ${maxLeaves}`);
  }
  const n = table.rows.length;
  if (n === 0) throw new Error("training table is empty");
  if (new Set(table.labels).size < 2) {
    throw new Error("training needs at least two classes present in the data");
  }

  const order = shuffledIndices(n, mulberry32(seed));
  const nTrain = Math.max(1, Math.floor(n * trainFraction));
  const trainIdx = order.slice(0, nTrain);
  const holdoutIdx = order.slice(nTrain);

  const tree = growTree(table.rows, table.labels, trainIdx, table.nClasses, maxDepth, maxLeaves);

  let correct = 0;
  for (const i of holdoutIdx) {
    if (predict(tree, table.rows[i]!) === table.labels[i]) correct += 1;
  }
  const accuracy = holdoutIdx.length > 0 ? correct / holdoutIdx.length : 1;

  const stats = treeStats(tree);
  return {
    tree,
    holdoutAccuracy: accuracy,
    depth: stats.depth,
    nLeaves: stats.nLeaves,
    trainRows: trainIdx.length,
    holdoutRows: holdoutIdx.length,
  };
}
