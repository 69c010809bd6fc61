/**
 * Shared types: the canonical feature order and the model-exchange
 * document shape the classifier package consumes.
 */

export const FEATURE_NAMES = [
  "src_port",
  "dst_port",
  "protocol",
  "pkt_len",
  "iat",
  "direction",
  "mean_len",
  "mean_iat",
  "mean_dir",
  "mad_len",
  "mad_iat",
  "mad_dir",
] as const;

export type FeatureName = (typeof FEATURE_NAMES)[number];

export const N_FEATURES = FEATURE_NAMES.length;

export interface TrainingTable {
  /** Row-major feature matrix, columns in canonical order. */
  rows: number[][];
  /** Integer class labels in [0, nClasses). */
  labels: number[];
  nClasses: number;
}

export type TreeNode = SplitNode | LeafNode;

export interface SplitNode {
  readonly kind: "split";
  readonly featureIndex: number;
  readonly threshold: number;
  readonly left: TreeNode;
  readonly right: TreeNode;
}

export interface LeafNode {
  readonly kind: "leaf";
  readonly label: number;
}

export interface SplitNodeRecord {
  id: number;
  kind: "split";
  feature: string;
  threshold: string;
  left: number;
  right: number;
}

export interface LeafNodeRecord {
  id: number;
  kind: "leaf";
  label: number;
}

export type NodeRecord = SplitNodeRecord | LeafNodeRecord;

export interface ModelDocument {
  format_version: 1;
  n_classes: number;
  feature_names: string[];
  nodes: NodeRecord[];
}
