export { train, predict, treeStats } from "./cart.js";
export type { TrainOptions, TrainResult } from "./cart.js";
export { prepareTable, prepareDatasetFile, normalizeHeader } from "./dataset.js";
export { exportModel, documentText } from "./export.js";
export { FEATURE_NAMES, N_FEATURES } from "./types.js";
export type { ModelDocument, TrainingTable, TreeNode } from "./types.js";
