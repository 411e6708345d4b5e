/** JSON shapes of the session API (v1). Mirrors the server schemas. */

export interface LayoutEntry {
  box: [number, number, number, number]; // x, y, w, h in screenshot pixels
  provenance: "backend" | "fallback" | "inferred";
  confidence: number;
}

export interface LayoutDoc {
  schema_version: number;
  page_size: [number, number];
  entries: Record<string, LayoutEntry>;
}

export interface GridCell {
  col_start: number;
  row_start: number;
  col_span: number;
  row_span: number;
}

export interface GridDoc {
  columns: number;
  rows: number;
  gap: number;
  cells: Record<string, GridCell>;
}

export interface TreeNode {
  id: string;
  label: string;
  box: [number, number, number, number]; // l, t, w, h normalized
  order_index: number;
  grid: GridDoc | null;
  children: TreeNode[];
}

export interface TreeDoc {
  schema_version: number;
  page_size: [number, number];
  root: TreeNode;
}

export interface MetricsDoc {
  schema_version: number;
  r_block: number;
  r_text: number;
  r_pos: number;
  r_color: number;
  composite: number;
  weights: [number, number, number];
  matched_pairs: number;
  reference_blocks: number;
  candidate_blocks: number;
  clip: number | null;
}

export interface SessionInfo {
  id: string;
  revision: number;
  page_size: [number, number];
}
