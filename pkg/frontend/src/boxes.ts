/**
 * Pure geometry for the box-editing overlay: handle hit-testing, drag
 * application, and the client-side mirror of the server's box invariants
 * (positive size, inside the page) so bad edits never reach the wire.
 */

export interface Box {
  x: number;
  y: number;
  w: number;
  h: number;
}

export type HandleId = "nw" | "n" | "ne" | "e" | "se" | "s" | "sw" | "w" | "move";

export const RESIZE_HANDLES: Exclude<HandleId, "move">[] = [
  "nw", "n", "ne", "e", "se", "s", "sw", "w",
];

export const MIN_SIZE_PX = 4;

/** Handle center positions for a box, in the same pixel space. */
export function handlePositions(box: Box): Record<Exclude<HandleId, "move">, { x: number; y: number }> {
  const cx = box.x + box.w / 2;
  const cy = box.y + box.h / 2;
  return {
    nw: { x: box.x, y: box.y },
    n: { x: cx, y: box.y },
    ne: { x: box.x + box.w, y: box.y },
    e: { x: box.x + box.w, y: cy },
    se: { x: box.x + box.w, y: box.y + box.h },
    s: { x: cx, y: box.y + box.h },
    sw: { x: box.x, y: box.y + box.h },
    w: { x: box.x, y: cy },
  };
}

/** Which handle (or body) a point grabs; null when the point misses. */
export function hitTest(box: Box, px: number, py: number, tolerance = 6): HandleId | null {
  const handles = handlePositions(box);
  for (const id of RESIZE_HANDLES) {
    const p = handles[id];
    if (Math.abs(px - p.x) <= tolerance && Math.abs(py - p.y) <= tolerance) return id;
  }
  if (px >= box.x && px <= box.x + box.w && py >= box.y && py <= box.y + box.h) return "move";
  return null;
}

/** Apply a pointer delta to a box via a handle; clamped to the page. */
export function applyDrag(
  box: Box,
  handle: HandleId,
  dx: number,
  dy: number,
  page: { width: number; height: number },
): Box {
  let { x, y, w, h } = box;
  if (handle === "move") {
    x = Math.min(Math.max(0, x + dx), page.width - w);
    y = Math.min(Math.max(0, y + dy), page.height - h);
    return { x, y, w, h };
  }
  let x2 = x + w;
  let y2 = y + h;
  if (handle.includes("w")) x = Math.min(Math.max(0, x + dx), x2 - MIN_SIZE_PX);
  if (handle.includes("e")) x2 = Math.max(Math.min(page.width, x2 + dx), x + MIN_SIZE_PX);
  if (handle.includes("n")) y = Math.min(Math.max(0, y + dy), y2 - MIN_SIZE_PX);
  if (handle.includes("s")) y2 = Math.max(Math.min(page.height, y2 + dy), y + MIN_SIZE_PX);
  return { x, y, w: x2 - x, h: y2 - y };
}

/**
 * Mirror of the server-side box invariants. Returns null when the box is
 * acceptable, else a human-readable reason (shown inline, never sent).
 */
export function validateBox(box: Box, page: { width: number; height: number }): string | null {
  if (!Number.isFinite(box.x) || !Number.isFinite(box.y) ||
      !Number.isFinite(box.w) || !Number.isFinite(box.h)) {
    return "box coordinates must be finite";
  }
  if (box.w <= 0 || box.h <= 0) return "box must have positive width and height";
  if (box.x < 0 || box.y < 0) return "box must not extend past the top-left page edge";
  if (box.x + box.w > page.width + 1e-6 || box.y + box.h > page.height + 1e-6) {
    return "box must stay inside the page";
  }
  return null;
}

export function boxesEqual(a: Box, b: Box, eps = 1e-6): boolean {
  return (
    Math.abs(a.x - b.x) <= eps &&
    Math.abs(a.y - b.y) <= eps &&
    Math.abs(a.w - b.w) <= eps &&
    Math.abs(a.h - b.h) <= eps
  );
}
