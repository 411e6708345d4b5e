import { describe, expect, it } from "vitest";

import { applyDrag, boxesEqual, handlePositions, hitTest, validateBox } from "../src/boxes.js";

const PAGE = { width: 1000, height: 800 };

describe("hitTest", () => {
  const box = { x: 100, y: 100, w: 200, h: 100 };

  it("finds corner and edge handles", () => {
    expect(hitTest(box, 100, 100)).toBe("nw");
    expect(hitTest(box, 300, 200)).toBe("se");
    expect(hitTest(box, 200, 100)).toBe("n");
    expect(hitTest(box, 100, 150)).toBe("w");
  });

  it("falls back to move inside the body and null outside", () => {
    expect(hitTest(box, 200, 150)).toBe("move");
    expect(hitTest(box, 50, 50)).toBeNull();
  });
});

describe("applyDrag", () => {
  const box = { x: 100, y: 100, w: 200, h: 100 };

  it("moves without resizing", () => {
    expect(applyDrag(box, "move", 20, -10, PAGE)).toEqual({ x: 120, y: 90, w: 200, h: 100 });
  });

  it("clamps moves to the page", () => {
    const out = applyDrag(box, "move", -500, 5000, PAGE);
    expect(out.x).toBe(0);
    expect(out.y).toBe(PAGE.height - box.h);
  });

  it("resizes from the south-east handle", () => {
    expect(applyDrag(box, "se", 30, 40, PAGE)).toEqual({ x: 100, y: 100, w: 230, h: 140 });
  });

  it("resizes from the north-west handle moving the origin", () => {
    expect(applyDrag(box, "nw", 10, 20, PAGE)).toEqual({ x: 110, y: 120, w: 190, h: 80 });
  });

  it("never lets a resize invert the box", () => {
    const out = applyDrag(box, "e", -5000, 0, PAGE);
    expect(out.w).toBeGreaterThan(0);
  });
});

describe("validateBox (client-side invariant mirror)", () => {
  it("accepts a sane box", () => {
    expect(validateBox({ x: 10, y: 10, w: 100, h: 50 }, PAGE)).toBeNull();
  });

  it("rejects zero or negative size", () => {
    expect(validateBox({ x: 10, y: 10, w: 0, h: 50 }, PAGE)).toMatch(/positive/);
    expect(validateBox({ x: 10, y: 10, w: 100, h: -1 }, PAGE)).toMatch(/positive/);
  });

  it("rejects boxes escaping the page", () => {
    expect(validateBox({ x: 950, y: 10, w: 100, h: 50 }, PAGE)).toMatch(/inside the page/);
    expect(validateBox({ x: -5, y: 10, w: 100, h: 50 }, PAGE)).toMatch(/top-left/);
  });
});

describe("handle layout", () => {
  it("puts eight handles on the box frame", () => {
    const positions = handlePositions({ x: 0, y: 0, w: 10, h: 10 });
    expect(Object.keys(positions)).toHaveLength(8);
    expect(positions.se).toEqual({ x: 10, y: 10 });
  });

  it("boxesEqual tolerates float dust", () => {
    expect(boxesEqual({ x: 0, y: 0, w: 1, h: 1 }, { x: 1e-9, y: 0, w: 1, h: 1 })).toBe(true);
    expect(boxesEqual({ x: 0, y: 0, w: 1, h: 1 }, { x: 0.1, y: 0, w: 1, h: 1 })).toBe(false);
  });
});
