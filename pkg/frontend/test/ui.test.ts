// @vitest-environment happy-dom
import { beforeEach, describe, expect, it } from "vitest";

import { SessionApi } from "../src/api.js";
import { CanvasOverlay } from "../src/canvas.js";
import { SideBySidePreview } from "../src/preview.js";
import { SessionState } from "../src/state.js";
import { TreePanel, reorderSibling } from "../src/treePanel.js";
import type { MetricsDoc, TreeDoc } from "../src/types.js";
import { FakeServer } from "./fakeServer.js";

let server: FakeServer;
let state: SessionState;

beforeEach(async () => {
  server = new FakeServer();
  state = new SessionState(new SessionApi("", server.fetch));
  await state.create("aW1hZ2U=");
});

describe("canvas overlay", () => {
  it("mirrors the session layout as one box per label", () => {
    const overlay = new CanvasOverlay(document, state);
    overlay.render();
    const boxes = overlay.element.querySelectorAll(".region-box");
    expect(boxes.length).toBe(3);
    const labels = [...boxes].map((b) => (b as HTMLElement).dataset.label);
    expect(labels).toContain("header");
    expect(labels).toContain("sidebar");
  });

  it("marks staged boxes and shows handles on selection", () => {
    const overlay = new CanvasOverlay(document, state);
    state.stageBoxEdit("header", { x: 0, y: 10, w: 1000, h: 90 });
    overlay.selected = "header";
    overlay.render();
    const staged = overlay.element.querySelector(".region-box.staged") as HTMLElement;
    expect(staged.dataset.label).toBe("header");
    expect(staged.querySelectorAll(".resize-handle").length).toBe(8);
    expect(staged.style.top).toBe("10px");
  });

  it("scales box geometry with zoom", () => {
    const overlay = new CanvasOverlay(document, state);
    overlay.setZoom(0.5);
    const header = [...overlay.element.querySelectorAll(".region-box")].find(
      (b) => (b as HTMLElement).dataset.label === "header",
    ) as HTMLElement;
    expect(header.style.width).toBe("500px"); // 1000px page at 0.5
  });
});

describe("sandboxed preview", () => {
  it("renders html into a no-privileges iframe", () => {
    const preview = new SideBySidePreview(document);
    preview.setHtml("<p>hello</p><script>window.__pwned = true;<" + "/script>");
    expect(preview.frame.getAttribute("sandbox")).toBe("");
    expect(preview.frame.srcdoc).toContain("hello");
    // empty sandbox tokens = no allow-scripts: generated content cannot run
    expect(preview.frame.getAttribute("sandbox")).not.toContain("allow-scripts");
    expect((window as { __pwned?: boolean }).__pwned).toBeUndefined();
  });

  it("shows metric badges and hides them when metrics are missing", () => {
    const preview = new SideBySidePreview(document);
    preview.setMetrics({
      schema_version: 1, r_block: 0.9, r_text: 0.8, r_pos: 0.7, r_color: 0.6,
      composite: 0.81, weights: [0.4, 0.3, 0.3],
      matched_pairs: 3, reference_blocks: 3, candidate_blocks: 3, clip: null,
    } satisfies MetricsDoc);
    expect(preview.element.querySelectorAll(".badge").length).toBe(4);
    preview.setMetrics(null);
    expect(preview.element.querySelectorAll(".badge").length).toBe(0);
    expect((preview.element.querySelector(".metric-badges") as HTMLElement).style.display).toBe("none");
  });

  it("zoom applies to both panes", () => {
    const preview = new SideBySidePreview(document);
    preview.setZoom(1.5);
    expect(preview.frame.style.transform).toBe("scale(1.5)");
    expect(
      (preview.element.querySelector(".pane-screenshot") as HTMLElement).style.transform,
    ).toBe("scale(1.5)");
  });
});

describe("tree panel", () => {
  it("is isomorphic to the session tree", () => {
    const panel = new TreePanel(document, state);
    panel.render();
    const nodes = panel.element.querySelectorAll("details.tree-node");
    expect(nodes.length).toBe(4); // root + three regions
    const ids = [...nodes].map((n) => (n as HTMLElement).dataset.nodeId);
    expect(ids).toContain("node-main_content");
  });

  it("reorderSibling swaps order with a neighbor and stops at edges", () => {
    const tree = JSON.parse(JSON.stringify(state.tree)) as TreeDoc;
    const before = [...tree.root.children]
      .sort((a, b) => a.order_index - b.order_index)
      .map((n) => n.id);
    expect(reorderSibling(tree, before[0], -1)).toBe(false);
    expect(reorderSibling(tree, before[0], 1)).toBe(true);
    const after = [...tree.root.children]
      .sort((a, b) => a.order_index - b.order_index)
      .map((n) => n.id);
    expect(after[0]).toBe(before[1]);
    expect(after[1]).toBe(before[0]);
  });

  it("commits a reorder through put-tree", async () => {
    const panel = new TreePanel(document, state);
    const first = [...state.tree!.root.children].sort((a, b) => a.order_index - b.order_index)[0];
    await panel.reorder(first.id, 1);
    expect(state.revision).toBe(2);
    const order = [...state.tree!.root.children]
      .sort((a, b) => a.order_index - b.order_index)
      .map((n) => n.id);
    expect(order[1]).toBe(first.id);
  });
});
