/**
 * Box-editing overlay: the screenshot sits underneath, one positioned div
 * per labeled region on top, with eight resize handles on the selected
 * box. Edits are staged into the session store on pointer-up; nothing is
 * sent until the user commits.
 */

import { applyDrag, handlePositions, RESIZE_HANDLES, type Box, type HandleId } from "./boxes.js";
import type { SessionState } from "./state.js";

const LABEL_COLORS: Record<string, string> = {
  header: "#2563eb",
  sidebar: "#16a34a",
  navigation: "#d97706",
  main_content: "#9333ea",
};

export class CanvasOverlay {
  readonly element: HTMLElement;
  private imageLayer: HTMLImageElement;
  private boxLayer: HTMLElement;
  selected: string | null = null;
  private scale = 1;
  private drag: { label: string; handle: HandleId; startX: number; startY: number; box: Box } | null =
    null;

  constructor(
    private doc: Document,
    private state: SessionState,
  ) {
    this.element = doc.createElement("div");
    this.element.className = "canvas-overlay";
    this.element.style.position = "relative";
    this.imageLayer = doc.createElement("img");
    this.imageLayer.className = "screenshot-layer";
    this.imageLayer.draggable = false;
    this.boxLayer = doc.createElement("div");
    this.boxLayer.className = "box-layer";
    this.boxLayer.style.position = "absolute";
    this.boxLayer.style.inset = "0";
    this.element.append(this.imageLayer, this.boxLayer);

    this.element.addEventListener("pointerdown", (e) => this.onPointerDown(e as PointerEvent));
    this.element.addEventListener("pointermove", (e) => this.onPointerMove(e as PointerEvent));
    this.element.addEventListener("pointerup", () => this.onPointerUp());
    state.onChange(() => this.render());
  }

  setScreenshot(url: string): void {
    this.imageLayer.src = url;
  }

  setZoom(scale: number): void {
    this.scale = scale;
    this.render();
  }

  /** Page-space labels currently displayed, for tests and tooling. */
  labels(): string[] {
    return this.state.layout ? Object.keys(this.state.layout.entries) : [];
  }

  render(): void {
    const [pageW, pageH] = this.state.pageSize;
    this.element.style.width = `${pageW * this.scale}px`;
    this.element.style.height = `${pageH * this.scale}px`;
    this.imageLayer.style.width = "100%";
    this.imageLayer.style.height = "100%";
    this.boxLayer.textContent = "";
    for (const label of this.labels()) {
      const box = this.state.displayBox(label);
      if (!box) continue;
      const el = this.doc.createElement("div");
      el.className = `region-box${this.state.staged.has(label) ? " staged" : ""}`;
      el.dataset.label = label;
      el.style.position = "absolute";
      el.style.left = `${box.x * this.scale}px`;
      el.style.top = `${box.y * this.scale}px`;
      el.style.width = `${box.w * this.scale}px`;
      el.style.height = `${box.h * this.scale}px`;
      el.style.border = `2px solid ${LABEL_COLORS[label] ?? "#64748b"}`;
      const tag = this.doc.createElement("span");
      tag.className = "region-tag";
      tag.textContent = label;
      el.appendChild(tag);
      if (label === this.selected) {
        el.classList.add("selected");
        for (const handle of RESIZE_HANDLES) {
          const pos = handlePositions(box)[handle];
          const h = this.doc.createElement("div");
          h.className = "resize-handle";
          h.dataset.handle = handle;
          h.style.position = "absolute";
          h.style.left = `${(pos.x - box.x) * this.scale - 4}px`;
          h.style.top = `${(pos.y - box.y) * this.scale - 4}px`;
          el.appendChild(h);
        }
      }
      this.boxLayer.appendChild(el);
    }
  }

  /** Translate client coordinates into page space. */
  private pagePoint(e: PointerEvent): { x: number; y: number } {
    const rect = this.element.getBoundingClientRect();
    return { x: (e.clientX - rect.left) / this.scale, y: (e.clientY - rect.top) / this.scale };
  }

  private onPointerDown(e: PointerEvent): void {
    const target = e.target as HTMLElement;
    const handle = (target.dataset.handle as HandleId | undefined) ?? undefined;
    const regionEl = target.closest?.(".region-box") as HTMLElement | null;
    const label = regionEl?.dataset.label;
    if (!label) {
      this.selected = null;
      this.render();
      return;
    }
    this.selected = label;
    const box = this.state.displayBox(label);
    if (!box) return;
    const p = this.pagePoint(e);
    this.drag = { label, handle: handle ?? "move", startX: p.x, startY: p.y, box };
    this.render();
  }

  private onPointerMove(e: PointerEvent): void {
    if (!this.drag) return;
    const p = this.pagePoint(e);
    const next = applyDrag(
      this.drag.box,
      this.drag.handle,
      p.x - this.drag.startX,
      p.y - this.drag.startY,
      { width: this.state.pageSize[0], height: this.state.pageSize[1] },
    );
    this.state.stageBoxEdit(this.drag.label, next);
  }

  private onPointerUp(): void {
    this.drag = null;
  }
}
