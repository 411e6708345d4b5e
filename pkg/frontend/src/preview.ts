/**
 * Side-by-side preview: the screenshot next to the rendered page in a
 * sandboxed iframe (no scripts, ever), with synchronized zoom and metric
 * badges that simply hide when metrics are unavailable.
 */

import type { MetricsDoc } from "./types.js";

const BADGES: [keyof MetricsDoc, string][] = [
  ["r_block", "block"],
  ["r_text", "text"],
  ["r_pos", "position"],
  ["r_color", "color"],
];

export class SideBySidePreview {
  readonly element: HTMLElement;
  readonly frame: HTMLIFrameElement;
  private screenshotPane: HTMLImageElement;
  private badgeBar: HTMLElement;
  private zoom = 1;

  constructor(doc: Document) {
    this.element = doc.createElement("div");
    this.element.className = "side-by-side";

    this.screenshotPane = doc.createElement("img");
    this.screenshotPane.className = "pane pane-screenshot";
    this.screenshotPane.draggable = false;

    this.frame = doc.createElement("iframe");
    this.frame.className = "pane pane-render";
    // Empty sandbox: generated content must never execute scripts,
    // navigate, or reach back into the app.
    this.frame.setAttribute("sandbox", "");
    this.frame.setAttribute("referrerpolicy", "no-referrer");

    this.badgeBar = doc.createElement("div");
    this.badgeBar.className = "metric-badges";

    this.element.append(this.screenshotPane, this.frame, this.badgeBar);
  }

  setScreenshot(url: string): void {
    this.screenshotPane.src = url;
  }

  setHtml(html: string): void {
    this.frame.srcdoc = html;
  }

  /** Render-fetch failure: show a placeholder pane instead of a modal. */
  setUnavailable(message: string): void {
    this.frame.srcdoc = `<p class="preview-unavailable">${message}</p>`;
  }

  setZoom(factor: number): void {
    this.zoom = factor;
    this.screenshotPane.style.transform = `scale(${factor})`;
    this.frame.style.transform = `scale(${factor})`;
  }

  get zoomFactor(): number {
    return this.zoom;
  }

  setMetrics(metrics: MetricsDoc | null): void {
    this.badgeBar.textContent = "";
    this.badgeBar.style.display = metrics ? "" : "none";
    if (!metrics) return;
    const doc = this.badgeBar.ownerDocument;
    for (const [key, label] of BADGES) {
      const badge = doc.createElement("span");
      badge.className = "badge";
      badge.dataset.metric = label;
      badge.textContent = `${label} ${(metrics[key] as number).toFixed(3)}`;
      this.badgeBar.appendChild(badge);
    }
  }
}
