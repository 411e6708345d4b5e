/**
 * App bootstrap: upload a screenshot, then edit boxes on the canvas, the
 * tree in the panel, and watch the sandboxed preview track every commit.
 */

import { SessionApi } from "./api.js";
import { CanvasOverlay } from "./canvas.js";
import { SideBySidePreview } from "./preview.js";
import { SessionState } from "./state.js";
import { TreePanel } from "./treePanel.js";

export function mountApp(root: HTMLElement, baseUrl = ""): {
  state: SessionState;
  overlay: CanvasOverlay;
  preview: SideBySidePreview;
  panel: TreePanel;
} {
  const doc = root.ownerDocument;
  const api = new SessionApi(baseUrl);
  const state = new SessionState(api);

  const notices = doc.createElement("div");
  notices.className = "notices";
  const notify = (message: string) => {
    const line = doc.createElement("div");
    line.className = "notice";
    line.textContent = message;
    notices.appendChild(line);
  };

  const uploader = doc.createElement("input");
  uploader.type = "file";
  uploader.accept = "image/*";
  uploader.addEventListener("change", () => {
    const file = uploader.files?.[0];
    if (!file) return;
    const reader = new FileReader();
    reader.onload = () => {
      const dataUrl = reader.result as string;
      const b64 = dataUrl.slice(dataUrl.indexOf(",") + 1);
      void state.create(b64).then(() => {
        overlay.setScreenshot(dataUrl);
        preview.setScreenshot(dataUrl);
      });
    };
    reader.readAsDataURL(file);
  });

  const overlay = new CanvasOverlay(doc, state);
  const panel = new TreePanel(doc, state);
  panel.onNotice = notify;
  const preview = new SideBySidePreview(doc);

  const commit = doc.createElement("button");
  commit.textContent = "commit layout";
  commit.className = "commit-layout";
  commit.addEventListener("click", () => {
    void state.commitLayout().then((result) => {
      if (result.notice) notify(result.notice);
    });
  });

  const zoom = doc.createElement("input");
  zoom.type = "range";
  zoom.min = "0.25";
  zoom.max = "2";
  zoom.step = "0.25";
  zoom.value = "1";
  zoom.addEventListener("input", () => {
    const factor = Number(zoom.value);
    overlay.setZoom(factor);
    preview.setZoom(factor);
  });

  state.onChange(() => {
    preview.setHtml(state.html);
    preview.setMetrics(state.metrics);
  });

  root.append(uploader, commit, zoom, notices, overlay.element, panel.element, preview.element);
  return { state, overlay, preview, panel };
}
