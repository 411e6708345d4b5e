/**
 * Collapsible layout-tree panel with a per-node instruction input and
 * sibling reorder buttons. Structure always mirrors the session tree;
 * reorders and instructions go straight through the API via the store.
 */

import type { SessionState } from "./state.js";
import type { TreeDoc, TreeNode } from "./types.js";

function cloneTree(tree: TreeDoc): TreeDoc {
  return JSON.parse(JSON.stringify(tree)) as TreeDoc;
}

/** Swap a node's order_index with its neighbor; returns false at the edge. */
export function reorderSibling(tree: TreeDoc, nodeId: string, direction: -1 | 1): boolean {
  const walk = (parent: TreeNode): boolean => {
    const ordered = [...parent.children].sort((a, b) => a.order_index - b.order_index);
    const idx = ordered.findIndex((c) => c.id === nodeId);
    if (idx >= 0) {
      const target = idx + direction;
      if (target < 0 || target >= ordered.length) return false;
      const a = ordered[idx];
      const b = ordered[target];
      [a.order_index, b.order_index] = [b.order_index, a.order_index];
      return true;
    }
    return parent.children.some(walk);
  };
  return walk(tree.root);
}

export class TreePanel {
  readonly element: HTMLElement;
  onNotice: (message: string) => void = () => {};

  constructor(
    private doc: Document,
    private state: SessionState,
  ) {
    this.element = doc.createElement("div");
    this.element.className = "tree-panel";
    state.onChange(() => this.render());
  }

  render(): void {
    this.element.textContent = "";
    if (!this.state.tree) return;
    this.element.appendChild(this.renderNode(this.state.tree.root));
  }

  private renderNode(node: TreeNode): HTMLElement {
    const details = this.doc.createElement("details");
    details.open = true;
    details.className = "tree-node";
    details.dataset.nodeId = node.id;

    const summary = this.doc.createElement("summary");
    summary.textContent = `${node.label} (${node.id})`;
    details.appendChild(summary);

    if (node.id !== this.state.tree?.root.id) {
      details.appendChild(this.renderControls(node));
    }
    const children = [...node.children].sort((a, b) => a.order_index - b.order_index);
    for (const child of children) {
      details.appendChild(this.renderNode(child));
    }
    return details;
  }

  private renderControls(node: TreeNode): HTMLElement {
    const row = this.doc.createElement("div");
    row.className = "node-controls";

    const up = this.doc.createElement("button");
    up.textContent = "move up";
    up.dataset.action = "up";
    const down = this.doc.createElement("button");
    down.textContent = "move down";
    down.dataset.action = "down";
    for (const [button, dir] of [[up, -1], [down, 1]] as const) {
      button.addEventListener("click", () => {
        void this.reorder(node.id, dir);
      });
    }

    const input = this.doc.createElement("input");
    input.type = "text";
    input.placeholder = "instruction, e.g. use dark theme";
    input.className = "instruction-input";
    const apply = this.doc.createElement("button");
    apply.textContent = "regenerate";
    apply.dataset.action = "regenerate";
    apply.addEventListener("click", () => {
      void this.instruct(node.id, input.value);
    });

    const history = this.state.instructionHistory.get(node.id) ?? [];
    if (history.length) {
      const past = this.doc.createElement("div");
      past.className = "instruction-history";
      past.textContent = history.join(" | ");
      row.appendChild(past);
    }

    row.append(up, down, input, apply);
    return row;
  }

  async reorder(nodeId: string, direction: -1 | 1): Promise<void> {
    if (!this.state.tree) return;
    const tree = cloneTree(this.state.tree);
    if (!reorderSibling(tree, nodeId, direction)) return;
    await this.state.commitTree(tree);
  }

  async instruct(nodeId: string, instruction: string): Promise<void> {
    if (!instruction.trim()) return;
    const problem = await this.state.instruct(nodeId, instruction.trim());
    if (problem) this.onNotice(problem);
  }
}
