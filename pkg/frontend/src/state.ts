/**
 * Session store: the single owner of revision tracking and staged edits.
 *
 * Box edits are staged locally and sent in one put-layout commit. A 409
 * triggers the documented recovery: refetch the server layout, drop the
 * staged edits whose regions changed under us, replay the rest, and
 * surface a notice describing what was dropped.
 */

import { ConflictError, NotFoundError, SessionApi } from "./api.js";
import { boxesEqual, validateBox, type Box } from "./boxes.js";
import type { LayoutDoc, MetricsDoc, SessionInfo, TreeDoc } from "./types.js";

export interface CommitResult {
  committed: boolean;
  replayed: string[]; // labels re-applied after a conflict
  dropped: string[]; // labels lost to the conflicting writer
  notice: string | null;
}

export type Listener = () => void;

function entryBox(layout: LayoutDoc, label: string): Box {
  const [x, y, w, h] = layout.entries[label].box;
  return { x, y, w, h };
}

export class SessionState {
  id = "";
  revision = 0;
  pageSize: [number, number] = [0, 0];
  layout: LayoutDoc | null = null;
  tree: TreeDoc | null = null;
  html = "";
  metrics: MetricsDoc | null = null;
  /** Staged, uncommitted box edits plus the server box they started from. */
  staged = new Map<string, { box: Box; base: Box }>();
  instructionHistory = new Map<string, string[]>();

  private listeners = new Set<Listener>();

  constructor(private api: SessionApi) {}

  onChange(fn: Listener): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }

  private emit() {
    for (const fn of this.listeners) fn();
  }

  async create(imageB64: string): Promise<SessionInfo> {
    const info = await this.api.createSession(imageB64);
    this.id = info.id;
    this.revision = info.revision;
    this.pageSize = info.page_size;
    await this.refresh();
    return info;
  }

  /** Pull every stage artifact for the current revision. */
  async refresh(): Promise<void> {
    const [layout, tree, html, metrics] = await Promise.all([
      this.api.getLayout(this.id),
      this.api.getTree(this.id),
      this.api.getHtml(this.id),
      this.api.getMetrics(this.id),
    ]);
    this.revision = layout.revision;
    this.layout = layout.layout;
    this.tree = tree.tree;
    this.html = html;
    this.metrics = metrics;
    this.emit();
  }

  /** The box the overlay should display: staged edit wins over server state. */
  displayBox(label: string): Box | null {
    const stagedEntry = this.staged.get(label);
    if (stagedEntry) return stagedEntry.box;
    if (this.layout && label in this.layout.entries) return entryBox(this.layout, label);
    return null;
  }

  /** Stage one box edit; rejects invalid boxes before they reach the wire. */
  stageBoxEdit(label: string, box: Box): string | null {
    if (!this.layout || !(label in this.layout.entries)) return `unknown region ${label}`;
    const problem = validateBox(box, {
      width: this.pageSize[0],
      height: this.pageSize[1],
    });
    if (problem) return problem;
    const existing = this.staged.get(label);
    const base = existing ? existing.base : entryBox(this.layout, label);
    this.staged.set(label, { box, base });
    this.emit();
    return null;
  }

  discardStaged(): void {
    this.staged.clear();
    this.emit();
  }

  private layoutWithStaged(layout: LayoutDoc): LayoutDoc {
    const entries = { ...layout.entries };
    for (const [label, { box }] of this.staged) {
      if (label in entries) {
        entries[label] = {
          ...entries[label],
          box: [box.x, box.y, box.w, box.h],
        };
      }
    }
    return { ...layout, entries };
  }

  /** Commit staged edits via put-layout, recovering from 409 once. */
  async commitLayout(): Promise<CommitResult> {
    if (!this.layout || this.staged.size === 0) {
      return { committed: false, replayed: [], dropped: [], notice: null };
    }
    try {
      const { revision } = await this.api.putLayout(
        this.id,
        this.layoutWithStaged(this.layout),
        this.revision,
      );
      this.revision = revision;
      this.staged.clear();
      await this.refresh();
      return { committed: true, replayed: [], dropped: [], notice: null };
    } catch (err) {
      if (!(err instanceof ConflictError)) throw err;
    }

    // conflict: refetch, then replay only the edits whose regions the
    // other writer did not touch
    const fresh = await this.api.getLayout(this.id);
    const dropped: string[] = [];
    const replayed: string[] = [];
    for (const [label, { base }] of [...this.staged]) {
      const serverBox =
        label in fresh.layout.entries ? entryBox(fresh.layout, label) : null;
      if (serverBox === null || !boxesEqual(serverBox, base)) {
        this.staged.delete(label);
        dropped.push(label);
      } else {
        replayed.push(label);
      }
    }
    this.revision = fresh.revision;
    this.layout = fresh.layout;

    if (this.staged.size === 0) {
      await this.refresh();
      return {
        committed: false,
        replayed: [],
        dropped,
        notice: `edit conflict: your changes to ${dropped.join(", ")} were superseded`,
      };
    }
    const { revision } = await this.api.putLayout(
      this.id,
      this.layoutWithStaged(this.layout),
      this.revision,
    );
    this.revision = revision;
    this.staged.clear();
    await this.refresh();
    const notice = dropped.length
      ? `edit conflict: replayed ${replayed.join(", ")}; dropped ${dropped.join(", ")}`
      : null;
    return { committed: true, replayed, dropped, notice };
  }

  /** Commit a whole tree document (reorder, box tweaks on nodes). */
  async commitTree(tree: TreeDoc): Promise<void> {
    const { revision } = await this.api.putTree(this.id, tree, this.revision);
    this.revision = revision;
    await this.refresh();
  }

  /**
   * Per-node natural-language instruction; history kept per node.
   * Last-write-wins: every attempt uses the current revision.
   */
  async instruct(nodeId: string, instruction: string): Promise<string | null> {
    try {
      const { revision } = await this.api.regenerateNode(
        this.id,
        nodeId,
        instruction,
        this.revision,
      );
      this.revision = revision;
      const history = this.instructionHistory.get(nodeId) ?? [];
      history.push(instruction);
      this.instructionHistory.set(nodeId, history);
      await this.refresh();
      return null;
    } catch (err) {
      if (err instanceof NotFoundError) return `component not found: ${nodeId}`;
      if (err instanceof ConflictError) {
        // someone else moved the session forward; re-sync and retry once
        await this.refresh();
        return this.instruct(nodeId, instruction);
      }
      throw err;
    }
  }
}
