/**
 * In-process implementation of the /v1 session contract, used as the
 * fixture-backed server for UI round-trip tests: same JSON schemas,
 * revision semantics, and status codes as the real service.
 */

import type { GridDoc, LayoutDoc, MetricsDoc, TreeDoc, TreeNode } from "../src/types.js";

export interface FakeSession {
  id: string;
  revision: number;
  pageSize: [number, number];
  layout: LayoutDoc;
  tree: TreeDoc;
  fragments: Record<string, string>; // node id -> inner HTML
}

const FIXTURE_LAYOUT: Record<string, [number, number, number, number]> = {
  header: [0, 0, 1000, 100],
  sidebar: [0, 100, 200, 700],
  main_content: [200, 100, 800, 700],
};

/** Fragment fixtures keyed by label or `label::instruction`. */
export const FIXTURE_FRAGMENTS: Record<string, string> = {
  header: "header",
  sidebar: "sidebar",
  main_content: "main_content",
  "sidebar::use dark theme": "dark-sidebar-fixture",
};

function layoutToTree(layout: LayoutDoc): TreeDoc {
  const [pw, ph] = layout.page_size;
  const children: TreeNode[] = Object.entries(layout.entries)
    .map(([label, entry], i) => {
      const [x, y, w, h] = entry.box;
      return {
        id: `node-${label}`,
        label,
        box: [x / pw, y / ph, w / pw, h / ph] as [number, number, number, number],
        order_index: i,
        grid: null as GridDoc | null,
        children: [],
      };
    })
    .sort((a, b) => a.box[1] - b.box[1] || a.box[0] - b.box[0])
    .map((node, i) => ({ ...node, order_index: i }));
  return {
    schema_version: 1,
    page_size: layout.page_size,
    root: {
      id: "root",
      label: "container",
      box: [0, 0, 1, 1],
      order_index: 0,
      grid: null,
      children,
    },
  };
}

function renderHtml(session: FakeSession): string {
  const nodes = [...session.tree.root.children]
    .sort((a, b) => a.order_index - b.order_index)
    .map((node) => {
      const [l, t, w, h] = node.box;
      const body = session.fragments[node.id] ?? node.label;
      const style = `left: ${l * 100}%; top: ${t * 100}%; width: ${w * 100}%; height: ${h * 100}%`;
      return `      <div class="box placeholder bg-gray-400" style="${style}" data-node="${node.id}">${body}</div>`;
    })
    .join("\n");
  return [
    "<!DOCTYPE html>",
    "<html>",
    "  <body>",
    `    <div class="root" data-node="root" data-revision="${session.revision}">`,
    nodes,
    "    </div>",
    "  </body>",
    "</html>",
    "",
  ].join("\n");
}

const METRICS: MetricsDoc = {
  schema_version: 1,
  r_block: 1.0,
  r_text: 1.0,
  r_pos: 1.0,
  r_color: 1.0,
  composite: 1.0,
  weights: [0.4, 0.3, 0.3],
  matched_pairs: 3,
  reference_blocks: 3,
  candidate_blocks: 3,
  clip: null,
};

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

export class FakeServer {
  sessions = new Map<string, FakeSession>();
  metricsAvailable = true;
  private counter = 0;

  /** A fetch-compatible handler bound to this server. */
  fetch = async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
    const url = typeof input === "string" ? input : input instanceof URL ? input.href : input.url;
    const method = init?.method ?? "GET";
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const body = init?.body ? JSON.parse(init.body as string) : null;
    return this.route(method, path, body);
  };

  private route(method: string, path: string, body: any): Response {
    if (method === "POST" && path === "/v1/sessions") {
      const id = `fake-${this.counter++}`;
      const layout: LayoutDoc = {
        schema_version: 1,
        page_size: [1000, 800],
        entries: Object.fromEntries(
          Object.entries(FIXTURE_LAYOUT).map(([label, box]) => [
            label,
            { box: [...box] as [number, number, number, number], provenance: "backend" as const, confidence: 0.9 },
          ]),
        ),
      };
      const session: FakeSession = {
        id,
        revision: 1,
        pageSize: [1000, 800],
        layout,
        tree: layoutToTree(layout),
        fragments: Object.fromEntries(
          Object.keys(FIXTURE_LAYOUT).map((label) => [`node-${label}`, FIXTURE_FRAGMENTS[label]]),
        ),
      };
      this.sessions.set(id, session);
      return json(201, { id, revision: 1, page_size: session.pageSize });
    }

    const match = path.match(/^\/v1\/sessions\/([^/]+)(\/.*)?$/);
    if (!match) return json(404, { detail: `no route ${path}` });
    const session = this.sessions.get(match[1]);
    if (!session) return json(404, { detail: `unknown session ${match[1]}` });
    const rest = match[2] ?? "";

    if (method === "GET") {
      if (rest === "") {
        return json(200, { id: session.id, revision: session.revision, page_size: session.pageSize });
      }
      if (rest === "/layout") return json(200, { revision: session.revision, layout: session.layout });
      if (rest === "/tree") return json(200, { revision: session.revision, tree: session.tree });
      if (rest === "/html") {
        return new Response(renderHtml(session), {
          status: 200,
          headers: { "content-type": "text/html" },
        });
      }
      if (rest === "/metrics") {
        return this.metricsAvailable ? json(200, METRICS) : json(500, { detail: "metrics offline" });
      }
    }

    if (method === "PUT" && (rest === "/layout" || rest === "/tree")) {
      if (body.revision !== session.revision) {
        return json(409, { detail: "stale revision", revision: session.revision });
      }
      if (rest === "/layout") {
        for (const entry of Object.values(body.layout.entries) as { box: number[] }[]) {
          const [, , w, h] = entry.box;
          if (w <= 0 || h <= 0) return json(422, { detail: "box must have positive size" });
        }
        session.layout = body.layout;
        session.tree = layoutToTree(session.layout);
      } else {
        session.tree = body.tree;
      }
      session.revision += 1;
      return json(200, { revision: session.revision });
    }

    const regen = rest.match(/^\/nodes\/([^/]+)\/regenerate$/);
    if (method === "POST" && regen) {
      if (body.revision !== session.revision) {
        return json(409, { detail: "stale revision", revision: session.revision });
      }
      const nodeId = regen[1];
      const node = session.tree.root.children.find((n) => n.id === nodeId);
      if (!node) return json(404, { detail: `unknown node ${nodeId}` });
      const key = body.instruction ? `${node.label}::${body.instruction}` : node.label;
      session.fragments[nodeId] = FIXTURE_FRAGMENTS[key] ?? node.label;
      session.revision += 1;
      return json(200, { revision: session.revision });
    }

    return json(404, { detail: `no route ${method} ${path}` });
  }
}
