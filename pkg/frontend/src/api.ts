/**
 * Typed client for the session API. All pipeline state flows through
 * these endpoints; the UI never mutates anything another way.
 */

import type { LayoutDoc, MetricsDoc, SessionInfo, TreeDoc } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** 409: the edit was based on a stale revision. */
export class ConflictError extends ApiError {
  constructor(
    public serverRevision: number,
    message: string,
  ) {
    super(409, message);
    this.name = "ConflictError";
  }
}

export class NotFoundError extends ApiError {
  constructor(message: string) {
    super(404, message);
    this.name = "NotFoundError";
  }
}

async function raiseFor(resp: Response): Promise<Response> {
  if (resp.ok) return resp;
  let detail = resp.statusText;
  let revision = -1;
  try {
    const body = await resp.json();
    if (typeof body.detail === "string") detail = body.detail;
    if (typeof body.revision === "number") revision = body.revision;
  } catch {
    // non-JSON error body; keep statusText
  }
  if (resp.status === 409) throw new ConflictError(revision, detail);
  if (resp.status === 404) throw new NotFoundError(detail);
  throw new ApiError(resp.status, detail);
}

export class SessionApi {
  constructor(
    private baseUrl: string = "",
    private fetchFn: typeof fetch = globalThis.fetch.bind(globalThis),
  ) {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}/v1${path}`, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    await raiseFor(resp);
    return (await resp.json()) as T;
  }

  createSession(imageB64: string): Promise<SessionInfo> {
    return this.json("/sessions", {
      method: "POST",
      body: JSON.stringify({ image_b64: imageB64 }),
    });
  }

  getSession(sid: string): Promise<SessionInfo> {
    return this.json(`/sessions/${sid}`);
  }

  getLayout(sid: string): Promise<{ revision: number; layout: LayoutDoc }> {
    return this.json(`/sessions/${sid}/layout`);
  }

  putLayout(sid: string, layout: LayoutDoc, revision: number): Promise<{ revision: number }> {
    return this.json(`/sessions/${sid}/layout`, {
      method: "PUT",
      body: JSON.stringify({ revision, layout }),
    });
  }

  getTree(sid: string): Promise<{ revision: number; tree: TreeDoc }> {
    return this.json(`/sessions/${sid}/tree`);
  }

  putTree(sid: string, tree: TreeDoc, revision: number): Promise<{ revision: number }> {
    return this.json(`/sessions/${sid}/tree`, {
      method: "PUT",
      body: JSON.stringify({ revision, tree }),
    });
  }

  regenerateNode(
    sid: string,
    nodeId: string,
    instruction: string | null,
    revision: number,
  ): Promise<{ revision: number }> {
    return this.json(`/sessions/${sid}/nodes/${nodeId}/regenerate`, {
      method: "POST",
      body: JSON.stringify({ revision, instruction }),
    });
  }

  async getHtml(sid: string): Promise<string> {
    const resp = await this.fetchFn(`${this.baseUrl}/v1/sessions/${sid}/html`);
    await raiseFor(resp);
    return resp.text();
  }

  /** Metrics are decorative; fetch failures degrade to null (badges hidden). */
  async getMetrics(sid: string): Promise<MetricsDoc | null> {
    try {
      return await this.json<MetricsDoc>(`/sessions/${sid}/metrics`);
    } catch {
      return null;
    }
  }
}
