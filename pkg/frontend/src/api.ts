/**
 * Typed client for the kinetic-text studio HTTP API.
 *
 * Every method maps to exactly one endpoint; nothing is computed locally.
 * Indices (keypoint i, control j, frame f) are 1-based, mirroring the wire.
 * Non-2xx responses raise ApiError carrying the status code and the server's
 * `detail` message.
 */

export interface SessionRef {
  id: string;
  revision: number;
  state_hash: string;
}

export interface SessionStatus {
  id: string;
  revision: number;
  state_hash: string;
  has_animation: boolean;
  frames: number;
  width: number;
  height: number;
  text: string | null;
  mode: string;
  params: { alpha: number; e: number; k: number; n: number; source: string };
  canvas: { width: number; height: number };
  colors: { fill: string; background: string };
  overrides: number;
}

export interface MutationReply {
  revision: number;
  state_hash: string;
  dropped_overrides: number;
  changed?: boolean;
  invalidated?: string[];
  [extra: string]: unknown;
}

export interface KeypointGrid {
  n: number;
  f: number;
  source: string;
  /** positions[i-1][f-1] = [x, y] */
  positions: [number, number][][];
}

export interface KeypointFrame {
  frame: number;
  /** positions[i-1] = [x, y] */
  positions: [number, number][];
}

export interface ControlFrame {
  frame: number;
  m: number;
  /** positions[j-1] = [x, y] */
  positions: [number, number][];
}

export interface ControlPoint {
  j: number;
  f: number;
  x: number;
  y: number;
  override: boolean;
}

export interface KeypointPoint {
  i: number;
  f: number;
  x: number;
  y: number;
}

export interface SvgBundle {
  frames: string[];
  delays_cs: number[];
  names: string[];
}

export interface EventLog {
  events: Array<{ revision: number; op: string; [detail: string]: unknown }>;
}

export interface ParamsUpdate {
  alpha?: number;
  e?: number;
  k?: number;
  n?: number;
  source?: string;
}

export interface ColorsUpdate {
  fill?: string;
  background?: string;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
    readonly url: string,
  ) {
    super(`${status} from ${url}: ${detail}`);
    this.name = "ApiError";
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    readonly baseUrl: string,
    fetchFn?: FetchLike,
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    // bind: browsers reject fetch called without its global receiver
    this.fetchFn = fetchFn ?? globalThis.fetch.bind(globalThis);
  }

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const url = `${this.baseUrl}${path}`;
    const response = await this.fetchFn(url, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: unknown };
        if (body && body.detail !== undefined) {
          detail =
            typeof body.detail === "string"
              ? body.detail
              : JSON.stringify(body.detail);
        }
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail, url);
    }
    return response;
  }

  private async requestJson<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.request(path, init);
    return (await response.json()) as T;
  }

  private json<T>(path: string, method: string, body: unknown): Promise<T> {
    return this.requestJson<T>(path, {
      method,
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  // -- session lifecycle ----------------------------------------------------

  createSession(): Promise<SessionRef> {
    return this.requestJson<SessionRef>("/sessions", { method: "POST" });
  }

  status(sid: string): Promise<SessionStatus> {
    return this.requestJson<SessionStatus>(`/sessions/${sid}`);
  }

  deleteSession(sid: string): Promise<{ deleted: string }> {
    return this.requestJson<{ deleted: string }>(`/sessions/${sid}`, {
      method: "DELETE",
    });
  }

  events(sid: string): Promise<EventLog> {
    return this.requestJson<EventLog>(`/sessions/${sid}/events`);
  }

  // -- inputs -----------------------------------------------------------------

  uploadGif(sid: string, bytes: Uint8Array): Promise<MutationReply> {
    return this.requestJson<MutationReply>(`/sessions/${sid}/gif`, {
      method: "POST",
      headers: { "content-type": "image/gif" },
      body: bytes as unknown as BodyInit,
    });
  }

  setText(sid: string, text: string, mode?: string): Promise<MutationReply> {
    const body: { text: string; mode?: string } = { text };
    if (mode !== undefined) body.mode = mode;
    return this.json<MutationReply>(`/sessions/${sid}/text`, "PUT", body);
  }

  setParams(sid: string, update: ParamsUpdate): Promise<MutationReply> {
    return this.json<MutationReply>(`/sessions/${sid}/params`, "PUT", update);
  }

  setColors(sid: string, update: ColorsUpdate): Promise<MutationReply> {
    return this.json<MutationReply>(`/sessions/${sid}/colors`, "PUT", update);
  }

  // -- keypoints ----------------------------------------------------------------

  keypoints(sid: string): Promise<KeypointGrid> {
    return this.requestJson<KeypointGrid>(`/sessions/${sid}/keypoints`);
  }

  keypointsAt(sid: string, frame: number): Promise<KeypointFrame> {
    return this.requestJson<KeypointFrame>(
      `/sessions/${sid}/keypoints?frame=${frame}`,
    );
  }

  getKeypoint(sid: string, i: number, f: number): Promise<KeypointPoint> {
    return this.requestJson<KeypointPoint>(`/sessions/${sid}/keypoints/${i}/${f}`);
  }

  patchKeypoint(
    sid: string,
    i: number,
    f: number,
    p: { x: number; y: number },
  ): Promise<MutationReply> {
    return this.json<MutationReply>(
      `/sessions/${sid}/keypoints/${i}/${f}`,
      "PATCH",
      p,
    );
  }

  // -- control points ----------------------------------------------------------

  controlsAt(sid: string, frame: number): Promise<ControlFrame> {
    return this.requestJson<ControlFrame>(
      `/sessions/${sid}/controls?frame=${frame}`,
    );
  }

  getControl(sid: string, j: number, f: number): Promise<ControlPoint> {
    return this.requestJson<ControlPoint>(`/sessions/${sid}/controls/${j}/${f}`);
  }

  patchControl(
    sid: string,
    j: number,
    f: number,
    p: { x: number; y: number },
  ): Promise<MutationReply> {
    return this.json<MutationReply>(
      `/sessions/${sid}/controls/${j}/${f}`,
      "PATCH",
      p,
    );
  }

  // -- rendered artifacts --------------------------------------------------------

  async previewPng(sid: string, f: number): Promise<Uint8Array> {
    const response = await this.request(`/sessions/${sid}/preview/${f}`);
    return new Uint8Array(await response.arrayBuffer());
  }

  async resultGif(sid: string): Promise<Uint8Array> {
    const response = await this.request(`/sessions/${sid}/result`);
    return new Uint8Array(await response.arrayBuffer());
  }

  exportSvg(sid: string): Promise<SvgBundle> {
    return this.requestJson<SvgBundle>(`/sessions/${sid}/export/svg`);
  }
}
