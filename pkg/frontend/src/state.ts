/**
 * Client-side session view state and revision reconciliation.
 *
 * The server is the source of truth; this module only remembers what the
 * client currently believes (active view, selected handles, latest
 * acknowledged revision) and detects when an acknowledgment reveals that
 * someone else advanced the session, so the caller can refetch and replay.
 */

import { PreviewCache } from "./previewCache.js";

export type ViewName = "input" | "correction" | "refinement";

export interface ParamsForm {
  alpha: string;
  e: string;
  source: string;
}

export interface ViewState {
  active: ViewName;
  sessionId: string | null;
  /** 1-based current frame, mirroring the wire format. */
  frame: number;
  frames: number;
  selectedKeypoint: number | null;
  selectedControl: number | null;
  pendingDrags: number;
  params: ParamsForm;
  /** Latest acknowledged server revision. */
  revision: number;
  stateHash: string;
  previews: PreviewCache;
}

export function initialViewState(): ViewState {
  return {
    active: "input",
    sessionId: null,
    frame: 1,
    frames: 0,
    selectedKeypoint: null,
    selectedControl: null,
    pendingDrags: 0,
    params: { alpha: "2", e: "2", source: "driving_gif" },
    revision: 0,
    stateHash: "",
    previews: new PreviewCache(),
  };
}

export type Validated =
  | { ok: true; value: number }
  | { ok: false; error: string };

/** Client-side gate for the α field: must parse and be ≥ 0. */
export function validateAlpha(text: string): Validated {
  const trimmed = text.trim();
  if (trimmed === "") {
    return { ok: false, error: "alpha is required" };
  }
  const value = Number(trimmed);
  if (!Number.isFinite(value)) {
    return { ok: false, error: `alpha must be a number, got "${text}"` };
  }
  if (value < 0) {
    return { ok: false, error: "alpha must be at least 0" };
  }
  return { ok: true, value };
}

/** Client-side gate for the e field: must parse and be > 0. */
export function validateE(text: string): Validated {
  const trimmed = text.trim();
  if (trimmed === "") {
    return { ok: false, error: "e is required" };
  }
  const value = Number(trimmed);
  if (!Number.isFinite(value)) {
    return { ok: false, error: `e must be a number, got "${text}"` };
  }
  if (value <= 0) {
    return { ok: false, error: "e must be greater than 0" };
  }
  return { ok: true, value };
}

/**
 * Tracks the latest acknowledged revision. An ack that lands exactly one
 * ahead (our own change) or at the current value (a no-op) is in sequence;
 * anything further ahead means another actor touched the session and the
 * caller must refetch state and replay its local intent.
 */
export class RevisionTracker {
  private last: number;

  constructor(initial = 0) {
    this.last = initial;
  }

  get lastSeen(): number {
    return this.last;
  }

  observe(reply: { revision: number }): "ok" | "stale" {
    const stale = reply.revision > this.last + 1;
    if (reply.revision > this.last) {
      this.last = reply.revision;
    }
    return stale ? "stale" : "ok";
  }

  /** Adopt a revision learned from a full status fetch. */
  sync(revision: number): void {
    if (revision > this.last) {
      this.last = revision;
    }
  }
}
