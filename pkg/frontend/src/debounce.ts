/**
 * Drag-to-PATCH pipeline for one handle.
 *
 * While a handle is being dragged the patcher coalesces positions and sends
 * at most one PATCH per debounce window (120 ms by default), always with the
 * latest position; the position passed to release() is always sent, even if
 * a windowed send just went out. Every outgoing position is clamped to
 * [0,1]² before it is handed to the sender. Sends are serialized, so acks
 * come back in order; each ack is forwarded to onReply for revision
 * reconciliation, and replayLast() re-sends the newest position after the
 * caller has refetched state that someone else moved underneath us.
 */

import { clampUnit, type Point } from "./geometry.js";
import type { MutationReply } from "./api.js";

export type SendPoint = (p: Point) => Promise<MutationReply>;

export interface DragPatcherOptions {
  debounceMs?: number;
  onReply?: (reply: MutationReply) => void;
  onError?: (error: unknown) => void;
}

export const DEFAULT_DEBOUNCE_MS = 120;

export class DragPatcher {
  private readonly send: SendPoint;
  private readonly debounceMs: number;
  private readonly onReply?: (reply: MutationReply) => void;
  private readonly onError?: (error: unknown) => void;

  private pending: Point | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private tail: Promise<void> = Promise.resolve();
  private lastSentPoint: Point | null = null;
  private sends = 0;

  constructor(send: SendPoint, options: DragPatcherOptions = {}) {
    this.send = send;
    this.debounceMs = options.debounceMs ?? DEFAULT_DEBOUNCE_MS;
    this.onReply = options.onReply;
    this.onError = options.onError;
  }

  /**
   * Record a drag position. Returns the clamped point so the caller can move
   * the handle optimistically to exactly what the server will be told.
   */
  move(raw: Point): Point {
    const p = clampUnit(raw);
    this.pending = p;
    if (this.timer === null) {
      this.timer = setTimeout(() => {
        this.timer = null;
        const queued = this.pending;
        if (queued !== null) {
          this.pending = null;
          this.enqueue(queued);
        }
      }, this.debounceMs);
    }
    return p;
  }

  /**
   * End the drag. The final position (or the still-pending one when no
   * explicit point is given) is sent immediately, bypassing the window.
   * Resolves once every queued ack has been processed.
   */
  release(raw?: Point): Promise<void> {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    const final = raw !== undefined ? clampUnit(raw) : this.pending;
    this.pending = null;
    if (final !== null) {
      this.enqueue(final);
    }
    return this.settled();
  }

  /** Re-send the newest position (pending if any, else the last sent one). */
  replayLast(): Promise<void> {
    const p = this.pending ?? this.lastSentPoint;
    if (p === null) {
      return this.settled();
    }
    this.pending = null;
    this.enqueue(p);
    return this.settled();
  }

  /** Resolves when all queued sends have been acknowledged or failed. */
  settled(): Promise<void> {
    return this.tail;
  }

  get lastSent(): Point | null {
    return this.lastSentPoint;
  }

  get sentCount(): number {
    return this.sends;
  }

  get hasPending(): boolean {
    return this.pending !== null;
  }

  private enqueue(p: Point): void {
    this.lastSentPoint = p;
    this.sends += 1;
    this.tail = this.tail.then(async () => {
      try {
        const reply = await this.send(p);
        this.onReply?.(reply);
      } catch (error) {
        this.onError?.(error);
      }
    });
  }
}
