/**
 * Draggable handle layer over a fetched backdrop image.
 *
 * The backdrop is whatever artifact the server rendered (a source frame or a
 * preview); handles are absolutely-positioned dots at normalized coordinates.
 * Dragging a handle runs through a DragPatcher, so positions are clamped
 * before they are sent and PATCHes are debounced with a guaranteed final
 * send on release. The element's on-screen rectangle is derived from the
 * server's canvas spec, keeping pixel↔normalized conversion faithful.
 */

import {
  type CanvasSpec,
  type Point,
  type Rect,
  normalizedToPixel,
  pixelToNormalized,
} from "./geometry.js";
import { DragPatcher, type SendPoint } from "./debounce.js";
import type { MutationReply } from "./api.js";

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: Array<Node | string>
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}

export interface HandleSpec {
  id: string;
  point: Point;
  color: string;
  label?: string;
  selected?: boolean;
}

export interface OverlayCallbacks {
  makeSender: (id: string) => SendPoint;
  onLocalMove?: (id: string, p: Point) => void;
  onReply?: (id: string, reply: MutationReply) => void;
  onError?: (id: string, error: unknown) => void;
  onDragStart?: (id: string) => void;
  onDragEnd?: (id: string) => Promise<void> | void;
}

const HANDLE_SIZE = 12;

export class HandleOverlay {
  readonly root: HTMLDivElement;
  private readonly image: HTMLImageElement;
  private readonly layer: HTMLDivElement;
  private readonly handles = new Map<string, HTMLDivElement>();
  private readonly displayRect: Rect;

  constructor(
    canvas: CanvasSpec,
    displayWidth: number,
    private readonly callbacks: OverlayCallbacks,
  ) {
    const displayHeight = (displayWidth * canvas.height) / canvas.width;
    this.displayRect = { left: 0, top: 0, width: displayWidth, height: displayHeight };
    this.image = el("img", {
      alt: "canvas",
      style: `display:block;width:${displayWidth}px;height:${displayHeight}px;` +
        "image-rendering:pixelated;user-select:none;",
      draggable: "false",
    });
    this.layer = el("div", {
      style: "position:absolute;inset:0;",
    });
    this.root = el(
      "div",
      {
        style:
          `position:relative;width:${displayWidth}px;height:${displayHeight}px;` +
          "touch-action:none;background:#202228;",
      },
      this.image,
      this.layer,
    );
  }

  setBackdrop(url: string): void {
    this.image.src = url;
  }

  setHandles(specs: HandleSpec[]): void {
    this.layer.replaceChildren();
    this.handles.clear();
    for (const spec of specs) {
      const dot = el("div", {
        "data-handle": spec.id,
        title: spec.label ?? spec.id,
        style:
          `position:absolute;width:${HANDLE_SIZE}px;height:${HANDLE_SIZE}px;` +
          `margin:-${HANDLE_SIZE / 2}px 0 0 -${HANDLE_SIZE / 2}px;` +
          `border-radius:50%;background:${spec.color};cursor:grab;` +
          `border:2px solid ${spec.selected ? "#ffffff" : "rgba(255,255,255,0.55)"};` +
          "box-sizing:border-box;",
      });
      this.position(dot, spec.point);
      this.wireDrag(dot, spec.id);
      this.layer.append(dot);
      this.handles.set(spec.id, dot);
    }
  }

  moveHandle(id: string, point: Point): void {
    const dot = this.handles.get(id);
    if (dot !== undefined) {
      this.position(dot, point);
    }
  }

  private position(dot: HTMLDivElement, point: Point): void {
    const { px, py } = normalizedToPixel(point, this.displayRect);
    dot.style.left = `${px}px`;
    dot.style.top = `${py}px`;
  }

  private toNormalized(event: PointerEvent): Point {
    const bounds = this.root.getBoundingClientRect();
    return pixelToNormalized(
      event.clientX - bounds.left,
      event.clientY - bounds.top,
      this.displayRect,
    );
  }

  private wireDrag(dot: HTMLDivElement, id: string): void {
    dot.addEventListener("pointerdown", (down) => {
      down.preventDefault();
      dot.setPointerCapture(down.pointerId);
      dot.style.cursor = "grabbing";
      this.callbacks.onDragStart?.(id);
      const patcher = new DragPatcher(this.callbacks.makeSender(id), {
        onReply: (reply) => this.callbacks.onReply?.(id, reply),
        onError: (error) => this.callbacks.onError?.(id, error),
      });
      let last: Point = this.toNormalized(down);

      const onMove = (move: PointerEvent): void => {
        last = this.toNormalized(move);
        const clamped = patcher.move(last);
        this.position(dot, clamped); // optimistic: exactly what will be sent
        this.callbacks.onLocalMove?.(id, clamped);
      };
      const onUp = (): void => {
        dot.removeEventListener("pointermove", onMove);
        dot.removeEventListener("pointerup", onUp);
        dot.removeEventListener("pointercancel", onUp);
        dot.style.cursor = "grab";
        void patcher.release(last).then(() => this.callbacks.onDragEnd?.(id));
      };
      dot.addEventListener("pointermove", onMove);
      dot.addEventListener("pointerup", onUp);
      dot.addEventListener("pointercancel", onUp);
    });
  }
}

/** Turn fetched bytes into a displayable object URL, releasing the old one. */
export function swapObjectUrl(
  previous: string | null,
  bytes: Uint8Array,
  mime: string,
): string {
  if (previous !== null) {
    URL.revokeObjectURL(previous);
  }
  const buffer = bytes.buffer.slice(
    bytes.byteOffset,
    bytes.byteOffset + bytes.byteLength,
  ) as ArrayBuffer;
  return URL.createObjectURL(new Blob([buffer], { type: mime }));
}
