/**
 * Correction View: per-frame keypoint editing over the driving animation.
 *
 * Keypoint i keeps one identity color on every frame and thumbnail. Handles
 * are dragged optimistically, PATCHes are debounced with a final send on
 * release, and an acknowledgment revealing a concurrent edit triggers a
 * refetch of server truth followed by a replay of the user's final position.
 */

import type { ApiClient, SessionStatus } from "../api.js";
import { keypointColor } from "../colors.js";
import type { Point } from "../geometry.js";
import { HandleOverlay, el } from "../overlay.js";
import type { RevisionTracker } from "../state.js";

export interface CorrectionViewContext {
  api: ApiClient;
  sessionId: string;
  status: SessionStatus;
  tracker: RevisionTracker;
  frame: number;
  setFrame: (f: number) => void;
  onMutated: () => Promise<void>;
  notify: (message: string) => void;
}

export function renderCorrectionView(
  container: HTMLElement,
  ctx: CorrectionViewContext,
): void {
  const { api, sessionId, status } = ctx;
  if (!status.has_animation) {
    container.replaceChildren(
      el("p", { class: "hint" }, "Upload an animation in the Input view first."),
    );
    return;
  }

  const sourceUrl = (f: number): string =>
    `${api.baseUrl}/sessions/${sessionId}/source/${f}`;

  const frameLabel = el("span", {}, `frame ${ctx.frame} / ${status.frames}`);
  const scrubber = el("input", {
    type: "range",
    min: "1",
    max: String(status.frames),
    value: String(ctx.frame),
    style: "width:20rem;",
  });

  const lastLocal = new Map<string, Point>();
  const needsReplay = new Set<string>();

  const overlay = new HandleOverlay(
    { width: status.width, height: status.height },
    480,
    {
      makeSender: (id) => {
        const i = handleIndex(id);
        return (p) => api.patchKeypoint(sessionId, i, ctx.frame, p);
      },
      onLocalMove: (id, p) => {
        lastLocal.set(id, p);
      },
      onReply: (id, reply) => {
        if (ctx.tracker.observe(reply) === "stale") {
          needsReplay.add(id);
        }
      },
      onError: (id, error) => ctx.notify(`keypoint ${handleIndex(id)}: ${String(error)}`),
      onDragEnd: async (id) => {
        if (needsReplay.has(id)) {
          needsReplay.delete(id);
          // someone else advanced the session: refetch truth, replay intent
          const final = lastLocal.get(id);
          if (final !== undefined) {
            const reply = await api.patchKeypoint(
              sessionId,
              handleIndex(id),
              ctx.frame,
              final,
            );
            ctx.tracker.observe(reply);
          }
        }
        await refreshHandles();
        await ctx.onMutated();
      },
    },
  );
  overlay.setBackdrop(sourceUrl(ctx.frame));

  async function refreshHandles(): Promise<void> {
    const wire = await api.keypointsAt(sessionId, ctx.frame);
    overlay.setHandles(
      wire.positions.map(([x, y], index) => ({
        id: `kp-${index + 1}`,
        point: { x, y },
        color: keypointColor(index + 1),
        label: `keypoint ${index + 1}`,
      })),
    );
  }

  scrubber.addEventListener("input", () => {
    const f = Number(scrubber.value);
    ctx.setFrame(f);
    frameLabel.textContent = `frame ${f} / ${status.frames}`;
    overlay.setBackdrop(sourceUrl(f));
    void refreshHandles();
  });

  const thumbnails = el("div", {
    style: "display:flex;gap:4px;overflow-x:auto;max-width:480px;padding:4px 0;",
  });
  for (let f = 1; f <= status.frames; f += 1) {
    const thumb = el("img", {
      src: sourceUrl(f),
      alt: `frame ${f}`,
      style:
        "height:48px;cursor:pointer;image-rendering:pixelated;" +
        (f === ctx.frame ? "outline:2px solid #7aa2ff;" : ""),
      title: `frame ${f}`,
    });
    thumb.addEventListener("click", () => {
      scrubber.value = String(f);
      scrubber.dispatchEvent(new Event("input"));
    });
    thumbnails.append(thumb);
  }

  const legend = el("div", {
    style: "display:flex;gap:0.6rem;flex-wrap:wrap;margin:0.4rem 0;",
  });
  for (let i = 1; i <= status.params.n; i += 1) {
    legend.append(
      el(
        "span",
        { style: "display:inline-flex;align-items:center;gap:0.25rem;" },
        el("span", {
          style:
            `width:10px;height:10px;border-radius:50%;display:inline-block;` +
            `background:${keypointColor(i)};`,
        }),
        String(i),
      ),
    );
  }

  container.replaceChildren(
    el(
      "div",
      { class: "panel" },
      el("h2", {}, "Correction"),
      el(
        "div",
        { style: "display:flex;gap:1rem;align-items:center;margin:0.4rem 0;" },
        scrubber,
        frameLabel,
      ),
      overlay.root,
      legend,
      thumbnails,
      el(
        "p",
        { class: "hint" },
        "Drag a colored keypoint; its identity keeps the same color on every frame.",
      ),
    ),
  );
  void refreshHandles();
}

function handleIndex(id: string): number {
  return Number(id.split("-")[1]);
}
