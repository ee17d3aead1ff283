/**
 * Refinement View: α/e/source parameters, control-point nudges, live result.
 *
 * Parameter submissions are validated client-side (α ≥ 0, e > 0) before any
 * request leaves the browser. Control drags PATCH one (control, frame) pair
 * and refresh only that frame's preview; the animated result is refetched
 * when a drag ends or parameters change. Previews go through a cache keyed
 * by (frame, revision), so nothing older than the latest acknowledged
 * revision is ever displayed.
 */

import type { ApiClient, SessionStatus } from "../api.js";
import { CONTROL_COLOR } from "../colors.js";
import type { Point } from "../geometry.js";
import { HandleOverlay, el, swapObjectUrl } from "../overlay.js";
import type { PreviewCache } from "../previewCache.js";
import type { RevisionTracker } from "../state.js";
import { validateAlpha, validateE } from "../state.js";

export interface RefinementViewContext {
  api: ApiClient;
  sessionId: string;
  status: SessionStatus;
  tracker: RevisionTracker;
  previews: PreviewCache;
  frame: number;
  setFrame: (f: number) => void;
  onMutated: () => Promise<void>;
  notify: (message: string) => void;
}

export function renderRefinementView(
  container: HTMLElement,
  ctx: RefinementViewContext,
): void {
  const { api, sessionId, status } = ctx;
  if (!status.has_animation || status.text === null) {
    container.replaceChildren(
      el(
        "p",
        { class: "hint" },
        "Upload an animation and set a text in the Input view first.",
      ),
    );
    return;
  }

  // -- parameter form --------------------------------------------------------
  const alphaInput = el("input", {
    type: "text",
    value: String(status.params.alpha),
    style: "width:5rem;",
  });
  const eInput = el("input", {
    type: "text",
    value: String(status.params.e),
    style: "width:5rem;",
  });
  const sourceSelect = el("select", {});
  for (const source of ["driving_gif", "extracted_text"]) {
    const option = el("option", { value: source }, source);
    if (source === status.params.source) option.setAttribute("selected", "");
    sourceSelect.append(option);
  }
  const formError = el("span", { class: "error", style: "color:#ff7a7a;" });
  const applyButton = el("button", {}, "Apply parameters");

  applyButton.addEventListener("click", () => {
    const alpha = validateAlpha(alphaInput.value);
    const e = validateE(eInput.value);
    if (!alpha.ok) {
      formError.textContent = alpha.error; // blocked client-side, no request
      return;
    }
    if (!e.ok) {
      formError.textContent = e.error;
      return;
    }
    formError.textContent = "";
    void (async () => {
      try {
        const reply = await api.setParams(sessionId, {
          alpha: alpha.value,
          e: e.value,
          source: sourceSelect.value,
        });
        ctx.tracker.observe(reply);
        if (reply.dropped_overrides > 0) {
          ctx.notify(
            `${reply.dropped_overrides} manual nudge(s) dropped by the fresh refinement`,
          );
        }
        await ctx.onMutated();
      } catch (error) {
        ctx.notify(String(error));
      }
    })();
  });

  // -- preview + control overlay ---------------------------------------------
  const frameLabel = el("span", {}, `frame ${ctx.frame} / ${status.frames}`);
  const scrubber = el("input", {
    type: "range",
    min: "1",
    max: String(status.frames),
    value: String(ctx.frame),
    style: "width:20rem;",
  });

  let previewUrl: string | null = null;
  const lastLocal = new Map<string, Point>();
  const needsReplay = new Set<string>();

  const overlay = new HandleOverlay(status.canvas, 480, {
    makeSender: (id) => {
      const j = handleIndex(id);
      return (p) => api.patchControl(sessionId, j, ctx.frame, p);
    },
    onLocalMove: (id, p) => {
      lastLocal.set(id, p);
    },
    onReply: (id, reply) => {
      if (ctx.tracker.observe(reply) === "stale") {
        needsReplay.add(id);
      } else {
        void refreshPreview(); // single-frame refresh while dragging
      }
    },
    onError: (id, error) => ctx.notify(`control ${handleIndex(id)}: ${String(error)}`),
    onDragEnd: async (id) => {
      if (needsReplay.has(id)) {
        needsReplay.delete(id);
        const final = lastLocal.get(id);
        if (final !== undefined) {
          const reply = await api.patchControl(
            sessionId,
            handleIndex(id),
            ctx.frame,
            final,
          );
          ctx.tracker.observe(reply);
        }
      }
      await refreshHandles();
      await refreshPreview();
      await refreshResult();
      await ctx.onMutated();
    },
  });

  async function refreshPreview(): Promise<void> {
    const revision = ctx.tracker.lastSeen;
    let bytes = ctx.previews.get(ctx.frame, revision);
    if (bytes === undefined) {
      try {
        bytes = await api.previewPng(sessionId, ctx.frame);
      } catch (error) {
        ctx.notify(String(error));
        return;
      }
      ctx.previews.put(ctx.frame, revision, bytes);
    }
    previewUrl = swapObjectUrl(previewUrl, bytes, "image/png");
    overlay.setBackdrop(previewUrl);
  }

  async function refreshHandles(): Promise<void> {
    const wire = await api.controlsAt(sessionId, ctx.frame);
    overlay.setHandles(
      wire.positions.map(([x, y], index) => ({
        id: `ctl-${index + 1}`,
        point: { x, y },
        color: CONTROL_COLOR,
        label: `control ${index + 1}`,
      })),
    );
  }

  scrubber.addEventListener("input", () => {
    const f = Number(scrubber.value);
    ctx.setFrame(f);
    frameLabel.textContent = `frame ${f} / ${status.frames}`;
    void refreshHandles().then(refreshPreview);
  });

  // -- animated result ---------------------------------------------------------
  const resultImage = el("img", {
    alt: "result animation",
    style: "display:block;max-width:480px;image-rendering:pixelated;",
  });
  let resultUrl: string | null = null;

  async function refreshResult(): Promise<void> {
    try {
      const bytes = await api.resultGif(sessionId);
      resultUrl = swapObjectUrl(resultUrl, bytes, "image/gif");
      resultImage.src = resultUrl;
    } catch (error) {
      ctx.notify(String(error));
    }
  }

  // -- SVG export ---------------------------------------------------------------
  const exportButton = el("button", {}, "Export SVG frames");
  const exportList = el("div", { style: "display:flex;flex-direction:column;gap:2px;" });
  exportButton.addEventListener("click", () => {
    void (async () => {
      try {
        const bundle = await api.exportSvg(sessionId);
        exportList.replaceChildren();
        bundle.frames.forEach((doc, index) => {
          const url = URL.createObjectURL(
            new Blob([doc], { type: "image/svg+xml" }),
          );
          const link = el("a", { href: url, download: bundle.names[index] ?? `frame${index + 1}.svg` },
            bundle.names[index] ?? `frame ${index + 1}`);
          exportList.append(link);
        });
      } catch (error) {
        ctx.notify(String(error));
      }
    })();
  });

  container.replaceChildren(
    el(
      "div",
      { class: "panel" },
      el("h2", {}, "Refinement"),
      el(
        "div",
        { style: "display:flex;gap:0.8rem;align-items:center;flex-wrap:wrap;" },
        el("label", {}, "α ", alphaInput),
        el("label", {}, "e ", eInput),
        el("label", {}, "source ", sourceSelect),
        applyButton,
        formError,
      ),
      el(
        "p",
        { class: "hint" },
        `${status.overrides} manual nudge(s) active on top of the refinement.`,
      ),
      el(
        "div",
        { style: "display:flex;gap:1rem;align-items:center;margin:0.4rem 0;" },
        scrubber,
        frameLabel,
      ),
      el(
        "div",
        { style: "display:flex;gap:1.2rem;align-items:flex-start;flex-wrap:wrap;" },
        el("div", {}, el("h3", {}, "Frame (drag control points)"), overlay.root),
        el("div", {}, el("h3", {}, "Result"), resultImage),
      ),
      el("div", { style: "margin-top:0.6rem;" }, exportButton, exportList),
    ),
  );

  void refreshHandles()
    .then(refreshPreview)
    .then(refreshResult)
    .catch((error) => ctx.notify(String(error)));
}

function handleIndex(id: string): number {
  return Number(id.split("-")[1]);
}
