/**
 * Input View: text, mode, colors, and the driving GIF upload.
 *
 * Everything shown is server state fetched from the session status; the form
 * submits each change to its endpoint and then asks the app to refresh.
 */

import type { ApiClient, SessionStatus } from "../api.js";
import { el } from "../overlay.js";

export interface InputViewContext {
  api: ApiClient;
  sessionId: string;
  status: SessionStatus;
  onMutated: () => Promise<void>;
  notify: (message: string) => void;
}

export function renderInputView(
  container: HTMLElement,
  ctx: InputViewContext,
): void {
  const { api, sessionId, status } = ctx;

  const textInput = el("input", {
    type: "text",
    value: status.text ?? "",
    placeholder: "text to animate",
    style: "width:16rem;",
  });
  const modeSelect = el("select", {});
  for (const mode of ["glyph", "wordcloud"]) {
    const option = el("option", { value: mode }, mode);
    if (mode === status.mode) option.setAttribute("selected", "");
    modeSelect.append(option);
  }
  const fillInput = el("input", { type: "color", value: status.colors.fill });
  const backgroundInput = el("input", {
    type: "color",
    value: status.colors.background,
  });
  const fileInput = el("input", { type: "file", accept: "image/gif" });
  const applyButton = el("button", {}, "Apply");
  const uploadNote = status.has_animation
    ? `${status.frames} frames, ${status.width}×${status.height}px uploaded`
    : "no animation uploaded yet";

  applyButton.addEventListener("click", () => {
    void (async () => {
      applyButton.setAttribute("disabled", "");
      try {
        const file = fileInput.files?.[0];
        if (file !== undefined) {
          const bytes = new Uint8Array(await file.arrayBuffer());
          const reply = await api.uploadGif(sessionId, bytes);
          ctx.notify(`uploaded ${String(reply["frames"])} frames`);
        }
        const text = textInput.value;
        if (text.trim() !== "") {
          await api.setText(sessionId, text, modeSelect.value);
        }
        if (
          fillInput.value !== status.colors.fill ||
          backgroundInput.value !== status.colors.background
        ) {
          await api.setColors(sessionId, {
            fill: fillInput.value,
            background: backgroundInput.value,
          });
        }
        await ctx.onMutated();
      } catch (error) {
        ctx.notify(String(error));
      } finally {
        applyButton.removeAttribute("disabled");
      }
    })();
  });

  container.replaceChildren(
    el(
      "div",
      { class: "panel" },
      el("h2", {}, "Input"),
      row("Text", textInput),
      row("Mode", modeSelect),
      row("Fill", fillInput),
      row("Background", backgroundInput),
      row("Animation (GIF)", fileInput),
      el("p", { class: "hint" }, uploadNote),
      el(
        "p",
        { class: "hint" },
        `Font: bound by the server (canvas ${status.canvas.width}×` +
          `${status.canvas.height}px).`,
      ),
      applyButton,
    ),
  );
}

function row(label: string, control: HTMLElement): HTMLElement {
  return el(
    "label",
    { style: "display:flex;gap:0.75rem;align-items:center;margin:0.4rem 0;" },
    el("span", { style: "min-width:9rem;display:inline-block;" }, label),
    control,
  );
}
