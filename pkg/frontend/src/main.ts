/**
 * App shell: session bootstrap, tab bar, status line, view dispatch.
 *
 * The session id rides in the URL (?session=...), so reloading the page
 * reattaches to the same server-side session — positions persist because the
 * server is the source of truth. The API base defaults to same-origin and
 * can be pointed elsewhere with ?api=http://host:port.
 */

import { ApiClient } from "./api.js";
import { el } from "./overlay.js";
import {
  RevisionTracker,
  initialViewState,
  type ViewName,
  type ViewState,
} from "./state.js";
import { renderInputView } from "./views/input.js";
import { renderCorrectionView } from "./views/correction.js";
import { renderRefinementView } from "./views/refinement.js";

const VIEWS: Array<{ name: ViewName; label: string }> = [
  { name: "input", label: "Input" },
  { name: "correction", label: "Correction" },
  { name: "refinement", label: "Refinement" },
];

async function boot(): Promise<void> {
  const app = document.getElementById("app");
  if (app === null) {
    throw new Error("missing #app container");
  }
  const query = new URLSearchParams(window.location.search);
  const api = new ApiClient(query.get("api") ?? "");
  const state: ViewState = initialViewState();
  const tracker = new RevisionTracker();

  // reattach to an existing session when the URL names one that still exists
  const wanted = query.get("session");
  if (wanted !== null) {
    try {
      await api.status(wanted);
      state.sessionId = wanted;
    } catch {
      state.sessionId = null;
    }
  }
  if (state.sessionId === null) {
    const created = await api.createSession();
    state.sessionId = created.id;
    tracker.sync(created.revision);
    query.set("session", created.id);
    window.history.replaceState(null, "", `?${query.toString()}`);
  }

  const statusLine = el("p", { class: "hint", id: "status-line" });
  const noticeLine = el("p", { class: "hint", id: "notice-line" });
  const content = el("div", { id: "view" });
  const tabs = el("nav", { style: "display:flex;gap:0.5rem;margin:0.5rem 0;" });
  for (const view of VIEWS) {
    const button = el("button", { "data-view": view.name }, view.label);
    button.addEventListener("click", () => {
      state.active = view.name;
      void render();
    });
    tabs.append(button);
  }

  app.replaceChildren(
    el("h1", {}, "Kinetic Text Studio"),
    tabs,
    statusLine,
    noticeLine,
    content,
  );

  const notify = (message: string): void => {
    noticeLine.textContent = message;
  };

  async function render(): Promise<void> {
    const sid = state.sessionId;
    if (sid === null) return;
    const status = await api.status(sid);
    tracker.sync(status.revision);
    state.revision = tracker.lastSeen;
    state.stateHash = status.state_hash;
    state.frames = status.frames;
    if (state.frame > Math.max(1, status.frames)) {
      state.frame = 1;
    }
    statusLine.textContent =
      `session ${sid} · revision ${status.revision} · ` +
      `state ${status.state_hash.slice(0, 12)} · ${status.overrides} override(s)`;
    for (const button of tabs.querySelectorAll("button")) {
      button.style.fontWeight =
        button.dataset["view"] === state.active ? "bold" : "normal";
    }

    const common = {
      api,
      sessionId: sid,
      status,
      onMutated: render,
      notify,
    };
    if (state.active === "input") {
      renderInputView(content, common);
    } else if (state.active === "correction") {
      renderCorrectionView(content, {
        ...common,
        tracker,
        frame: state.frame,
        setFrame: (f) => {
          state.frame = f;
        },
      });
    } else {
      renderRefinementView(content, {
        ...common,
        tracker,
        previews: state.previews,
        frame: state.frame,
        setFrame: (f) => {
          state.frame = f;
        },
      });
    }
  }

  await render();
}

void boot();
