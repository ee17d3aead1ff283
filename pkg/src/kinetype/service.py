"""HTTP studio: inspect and correct a run stage by stage.

A session holds one animation, one text, and parameter settings.
Stage results (tracking, alignment, refinement, rendering) are cached
lazily and invalidated precisely: editing a keypoint discards the
alignment onward; changing the exponent `e` also discards alignment;
changing alpha or k discards refinement only; changing the text or the
animation discards everything derived. Manual control-point overrides
sit on top of refinement and are dropped (and counted in the response)
whenever refinement itself is invalidated. Naming alpha, e, k, or the trajectory source in a
parameter update counts as asking for a fresh refinement, so it drops
overrides even when the values are unchanged; an unchanged n is a no-op
and keeps keypoint corrections. Fill/background colors touch rendering
only, so changing them never drops overrides.

Every mutation bumps a revision counter and returns a content hash of
the session inputs, so clients can detect concurrent edits and repeat
a PATCH idempotently: writing the value that is already stored changes
nothing.

Wire indices (keypoint i, control j, frame f) are 1-based. Unknown
indices give 404; malformed values give 422; asking for a stage whose
prerequisites are missing (no animation, no text) gives 409; computing
under the accepted-but-unimplemented trajectory source gives 501.
"""

from __future__ import annotations

import hashlib
import json
import threading
import uuid
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request, Response
from pydantic import BaseModel

from .align import ControlTrajectory, DeformParams, align_frames
from .cloud import WordCloudLayout, animate_word_cloud, layout_word_cloud
from .gif import FrameSequence, GifDecodeError, decode_gif, encode_gif
from .laplace import optimize_all
from .layout import CanvasSpec, TextLayout, layout_text
from .pipeline import MODES
from .render import export_svg, render_frame, render_sequence, write_png
from .tracking import KeypointTrajectorySet, extract_keypoints
from .truetype import FontHandle, load_font


class PointBody(BaseModel):
    x: float
    y: float


class TextBody(BaseModel):
    text: str
    mode: str | None = None


class ParamsBody(BaseModel):
    alpha: float | None = None
    e: float | None = None
    k: int | None = None
    n: int | None = None
    source: str | None = None


class ColorsBody(BaseModel):
    fill: str | None = None
    background: str | None = None


def _check_unit(x: float, y: float) -> None:
    if not (np.isfinite(x) and np.isfinite(y) and 0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise HTTPException(422, "coordinates must be finite and within [0, 1]")


def _parse_hex(value: str) -> tuple[int, int, int]:
    if (
        len(value) != 7
        or value[0] != "#"
        or any(c not in "0123456789abcdefABCDEF" for c in value[1:])
    ):
        raise HTTPException(422, f"colors must look like #rrggbb, got {value!r}")
    return (int(value[1:3], 16), int(value[3:5], 16), int(value[5:7], 16))


def _hex(rgb: tuple[int, int, int]) -> str:
    return "#{:02x}{:02x}{:02x}".format(*rgb)


class StudioSession:
    """State and caches of one editing session. Callers hold `lock`."""

    def __init__(self, sid: str, font: FontHandle, canvas: CanvasSpec,
                 margin: float, supersample: int):
        self.id = sid
        self.lock = threading.Lock()
        self.font = font
        self.canvas = canvas
        self.margin = margin
        self.supersample = supersample

        self.revision = 0
        self.events: list[dict] = []
        self.gif_bytes: bytes | None = None
        self.seq: FrameSequence | None = None
        self.text: str | None = None
        self.mode: str = "glyph"
        self.params = DeformParams()
        self.n_keypoints = 10
        self.keypoint_edits: list[tuple[int, int, float, float]] = []
        self.overrides: dict[tuple[int, int], tuple[float, float]] = {}
        self.fill: tuple[int, int, int] = (0, 0, 0)
        self.background: tuple[int, int, int] = (255, 255, 255)

        self._keypoints: KeypointTrajectorySet | None = None
        self._layout: TextLayout | None = None
        self._cloud: WordCloudLayout | None = None
        self._raw: ControlTrajectory | None = None
        self._refined: ControlTrajectory | None = None
        self._previews: dict[int, bytes] = {}
        self._result: bytes | None = None

    # -- bookkeeping -------------------------------------------------------

    def state_hash(self) -> str:
        doc = {
            "gif": hashlib.sha256(self.gif_bytes).hexdigest() if self.gif_bytes else None,
            "text": self.text,
            "mode": self.mode,
            "alpha": self.params.alpha,
            "e": self.params.e,
            "k": self.params.k,
            "n": self.n_keypoints,
            "source": self.params.trajectory_source,
            "fill": self.fill,
            "background": self.background,
            "keypoint_edits": self.keypoint_edits,
            "overrides": sorted(
                (j, f, x, y) for (j, f), (x, y) in self.overrides.items()
            ),
        }
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()

    def _touch(self, op: str, **detail) -> None:
        self.revision += 1
        self._previews = {}
        self._result = None
        self.events.append({"revision": self.revision, "op": op, **detail})

    def invalidate(self, *, keypoints=False, layout=False, align=False,
                   refine=False) -> int:
        """Drop caches from the named stage onward; returns dropped overrides."""
        if keypoints:
            self._keypoints = None
            self.keypoint_edits = []
            align = True
        if layout:
            self._layout = None
            self._cloud = None
            align = True
        if align:
            self._raw = None
            refine = True
        dropped = 0
        if refine:
            self._refined = None
            dropped = len(self.overrides)
            self.overrides = {}
        return dropped

    # -- lazy stages ---------------------------------------------------------

    def sequence(self) -> FrameSequence:
        if self.seq is None:
            raise HTTPException(409, "no animation uploaded yet")
        return self.seq

    def keypoints(self) -> KeypointTrajectorySet:
        if self._keypoints is None:
            seq = self.sequence()
            try:
                self._keypoints = extract_keypoints(seq, self.n_keypoints)
            except ValueError as exc:
                raise HTTPException(422, str(exc)) from exc
        return self._keypoints

    def layout(self) -> TextLayout:
        if self._layout is None:
            if self.text is None:
                raise HTTPException(409, "no text set yet")
            try:
                if self.mode == "wordcloud":
                    self._cloud = layout_word_cloud(
                        self.text, self.font, self.canvas, self.margin
                    )
                    self._layout = self._cloud.layout
                else:
                    self._layout = layout_text(
                        self.text, self.font, self.canvas, self.margin
                    )
            except ValueError as exc:
                raise HTTPException(422, str(exc)) from exc
        return self._layout

    def raw(self) -> ControlTrajectory:
        if self._raw is None:
            if self.params.trajectory_source != "driving_gif":
                raise HTTPException(
                    501,
                    f"trajectory source {self.params.trajectory_source!r} is "
                    "accepted but not implemented; set source back to "
                    "'driving_gif' to compute",
                )
            layout = self.layout()
            keypoints = self.keypoints()
            if self.mode == "wordcloud":
                self._raw = animate_word_cloud(self._cloud, keypoints, self.params.e)
            else:
                self._raw = align_frames(layout.controls, keypoints, self.params.e)
        return self._raw

    def refined(self) -> ControlTrajectory:
        if self._refined is None:
            raw = self.raw()
            if self.mode == "wordcloud":
                self._refined = raw
            else:
                try:
                    self._refined, _ = optimize_all(
                        raw, self.layout().controls, self.params
                    )
                except ValueError as exc:
                    raise HTTPException(422, str(exc)) from exc
        return self._refined

    def final(self) -> ControlTrajectory:
        refined = self.refined()
        if not self.overrides:
            return refined
        positions = refined.positions.copy()
        for (j, f), (x, y) in self.overrides.items():
            positions[f, j] = (x, y)
        return ControlTrajectory(positions)

    def result(self) -> bytes:
        if self._result is None:
            seq = self.sequence()
            rendered = render_sequence(
                self.layout(),
                self.final(),
                seq.delays_cs,
                loop_count=seq.loop_count if seq.loop_count is not None else 0,
                supersample=self.supersample,
                fill=self.fill,
                background=self.background,
            )
            self._result = encode_gif(rendered)
        return self._result

    def preview(self, f: int) -> bytes:
        png = self._previews.get(f)
        if png is None:
            frame = render_frame(
                self.layout(), self.final().positions[f], self.supersample,
                fill=self.fill, background=self.background,
            )
            png = write_png(frame)
            self._previews[f] = png
        return png

    def status(self) -> dict:
        return {
            "id": self.id,
            "revision": self.revision,
            "state_hash": self.state_hash(),
            "has_animation": self.seq is not None,
            "frames": self.seq.num_frames if self.seq else 0,
            "width": self.seq.width if self.seq else 0,
            "height": self.seq.height if self.seq else 0,
            "text": self.text,
            "mode": self.mode,
            "params": {
                "alpha": self.params.alpha,
                "e": self.params.e,
                "k": self.params.k,
                "n": self.n_keypoints,
                "source": self.params.trajectory_source,
            },
            "canvas": {"width": self.canvas.width, "height": self.canvas.height},
            "colors": {"fill": _hex(self.fill), "background": _hex(self.background)},
            "overrides": len(self.overrides),
        }


def create_app(
    font_path,
    canvas: CanvasSpec = CanvasSpec(),
    margin: float = 0.1,
    supersample: int = 4,
    static_dir: Path | None = None,
) -> FastAPI:
    """Studio service bound to one font and canvas configuration."""
    font = load_font(font_path)
    app = FastAPI(title="kinetic text studio")
    sessions: dict[str, StudioSession] = {}

    def get_session(sid: str) -> StudioSession:
        s = sessions.get(sid)
        if s is None:
            raise HTTPException(404, f"no session {sid}")
        return s

    def mutation_reply(s: StudioSession, dropped: int, **extra) -> dict:
        return {
            "revision": s.revision,
            "state_hash": s.state_hash(),
            "dropped_overrides": dropped,
            **extra,
        }

    @app.post("/sessions", status_code=201)
    def create_session() -> dict:
        sid = uuid.uuid4().hex[:12]
        sessions[sid] = StudioSession(sid, font, canvas, margin, supersample)
        return {"id": sid, "revision": 0, "state_hash": sessions[sid].state_hash()}

    @app.get("/sessions/{sid}")
    def session_status(sid: str) -> dict:
        s = get_session(sid)
        with s.lock:
            return s.status()

    @app.delete("/sessions/{sid}")
    def delete_session(sid: str) -> dict:
        get_session(sid)
        del sessions[sid]
        return {"deleted": sid}

    @app.get("/sessions/{sid}/events")
    def session_events(sid: str) -> dict:
        s = get_session(sid)
        with s.lock:
            return {"events": list(s.events)}

    @app.post("/sessions/{sid}/gif")
    async def upload_gif(sid: str, request: Request) -> dict:
        s = get_session(sid)
        body = await request.body()
        with s.lock:
            try:
                seq = decode_gif(body)
            except GifDecodeError as exc:
                raise HTTPException(422, str(exc)) from exc
            s.gif_bytes = body
            s.seq = seq
            dropped = s.invalidate(keypoints=True)
            s._touch("gif", bytes=len(body), frames=seq.num_frames)
            return mutation_reply(
                s, dropped,
                frames=seq.num_frames, width=seq.width, height=seq.height,
            )

    @app.put("/sessions/{sid}/text")
    def set_text(sid: str, body: TextBody) -> dict:
        s = get_session(sid)
        mode = body.mode if body.mode is not None else s.mode
        if mode not in MODES:
            raise HTTPException(422, f"mode must be one of {MODES}")
        with s.lock:
            if body.text == s.text and mode == s.mode:
                return mutation_reply(
                    s, 0, changed=False, controls=s.layout().num_controls
                )
            try:  # validate before committing, so bad text changes nothing
                if mode == "wordcloud":
                    cloud = layout_word_cloud(body.text, s.font, s.canvas, s.margin)
                    layout = cloud.layout
                else:
                    cloud = None
                    layout = layout_text(body.text, s.font, s.canvas, s.margin)
            except ValueError as exc:
                raise HTTPException(422, str(exc)) from exc
            s.text, s.mode = body.text, mode
            dropped = s.invalidate(layout=True)
            s._layout, s._cloud = layout, cloud
            s._touch("text", text=body.text, mode=mode)
            return mutation_reply(
                s, dropped, changed=True, controls=layout.num_controls
            )

    @app.put("/sessions/{sid}/colors")
    def set_colors(sid: str, body: ColorsBody) -> dict:
        s = get_session(sid)
        fill = _parse_hex(body.fill) if body.fill is not None else None
        background = (
            _parse_hex(body.background) if body.background is not None else None
        )
        with s.lock:
            new_fill = fill if fill is not None else s.fill
            new_background = (
                background if background is not None else s.background
            )
            if (new_fill, new_background) == (s.fill, s.background):
                return mutation_reply(s, 0, changed=False, invalidated=[])
            s.fill = new_fill
            s.background = new_background
            # colors touch rendering only: refinement and overrides survive
            s._touch("colors", fill=_hex(new_fill), background=_hex(new_background))
            return mutation_reply(s, 0, changed=True, invalidated=["render"])

    @app.put("/sessions/{sid}/params")
    def set_params(sid: str, body: ParamsBody) -> dict:
        s = get_session(sid)
        with s.lock:
            p = s.params
            alpha = body.alpha if body.alpha is not None else p.alpha
            e = body.e if body.e is not None else p.e
            k = body.k if body.k is not None else p.k
            n = body.n if body.n is not None else s.n_keypoints
            source = (
                body.source if body.source is not None else p.trajectory_source
            )
            try:
                new = DeformParams(alpha=alpha, e=e, k=k, trajectory_source=source)
            except ValueError as exc:
                raise HTTPException(422, str(exc)) from exc
            if n < 1:
                raise HTTPException(422, f"n must be at least 1, got {n}")
            # Naming an optimization parameter asks for refinement under the
            # given values, so it sweeps manual overrides even when the numbers
            # did not move. Keypoint corrections are upstream facts: an
            # unchanged n keeps them.
            sets_refine = any(
                v is not None for v in (body.alpha, body.e, body.k, body.source)
            )
            values_changed = new != p or n != s.n_keypoints
            if not values_changed and not (sets_refine and s.overrides):
                return mutation_reply(s, 0, changed=False, invalidated=[])
            dropped = 0
            if n != s.n_keypoints:
                dropped = max(dropped, s.invalidate(keypoints=True))
                invalidated = ["track", "align", "refine"]
            elif e != p.e or source != p.trajectory_source:
                dropped = max(dropped, s.invalidate(align=True))
                invalidated = ["align", "refine"]
            else:  # alpha or k set, possibly to the stored values
                dropped = max(dropped, s.invalidate(refine=True))
                invalidated = ["refine"]
            s.params = new
            s.n_keypoints = n
            s._touch("params", alpha=alpha, e=e, k=k, n=n, source=source)
            return mutation_reply(s, dropped, changed=True, invalidated=invalidated)

    # -- keypoints -----------------------------------------------------------

    def _kp_indices(s: StudioSession, i: int, f: int) -> tuple[int, int]:
        kp = s.keypoints()
        if not 1 <= i <= kp.num_keypoints:
            raise HTTPException(404, f"no keypoint {i} (have {kp.num_keypoints})")
        if not 1 <= f <= kp.num_frames:
            raise HTTPException(404, f"no frame {f} (have {kp.num_frames})")
        return i - 1, f - 1

    @app.get("/sessions/{sid}/keypoints")
    def all_keypoints(sid: str, frame: int | None = None) -> dict:
        s = get_session(sid)
        with s.lock:
            kp = s.keypoints()
            if frame is None:
                return {
                    "n": kp.num_keypoints,
                    "f": kp.num_frames,
                    "source": kp.source,
                    "positions": kp.positions.tolist(),
                }
            if not 1 <= frame <= kp.num_frames:
                raise HTTPException(404, f"no frame {frame} (have {kp.num_frames})")
            return {
                "frame": frame,
                "positions": kp.positions[:, frame - 1, :].tolist(),
            }

    @app.get("/sessions/{sid}/keypoints/{i}/{f}")
    def get_keypoint(sid: str, i: int, f: int) -> dict:
        s = get_session(sid)
        with s.lock:
            ii, ff = _kp_indices(s, i, f)
            x, y = s.keypoints().positions[ii, ff]
            return {"i": i, "f": f, "x": float(x), "y": float(y)}

    @app.patch("/sessions/{sid}/keypoints/{i}/{f}")
    def patch_keypoint(sid: str, i: int, f: int, body: PointBody) -> dict:
        s = get_session(sid)
        _check_unit(body.x, body.y)
        with s.lock:
            ii, ff = _kp_indices(s, i, f)
            kp = s.keypoints()
            if kp.positions[ii, ff, 0] == body.x and kp.positions[ii, ff, 1] == body.y:
                return mutation_reply(s, 0, i=i, f=f, changed=False)
            kp.positions[ii, ff] = (body.x, body.y)
            s.keypoint_edits.append((i, f, body.x, body.y))
            dropped = s.invalidate(align=True)
            s._touch("keypoint", i=i, f=f, x=body.x, y=body.y)
            return mutation_reply(s, dropped, i=i, f=f, changed=True)

    # -- controls ------------------------------------------------------------

    def _ctrl_indices(s: StudioSession, j: int, f: int) -> tuple[int, int]:
        m = s.layout().num_controls
        frames = s.sequence().num_frames
        if not 1 <= j <= m:
            raise HTTPException(404, f"no control {j} (have {m})")
        if not 1 <= f <= frames:
            raise HTTPException(404, f"no frame {f} (have {frames})")
        return j - 1, f - 1

    @app.get("/sessions/{sid}/controls")
    def all_controls(sid: str, frame: int = 1) -> dict:
        s = get_session(sid)
        with s.lock:
            final = s.final()
            if not 1 <= frame <= final.num_frames:
                raise HTTPException(404, f"no frame {frame} (have {final.num_frames})")
            return {
                "frame": frame,
                "m": final.num_controls,
                "positions": final.positions[frame - 1].tolist(),
            }

    @app.get("/sessions/{sid}/controls/{j}/{f}")
    def get_control(sid: str, j: int, f: int) -> dict:
        s = get_session(sid)
        with s.lock:
            jj, ff = _ctrl_indices(s, j, f)
            x, y = s.final().positions[ff, jj]
            return {
                "j": j, "f": f, "x": float(x), "y": float(y),
                "override": (jj, ff) in s.overrides,
            }

    @app.patch("/sessions/{sid}/controls/{j}/{f}")
    def patch_control(sid: str, j: int, f: int, body: PointBody) -> dict:
        s = get_session(sid)
        _check_unit(body.x, body.y)
        with s.lock:
            jj, ff = _ctrl_indices(s, j, f)
            s.refined()  # overrides sit on top of a concrete refinement
            if s.overrides.get((jj, ff)) == (body.x, body.y):
                return mutation_reply(s, 0, j=j, f=f, changed=False)
            s.overrides[(jj, ff)] = (body.x, body.y)
            s._touch("control", j=j, f=f, x=body.x, y=body.y)
            return mutation_reply(s, 0, j=j, f=f, changed=True)

    # -- outputs ---------------------------------------------------------

    @app.get("/sessions/{sid}/source/{f}")
    def source_frame(sid: str, f: int) -> Response:
        """Decoded frame f of the uploaded animation, as PNG."""
        s = get_session(sid)
        with s.lock:
            seq = s.sequence()
            if not 1 <= f <= seq.num_frames:
                raise HTTPException(404, f"no frame {f} (have {seq.num_frames})")
            return Response(
                content=write_png(seq.frames[f - 1]), media_type="image/png"
            )

    @app.get("/sessions/{sid}/preview/{f}")
    def preview(sid: str, f: int) -> Response:
        s = get_session(sid)
        with s.lock:
            frames = s.sequence().num_frames
            if not 1 <= f <= frames:
                raise HTTPException(404, f"no frame {f} (have {frames})")
            return Response(content=s.preview(f - 1), media_type="image/png")

    @app.get("/sessions/{sid}/result")
    def result(sid: str) -> Response:
        s = get_session(sid)
        with s.lock:
            return Response(content=s.result(), media_type="image/gif")

    @app.get("/sessions/{sid}/export/svg")
    def export_svg_docs(sid: str) -> dict:
        s = get_session(sid)
        with s.lock:
            final = s.final()
            layout = s.layout()
            seq = s.sequence()
            docs = [
                export_svg(layout, final.positions[f])
                for f in range(final.num_frames)
            ]
            return {
                "frames": docs,
                "delays_cs": list(seq.delays_cs),
                "names": [f"frame_{f + 1:04d}.svg" for f in range(len(docs))],
            }

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/studio", StaticFiles(directory=static_dir, html=True), name="studio")

    return app
