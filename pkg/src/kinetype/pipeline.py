"""End-to-end run: animation in, animated text out.

Stages: decode the source animation, obtain keypoint trajectories
(tracked or imported), lay out the text, interpolate the motion onto
the control points, refine each frame's shape, rasterize, encode.
Every stage is timed and summarized in a machine-readable record; the
output file appears atomically or not at all.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from pathlib import Path

from .align import ControlTrajectory, DeformParams, align_frames
from .cloud import animate_word_cloud, layout_word_cloud
from .gif import FrameSequence, GifDecodeError, decode_gif, encode_gif
from .laplace import OptimizeReport, optimize_all
from .layout import CanvasSpec, TextLayout, layout_text
from .render import export_svg_sequence, render_sequence
from .tracking import (
    KeypointTrajectorySet,
    extract_keypoints,
    import_trajectories,
)
from .truetype import FontParseError, load_font

MODES = ("glyph", "wordcloud")


class PipelineInputError(ValueError):
    """The inputs are unusable (missing file, bad format, bad value)."""


class PipelineStageError(RuntimeError):
    """A stage failed on valid-looking inputs; `stage` names it."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


@dataclass(frozen=True)
class PipelineConfig:
    text: str
    font_path: Path
    gif_path: Path
    out_path: Path
    trajectory_path: Path | None = None
    params: DeformParams = DeformParams()
    n_keypoints: int = 10
    mode: str = "glyph"
    canvas: CanvasSpec = CanvasSpec()
    margin: float = 0.1
    supersample: int = 4
    svg_dir: Path | None = None
    workers: int | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise PipelineInputError(
                f"mode must be one of {MODES}, got {self.mode!r}"
            )
        if self.params.trajectory_source != "driving_gif":
            raise PipelineInputError(
                f"trajectory source {self.params.trajectory_source!r} is "
                "accepted but not implemented; only 'driving_gif' runs"
            )


@dataclass
class StageRecord:
    stage: str
    duration_s: float
    detail: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {"stage": self.stage, "duration_s": round(self.duration_s, 6), **self.detail}


@dataclass
class PipelineResult:
    gif_bytes: bytes
    stages: list[StageRecord]
    optimize_reports: list[OptimizeReport]
    layout: TextLayout
    keypoints: KeypointTrajectorySet
    trajectory: ControlTrajectory

    @property
    def total_duration_s(self) -> float:
        return sum(s.duration_s for s in self.stages)


class _Timer:
    def __init__(self, stages: list[StageRecord], name: str):
        self.stages = stages
        self.name = name
        self.detail: dict = {}

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.stages.append(
                StageRecord(self.name, time.perf_counter() - self.t0, self.detail)
            )
        return False


def _read_bytes(path: Path, what: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise PipelineInputError(f"cannot read {what} {path}: {exc}") from exc


def run_pipeline(cfg: PipelineConfig) -> PipelineResult:
    """Run every stage and write the output animation atomically.

    Raises PipelineInputError for unusable inputs and PipelineStageError
    when a stage fails internally.
    """
    stages: list[StageRecord] = []

    with _Timer(stages, "decode") as t:
        try:
            seq = decode_gif(_read_bytes(cfg.gif_path, "animation"))
        except GifDecodeError as exc:
            raise PipelineInputError(f"bad animation file: {exc}") from exc
        t.detail = {
            "frames": seq.num_frames,
            "width": seq.width,
            "height": seq.height,
            "loop": seq.loop_count,
        }

    with _Timer(stages, "track") as t:
        if cfg.trajectory_path is not None:
            try:
                keypoints = import_trajectories(
                    _read_bytes(cfg.trajectory_path, "trajectory file").decode("utf-8")
                )
            except (ValueError, UnicodeDecodeError) as exc:
                raise PipelineInputError(f"bad trajectory file: {exc}") from exc
            if keypoints.num_frames != seq.num_frames:
                raise PipelineInputError(
                    f"trajectory has {keypoints.num_frames} frames, "
                    f"animation has {seq.num_frames}"
                )
        else:
            try:
                keypoints = extract_keypoints(seq, cfg.n_keypoints)
            except ValueError as exc:
                raise PipelineInputError(str(exc)) from exc
        t.detail = {"keypoints": keypoints.num_keypoints, "source": keypoints.source}

    with _Timer(stages, "layout") as t:
        try:
            font = load_font(cfg.font_path)
        except OSError as exc:
            raise PipelineInputError(f"cannot read font {cfg.font_path}: {exc}") from exc
        except FontParseError as exc:
            raise PipelineInputError(f"bad font file: {exc}") from exc
        try:
            if cfg.mode == "wordcloud":
                cloud = layout_word_cloud(cfg.text, font, cfg.canvas, cfg.margin)
                layout = cloud.layout
            else:
                cloud = None
                layout = layout_text(cfg.text, font, cfg.canvas, cfg.margin)
        except ValueError as exc:
            raise PipelineInputError(str(exc)) from exc
        t.detail = {"controls": layout.num_controls, "glyphs": len(layout.glyphs)}

    optimize_reports: list[OptimizeReport] = []
    if cfg.mode == "wordcloud":
        with _Timer(stages, "align") as t:
            trajectory = animate_word_cloud(cloud, keypoints, cfg.params.e)
            t.detail = {"frames": trajectory.num_frames, "words": len(cloud.words)}
    else:
        with _Timer(stages, "align") as t:
            raw = align_frames(layout.controls, keypoints, cfg.params.e)
            t.detail = {"frames": raw.num_frames, "controls": raw.num_controls}
        with _Timer(stages, "optimize") as t:
            try:
                trajectory, optimize_reports = optimize_all(
                    raw, layout.controls, cfg.params, cfg.workers
                )
            except ValueError as exc:
                raise PipelineInputError(str(exc)) from exc
            t.detail = {
                "frames": trajectory.num_frames,
                "total_iterations": sum(r.iterations for r in optimize_reports),
            }

    with _Timer(stages, "render") as t:
        rendered = render_sequence(
            layout,
            trajectory,
            seq.delays_cs,
            loop_count=seq.loop_count if seq.loop_count is not None else 0,
            supersample=cfg.supersample,
        )
        t.detail = {"frames": rendered.num_frames, "supersample": cfg.supersample}

    with _Timer(stages, "encode") as t:
        try:
            gif_bytes = encode_gif(rendered)
        except ValueError as exc:
            raise PipelineStageError("encode", str(exc)) from exc
        t.detail = {"bytes": len(gif_bytes)}
        _atomic_write(Path(cfg.out_path), gif_bytes)

    if cfg.svg_dir is not None:
        with _Timer(stages, "export-svg") as t:
            names = export_svg_sequence(layout, trajectory, seq.delays_cs, cfg.svg_dir)
            t.detail = {"files": len(names)}

    return PipelineResult(
        gif_bytes=gif_bytes,
        stages=stages,
        optimize_reports=optimize_reports,
        layout=layout,
        keypoints=keypoints,
        trajectory=trajectory,
    )


def _atomic_write(path: Path, data: bytes) -> None:
    path = Path(path)
    if path.parent and not path.parent.exists():
        raise PipelineInputError(f"output directory {path.parent} does not exist")
    tmp = path.with_name(path.name + ".part")
    try:
        tmp.write_bytes(data)
        os.replace(tmp, path)
    except OSError as exc:
        tmp.unlink(missing_ok=True)
        raise PipelineStageError("encode", f"cannot write {path}: {exc}") from exc


def report_records(result: PipelineResult) -> list[dict]:
    """Flat records for newline-delimited reporting: stages, then frames."""
    records = [s.to_record() for s in result.stages]
    for r in result.optimize_reports:
        records.append(
            {
                "stage": "optimize-frame",
                "frame": r.frame + 1,
                "iterations": r.iterations,
                "loss_initial": r.initial_loss,
                "loss_final": r.final_loss,
                "shape_loss": r.shape_loss,
                "motion_loss": r.motion_loss,
                "converged": r.converged,
                "duration_s": round(r.duration_s, 6),
            }
        )
    records.append(
        {
            "stage": "total",
            "duration_s": round(result.total_duration_s, 6),
            "frames": result.trajectory.num_frames,
            "per_frame_s": round(
                result.total_duration_s / max(result.trajectory.num_frames, 1), 6
            ),
        }
    )
    return records
