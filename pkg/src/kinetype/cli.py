"""Command line front end.

    animate --text "sleepy" --font DejaVuSans.ttf --gif cat.gif --out out.gif

Exit codes: 0 on success, 2 for unusable inputs or arguments, 3 when a
stage fails. `--report` writes one JSON record per line and renders
figure files (loss curves, keypoint paths) next to it.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .align import DeformParams
from .layout import CanvasSpec
from .pipeline import (
    PipelineConfig,
    PipelineInputError,
    PipelineResult,
    PipelineStageError,
    report_records,
    run_pipeline,
)

CONFIG_KEYS = {
    "text", "font", "gif", "trajectory", "out", "alpha", "e", "k", "n",
    "mode", "source", "svg_dir", "report", "width", "height", "margin",
    "supersample", "workers",
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="animate",
        description="Transfer the motion of an animated GIF onto text.",
    )
    p.add_argument("--text", help="text to animate")
    p.add_argument("--font", help="TrueType font file")
    p.add_argument("--gif", help="source animation (GIF)")
    p.add_argument("--trajectory", help="keypoint trajectory JSON instead of tracking")
    p.add_argument("--alpha", type=float, help="shape-preservation weight (default 2)")
    p.add_argument("--e", type=float, help="distance/norm exponent (default 2)")
    p.add_argument("--k", type=int, help="rigidity graph neighbor count (default 3)")
    p.add_argument("--n", type=int, help="tracked keypoint count (default 10)")
    p.add_argument("--mode", choices=("glyph", "wordcloud"),
                   help="glyph: deform letters; wordcloud: one anchor per word")
    p.add_argument("--source", choices=DeformParams.TRAJECTORY_SOURCES,
                   help="where driving keypoints come from (only driving_gif "
                        "is implemented)")
    p.add_argument("--out", help="output GIF path")
    p.add_argument("--svg-dir", help="also write per-frame SVGs here")
    p.add_argument("--report", help="write run records (one JSON per line) and figures")
    p.add_argument("--seedless", action="store_true",
                   help="accepted for compatibility; runs are always deterministic")
    p.add_argument("--config", help="JSON file with defaults for any option")
    return p


def _load_config(path: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise PipelineInputError(f"cannot use config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise PipelineInputError("config must be a JSON object")
    unknown = set(doc) - CONFIG_KEYS
    if unknown:
        raise PipelineInputError(f"unknown config keys: {sorted(unknown)}")
    return doc


def _merge(args: argparse.Namespace) -> dict:
    """Config file values overridden by anything given on the command line."""
    merged: dict = {}
    if args.config:
        merged.update(_load_config(args.config))
    for key in ("text", "font", "gif", "trajectory", "alpha", "e", "k", "n",
                "mode", "source", "out", "report"):
        v = getattr(args, key)
        if v is not None:
            merged[key] = v
    if args.svg_dir is not None:
        merged["svg_dir"] = args.svg_dir
    return merged


def _make_config(opts: dict) -> PipelineConfig:
    missing = [k for k in ("text", "font", "gif", "out") if not opts.get(k)]
    if missing:
        raise PipelineInputError(f"missing required options: {', '.join(missing)}")
    try:
        params = DeformParams(
            alpha=float(opts.get("alpha", 2.0)),
            e=float(opts.get("e", 2.0)),
            k=int(opts.get("k", 3)),
            trajectory_source=str(opts.get("source", "driving_gif")),
        )
        canvas = CanvasSpec(
            width=int(opts.get("width", 256)), height=int(opts.get("height", 256))
        )
        return PipelineConfig(
            text=str(opts["text"]),
            font_path=Path(opts["font"]),
            gif_path=Path(opts["gif"]),
            out_path=Path(opts["out"]),
            trajectory_path=Path(opts["trajectory"]) if opts.get("trajectory") else None,
            params=params,
            n_keypoints=int(opts.get("n", 10)),
            mode=str(opts.get("mode", "glyph")),
            canvas=canvas,
            margin=float(opts.get("margin", 0.1)),
            supersample=int(opts.get("supersample", 4)),
            svg_dir=Path(opts["svg_dir"]) if opts.get("svg_dir") else None,
            workers=int(opts["workers"]) if opts.get("workers") else None,
        )
    except (TypeError, ValueError) as exc:
        raise PipelineInputError(str(exc)) from exc


def write_report(result: PipelineResult, path: Path) -> list[Path]:
    """NDJSON records plus figure files next to them; returns paths written."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    lines = [json.dumps(r) for r in report_records(result)]
    path.write_text("\n".join(lines) + "\n")
    written = [path]

    if result.optimize_reports:
        frames = [r.frame + 1 for r in result.optimize_reports]
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.plot(frames, [r.initial_loss for r in result.optimize_reports],
                "o-", label="before refinement")
        ax.plot(frames, [r.final_loss for r in result.optimize_reports],
                "s-", label="after refinement")
        ax.set_xlabel("frame")
        ax.set_ylabel("loss")
        ax.set_yscale("log")
        ax.legend()
        ax.set_title("per-frame objective")
        fig.tight_layout()
        loss_png = path.with_name(path.stem + "_loss.png")
        fig.savefig(loss_png, dpi=100)
        plt.close(fig)
        written.append(loss_png)

    pos = result.keypoints.positions  # (N, F, 2)
    fig, ax = plt.subplots(figsize=(5, 5))
    for i in range(pos.shape[0]):
        ax.plot(pos[i, :, 0], pos[i, :, 1], "-", linewidth=1)
        ax.plot(pos[i, 0, 0], pos[i, 0, 1], "ko", markersize=3)
    ax.set_xlim(0, 1)
    ax.set_ylim(1, 0)  # image convention: y grows downward
    ax.set_aspect("equal")
    ax.set_title("keypoint paths (dot: first frame)")
    fig.tight_layout()
    traj_png = path.with_name(path.stem + "_trajectories.png")
    fig.savefig(traj_png, dpi=100)
    plt.close(fig)
    written.append(traj_png)
    return written


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        opts = _merge(args)
        cfg = _make_config(opts)
        result = run_pipeline(cfg)
        if opts.get("report"):
            for w in write_report(result, Path(opts["report"])):
                print(f"wrote {w}")
        print(f"wrote {cfg.out_path} ({len(result.gif_bytes)} bytes, "
              f"{result.trajectory.num_frames} frames)")
        return 0
    except PipelineInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PipelineStageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - last-resort guard
        print(f"unexpected error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
