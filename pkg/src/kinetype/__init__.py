"""Kinetic typography: move text the way an animated GIF moves.

The pipeline decodes an animation, tracks a handful of keypoints,
spreads their motion over the control points of vector text, nudges
each frame back toward the original letter shapes, and renders the
result as a GIF (or SVG frames).
"""

from .align import ControlTrajectory, DeformParams, align_frames, interpolation_weights
from .cloud import WordCloudLayout, animate_word_cloud, layout_word_cloud
from .gif import FrameSequence, GifDecodeError, decode_gif, encode_gif, load_gif, save_gif
from .laplace import (
    KDTree,
    OptimizeReport,
    build_neighbor_graph,
    laplacian_coords,
    laplacian_weights,
    optimize_all,
    optimize_frame,
)
from .layout import CanvasSpec, GlyphControlSet, TextLayout, explicitize, layout_text
from .pipeline import (
    PipelineConfig,
    PipelineInputError,
    PipelineResult,
    PipelineStageError,
    run_pipeline,
)
from .render import export_svg, render_frame, render_sequence, write_png
from .tracking import (
    KeypointTrajectorySet,
    export_trajectories,
    extract_keypoints,
    import_trajectories,
)
from .truetype import FontHandle, FontParseError, Glyph, GlyphContour, load_font, parse_font

__version__ = "0.1.0"

__all__ = [
    "CanvasSpec",
    "ControlTrajectory",
    "DeformParams",
    "FontHandle",
    "FontParseError",
    "FrameSequence",
    "GifDecodeError",
    "Glyph",
    "GlyphContour",
    "GlyphControlSet",
    "KDTree",
    "KeypointTrajectorySet",
    "OptimizeReport",
    "PipelineConfig",
    "PipelineInputError",
    "PipelineResult",
    "PipelineStageError",
    "TextLayout",
    "WordCloudLayout",
    "align_frames",
    "animate_word_cloud",
    "build_neighbor_graph",
    "decode_gif",
    "encode_gif",
    "explicitize",
    "export_svg",
    "export_trajectories",
    "extract_keypoints",
    "import_trajectories",
    "interpolation_weights",
    "laplacian_coords",
    "laplacian_weights",
    "layout_text",
    "layout_word_cloud",
    "load_font",
    "load_gif",
    "optimize_all",
    "optimize_frame",
    "parse_font",
    "render_frame",
    "render_sequence",
    "run_pipeline",
    "save_gif",
    "write_png",
    "__version__",
]
