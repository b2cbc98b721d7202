"""Per-shot bitrate ladders from VMAF predicted with source features and fast-encoder statistics."""
from shotladder.config import RunConfig, load_config
from shotladder.errors import ShotLadderError
from shotladder.evaluation import bd_quality, bd_rate, evaluate_method, f75, kfold_split
from shotladder.ladder import (
    LADDER_STEPS,
    QUALITY_WINDOW,
    BitrateLadder,
    RQCurve,
    convex_hull,
    fixed_ladder,
    hull_ladder,
    ladder_from_predictions,
    load_fixed_table,
    top_bottom_correction,
)
from shotladder.media.jobs import DEFAULT_RESOLUTIONS, CompressionStats, EncodeJob, RQPoint

__version__ = "0.1.0"

__all__ = [
    "RunConfig", "load_config", "ShotLadderError", "bd_quality", "bd_rate", "evaluate_method", "f75",
    "kfold_split", "LADDER_STEPS", "QUALITY_WINDOW", "BitrateLadder", "RQCurve", "convex_hull", "fixed_ladder",
    "hull_ladder", "ladder_from_predictions", "load_fixed_table", "top_bottom_correction", "DEFAULT_RESOLUTIONS",
    "CompressionStats", "EncodeJob", "RQPoint", "__version__",
]
