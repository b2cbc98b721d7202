"""Encode-grid planning, external-tool wrappers, log parsing and the synthetic codec."""
from shotladder.media.jobs import (
    CODECS,
    DEFAULT_RESOLUTIONS,
    CompressionStats,
    EncodeJob,
    EncoderSettings,
    RQPoint,
    crf_grid,
    plan_encode_grid,
    resolution_label,
)
from shotladder.media.logparse import frame_stats_from_probe, parse_x265_log, probe_frame_stats, render_x265_log
from shotladder.media.store import RQ_COLUMNS, RQStore, group_by_video
from shotladder.media.synthetic import (
    ResolutionModel,
    SyntheticCodec,
    SyntheticCodecParams,
    params_from_content,
    synth_codec,
    synthetic_bitrate,
)
from shotladder.media.tools import EncodeResult, ToolConfig, encode_command, measure_quality, run_encode

__all__ = [
    "CODECS", "DEFAULT_RESOLUTIONS", "CompressionStats", "EncodeJob", "EncoderSettings", "RQPoint",
    "crf_grid", "plan_encode_grid", "resolution_label", "frame_stats_from_probe", "parse_x265_log",
    "probe_frame_stats", "render_x265_log", "RQ_COLUMNS", "RQStore", "group_by_video", "ResolutionModel",
    "SyntheticCodec", "SyntheticCodecParams", "params_from_content", "synth_codec", "synthetic_bitrate", "EncodeResult",
    "encode_command",
    "ToolConfig", "measure_quality", "run_encode",
]
