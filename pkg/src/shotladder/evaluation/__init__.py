from shotladder.evaluation.bd import CenteredFit, bd_quality, bd_rate, degree_used, fit_degree, polyfit_centered
from shotladder.evaluation.protocol import (
    BDPair,
    CrfMap,
    FoldPlan,
    FoldRound,
    crf_map,
    f75,
    kfold_split,
    rq_curve_from_ladder,
)
from shotladder.evaluation.report import (
    REPORT_COLUMNS,
    BDReport,
    MethodSummary,
    VideoResult,
    compare,
    evaluate_method,
    evaluate_video,
    plcc_by_resolution,
    reference_hull_curve,
    write_report,
    write_video_details,
)

__all__ = [
    "BDPair", "BDReport", "CenteredFit", "CrfMap", "FoldPlan", "FoldRound", "MethodSummary",
    "REPORT_COLUMNS", "VideoResult", "bd_quality", "bd_rate", "compare", "crf_map", "degree_used",
    "evaluate_method", "evaluate_video", "f75", "fit_degree", "kfold_split", "plcc_by_resolution", "reference_hull_curve",
    "polyfit_centered", "rq_curve_from_ladder", "write_report", "write_video_details",
]
