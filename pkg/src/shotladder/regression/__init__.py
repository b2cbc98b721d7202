"""Extra-Trees quality and cross-over regressors, RFE and correlation."""
from shotladder.regression.crossover import (
    CrossoverModel,
    load_crossover,
    predict_crossovers,
    save_crossover,
    train_crossover,
)
from shotladder.regression.forest import (
    ForestModel,
    ForestParams,
    load_model,
    predict,
    r2_score,
    save_model,
    train_extra_trees,
)
from shotladder.regression.metrics import plcc
from shotladder.regression.rfe import rfe_select
from shotladder.regression.samples import FEATURE_VARIANTS, build_samples, sample_names

__all__ = [
    "CrossoverModel", "load_crossover", "predict_crossovers", "save_crossover", "train_crossover",
    "ForestModel", "ForestParams", "load_model", "predict", "r2_score", "save_model", "train_extra_trees",
    "plcc", "rfe_select", "FEATURE_VARIANTS", "build_samples", "sample_names",
]
