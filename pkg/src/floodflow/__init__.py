"""Desk-scale flood modeling stack: a mass-conserving inundation solver over
DEM rasters, a conditional flow-matching model that generates flood maps
from terrain, rainfall, and solver priors, fixed-step ODE samplers, and
forecast verification scores."""

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .flowmatch import (CfmConfig, Conditioning, FlowModel, Normalization,
                        PathSample, TrainingScenario, cfm_loss, sample_flood,
                        sample_path, train)
from .grid import (DemGrid, FloodMap, GridFormatError, RasterRender,
                   load_ascii_grid, load_flood_map, render_depth,
                   save_ascii_grid, save_pgm, synth_dem)
from .metrics import (ConfusionCounts, ScoreReport, aggregate_scores,
                      categorical_scores, flood_metrics, image_metrics,
                      score_report)
from .neural import ModelParams, encode_rainfall, init_params
from .odesolve import METHODS, OdeSpec, integrate
from .rainfall import (RainfallSeries, cumulative, gen_nonuniform,
                       gen_uniform, load_event_csv, save_event_csv)
from .spm import SpmConfig, SpmResult, hydrostatic_fill, spm_prior_sequence, spm_simulate

__version__ = "0.1.0"

__all__ = [
    "CfmConfig", "CheckpointError", "Conditioning", "ConfusionCounts",
    "DemGrid", "FloodMap", "FlowModel", "GridFormatError", "METHODS",
    "ModelParams", "Normalization", "OdeSpec", "PathSample", "RainfallSeries",
    "RasterRender", "ScoreReport", "SpmConfig", "SpmResult",
    "TrainingScenario", "aggregate_scores", "categorical_scores", "cfm_loss",
    "cumulative", "encode_rainfall", "flood_metrics", "gen_nonuniform",
    "gen_uniform", "hydrostatic_fill", "image_metrics", "init_params",
    "integrate", "load_ascii_grid", "load_checkpoint", "load_event_csv",
    "load_flood_map", "render_depth", "sample_flood", "sample_path",
    "save_ascii_grid", "save_checkpoint", "save_event_csv", "save_pgm",
    "score_report", "spm_prior_sequence", "spm_simulate", "synth_dem",
    "train",
]
