"""ReVAR: re-whitened vector autoregression for synthetic wavefront time-series."""

from .diagnostics import aggregate_tpsd, compare_tpsd, export_plotdata, read_plotdata, strouhal_premultiply, welch_psd
from .io_model import ReVarModelFile, load_model, load_series, save_model, save_series
from .pipeline import FitConfig, analyze, fit_revar
from .preprocess import deflection_x, remove_ttp
from .series import FlowConditions, Geometry, WavefrontSeries
from .synthesis import SynthesisRequest, synthesize

__version__ = "0.1.0"

__all__ = [
    "FitConfig",
    "FlowConditions",
    "Geometry",
    "ReVarModelFile",
    "SynthesisRequest",
    "WavefrontSeries",
    "aggregate_tpsd",
    "analyze",
    "compare_tpsd",
    "deflection_x",
    "export_plotdata",
    "fit_revar",
    "load_model",
    "load_series",
    "read_plotdata",
    "remove_ttp",
    "save_model",
    "save_series",
    "strouhal_premultiply",
    "synthesize",
    "welch_psd",
]
