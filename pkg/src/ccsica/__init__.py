"""Blind source separation with the convex Cauchy-Schwarz divergence."""
from .divergence import ccs_div_discrete, ccs_div_samples, cs_div_samples, f_convex, f_deriv
from .evaluation import align, evaluate, kurtosis, landscape, polar_demixer, sir_db
from .ica import Contrast, IcaConfig, IcaState, center_whiten, run

__all__ = [
    "Contrast",
    "IcaConfig",
    "IcaState",
    "align",
    "ccs_div_discrete",
    "ccs_div_samples",
    "center_whiten",
    "cs_div_samples",
    "evaluate",
    "f_convex",
    "f_deriv",
    "kurtosis",
    "landscape",
    "polar_demixer",
    "run",
    "sir_db",
]

__version__ = "0.1.0"
