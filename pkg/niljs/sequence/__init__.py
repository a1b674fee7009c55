# niljs Jenkins-Serrin sequences and divergence lines

from .circle_fit import CircleFit, fit_fixed_radius, taubin_fit
from .jenkins_serrin import (DivergenceReport, SequenceRun, detect_divergence, limit_solution,
                             run_sequence, uniqueness_probe)

__all__ = [
    "CircleFit",
    "fit_fixed_radius",
    "taubin_fit",
    "DivergenceReport",
    "SequenceRun",
    "detect_divergence",
    "limit_solution",
    "run_sequence",
    "uniqueness_probe",
]
