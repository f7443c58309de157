"""Feature-aided multi-target tracking with sparse spectral feature recovery."""

__version__ = "0.1.0"

from .association import AssocConfig, Assignment, association_probabilities, greedy_assign, nn_jpda_assign
from .atomic_admm import DenoiseProblem, DenoiseSolution, OverlapPrior, default_weights, solve
from .dual_spectral import (DualCertificate, RecoveredSpectrum, detect_misassociations,
                            dual_polynomial, locate_frequencies, vibration_frequency)
from .errors import ConfigurationError, EstimationError, NumericalError
from .feature_signal import ObservationPattern, SpectralLine, atom, synthesize
from .kinematics import LinearModel, StateEstimate, cv_model, predict, update
from .pipeline import BatchConfig, RunMetrics, monte_carlo, run_baseline, run_batch, run_fa
from .scenario import ScenarioConfig, TruthTarget, generate_scans, paper_targets

__all__ = [
    "AssocConfig", "Assignment", "association_probabilities", "greedy_assign", "nn_jpda_assign",
    "DenoiseProblem", "DenoiseSolution", "OverlapPrior", "default_weights", "solve",
    "DualCertificate", "RecoveredSpectrum", "detect_misassociations", "dual_polynomial",
    "locate_frequencies", "vibration_frequency",
    "ConfigurationError", "EstimationError", "NumericalError",
    "ObservationPattern", "SpectralLine", "atom", "synthesize",
    "LinearModel", "StateEstimate", "cv_model", "predict", "update",
    "BatchConfig", "RunMetrics", "monte_carlo", "run_baseline", "run_batch", "run_fa",
    "ScenarioConfig", "TruthTarget", "generate_scans", "paper_targets",
]
