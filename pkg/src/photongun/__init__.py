"""Monte Carlo and analysis tools for triggered single-photon sources."""
__version__ = "0.1.0"

from .emitter import (EmitterParams, ExcitationConfig, SaturationParams, detected_rate,
                      excited_population, shelving_occupancy)
from .errors import (ConvergenceError, DomainError, InsufficientDataError, ScenarioError,
                     SingularGeometryError, TimestampFormatError)
from .fitting import SaturationDataset, extract_rho_curve, fit_noise_curve, fit_saturation
from .simulator import (BackgroundModel, DetectionChain, SimConfig, apply_loss, hbt_split,
                        iter_stream, simulate_stream)
from .statistics import bin_trace, g2_histogram, noise_ratio_measured, squeezing_db

__all__ = [
    "__version__", "EmitterParams", "ExcitationConfig", "SaturationParams", "detected_rate",
    "excited_population", "shelving_occupancy", "ConvergenceError", "DomainError",
    "InsufficientDataError", "ScenarioError", "SingularGeometryError", "TimestampFormatError",
    "SaturationDataset", "extract_rho_curve", "fit_noise_curve", "fit_saturation",
    "BackgroundModel", "DetectionChain", "SimConfig", "apply_loss", "hbt_split", "iter_stream",
    "simulate_stream", "bin_trace", "g2_histogram", "noise_ratio_measured", "squeezing_db",
]
