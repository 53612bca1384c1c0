"""Simulation and numerical verification toolkit for lattices of
interacting hypoelliptic diffusions (Heisenberg-group sites and relatives).
"""

__version__ = "0.1.0"

from .errors import (
    BlowUpError,
    CertificateRefused,
    HypolatticeError,
    HypothesisViolation,
    InvalidInputError,
    SingularShiftError,
)
from .geometry import (
    WeightScheme,
    compactness_thresholds,
    default_weight_scheme,
    homogeneous_norm,
    site_metric,
    validate_weights,
    weighted_s_norm,
)
from .config import ExperimentConfig, load_config
from .control import ControlProblem, girsanov_shift, solve_reachability, verify_control
from .interactions import InteractionSpec, redefine_at_boundary, validate_hypotheses
from .lattice import Box
from .models import MODEL_NAMES, get_model
from .simulate import HAVE_KERNELS, LatticeSystem, NoisePlan, couple, simulate
from .suites import run_suite
