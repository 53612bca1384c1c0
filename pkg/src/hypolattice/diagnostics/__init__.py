"""Numerical verification suites for the quantitative claims of the theory."""

from .consistency import (
    ConsistencyReport,
    ContinuityReport,
    box_consistency,
    initial_condition_continuity,
)
from .ergodic import DecayFit, ergodic_decay
from .lyapunov import LyapunovCertificate, lyapunov_verify, site_drift_functions
from .martingale import (
    ResidualReport,
    calibrate_discretization_bias,
    martingale_residual,
)
from .moments import ScalingReport, TailReport, kolmogorov_moment_check, tail_mass_check
from .product_tv import ProductTVReport, product_tv_demo
from .tightness import TightnessReport, invariant_tightness
from .verdict import FAIL, INCONCLUSIVE, PASS, Curve, Verdict

__all__ = [
    "ConsistencyReport",
    "ContinuityReport",
    "Curve",
    "DecayFit",
    "FAIL",
    "INCONCLUSIVE",
    "LyapunovCertificate",
    "PASS",
    "ProductTVReport",
    "ResidualReport",
    "ScalingReport",
    "TailReport",
    "TightnessReport",
    "Verdict",
    "box_consistency",
    "calibrate_discretization_bias",
    "ergodic_decay",
    "initial_condition_continuity",
    "invariant_tightness",
    "kolmogorov_moment_check",
    "lyapunov_verify",
    "martingale_residual",
    "product_tv_demo",
    "site_drift_functions",
    "tail_mass_check",
]
