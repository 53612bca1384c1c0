"""Homogeneous site norm, weighted sequence norms and weight schemes.

The site space carries the quartic homogeneous norm
``((x^2 + y^2)^2 + z^2)^(1/4)``; finite lattice configurations are measured
in the weighted l^8-type norm built from per-site weights u(i).  Weights are
constant on shells of the max metric, which keeps the summability checks
one dimensional.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import HypothesisViolation, InvalidInputError

__all__ = [
    "homogeneous_norm",
    "site_metric",
    "weighted_s_norm",
    "WeightScheme",
    "default_weight_scheme",
    "WeightReport",
    "validate_weights",
    "compactness_thresholds",
    "in_threshold_set",
]


def _check_finite(a):
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("non-finite coordinates")


def homogeneous_norm(a):
    """Quartic homogeneous norm of one site (or an array of sites).

    `a` has shape (..., 3); returns shape (...).
    """
    a = np.asarray(a, dtype=float)
    _check_finite(a)
    x, y, z = a[..., 0], a[..., 1], a[..., 2]
    return ((x * x + y * y) ** 2 + z * z) ** 0.25


def site_metric(a, b):
    """Distance induced by the homogeneous norm of the componentwise difference."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_finite(a)
    _check_finite(b)
    return homogeneous_norm(a - b)


def weighted_s_norm(states, u_sites):
    """Weighted l^8 norm (sum_i ||a_i||_H^8 u(i))^(1/8) of a finite configuration.

    `states` has shape (..., N, 3) and `u_sites` shape (N,).
    """
    states = np.asarray(states, dtype=float)
    u_sites = np.asarray(u_sites, dtype=float)
    h8 = homogeneous_norm(states) ** 8
    return (h8 * u_sites).sum(axis=-1) ** 0.125


def _log_factorial(m):
    return math.lgamma(m + 1.0)


@dataclass(frozen=True)
class WeightScheme:
    """Shell-constant weight families u and v on the d-dimensional lattice.

    ``shell_u[m]`` is the weight of every site in the m-th max-metric shell
    (sites i with (m-1)*r < max_j |i_j| <= m*r; shell 0 is the origin).
    `delta` and `K` parametrise the admissible decay floor
    u(shell m) >= K / (m!)^(1-delta).
    """

    d: int
    r: int
    delta: float
    K: float
    shell_u: tuple = field(repr=False)
    shell_v: tuple = field(repr=False)

    def __post_init__(self):
        if self.d < 1 or self.r < 1:
            raise InvalidInputError("d and r must be positive integers")
        if not 0.0 < self.delta < 1.0:
            raise InvalidInputError("delta must lie in (0, 1)")
        if self.K <= 0:
            raise InvalidInputError("K must be positive")
        if len(self.shell_u) != len(self.shell_v):
            raise InvalidInputError("shell_u and shell_v must share a horizon")
        if any(u <= 0 for u in self.shell_u) or any(v <= 0 for v in self.shell_v):
            raise InvalidInputError("weights must be positive")

    @property
    def horizon(self):
        return len(self.shell_u) - 1

    def shell_count(self, m):
        """Number of lattice sites in shell m."""
        if m == 0:
            return 1
        side = 2 * m * self.r + 1
        inner = 2 * (m - 1) * self.r + 1
        return side**self.d - inner**self.d

    def u(self, m):
        return self.shell_u[m]

    def v(self, m):
        return self.shell_v[m]

    def site_shell(self, site):
        """Shell index of a lattice site given as a tuple of integers."""
        m = max(abs(c) for c in site) if site else 0
        return -(-m // self.r)  # ceil division

    def u_site(self, site):
        return self.shell_u[self.site_shell(site)]

    def v_site(self, site):
        return self.shell_v[self.site_shell(site)]

    def to_dict(self):
        return {
            "d": self.d,
            "r": self.r,
            "delta": self.delta,
            "K": self.K,
            "shell_u": list(self.shell_u),
            "shell_v": list(self.shell_v),
        }

    @classmethod
    def from_dict(cls, rec):
        return cls(
            d=int(rec["d"]),
            r=int(rec["r"]),
            delta=float(rec["delta"]),
            K=float(rec["K"]),
            shell_u=tuple(float(x) for x in rec["shell_u"]),
            shell_v=tuple(float(x) for x in rec["shell_v"]),
        )


def default_weight_scheme(d=1, r=1, delta=0.5, K=1.0, horizon=50):
    """Factorial-decay scheme u(m) = (m!)^-(1-delta), v(m) = (m!)^-(1-delta)/2."""
    shell_u = tuple(
        math.exp(-(1.0 - delta) * _log_factorial(m)) for m in range(horizon + 1)
    )
    shell_v = tuple(
        math.exp(-0.5 * (1.0 - delta) * _log_factorial(m)) for m in range(horizon + 1)
    )
    return WeightScheme(d=d, r=r, delta=delta, K=K, shell_u=shell_u, shell_v=shell_v)


def _summability(terms, label):
    """Certify sum(terms) < inf via partial sum plus a ratio-test remainder.

    Requires the trailing term ratios to sit strictly below 1; the remainder
    beyond the horizon is then dominated by a geometric series.
    """
    terms = np.asarray(terms, dtype=float)
    if np.any(terms <= 0):
        return False, {"label": label, "reason": "non-positive term"}
    window = min(10, len(terms) - 1)
    ratios = terms[-window:] / terms[-window - 1 : -1]
    rho = float(ratios.max())
    partial = float(terms.sum())
    if rho >= 1.0:
        return False, {"label": label, "partial_sum": partial, "trailing_ratio": rho}
    remainder = float(terms[-1] * rho / (1.0 - rho))
    return True, {
        "label": label,
        "partial_sum": partial,
        "trailing_ratio": rho,
        "remainder_bound": remainder,
        "total_bound": partial + remainder,
    }


@dataclass
class WeightReport:
    """Per-hypothesis verdicts for one weight scheme."""

    passed: dict
    detail: dict

    @property
    def all_passed(self):
        return all(self.passed.values())

    def failing(self):
        return sorted(name for name, ok in self.passed.items() if not ok)


def validate_weights(scheme, strict=False):
    """Check the weight summability and decay-floor hypotheses (H4)-(H6).

    (H4): sum_i u(i) < inf, (H5): sum_i v(i) < inf and sum_i u(i)/v(i) < inf,
    (H6): u on shell m stays above K/(m!)^(1-delta).  With ``strict`` the
    first failure raises :class:`HypothesisViolation`.
    """
    M = scheme.horizon
    counts = np.array([scheme.shell_count(m) for m in range(M + 1)], dtype=float)
    u = np.array(scheme.shell_u, dtype=float)
    v = np.array(scheme.shell_v, dtype=float)

    ok4, det4 = _summability(counts * u, "sum u(i)")
    ok5a, det5a = _summability(counts * v, "sum v(i)")
    ok5b, det5b = _summability(counts * u / v, "sum u(i)/v(i)")

    log_floor = np.array(
        [math.log(scheme.K) - (1.0 - scheme.delta) * _log_factorial(m) for m in range(M + 1)]
    )
    with np.errstate(divide="ignore"):
        margins = np.log(u) - log_floor
    ok6 = bool(np.all(margins >= -1e-12))
    det6 = {
        "worst_shell": int(np.argmin(margins)),
        "worst_log_margin": float(margins.min()),
    }

    report = WeightReport(
        passed={"H4": ok4, "H5": ok5a and ok5b, "H6": ok6},
        detail={"H4": det4, "H5": [det5a, det5b], "H6": det6},
    )
    if strict and not report.all_passed:
        raise HypothesisViolation(
            ",".join(report.failing()), "weight scheme fails validation"
        )
    return report


def compactness_thresholds(eps, c, C, v_sites):
    """Per-site thresholds tau(i) = (C+1)/(c*eps*v(i)) + C/(c*v(i)).

    A configuration belongs to the threshold set iff ||a_i||_H^8 <= tau(i)
    for every site.  `eps` must lie in (0, 1]; smaller eps gives a larger
    (weaker to violate) threshold.
    """
    if not 0.0 < eps <= 1.0:
        raise InvalidInputError("eps must lie in (0, 1]")
    if c <= 0 or C < 0:
        raise InvalidInputError("need c > 0 and C >= 0")
    v_sites = np.asarray(v_sites, dtype=float)
    if np.any(v_sites <= 0):
        raise InvalidInputError("weights must be positive")
    return (C + 1.0) / (c * eps * v_sites) + C / (c * v_sites)


def in_threshold_set(states, tau):
    """Membership indicator of configurations in the threshold set.

    `states` has shape (..., N, 3), `tau` shape (N,); returns boolean (...).
    """
    h8 = homogeneous_norm(states) ** 8
    return np.all(h8 <= tau, axis=-1)
