"""Finite-range bounded interaction families and hypothesis validation.

The standing hypotheses on one interaction function q (acting on the
(2r+1)^d-site neighborhood patch) are a uniform bound C on |q| and a
uniform bound C on sum_j |dq/du_j| * (|u_center| + 1), where u_center is
the matching coordinate of the patch's center site.  The second bound is
what makes products like q_y * x_i globally Lipschitz, so it rules out any
family whose derivatives do not decay in the center coordinate; the shipped
`tanh` family therefore carries a sech damping in the center coordinate on
top of the saturating tanh of the neighborhood mean.
"""

from dataclasses import dataclass

import numpy as np

from .errors import HypothesisViolation, InvalidInputError

# sup over t of (1+|t|) * sech(t) * (1+|tanh(t)|), attained near t = 0.98;
# dominates the (H2) sum of the tanh family at unit gain.
_TANH_FAMILY_BOUND = 2.2838
_TANH_GAIN_FACTOR = 1.0 / 2.3

FAMILY_NAMES = ("zero", "tanh", "linear")


@dataclass(frozen=True)
class InteractionSpec:
    """Named interaction family with range r and bound constant C.

    The `linear` family (q = C * u_center) is shipped as a deliberately
    non-compliant example; it fails the uniform-bound hypothesis.
    """

    family: str = "tanh"
    C: float = 1.0
    r: int = 1
    boundary_mode: str = "zero-pad"

    def __post_init__(self):
        if self.family not in FAMILY_NAMES:
            raise InvalidInputError(
                f"unknown family {self.family!r}; available: {', '.join(FAMILY_NAMES)}"
            )
        if self.C < 0 or self.r < 1:
            raise InvalidInputError("need C >= 0 and r >= 1")
        if self.boundary_mode not in ("zero-pad", "clamp"):
            raise InvalidInputError("boundary_mode must be zero-pad or clamp")

    @property
    def gain(self):
        if self.family == "zero":
            return 0.0
        if self.family == "tanh":
            return self.C * _TANH_GAIN_FACTOR
        return self.C

    @property
    def has_certificate(self):
        """Whether an analytic bound certifies (H1)-(H2) for this family."""
        return self.family in ("zero", "tanh")

    def evaluate_patch(self, patches, center_slot):
        """Interaction pair (q_x, q_y) from neighborhood patches.

        `patches` has shape (..., P, dim); returns (..., 2).  Component c of
        the output reads only the c-th coordinates of the patch.
        """
        patches = np.asarray(patches, dtype=float)
        out = np.zeros(patches.shape[:-2] + (2,), dtype=float)
        if self.family == "zero":
            return out
        for c in range(2):
            coords = patches[..., :, c]
            center = coords[..., center_slot]
            if self.family == "tanh":
                mean = coords.mean(axis=-1)
                # overflow-safe sech: 2 e^{-|t|} / (1 + e^{-2|t|})
                e = np.exp(-np.abs(center))
                sech = 2.0 * e / (1.0 + e * e)
                out[..., c] = self.gain * np.tanh(mean) * sech
            else:  # linear, intentionally unbounded
                out[..., c] = self.gain * center
        return out

    def to_dict(self):
        return {
            "family": self.family,
            "C": self.C,
            "r": self.r,
            "boundary_mode": self.boundary_mode,
        }

    @classmethod
    def from_dict(cls, rec):
        return cls(
            family=rec["family"],
            C=float(rec["C"]),
            r=int(rec["r"]),
            boundary_mode=rec.get("boundary_mode", "zero-pad"),
        )


class BoxInteraction:
    """An interaction spec bound to one finite box (the redefined q^n).

    Boundary sites evaluate the same family on the padded patch (missing
    neighbors as zero states, or clamped to the box edge), which keeps
    smoothness and the bound C; interior sites are untouched by
    construction.
    """

    def __init__(self, spec, box):
        if spec.r != box.r:
            raise InvalidInputError("interaction range must match box range")
        self.spec = spec
        self.box = box
        table = box.neighbor_table(spec.boundary_mode)
        # map phantom (-1) entries onto an appended all-zero site row
        self._gather = np.where(table < 0, box.nsites, table)
        self._center_slot = box.center_slot

    def patches(self, states):
        """Neighborhood patches of shape (..., N, P, dim)."""
        states = np.asarray(states, dtype=float)
        pad = np.zeros(states.shape[:-2] + (1, states.shape[-1]))
        padded = np.concatenate([states, pad], axis=-2)
        return padded[..., self._gather, :]

    def evaluate(self, states):
        """All-site interaction values, shape (..., N, 2)."""
        return self.spec.evaluate_patch(self.patches(states), self._center_slot)

    def evaluate_site(self, states, site_index):
        """(q_x, q_y) at one flat site index."""
        n = self.box.nsites
        if not 0 <= site_index < n:
            raise InvalidInputError("site outside box")
        return self.evaluate(states)[..., site_index, :]


def redefine_at_boundary(spec, box):
    """Effective interaction q^n on a finite box; see :class:`BoxInteraction`."""
    return BoxInteraction(spec, box)


@dataclass
class InteractionReport:
    passed: dict
    worst: dict
    samples: int
    analytic_certificate: bool

    @property
    def all_passed(self):
        return all(self.passed.values())

    def failing(self):
        return sorted(name for name, ok in self.passed.items() if not ok)


def validate_hypotheses(spec, dim=3, d=1, n_samples=100_000, seed=0, tol=0.05,
                        strict=False):
    """Sampled check of the interaction bounds (H1) and (H2).

    Patches are drawn from a heavy-tailed distribution to stress the
    saturation; the gradient in (H2) is estimated by central finite
    differences.  Families with an analytic certificate additionally assert
    the sampled worst values against the certified bound.
    """
    P = (2 * spec.r + 1) ** d
    center_slot = (P - 1) // 2
    rng = np.random.default_rng(seed)
    patches = rng.standard_t(df=2, size=(n_samples, P, dim)) * 3.0

    q = spec.evaluate_patch(patches, center_slot)
    worst_h1 = float(np.abs(q).max())
    ok1 = worst_h1 <= spec.C * (1.0 + tol) and np.isfinite(worst_h1)

    eps = 1e-6
    h2_sum = np.zeros((n_samples, 2))
    for p in range(P):
        for c in range(dim):
            bump = np.zeros((P, dim))
            bump[p, c] = eps
            qp = spec.evaluate_patch(patches + bump, center_slot)
            qm = spec.evaluate_patch(patches - bump, center_slot)
            grad = (qp - qm) / (2 * eps)
            for comp in range(2):
                u_center = patches[:, center_slot, comp]
                h2_sum[:, comp] += np.abs(grad[:, comp]) * (np.abs(u_center) + 1.0)
    worst_h2 = float(h2_sum.max())
    ok2 = worst_h2 <= spec.C * (1.0 + tol) and np.isfinite(worst_h2)

    report = InteractionReport(
        passed={"H1": ok1, "H2": ok2},
        worst={"H1": worst_h1, "H2": worst_h2},
        samples=n_samples,
        analytic_certificate=spec.has_certificate,
    )
    if strict and not report.all_passed:
        raise HypothesisViolation(
            ",".join(report.failing()), f"interaction family {spec.family!r} fails"
        )
    return report
