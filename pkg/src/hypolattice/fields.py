"""Polynomial vector fields with exact symbolic algebra.

Fields are kept as sympy expressions in the canonical site variables, so
brackets, generator applications and coefficient comparisons are exact for
the low polynomial degrees in play; numeric evaluation goes through
lambdified callables.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import sympy as sp

from .errors import InvalidInputError

_XYZ = sp.symbols("x y z")


def canonical_vars(dim):
    """The canonical per-site symbols, (x, y) or (x, y, z)."""
    if dim not in (2, 3):
        raise InvalidInputError("site dimension must be 2 or 3")
    return _XYZ[:dim]


@dataclass(frozen=True)
class PolyVectorField:
    """First-order differential operator sum_j components[j] * d/dx_j."""

    dim: int
    components: tuple

    def __post_init__(self):
        if len(self.components) != self.dim:
            raise InvalidInputError("component count must equal dim")
        object.__setattr__(
            self, "components", tuple(sp.expand(c) for c in self.components)
        )

    @property
    def vars(self):
        return canonical_vars(self.dim)

    def apply(self, f):
        """Directional derivative V f of a scalar sympy expression."""
        return sp.expand(
            sum(c * sp.diff(f, v) for c, v in zip(self.components, self.vars))
        )

    def is_zero(self):
        return all(sp.simplify(c) == 0 for c in self.components)

    def __eq__(self, other):
        if not isinstance(other, PolyVectorField):
            return NotImplemented
        return self.dim == other.dim and all(
            sp.expand(a - b) == 0 for a, b in zip(self.components, other.components)
        )

    def __hash__(self):
        return hash((self.dim, tuple(sp.srepr(c) for c in self.components)))

    def lambdified(self):
        return _lambdify_components(self.dim, self.components)

    def evaluate(self, points):
        """Evaluate the coefficient vector at points of shape (..., dim)."""
        points = np.asarray(points, dtype=float)
        fns = self.lambdified()
        coords = tuple(points[..., j] for j in range(self.dim))
        out = np.empty(points.shape, dtype=float)
        for j, fn in enumerate(fns):
            out[..., j] = fn(*coords)
        return out

    @classmethod
    def from_monomials(cls, dim, component_terms):
        """Build a field from ((exponents, coefficient), ...) per component."""
        vars_ = canonical_vars(dim)
        comps = []
        for terms in component_terms:
            expr = sp.Integer(0)
            for exps, coeff in terms:
                if len(exps) != dim:
                    raise InvalidInputError("exponent tuple length must equal dim")
                mono = sp.Rational(coeff) if isinstance(coeff, (int, str)) else sp.nsimplify(coeff)
                for v, e in zip(vars_, exps):
                    mono *= v ** int(e)
                expr += mono
            comps.append(expr)
        return cls(dim=dim, components=tuple(comps))


@lru_cache(maxsize=None)
def _lambdify_components(dim, components):
    vars_ = canonical_vars(dim)
    return tuple(
        sp.lambdify(vars_, c + 0 * vars_[0], modules="numpy") for c in components
    )


def lie_bracket(V, W):
    """Exact bracket [V, W] = (JW)V - (JV)W."""
    if V.dim != W.dim:
        raise InvalidInputError("bracket requires matching dimensions")
    vars_ = canonical_vars(V.dim)
    comps = []
    for i in range(V.dim):
        c = sum(
            V.components[j] * sp.diff(W.components[i], vars_[j])
            - W.components[j] * sp.diff(V.components[i], vars_[j])
            for j in range(V.dim)
        )
        comps.append(sp.expand(c))
    return PolyVectorField(dim=V.dim, components=tuple(comps))


@dataclass
class RankReport:
    """Pointwise span dimensions of an iterated bracket family."""

    dim: int
    depth: int
    family_size: int
    ranks: np.ndarray
    points: np.ndarray

    @property
    def min_rank(self):
        return int(self.ranks.min())

    @property
    def full_rank_everywhere(self):
        return bool(np.all(self.ranks == self.dim))


def bracket_family(generators, max_depth):
    """Iterated brackets of the generators up to the given depth.

    Depth 1 is the generators themselves; each further level brackets the
    previous level against the generators (sufficient to span the generated
    Lie algebra filtration).  Zero and duplicate fields are dropped.
    """
    if max_depth < 1:
        raise InvalidInputError("max_bracket_depth must be >= 1")
    family = list(generators)
    level = list(generators)
    for _ in range(max_depth - 1):
        nxt = []
        for v in level:
            for g in generators:
                w = lie_bracket(v, g)
                if not w.is_zero() and w not in family and w not in nxt:
                    nxt.append(w)
        family.extend(nxt)
        level = nxt
        if not level:
            break
    return family


def hormander_rank(generators, points, max_bracket_depth, rel_tol=1e-10):
    """Span dimension of the bracket-generated frame at each sample point.

    The span is decided by singular values relative to the largest one,
    which keeps the test scale free at large points.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[None, :]
    dim = generators[0].dim
    family = bracket_family(generators, max_bracket_depth)
    vecs = np.stack([f.evaluate(points) for f in family], axis=-2)  # (P, F, dim)
    svals = np.linalg.svd(vecs, compute_uv=False)
    ranks = (svals > rel_tol * svals[..., :1]).sum(axis=-1)
    return RankReport(
        dim=dim,
        depth=max_bracket_depth,
        family_size=len(family),
        ranks=ranks.astype(int),
        points=points,
    )
