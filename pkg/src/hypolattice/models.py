"""Site models: generator frames, SDE coefficients and generator application.

Each model bundles the frame fields of its degenerate generator
(X^2 + Y^2 (+ Z^2) - lambda*D plus first-order interaction terms), the
dilation field D, the dispersion matrix sigma and a Lyapunov candidate
family.  Fast numpy drift/dispersion evaluators are hand-written per model;
their agreement with the symbolic coefficients is covered by tests.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import sympy as sp

from .errors import InvalidInputError
from .fields import PolyVectorField, canonical_vars

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class SiteModel:
    """One lattice site's generator and SDE data."""

    name: str
    dim: int
    frame: tuple  # fields whose squares form the second-order part
    dilation: PolyVectorField
    sigma: sp.Matrix  # dim x noise_dim dispersion matrix
    q_fields: tuple  # coefficient vectors of the interaction terms
    lyapunov_monomial: callable = field(repr=False)
    simulation_only: bool = False
    notes: str = ""

    @property
    def noise_dim(self):
        return self.sigma.shape[1]

    @property
    def n_interactions(self):
        return len(self.q_fields)

    def lyapunov(self, k):
        """Lyapunov candidate V^k as a sympy expression."""
        return sp.expand(self.lyapunov_monomial(canonical_vars(self.dim), k))

    def diffusion_matrix(self):
        """Symbolic (1/2) sigma sigma^T."""
        return sp.expand(self.sigma * self.sigma.T / 2)

    def ito_correction(self):
        """First-order part of sum_j F_j^2 beyond the pure second-order terms.

        The Ito drift of the SDE matching the frame generator is
        -lambda*D + sum q_j F_j + correction; for every shipped model the
        correction vanishes, which the test suite checks against this value.
        """
        vars_ = canonical_vars(self.dim)
        comps = [sp.Integer(0)] * self.dim
        for F in self.frame:
            for i in range(self.dim):
                comps[i] += sum(
                    F.components[j] * sp.diff(F.components[i], vars_[j])
                    for j in range(self.dim)
                )
        return PolyVectorField(dim=self.dim, components=tuple(sp.expand(c) for c in comps))

    def drift_field(self, lam, q_syms=None):
        """Symbolic Ito drift vector with interaction placeholders.

        `q_syms` supplies one symbol per interaction term; defaults to
        q_x, q_y (, q_z) constants.
        """
        if q_syms is None:
            q_syms = sp.symbols("q_x q_y q_z")[: self.n_interactions]
        comps = [-lam * c for c in self.dilation.components]
        for q, F in zip(q_syms, self.q_fields):
            comps = [c + q * Fc for c, Fc in zip(comps, F.components)]
        corr = self.ito_correction()
        comps = [sp.expand(c + cc) for c, cc in zip(comps, corr.components)]
        return comps, q_syms

    # ------------------------------------------------------------------
    # fast numpy evaluators used by the integrator
    # ------------------------------------------------------------------

    def drift(self, states, q, lam):
        """Drift array; states (..., N, dim), q (..., N, nq), lam (N,)."""
        raise NotImplementedError

    def dispersion_apply(self, states, xi):
        """sigma(a) @ xi per site; xi has shape (..., N, noise_dim)."""
        raise NotImplementedError


class _Heisenberg(SiteModel):
    def drift(self, states, q, lam):
        x, y, z = states[..., 0], states[..., 1], states[..., 2]
        qx, qy = q[..., 0], q[..., 1]
        out = np.empty_like(states)
        out[..., 0] = qx - lam * x
        out[..., 1] = qy - lam * y
        out[..., 2] = -2.0 * lam * z + 0.5 * (qy * x - qx * y)
        return out

    def dispersion_apply(self, states, xi):
        x, y = states[..., 0], states[..., 1]
        xi1, xi2 = xi[..., 0], xi[..., 1]
        out = np.empty_like(states)
        out[..., 0] = SQRT2 * xi1
        out[..., 1] = SQRT2 * xi2
        out[..., 2] = (x * xi2 - y * xi1) / SQRT2
        return out


class _Euclidean3(SiteModel):
    def drift(self, states, q, lam):
        out = -lam[:, None] * states
        out[..., 0] += q[..., 0]
        out[..., 1] += q[..., 1]
        return out

    def dispersion_apply(self, states, xi):
        return SQRT2 * xi


class _Grushin(SiteModel):
    def drift(self, states, q, lam):
        x, y = states[..., 0], states[..., 1]
        qx, qy = q[..., 0], q[..., 1]
        out = np.empty_like(states)
        out[..., 0] = qx - lam * x
        out[..., 1] = qy * x - lam * y
        return out

    def dispersion_apply(self, states, xi):
        x = states[..., 0]
        out = np.empty_like(states)
        out[..., 0] = SQRT2 * xi[..., 0]
        out[..., 1] = SQRT2 * x * xi[..., 1]
        return out


class _Martinet(SiteModel):
    def drift(self, states, q, lam):
        x, y, z = states[..., 0], states[..., 1], states[..., 2]
        qx, qy = q[..., 0], q[..., 1]
        out = np.empty_like(states)
        out[..., 0] = qx - lam * x
        out[..., 1] = qy - lam * y
        out[..., 2] = -lam * z - qx * y * y
        return out

    def dispersion_apply(self, states, xi):
        y = states[..., 1]
        out = np.empty_like(states)
        out[..., 0] = SQRT2 * xi[..., 0]
        out[..., 1] = SQRT2 * xi[..., 1]
        out[..., 2] = SQRT2 * y * y * xi[..., 2]
        return out


def _build_heisenberg():
    x, y, z = canonical_vars(3)
    X = PolyVectorField(3, (sp.Integer(1), sp.Integer(0), -y / 2))
    Y = PolyVectorField(3, (sp.Integer(0), sp.Integer(1), x / 2))
    D = PolyVectorField(3, (x, y, 2 * z))
    sigma = sp.Matrix(
        [
            [sp.sqrt(2), 0],
            [0, sp.sqrt(2)],
            [-y / sp.sqrt(2), x / sp.sqrt(2)],
        ]
    )
    return _Heisenberg(
        name="heisenberg",
        dim=3,
        frame=(X, Y),
        dilation=D,
        sigma=sigma,
        q_fields=(X, Y),
        lyapunov_monomial=lambda v, k: ((v[0] ** 2 + v[1] ** 2) ** 2 + v[2] ** 2) ** k,
    )


def _build_euclidean3():
    x, y, z = canonical_vars(3)
    X = PolyVectorField(3, (sp.Integer(1), sp.Integer(0), sp.Integer(0)))
    Y = PolyVectorField(3, (sp.Integer(0), sp.Integer(1), sp.Integer(0)))
    Z = PolyVectorField(3, (sp.Integer(0), sp.Integer(0), sp.Integer(1)))
    D = PolyVectorField(3, (x, y, z))
    sigma = sp.sqrt(2) * sp.eye(3)
    return _Euclidean3(
        name="euclidean3",
        dim=3,
        frame=(X, Y, Z),
        dilation=D,
        sigma=sigma,
        q_fields=(X, Y),
        lyapunov_monomial=lambda v, k: v[0] ** (2 * k) + v[1] ** (2 * k) + v[2] ** (2 * k),
    )


def _build_grushin():
    x, y = canonical_vars(2)
    X = PolyVectorField(2, (sp.Integer(1), sp.Integer(0)))
    Y = PolyVectorField(2, (sp.Integer(0), x))
    D = PolyVectorField(2, (x, y))
    sigma = sp.Matrix([[sp.sqrt(2), 0], [0, sp.sqrt(2) * x]])
    return _Grushin(
        name="grushin",
        dim=2,
        frame=(X, Y),
        dilation=D,
        sigma=sigma,
        q_fields=(X, Y),
        lyapunov_monomial=lambda v, k: v[0] ** (4 * k) + v[1] ** (2 * k),
    )


def _build_martinet():
    x, y, z = canonical_vars(3)
    X = PolyVectorField(3, (sp.Integer(1), sp.Integer(0), -(y**2)))
    Y = PolyVectorField(3, (sp.Integer(0), y, sp.Integer(0)))
    D = PolyVectorField(3, (x, y, z))
    sigma = sp.Matrix(
        [
            [sp.sqrt(2), 0, 0],
            [0, sp.sqrt(2), 0],
            [0, 0, sp.sqrt(2) * y**2],
        ]
    )
    Ey = PolyVectorField(3, (sp.Integer(0), sp.Integer(1), sp.Integer(0)))
    return _Martinet(
        name="martinet",
        dim=3,
        frame=(X, Y),
        dilation=D,
        sigma=sigma,
        # interaction enters the shipped SDE as q_x*X + q_y*d/dy
        q_fields=(X, Ey),
        lyapunov_monomial=lambda v, k: v[0] ** (2 * k) + v[1] ** (6 * k) + v[2] ** (2 * k),
        simulation_only=True,
        notes="irreducibility unverified; nonlinear growth, simulate with a state guard",
    )


_REGISTRY = {}
for _builder in (_build_heisenberg, _build_euclidean3, _build_grushin, _build_martinet):
    _m = _builder()
    _REGISTRY[_m.name] = _m

MODEL_NAMES = tuple(sorted(_REGISTRY))


def get_model(name):
    try:
        return _REGISTRY[name]
    except KeyError:
        raise InvalidInputError(
            f"unknown model {name!r}; available: {', '.join(MODEL_NAMES)}"
        ) from None


def sigma_fields(model):
    """Columns of sigma as vector fields (the bracket generators)."""
    cols = []
    for j in range(model.noise_dim):
        comps = tuple(model.sigma[i, j] for i in range(model.dim))
        cols.append(PolyVectorField(model.dim, comps))
    return cols


# ----------------------------------------------------------------------
# generator application on cylindrical polynomial observables
# ----------------------------------------------------------------------


def site_symbols(n_sites, dim):
    """Symbols s{i}_{x,y,z} for each site of a flat-indexed box."""
    names = "xyz"[:dim]
    return [
        [sp.Symbol(f"s{i}_{c}", real=True) for c in names] for i in range(n_sites)
    ]


class GeneratorApplication:
    """Exact application of the n-site generator to a cylindrical polynomial.

    The second-order and dilation parts are differentiated symbolically once
    and lambdified; the bounded interaction coefficients are supplied
    numerically per configuration, multiplying the symbolic first-order
    factors F_j f.  Only sites whose variables occur in f contribute.
    """

    def __init__(self, model, f_expr, syms, lam, box_interaction=None):
        self.model = model
        self.syms = syms
        n_sites = len(syms)
        lam = np.broadcast_to(np.asarray(lam, dtype=float), (n_sites,))
        self.lam = lam
        self.box_interaction = box_interaction
        flat = [s for site in syms for s in site]
        free = sp.Integer(0)
        q_coeffs = []  # (site, term index, expr)
        a_half = model.diffusion_matrix()
        vars_ = canonical_vars(model.dim)
        used = f_expr.free_symbols
        self.support = []
        for i, site_syms in enumerate(syms):
            if not used & set(site_syms):
                continue
            self.support.append(i)
            sub = dict(zip(vars_, site_syms))
            # second-order part: (1/2) sigma sigma^T : D^2 f in site-i variables
            for a in range(model.dim):
                for b in range(model.dim):
                    coeff = a_half[a, b].subs(sub)
                    if coeff != 0:
                        free += coeff * sp.diff(f_expr, site_syms[a], site_syms[b])
            corr = model.ito_correction()
            for a in range(model.dim):
                c = corr.components[a].subs(sub)
                if c != 0:
                    free += c * sp.diff(f_expr, site_syms[a])
            free -= lam[i] * sum(
                model.dilation.components[a].subs(sub) * sp.diff(f_expr, site_syms[a])
                for a in range(model.dim)
            )
            for j, F in enumerate(model.q_fields):
                expr = sum(
                    F.components[a].subs(sub) * sp.diff(f_expr, site_syms[a])
                    for a in range(model.dim)
                )
                expr = sp.expand(expr)
                if expr != 0:
                    q_coeffs.append((i, j, expr))
        self._free_fn = sp.lambdify(flat, sp.expand(free) + 0 * flat[0], modules="numpy")
        self._q_terms = [
            (i, j, sp.lambdify(flat, expr + 0 * flat[0], modules="numpy"))
            for i, j, expr in q_coeffs
        ]
        self._flat_count = len(flat)

    def __call__(self, states):
        """Evaluate L f at configurations of shape (..., N, dim)."""
        states = np.asarray(states, dtype=float)
        coords = tuple(
            states[..., i, c]
            for i in range(states.shape[-2])
            for c in range(self.model.dim)
        )
        out = np.asarray(self._free_fn(*coords), dtype=float)
        out = np.broadcast_to(out, states.shape[:-2]).copy()
        if self._q_terms:
            if self.box_interaction is None:
                raise InvalidInputError(
                    "observable has first-order interaction terms but no "
                    "interaction was supplied"
                )
            q = self.box_interaction.evaluate(states)
            for i, j, fn in self._q_terms:
                out = out + q[..., i, j] * fn(*coords)
        return out


def apply_generator(model, f_expr, syms, lam, states, box_interaction=None):
    """One-shot L f evaluation; see :class:`GeneratorApplication`."""
    app = GeneratorApplication(model, f_expr, syms, lam, box_interaction)
    return app(states)
