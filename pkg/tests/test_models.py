"""Site model consistency: symbolic coefficients vs fast numeric evaluators."""

import numpy as np
import pytest
import sympy as sp

from hypolattice.errors import InvalidInputError
from hypolattice.fields import canonical_vars
from hypolattice.interactions import BoxInteraction, InteractionSpec
from hypolattice.lattice import Box
from hypolattice.models import (
    MODEL_NAMES,
    GeneratorApplication,
    apply_generator,
    get_model,
    site_symbols,
)

x, y, z = sp.symbols("x y z")
qx, qy = sp.symbols("q_x q_y")


class TestRegistry:
    def test_names(self):
        assert MODEL_NAMES == ("euclidean3", "grushin", "heisenberg", "martinet")

    def test_unknown_rejected(self):
        with pytest.raises(InvalidInputError):
            get_model("nope")

    def test_martinet_is_simulation_only(self):
        assert get_model("martinet").simulation_only
        assert not get_model("heisenberg").simulation_only


class TestSymbolicCoefficients:
    def test_heisenberg_diffusion_matrix(self):
        A = get_model("heisenberg").diffusion_matrix()
        want = sp.Matrix(
            [
                [1, 0, -y / 2],
                [0, 1, x / 2],
                [-y / 2, x / 2, (x**2 + y**2) / 4],
            ]
        )
        assert sp.expand(A - want) == sp.zeros(3, 3)

    @pytest.mark.parametrize("name", ("euclidean3", "grushin", "heisenberg"))
    def test_ito_correction_vanishes(self, name):
        assert get_model(name).ito_correction().is_zero()

    def test_martinet_frame_correction(self):
        # the simulation-only model's frame (with Y = y d/dy) has a genuine
        # first-order correction; its shipped SDE uses the diagonal sigma
        # instead, so the frame-generator identity is not claimed for it.
        corr = get_model("martinet").ito_correction()
        assert corr.components == (0, y, 0)

    def test_heisenberg_drift_components(self):
        model = get_model("heisenberg")
        comps, syms = model.drift_field(lam=sp.Symbol("lam"))
        lam = sp.Symbol("lam")
        want = [
            syms[0] - lam * x,
            syms[1] - lam * y,
            -2 * lam * z + (syms[1] * x - syms[0] * y) / 2,
        ]
        for a, b in zip(comps, want):
            assert sp.expand(a - b) == 0

    def test_site_generator_value_at_unit_point(self):
        # (X^2 + Y^2 - D) applied to V = (x^2+y^2)^2 + z^2 at (1, 0, 0):
        # second-order part contributes 12.5 + 4 = ... the total is 12.5.
        model = get_model("heisenberg")
        V = model.lyapunov(1)
        syms = site_symbols(1, 3)
        f = V.subs(dict(zip(canonical_vars(3), syms[0])))
        box = Box(d=1, r=1, n=0)
        q0 = BoxInteraction(InteractionSpec(family="zero"), box)
        val = apply_generator(
            model, f, syms, lam=1.0, states=np.array([[1.0, 0.0, 0.0]]),
            box_interaction=q0,
        )
        assert val == pytest.approx(12.5, abs=1e-12)

    def test_lyapunov_powers(self):
        model = get_model("heisenberg")
        V1 = model.lyapunov(1)
        V2 = model.lyapunov(2)
        assert sp.expand(V2 - V1**2) == 0


class TestNumericEvaluators:
    """The hand-written numpy drift/dispersion vs the symbolic definition."""

    def _points(self, dim, nsites, seed):
        rng = np.random.default_rng(seed)
        states = rng.standard_t(df=3, size=(8, nsites, dim)) * 2.0
        qvals = rng.uniform(-1, 1, size=(8, nsites, 2))
        lam = rng.uniform(0.2, 2.0, size=nsites)
        return states, qvals, lam

    @pytest.mark.parametrize("name", ("euclidean3", "grushin", "heisenberg"))
    def test_drift_matches_symbolic(self, name):
        model = get_model(name)
        comps, syms = model.drift_field(lam=sp.Symbol("lam"))
        fns = [
            sp.lambdify(
                (*canonical_vars(model.dim), *syms, sp.Symbol("lam")),
                c + 0 * canonical_vars(model.dim)[0],
                modules="numpy",
            )
            for c in comps
        ]
        states, qvals, lam = self._points(model.dim, nsites=5, seed=11)
        got = model.drift(states, qvals, lam)
        coords = tuple(states[..., j] for j in range(model.dim))
        qs = tuple(qvals[..., j] for j in range(model.n_interactions))
        for j, fn in enumerate(fns):
            want = fn(*coords, *qs, lam)
            assert np.allclose(got[..., j], want, rtol=1e-13, atol=1e-13)

    @pytest.mark.parametrize("name", MODEL_NAMES)
    def test_dispersion_matches_sigma(self, name):
        model = get_model(name)
        vars_ = canonical_vars(model.dim)
        sig = sp.lambdify(vars_, model.sigma, modules="numpy")
        rng = np.random.default_rng(7)
        states = rng.standard_t(df=3, size=(50, model.dim)) * 2.0
        xi = rng.normal(size=(50, model.noise_dim))
        got = model.dispersion_apply(states, xi)
        for s, g, noise in zip(states, got, xi):
            mat = np.asarray(sig(*s), dtype=float)
            assert np.allclose(g, mat @ noise, rtol=1e-13, atol=1e-13)

    @pytest.mark.parametrize("name", MODEL_NAMES)
    def test_diffusion_matrix_consistent_with_dispersion(self, name):
        # E[(sigma xi)(sigma xi)^T] / 2 should equal the symbolic (1/2) s s^T
        model = get_model(name)
        vars_ = canonical_vars(model.dim)
        A = sp.lambdify(vars_, model.diffusion_matrix(), modules="numpy")
        sig = sp.lambdify(vars_, model.sigma, modules="numpy")
        rng = np.random.default_rng(3)
        for s in rng.normal(size=(20, model.dim)):
            mat = np.asarray(sig(*s), dtype=float)
            assert np.allclose(mat @ mat.T / 2, np.asarray(A(*s), float), atol=1e-13)


class TestGeneratorApplication:
    """Dual route: symbolic generator vs drift/diffusion finite differences."""

    def _fd_oracle(self, model, f_fn, states, q, lam, eps=1e-3):
        """b . grad f + (1/2) sigma sigma^T : hess f, derivatives by FD."""
        n, dim = states.shape[-2:]
        b = model.drift(states, q, lam)
        vars_ = canonical_vars(dim)
        A_fn = sp.lambdify(vars_, model.diffusion_matrix(), modules="numpy")
        out = np.zeros(states.shape[:-2])
        for i in range(n):
            A = np.stack(
                [np.asarray(A_fn(*s), dtype=float) for s in states[..., i, :].reshape(-1, dim)]
            ).reshape(states.shape[:-2] + (dim, dim))
            for a in range(dim):
                sp_ = states.copy()
                sm = states.copy()
                sp_[..., i, a] += eps
                sm[..., i, a] -= eps
                out += b[..., i, a] * (f_fn(sp_) - f_fn(sm)) / (2 * eps)
                out += A[..., a, a] * (f_fn(sp_) - 2 * f_fn(states) + f_fn(sm)) / eps**2
                for bb in range(a + 1, dim):
                    spp = sp_.copy(); spp[..., i, bb] += eps
                    spm = sp_.copy(); spm[..., i, bb] -= eps
                    smp = sm.copy(); smp[..., i, bb] += eps
                    smm = sm.copy(); smm[..., i, bb] -= eps
                    mixed = (f_fn(spp) - f_fn(spm) - f_fn(smp) + f_fn(smm)) / (4 * eps**2)
                    out += 2 * A[..., a, bb] * mixed
        return out

    def test_matches_fd_on_cylindrical_polynomial(self):
        model = get_model("heisenberg")
        box = Box(d=1, r=1, n=1)
        spec = InteractionSpec(family="tanh", C=1.0)
        interaction = BoxInteraction(spec, box)
        syms = site_symbols(box.nsites, 3)
        s0, s1, s2 = syms
        f = s1[0] ** 2 * s1[2] + s0[1] * s2[0] - 3 * s1[1]

        flat = [v for site in syms for v in site]
        f_num = sp.lambdify(flat, f, modules="numpy")

        def f_fn(states):
            coords = tuple(
                states[..., i, c] for i in range(box.nsites) for c in range(3)
            )
            return np.asarray(f_num(*coords), dtype=float)

        rng = np.random.default_rng(23)
        states = rng.normal(size=(6, box.nsites, 3))
        lam = np.full(box.nsites, 0.7)
        app = GeneratorApplication(model, f, syms, lam, interaction)
        got = app(states)
        want = self._fd_oracle(model, f_fn, states, interaction.evaluate(states), lam)
        assert np.allclose(got, want, rtol=1e-6, atol=1e-6)

    def test_support_tracks_used_sites(self):
        model = get_model("heisenberg")
        syms = site_symbols(4, 3)
        f = syms[2][0] ** 2
        app = GeneratorApplication(
            model, f, syms, lam=1.0,
            box_interaction=None,
        )
        assert app.support == [2]

    def test_first_order_terms_require_interaction(self):
        model = get_model("heisenberg")
        syms = site_symbols(1, 3)
        f = syms[0][0]  # Xf != 0, so q-coefficients appear
        app = GeneratorApplication(model, f, syms, lam=1.0)
        with pytest.raises(InvalidInputError):
            app(np.zeros((1, 3)))

    def test_constant_observable_maps_to_zero(self):
        model = get_model("heisenberg")
        syms = site_symbols(2, 3)
        app = GeneratorApplication(model, sp.Integer(4), syms, lam=1.0)
        vals = app(np.random.default_rng(0).normal(size=(9, 2, 3)))
        assert np.array_equal(vals, np.zeros(9))
