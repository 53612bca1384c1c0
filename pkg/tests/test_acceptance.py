"""Acceptance gate: every advertised guarantee at its stated tolerance.

Each criterion prints one pass/fail line (visible with ``pytest -s`` or on
failure) and asserts both the quantitative claim and its runtime budget.
"""

import json
import time

import numpy as np
import pytest
import sympy as sp

from hypolattice.cli import main as cli_main
from hypolattice.config import ExperimentConfig
from hypolattice.control import (
    ControlProblem,
    solve_reachability,
    verify_control_batch,
)
from hypolattice.diagnostics import (
    PASS,
    box_consistency,
    ergodic_decay,
    invariant_tightness,
    kolmogorov_moment_check,
    lyapunov_verify,
    martingale_residual,
    product_tv_demo,
)
from hypolattice.fields import PolyVectorField, hormander_rank, lie_bracket
from hypolattice.geometry import site_metric
from hypolattice.interactions import BoxInteraction, InteractionSpec
from hypolattice.lattice import Box
from hypolattice.models import (
    GeneratorApplication,
    canonical_vars,
    get_model,
    sigma_fields,
    site_symbols,
)

x, y, z = sp.symbols("x y z")


class _Budget:
    """Context manager asserting a wall-clock budget and reporting the line."""

    def __init__(self, num, label, seconds):
        self.num = num
        self.label = label
        self.seconds = seconds

    def __enter__(self):
        self.start = time.monotonic()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.monotonic() - self.start
        status = "PASS" if exc_type is None else "FAIL"
        print(f"[criterion {self.num:02d}] {status} ({elapsed:6.1f}s) "
              f"{self.label}")
        if exc_type is None:
            assert elapsed < self.seconds, (
                f"criterion {self.num} exceeded its {self.seconds}s budget "
                f"({elapsed:.1f}s)"
            )


def test_criterion_01_metric_triangle_inequality():
    with _Budget(1, "homogeneous metric: triangle inequality on 1e5 triples",
                 10):
        rng = np.random.default_rng(1001)
        pts = rng.standard_t(df=2, size=(3, 100_000, 3)) * 5.0
        a, b, c = pts
        lhs = site_metric(a, c)
        rhs = site_metric(a, b) + site_metric(b, c)
        violations = int(np.sum(lhs > rhs + 1e-12))
        assert violations == 0


def test_criterion_02_brackets_and_hormander_rank():
    with _Budget(2, "bracket identity and pointwise rank", 5):
        X = PolyVectorField(3, (sp.Integer(1), sp.Integer(0), -y / 2))
        Y = PolyVectorField(3, (sp.Integer(0), sp.Integer(1), x / 2))
        assert lie_bracket(X, Y) == PolyVectorField(3, (0, 0, sp.Integer(1)))

        rng = np.random.default_rng(1002)
        pts = rng.standard_t(df=3, size=(100, 3)) * 3.0
        report = hormander_rank(sigma_fields(get_model("heisenberg")), pts, 2)
        assert report.full_rank_everywhere

        g = sigma_fields(get_model("grushin"))
        line = np.column_stack([np.zeros(20),
                                rng.normal(size=20) * 3.0])
        assert hormander_rank(g, line, 1).ranks.max() == 1
        assert hormander_rank(g, line, 2).min_rank == 2


def test_criterion_03_generator_against_fd_stencils():
    with _Budget(3, "generator vs FD stencils (Richardson slope 2) and "
                    "exact diffusion matrix", 30):
        model = get_model("heisenberg")
        A = model.diffusion_matrix()
        want = sp.Matrix(
            [[1, 0, -y / 2], [0, 1, x / 2], [-y / 2, x / 2, (x**2 + y**2) / 4]]
        )
        assert sp.expand(A - want) == sp.zeros(3, 3)

        box = Box(d=1, r=1, n=1)
        interaction = BoxInteraction(InteractionSpec(family="tanh"), box)
        syms = site_symbols(box.nsites, 3)
        flat = [v for site in syms for v in site]
        vars_ = canonical_vars(3)
        A_fn = sp.lambdify(vars_, A, modules="numpy")
        rng = np.random.default_rng(1003)
        eps_grid = np.array([0.04, 0.02, 0.01])
        slopes = []
        for trial in range(20):
            # random cylindrical polynomial with guaranteed 3rd/4th
            # derivatives so the central stencils have nonzero truncation
            f = sp.Integer(0)
            for _ in range(4):
                mono = sp.Integer(rng.integers(-3, 4) or 1)
                for _ in range(rng.integers(1, 4)):
                    mono *= flat[rng.integers(len(flat))]
                f += mono
            anchor = flat[rng.integers(len(flat))]
            f += anchor**4 + anchor**3

            f_num = sp.lambdify(flat, f, modules="numpy")

            def f_fn(states):
                coords = tuple(states[..., i, c]
                               for i in range(box.nsites) for c in range(3))
                return np.asarray(f_num(*coords), dtype=float)

            states = rng.normal(size=(5, box.nsites, 3))
            lam = np.ones(box.nsites)
            exact = GeneratorApplication(model, f, syms, lam, interaction)(states)
            bdrift = model.drift(states, interaction.evaluate(states), lam)

            errs = []
            for eps in eps_grid:
                fd = np.zeros(5)
                for i in range(box.nsites):
                    Amat = np.stack([np.asarray(A_fn(*s), dtype=float)
                                     for s in states[:, i, :]])
                    for a in range(3):
                        sp_ = states.copy(); sp_[:, i, a] += eps
                        sm = states.copy(); sm[:, i, a] -= eps
                        fd += bdrift[:, i, a] * (f_fn(sp_) - f_fn(sm)) / (2 * eps)
                        fd += Amat[:, a, a] * (
                            f_fn(sp_) - 2 * f_fn(states) + f_fn(sm)
                        ) / eps**2
                        for b in range(a + 1, 3):
                            spp = sp_.copy(); spp[:, i, b] += eps
                            spm = sp_.copy(); spm[:, i, b] -= eps
                            smp = sm.copy(); smp[:, i, b] += eps
                            smm = sm.copy(); smm[:, i, b] -= eps
                            fd += 2 * Amat[:, a, b] * (
                                f_fn(spp) - f_fn(spm) - f_fn(smp) + f_fn(smm)
                            ) / (4 * eps**2)
                errs.append(np.abs(fd - exact).max())
            errs = np.asarray(errs)
            assert errs[0] > 1e-10  # truncation visible, slope well-defined
            slope = np.polyfit(np.log(eps_grid), np.log(errs), 1)[0]
            slopes.append(slope)
        slopes = np.asarray(slopes)
        assert np.all(np.abs(slopes - 2.0) <= 0.3), slopes


def test_criterion_04_lyapunov_certificates():
    with _Budget(4, "drift certificates for k in {1,2} extend to boxes "
                    "n in {1,2,3}", 60):
        spec = InteractionSpec(family="tanh", C=1.0)
        for k in (1, 2):
            cert = lyapunov_verify("heisenberg", spec, k=k, lam=1.0,
                                   boxes=(1, 2, 3))
            assert 0.0 < cert.c_k < 4.0
            outer = cert.evidence["outer_shell_max"]
            assert outer[-1] < 0 and np.all(np.diff(outer) < 0)
            assert cert.boxes_certified, cert.box_results


def test_criterion_05_control_reachability():
    with _Budget(5, "10^3 reachability problems verified to 1e-6 and exact "
                    "dispersion-shift identity", 30):
        model = get_model("heisenberg")
        qx, qy = sp.symbols("q_x q_y", real=True)
        u = sp.Matrix([qx / sp.sqrt(2), qy / sp.sqrt(2)])
        want = sp.Matrix([qx, qy, (qy * x - qx * y) / 2])
        assert sp.expand(model.sigma * u - want) == sp.zeros(3, 1)

        rng = np.random.default_rng(1005)
        problems, controls = [], []
        for _ in range(1000):
            problems.append(ControlProblem(
                tuple(rng.normal(size=3) * 2.0),
                tuple(rng.normal(size=3) * 2.0),
                t=float(rng.uniform(0.2, 2.0)),
                lam=float(rng.uniform(0.3, 2.5)),
            ))
            controls.append(solve_reachability(problems[-1]))
        errs = verify_control_batch(problems, controls, n_steps=4000)
        assert float(errs.max()) <= 1e-6, float(errs.max())


def test_criterion_06_kolmogorov_scaling():
    with _Budget(6, "8th-moment increment scaling with slope >= 1.7", 600):
        report = kolmogorov_moment_check(
            interaction=InteractionSpec(family="tanh", C=1.0),
            boxes=(1, 2, 3), replicas=10_000,
        )
        assert report.gaps.min() <= 1e-3 and report.gaps.max() >= 1e-1
        assert report.min_slope >= 1.7, report.slopes
        assert report.verdict == PASS


def test_criterion_07_box_consistency():
    with _Budget(7, "restricted-distance consistency across box sizes", 600):
        zero = box_consistency(interaction=InteractionSpec(family="zero"),
                               ms=(2, 3, 4, 5, 6), replicas=100)
        assert float(np.max(np.abs(zero.estimates))) == 0.0

        report = box_consistency(
            interaction=InteractionSpec(family="tanh", C=1.0),
            k=1, ms=(2, 3, 4, 5, 6), T=1.0, h=1e-3, replicas=1000,
        )
        assert report.monotone_within_noise
        assert report.m_for_eps[1e-2] is not None
        assert report.m_for_eps[1e-2] <= 6
        assert report.verdict == PASS


def test_criterion_08_ergodic_decay():
    with _Budget(8, "single-site rate near lambda and interacting chain "
                    "decay", 300):
        single = ergodic_decay(n=0, replicas=5000, seed=404)
        assert single.rate == pytest.approx(1.0, rel=0.15)

        chain = ergodic_decay(
            interaction=InteractionSpec(family="tanh", C=1.0),
            n=1, replicas=5000, seed=405,
        )
        assert chain.rate > 0.0
        assert chain.r2 >= 0.8


def test_criterion_09_martingale_residual():
    with _Budget(9, "martingale residual for linear and quartic "
                    "observables", 300):
        linear = martingale_residual(replicas=10_000, h=1e-3, seed=808)
        assert linear.c_disc == 0.0
        assert abs(linear.estimate) <= 3.0 * linear.std_error

        box = Box(d=1, r=1, n=1)
        model = get_model("heisenberg")
        syms = site_symbols(box.nsites, 3)
        sub = dict(zip(canonical_vars(3), syms[box.index[(0,)]]))
        quartic = martingale_residual(
            interaction=InteractionSpec(family="tanh", C=1.0),
            n=1, f_expr=model.lyapunov(1).subs(sub), syms=syms,
            replicas=10_000, h=1e-3, seed=809,
        )
        assert quartic.verdict == PASS
        assert abs(quartic.estimate) <= 3.0 * quartic.std_error + \
            quartic.c_disc * quartic.h


def test_criterion_10_invariant_tightness():
    with _Budget(10, "stationarity of the drift functional and threshold-set "
                     "occupancy", 600):
        spec = InteractionSpec(family="tanh", C=1.0)
        cert = lyapunov_verify("heisenberg", spec, k=2, lam=1.0, boxes=())
        report = invariant_tightness(cert, spec, boxes=(1, 2, 3))
        for n in (1, 2, 3):
            rec = report.stationarity[n]
            assert abs(rec["mean"]) <= 3.0 * rec["batch_se"], rec
        for (n, eps), rec in report.occupancy.items():
            assert rec["occupancy"] >= 1.0 - eps, (n, eps, rec)
        assert report.verdict == PASS


def test_criterion_11_product_tv():
    with _Budget(11, "product-measure total-variation lower bound", 60):
        report = product_tv_demo(
            lambda rng, size: rng.normal(0.0, 1.0, size),
            lambda rng, size: rng.normal(1.0, 1.0, size),
            replicas=10_000,
        )
        assert report.ns[-1] == 200
        assert report.bounds[-1] > 0.9
        assert report.verdict == PASS


def test_criterion_12_determinism(tmp_path):
    with _Budget(12, "byte-identical verdicts at any worker count", 600):
        cfg = ExperimentConfig(
            seed=20240817,
            suites=["lyapunov", "control", "martingale", "product_tv"],
            suite_params={
                "control": {"n_problems": 50},
                "martingale": {"replicas": 2000,
                               "calibration_replicas": 3000},
                "product_tv": {"replicas": 4000, "pilot": 8000},
            },
        )
        path = tmp_path / "cfg.json"
        path.write_text(cfg.to_json())
        outputs = []
        for tag, workers in (("a", 1), ("b", 2), ("c", 4)):
            out = tmp_path / tag
            assert cli_main(["run", "--config", str(path), "--workers",
                             str(workers), "--out-dir", str(out)]) == 0
            outputs.append((out / "verdicts.jsonl").read_bytes())
        assert outputs[0] == outputs[1] == outputs[2]
        first = json.loads(outputs[0].splitlines()[0])
        assert first["seed"] == 20240817
