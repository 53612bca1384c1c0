"""Invariant-measure diagnostics: stationarity of the weighted potential and
occupancy of the compact threshold sets.

In equilibrium the generator annihilates expectations, so the long-run time
average of L_n W^2_n along a single trajectory must vanish within its batch
means error; and the certificate constants translate into explicit per-site
thresholds whose sub-level sets carry at least 1 - eps of the mass.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidInputError
from ..geometry import (
    compactness_thresholds,
    default_weight_scheme,
    in_threshold_set,
)
from ..lattice import Box
from ..models import get_model
from ..simulate import LatticeSystem, NoisePlan, simulate
from .lyapunov import site_drift_functions
from .verdict import FAIL, INCONCLUSIVE, PASS

__all__ = ["TightnessReport", "invariant_tightness"]


@dataclass
class TightnessReport:
    """Stationarity and occupancy evidence per box size."""

    stationarity: dict
    occupancy: dict
    eps_grid: tuple
    verdict: str
    details: dict = field(default_factory=dict)

    @property
    def all_stationary(self):
        return all(rec["ok"] for rec in self.stationarity.values())

    @property
    def all_occupied(self):
        return all(
            rec["occupancy"] >= 1.0 - eps
            for (n, eps), rec in self.occupancy.items()
        )


def invariant_tightness(
    certificate,
    interaction=None,
    boxes=(1, 2, 3),
    d=1,
    burn_in=50.0,
    horizon=400.0,
    h=5e-3,
    record_stride=5,
    eps_grid=(0.1, 0.5),
    scheme=None,
    n_batches=20,
    seed=1234,
):
    """Time-average L_n W^2_n and measure threshold-set occupancy.

    Needs a k = 2 drift certificate; its (c, C) constants define the
    threshold sets.  Stationarity passes when the post-burn-in mean of
    L_n W^2_n lies within three batch-means standard errors of zero;
    disagreement between the two halves of the run marks the box
    inconclusive (insufficient burn-in).  Occupancy of each threshold set
    must reach 1 - eps.
    """
    if certificate.k != 2:
        raise InvalidInputError("tightness needs a k=2 certificate")
    model = get_model(certificate.model)
    lam = certificate.lam
    r = interaction.r if interaction is not None else 1
    if scheme is None:
        scheme = default_weight_scheme(d=d, r=r)
    V_fn, base_fn, first_fns = site_drift_functions(model, 2, lam)
    plan = NoisePlan(seed=seed, h=h, T=horizon)
    stationarity, occupancy = {}, {}
    for n in boxes:
        box = Box(d=d, r=r, n=n)
        system = LatticeSystem(model, box, interaction, lam=lam)
        _, v_sites = box.weight_arrays(scheme)
        taus = {
            eps: compactness_thresholds(eps, certificate.c_k, certificate.C_k, v_sites)
            for eps in eps_grid
        }

        def lw(states):
            coords = tuple(states[..., a] for a in range(model.dim))
            site = base_fn(*coords)
            q = system.interaction.evaluate(states)
            for j, fn in enumerate(first_fns):
                site = site + q[..., j] * fn(*coords)
            return (site * v_sites).sum(axis=-1)

        recorders = [("lw", lw)]
        for eps in eps_grid:
            def occ(states, _tau=taus[eps]):
                return in_threshold_set(states, _tau).astype(float)
            recorders.append((f"occ_{eps}", occ))
        traj = simulate(
            system,
            system.initial_state(0.0),
            plan,
            record=recorders,
            record_stride=record_stride,
        )
        keep = traj.times >= burn_in
        series = traj.values["lw"][keep]
        batches = np.array_split(series, n_batches)
        bmeans = np.array([b.mean() for b in batches])
        mean = float(series.mean())
        se = float(bmeans.std(ddof=1) / np.sqrt(len(bmeans)))
        # burn-in sufficiency: the two halves must agree at batch-mean scale
        b1 = bmeans[: n_batches // 2]
        b2 = bmeans[n_batches // 2:]
        split_gap = abs(b1.mean() - b2.mean())
        split_band = 3.0 * np.hypot(
            b1.std(ddof=1) / np.sqrt(len(b1)), b2.std(ddof=1) / np.sqrt(len(b2))
        )
        inconclusive = split_gap > split_band
        stationarity[n] = {
            "mean": mean,
            "batch_se": se,
            "ok": bool(abs(mean) <= 3.0 * se),
            "split_gap": float(split_gap),
            "split_band": float(split_band),
            "inconclusive": bool(inconclusive),
        }
        for eps in eps_grid:
            frac = float(traj.values[f"occ_{eps}"][keep].mean())
            occupancy[(n, eps)] = {"occupancy": frac, "target": 1.0 - eps}
    any_inconclusive = any(rec["inconclusive"] for rec in stationarity.values())
    ok = all(rec["ok"] for rec in stationarity.values()) and all(
        rec["occupancy"] >= rec["target"] for rec in occupancy.values()
    )
    verdict = INCONCLUSIVE if any_inconclusive else (PASS if ok else FAIL)
    return TightnessReport(
        stationarity=stationarity,
        occupancy=occupancy,
        eps_grid=tuple(eps_grid),
        verdict=verdict,
        details={
            "burn_in": burn_in,
            "horizon": horizon,
            "h": h,
            "c": certificate.c_k,
            "C": certificate.C_k,
        },
    )
