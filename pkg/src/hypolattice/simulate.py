"""Euler-Maruyama integration of the n-site lattice SDE.

States are arrays of shape (replicas, N, dim).  One step reads a frozen
previous state and writes a fresh array, so site updates are data-parallel
and a step of site i touches only its r-neighborhood.  Noise comes from the
counter-based streams in :mod:`.noise`; a trajectory is a pure function of
(initial state, master seed, h, T, box).

A compiled kernel (Cython) accelerates the dominant Heisenberg stepping
loop when the extension is importable; the numpy path is the reference
implementation and the automatic fallback.
"""

from dataclasses import dataclass, field

import numpy as np

from . import noise as _noise
from .errors import InvalidInputError
from .geometry import weighted_s_norm
from .interactions import InteractionSpec, redefine_at_boundary
from .lattice import Box

try:  # compiled stepping kernel is optional
    from . import _kernels

    HAVE_KERNELS = True
except ImportError:  # pragma: no cover - build-dependent
    _kernels = None
    HAVE_KERNELS = False

_MARTINET_GUARD = 1e6
_NOISE_CHUNK_BUDGET = 4_000_000  # doubles per noise chunk


@dataclass(frozen=True)
class NoisePlan:
    """Master seed and time discretization of one run."""

    seed: int
    h: float
    T: float

    def __post_init__(self):
        if self.h <= 0 or self.T < 0:
            raise InvalidInputError("need h > 0 and T >= 0")

    @property
    def n_steps(self):
        return int(round(self.T / self.h))


class LatticeSystem:
    """A site model, a finite box, bounded interactions and per-site rates."""

    def __init__(self, model, box, interaction=None, lam=1.0):
        from .models import get_model

        self.model = get_model(model) if isinstance(model, str) else model
        self.box = box
        lam = np.broadcast_to(np.asarray(lam, dtype=float), (box.nsites,)).copy()
        if np.any(lam <= 0) or not np.all(np.isfinite(lam)):
            raise InvalidInputError("lambda must be positive and finite (H3)")
        self.lam = lam
        if interaction is None:
            interaction = InteractionSpec(family="zero", C=0.0, r=box.r)
        self.spec = interaction
        self.interaction = redefine_at_boundary(interaction, box)

    @property
    def nsites(self):
        return self.box.nsites

    @property
    def dim(self):
        return self.model.dim

    def q(self, states):
        return self.interaction.evaluate(states)

    def drift(self, states):
        return self.model.drift(states, self.q(states), self.lam)

    def em_step(self, states, xi, h):
        """One Euler-Maruyama update a + b(a) h + sigma(a) sqrt(h) xi."""
        b = self.model.drift(states, self.q(states), self.lam)
        g = self.model.dispersion_apply(states, xi)
        return states + h * b + np.sqrt(h) * g

    def initial_state(self, value=0.0, replicas=None):
        base = np.zeros((self.nsites, self.dim)) + value
        if replicas is None:
            return base
        return np.broadcast_to(base, (replicas, self.nsites, self.dim)).copy()


def em_step(system, states, xi, h):
    """Module-level alias of :meth:`LatticeSystem.em_step`."""
    return system.em_step(states, xi, h)


@dataclass
class Trajectory:
    """Recorded sample times and per-replica functional values."""

    times: np.ndarray
    values: dict
    configs: np.ndarray = None
    blowup_time: float = None
    seed: int = None

    @property
    def blew_up(self):
        return self.blowup_time is not None


def _resolve_recorders(record, system):
    """Map recorder names to callables states(..., N, dim) -> (...)."""
    recorders = {}
    want_configs = False
    for item in record:
        if callable(item):
            recorders[getattr(item, "__name__", f"f{len(recorders)}")] = item
        elif item == "config":
            want_configs = True
        elif isinstance(item, tuple):
            name, fn = item
            recorders[name] = fn
        else:
            raise InvalidInputError(f"unknown recorder {item!r}")
    return recorders, want_configs


def s_norm_recorder(system, scheme):
    """Recorder for the weighted configuration norm under a weight scheme."""
    u, _ = system.box.weight_arrays(scheme)

    def s_norm(states):
        return weighted_s_norm(states, u)

    return s_norm


def _kernel_supported(system):
    return (
        HAVE_KERNELS
        and system.model.name == "heisenberg"
        and system.spec.family in ("zero", "tanh")
        and system.spec.boundary_mode == "zero-pad"
    )


def _evolve_chunk(system, states, noise_chunk, h, use_kernel):
    """Advance `states` by noise_chunk.shape[0] steps; returns new array."""
    if use_kernel:
        states = np.ascontiguousarray(states)
        table = system.interaction._gather  # phantom row == nsites
        _kernels.heisenberg_evolve(
            states,
            system.lam,
            table.astype(np.int64),
            int(system.box.center_slot),
            float(system.spec.gain),
            float(h),
            np.ascontiguousarray(noise_chunk),
        )
        return states
    for s in range(noise_chunk.shape[0]):
        states = system.em_step(states, noise_chunk[s], h)
    return states


def simulate(system, state0, plan, record=(), record_stride=1, replicas=None,
             backend="auto"):
    """Integrate the lattice SDE and record functionals along the way.

    `record` is an iterable of callables or (name, fn) pairs plus the
    special entry "config" for full-state recording.  Records are taken at
    t = 0 and every `record_stride` steps.  On a non-finite state the
    trajectory is truncated and flagged with the blow-up time.
    """
    if backend not in ("auto", "python", "compiled"):
        raise InvalidInputError("backend must be auto, python or compiled")
    states = np.asarray(state0, dtype=float)
    squeeze = states.ndim == 2 and (replicas is None or replicas == 1)
    if states.ndim == 2:
        states = states[None, ...]
    if replicas is not None and states.shape[0] == 1 and replicas > 1:
        states = np.broadcast_to(
            states, (replicas,) + states.shape[1:]
        ).copy()
    R, N, dim = states.shape
    if N != system.nsites or dim != system.dim:
        raise InvalidInputError("state shape does not match system")
    if not np.all(np.isfinite(states)):
        raise InvalidInputError("non-finite initial state")

    use_kernel = backend == "compiled" or (backend == "auto" and _kernel_supported(system))
    if backend == "compiled" and not _kernel_supported(system):
        raise InvalidInputError("compiled backend unavailable for this system")

    recorders, want_configs = _resolve_recorders(record, system)
    n_steps = plan.n_steps
    guard = system.model.name == "martinet"

    def _snap(value):
        # recorders may hand back views into the state buffer, which the
        # stepper overwrites in place; snapshot before storing
        return np.array(value, dtype=float, copy=True)

    rec_times = [0.0]
    rec_values = {name: [_snap(fn(states))] for name, fn in recorders.items()}
    rec_configs = [states.copy()] if want_configs else None
    blowup_time = None

    m = system.model.noise_dim
    chunk_cap = max(1, _NOISE_CHUNK_BUDGET // max(1, R * N * m))
    step = 0
    while step < n_steps:
        n_here = min(record_stride - (step % record_stride) or record_stride,
                     n_steps - step)
        done = 0
        while done < n_here:
            c = min(chunk_cap, n_here - done)
            xi = _noise.gaussian_increments(
                plan.seed, np.arange(step + done, step + done + c),
                system.box.site_keys, R, m,
            )
            states = _evolve_chunk(system, states, xi, plan.h, use_kernel)
            done += c
            if not np.all(np.isfinite(states)) or (
                guard and np.max(np.abs(states)) > _MARTINET_GUARD
            ):
                blowup_time = (step + done) * plan.h
                break
        step += done
        if blowup_time is not None:
            break
        if step % record_stride == 0 or step == n_steps:
            rec_times.append(step * plan.h)
            for name, fn in recorders.items():
                rec_values[name].append(_snap(fn(states)))
            if want_configs:
                rec_configs.append(states.copy())

    values = {k: np.squeeze(np.stack(v), axis=1) if squeeze else np.stack(v)
              for k, v in rec_values.items()}
    configs = None
    if want_configs:
        configs = np.stack(rec_configs)
        if squeeze:
            configs = configs[:, 0]
    return Trajectory(
        times=np.asarray(rec_times),
        values=values,
        configs=configs,
        blowup_time=blowup_time,
        seed=plan.seed,
    )


@dataclass
class CoupledRun:
    """Synchronously coupled pair of runs and their restricted distance."""

    times: np.ndarray
    sq_distance: np.ndarray  # (K, R) squared distance on the common sub-box
    sup_sq_distance: np.ndarray  # (R,) running sup over all steps
    final_states: tuple


def couple(system_a, system_b, state0_a, state0_b, plan, k, replicas=1,
           record_stride=1):
    """Drive two systems with identical noise and track their distance.

    Both systems must share (d, r) and contain the sub-box Pi_k; the
    recorded distance is the squared Euclidean norm of the difference
    restricted to Pi_k, together with its pathwise sup over every step.
    """
    box_a, box_b = system_a.box, system_b.box
    if box_a.d != box_b.d or box_a.r != box_b.r:
        raise InvalidInputError("lattice geometry mismatch")
    if k > min(box_a.n, box_b.n):
        raise InvalidInputError("common sub-box exceeds a box")
    if system_a.model.name != system_b.model.name:
        raise InvalidInputError("model mismatch")
    idx_a = box_a.restriction_indices(k)
    idx_b = box_b.restriction_indices(k)

    sa = np.asarray(state0_a, dtype=float)
    sb = np.asarray(state0_b, dtype=float)
    if sa.ndim == 2:
        sa = np.broadcast_to(sa, (replicas,) + sa.shape).copy()
    if sb.ndim == 2:
        sb = np.broadcast_to(sb, (replicas,) + sb.shape).copy()
    R = sa.shape[0]

    m = system_a.model.noise_dim

    def dist(xa, xb):
        diff = xa[:, idx_a, :] - xb[:, idx_b, :]
        return (diff * diff).sum(axis=(1, 2))

    sup_sq = dist(sa, sb)
    times = [0.0]
    dists = [sup_sq.copy()]
    for step in range(plan.n_steps):
        xi_a = _noise.step_increments(plan.seed, step, box_a.site_keys, R, m)
        xi_b = _noise.step_increments(plan.seed, step, box_b.site_keys, R, m)
        sa = system_a.em_step(sa, xi_a, plan.h)
        sb = system_b.em_step(sb, xi_b, plan.h)
        d = dist(sa, sb)
        sup_sq = np.maximum(sup_sq, d)
        if (step + 1) % record_stride == 0 or step + 1 == plan.n_steps:
            times.append((step + 1) * plan.h)
            dists.append(d)
    return CoupledRun(
        times=np.asarray(times),
        sq_distance=np.stack(dists),
        sup_sq_distance=sup_sq,
        final_states=(sa, sb),
    )
