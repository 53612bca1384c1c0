"""Counter-based Gaussian noise streams.

Every increment is a pure function of (master seed, step index, absolute
site key, replica index, noise coordinate), so trajectories replay
bit-identically regardless of execution order, chunking or worker count,
and two boxes of different size driven from the same seed share the
increments of their common sites (synchronous coupling by construction).

The stream is built from the splitmix64 finalizer, a well-tested 64-bit
mixer; uniforms are mapped to normals by Box-Muller.  Not cryptographic,
statistically sound for Monte Carlo.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_W1 = np.uint64(0xA0761D6478BD642F)
_W2 = np.uint64(0xE7037ED1A0B428DB)
_TWO_POW_NEG53 = 2.0 ** -53


def _mix(h):
    """splitmix64 finalizer, elementwise on uint64 arrays."""
    h = h ^ (h >> np.uint64(30))
    h = h * _M1
    h = h ^ (h >> np.uint64(27))
    h = h * _M2
    return h ^ (h >> np.uint64(31))


def _absorb(h, w):
    return _mix((h + _GOLDEN) ^ w)


def _to_uniform(h):
    """Map uint64 to a double in (0, 1]."""
    return ((h >> np.uint64(11)).astype(np.float64) + 1.0) * _TWO_POW_NEG53


def gaussian_increments(seed, steps, site_keys, n_replicas, noise_dim,
                        replica_offset=0):
    """Standard normal increments of shape (n_steps, n_replicas, N, noise_dim).

    `steps` is a scalar step index or a 1-d array of step indices;
    `site_keys` the absolute uint64 keys of the box sites.
    """
    steps = np.atleast_1d(np.asarray(steps, dtype=np.uint64))
    site_keys = np.asarray(site_keys, dtype=np.uint64)
    replicas = np.arange(replica_offset, replica_offset + n_replicas, dtype=np.uint64)
    coords = np.arange(noise_dim, dtype=np.uint64)

    h = _absorb(np.uint64(seed), steps[:, None, None, None])
    h = _absorb(h, site_keys[None, None, :, None])
    h = _absorb(h, replicas[None, :, None, None])
    h = _absorb(h, coords[None, None, None, :])
    u1 = _to_uniform(_mix(h ^ _W1))
    u2 = _to_uniform(_mix(h ^ _W2))
    r = np.sqrt(-2.0 * np.log(u1))
    return r * np.cos(2.0 * np.pi * u2)


def step_increments(seed, step, site_keys, n_replicas, noise_dim):
    """Increments for a single step, shape (n_replicas, N, noise_dim)."""
    return gaussian_increments(seed, step, site_keys, n_replicas, noise_dim)[0]
