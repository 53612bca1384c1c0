"""Finite lattice boxes, neighborhood tables and absolute site keys.

Boxes are the max-metric balls Pi_n = {i in Z^d : max_j |i_j| <= n*r}.
Sites are ordered lexicographically, which fixes a deterministic flat
indexing shared by every consumer.  Each site also carries an absolute
64-bit key derived from its lattice coordinates alone, so that two boxes
of different size agree on the keys of their common sites; the noise
streams are addressed by these keys.
"""

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidInputError

_COORD_OFFSET = 1 << 20
_COORD_BITS = 21


def site_key(site):
    """Absolute 64-bit key of a lattice site (tuple of ints, |c| < 2^20)."""
    key = 0
    for j, c in enumerate(site):
        if abs(c) >= _COORD_OFFSET:
            raise InvalidInputError("site coordinate out of key range")
        key |= (c + _COORD_OFFSET) << (_COORD_BITS * j)
    return key


@dataclass(frozen=True)
class Box:
    """The finite box Pi_n of a d-dimensional lattice with interaction range r."""

    d: int
    r: int
    n: int

    def __post_init__(self):
        if self.d < 1 or self.d > 3 or self.r < 1 or self.n < 0:
            raise InvalidInputError("need 1 <= d <= 3, r >= 1, n >= 0")

    @cached_property
    def sites(self):
        extent = self.n * self.r
        rng = range(-extent, extent + 1)
        return tuple(itertools.product(rng, repeat=self.d))

    @cached_property
    def index(self):
        return {site: i for i, site in enumerate(self.sites)}

    @property
    def nsites(self):
        return (2 * self.n * self.r + 1) ** self.d

    @cached_property
    def site_keys(self):
        return np.array([site_key(s) for s in self.sites], dtype=np.uint64)

    @cached_property
    def shells(self):
        """Shell index of each site: ceil(max|i_j| / r)."""
        out = np.empty(self.nsites, dtype=np.int64)
        for i, s in enumerate(self.sites):
            m = max(abs(c) for c in s)
            out[i] = -(-m // self.r)
        return out

    @cached_property
    def patch_offsets(self):
        """Lexicographically ordered offsets of the (2r+1)^d neighborhood."""
        rng = range(-self.r, self.r + 1)
        return tuple(itertools.product(rng, repeat=self.d))

    @property
    def patch_size(self):
        return (2 * self.r + 1) ** self.d

    @cached_property
    def center_slot(self):
        """Position of the zero offset inside the ordered patch."""
        return self.patch_offsets.index((0,) * self.d)

    def neighbor_table(self, boundary_mode="zero-pad"):
        """Patch index table of shape (nsites, patch_size).

        Entry (i, p) is the flat index of the p-th patch site of site i.
        With ``zero-pad`` sites outside the box get index -1 (a phantom
        zero state); with ``clamp`` coordinates are clamped to the box.
        """
        if boundary_mode not in ("zero-pad", "clamp"):
            raise InvalidInputError(f"unknown boundary mode {boundary_mode!r}")
        extent = self.n * self.r
        table = np.empty((self.nsites, self.patch_size), dtype=np.int64)
        for i, s in enumerate(self.sites):
            for p, off in enumerate(self.patch_offsets):
                nbr = tuple(c + o for c, o in zip(s, off))
                if all(abs(c) <= extent for c in nbr):
                    table[i, p] = self.index[nbr]
                elif boundary_mode == "zero-pad":
                    table[i, p] = -1
                else:
                    clamped = tuple(min(max(c, -extent), extent) for c in nbr)
                    table[i, p] = self.index[clamped]
        return table

    @cached_property
    def interior_mask(self):
        """Sites whose full r-neighborhood lies inside the box."""
        extent = self.n * self.r
        return np.array(
            [all(abs(c) + self.r <= extent for c in s) for s in self.sites]
        )

    def restriction_indices(self, k):
        """Flat indices of the sub-box Pi_k inside this box (k <= n)."""
        if k > self.n:
            raise InvalidInputError("sub-box larger than box")
        extent = k * self.r
        return np.array(
            [i for i, s in enumerate(self.sites) if max(abs(c) for c in s) <= extent],
            dtype=np.int64,
        )

    def overlap_indices(self, other):
        """Index pairs (mine, theirs) of sites shared with another box."""
        if self.d != other.d or self.r != other.r:
            raise InvalidInputError("boxes must share lattice geometry")
        small, large = (self, other) if self.n <= other.n else (other, self)
        mine, theirs = [], []
        for s in small.sites:
            mine.append(small.index[s])
            theirs.append(large.index[s])
        mine = np.asarray(mine, dtype=np.int64)
        theirs = np.asarray(theirs, dtype=np.int64)
        return (mine, theirs) if self.n <= other.n else (theirs, mine)

    def weight_arrays(self, scheme):
        """Per-site (u, v) weight arrays for a shell-constant scheme."""
        if scheme.d != self.d or scheme.r != self.r:
            raise InvalidInputError("weight scheme geometry mismatch")
        if self.shells.max(initial=0) > scheme.horizon:
            raise InvalidInputError("weight scheme horizon too short for box")
        u = np.array([scheme.shell_u[m] for m in self.shells])
        v = np.array([scheme.shell_v[m] for m in self.shells])
        return u, v
