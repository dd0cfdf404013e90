"""Finite-volume configuration spaces for lattice spin systems.

A `Volume` is a finite d-dimensional box of sites with either periodic
(torus) or frozen boundary, carrying q local states per site. Spin
configurations are encoded to dense state indices by a fixed mixed-radix
rule, so that probability measures on the configuration space become
plain vectors (`Distribution`). Product measures keep their per-site
marginals (`ProductMeasure`) and expand to dense vectors on demand.

Conventions fixed once and reused everywhere:

  * sites are enumerated lexicographically over their coordinate tuples,
    coordinates running from ``coord_lo`` to ``coord_hi`` per axis
    (``[-n, n]`` for odd side ``2n+1``);
  * the state index of a configuration is ``sum_i spins[i] * q**i`` over
    the site enumeration, i.e. site-major with the first site least
    significant;
  * a window is a sorted tuple of site indices, and window patterns use
    the same mixed-radix rule restricted to the window slots.

All types are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import FrozenShellError, InfeasibleSizeError

#: Largest state count handled by dense Distribution machinery. Beyond this
#: the exact engines refuse and the kMC engine is the supported path.
MAX_DENSE_STATES = 2 ** 24

#: Version tag of the site enumeration / state encoding, embedded in file
#: headers so artifacts from incompatible encodings are never mixed.
ENUMERATION_VERSION = 1

PERIODIC = "periodic"
FROZEN = "frozen"

_SUM_TOL = 1e-12


@dataclass(frozen=True)
class Volume:
    """A finite box of ``side**d`` sites with q local states per site.

    ``boundary`` is ``"periodic"`` (torus, every site has exactly ``2*d``
    neighbour slots, possibly with multiplicity on small sides) or
    ``"frozen"`` (box whose exterior spins are clamped to the values in
    ``frozen_shell``).

    ``frozen_shell`` maps exterior coordinates to clamped spins; it is
    stored as a sorted tuple of pairs so the volume stays hashable.
    """

    d: int
    side: int
    q: int
    boundary: str = PERIODIC
    frozen_shell: tuple[tuple[tuple[int, ...], int], ...] = ()

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got {self.d}")
        if self.side < 1:
            raise ValueError(f"side must be >= 1, got {self.side}")
        if self.q < 2:
            raise ValueError(f"local state count must be >= 2, got {self.q}")
        if self.boundary not in (PERIODIC, FROZEN):
            raise ValueError(f"unknown boundary mode {self.boundary!r}")
        if self.boundary == PERIODIC and self.frozen_shell:
            raise ValueError("frozen_shell given but boundary is periodic")
        if self.boundary == FROZEN:
            shell = tuple(sorted((tuple(c), int(s)) for c, s in self.frozen_shell))
            for coord, spin in shell:
                if len(coord) != self.d:
                    raise ValueError(f"shell coordinate {coord} has wrong dimension")
                if not 0 <= spin < self.q:
                    raise ValueError(f"shell spin {spin} out of range at {coord}")
                if self._inside(coord):
                    raise ValueError(f"shell coordinate {coord} lies inside the box")
            object.__setattr__(self, "frozen_shell", shell)

    # -- geometry -----------------------------------------------------------

    @property
    def n_sites(self) -> int:
        return self.side ** self.d

    @property
    def n_states(self) -> int:
        """Exact state count q**n_sites (arbitrary-precision int)."""
        return self.q ** self.n_sites

    @property
    def coord_lo(self) -> int:
        return -((self.side - 1) // 2)

    @property
    def coord_hi(self) -> int:
        return self.coord_lo + self.side - 1

    def _inside(self, coord) -> bool:
        return all(self.coord_lo <= c <= self.coord_hi for c in coord)

    def coords(self) -> tuple[tuple[int, ...], ...]:
        """All site coordinates in canonical (lexicographic) order."""
        return _coords(self.d, self.side, self.coord_lo)

    def coord_of(self, site: int) -> tuple[int, ...]:
        return self.coords()[site]

    def site_of(self, coord) -> int:
        """Site index of an in-box coordinate tuple."""
        idx = 0
        for c in coord:
            if not self.coord_lo <= c <= self.coord_hi:
                raise ValueError(f"coordinate {tuple(coord)} outside the box")
            idx = idx * self.side + (c - self.coord_lo)
        return idx

    def wrap(self, coord) -> tuple[int, ...]:
        """Wrap a coordinate onto the torus (periodic boundary only)."""
        lo, side = self.coord_lo, self.side
        return tuple(lo + (c - lo) % side for c in coord)

    def resolve(self, coord):
        """Map a (possibly exterior) coordinate to a site index or clamp.

        Returns a site index for interior coordinates (wrapping first on
        the torus) and ``("clamp", spin)`` for frozen exterior sites.
        """
        if self.boundary == PERIODIC:
            return self.site_of(self.wrap(coord))
        coord = tuple(coord)
        if self._inside(coord):
            return self.site_of(coord)
        for shell_coord, spin in self.frozen_shell:
            if shell_coord == coord:
                return ("clamp", spin)
        raise FrozenShellError(f"no frozen spin recorded at exterior coordinate {coord}")

    def neighbor_slots(self, site: int) -> tuple:
        """The 2d nearest-neighbour references of a site, with multiplicity."""
        return _neighbor_slots(self, site)

    def centered_box(self, radius: int) -> tuple[int, ...]:
        """Site indices of the centered box [-radius, radius]^d, sorted."""
        if radius < 0:
            raise ValueError("radius must be >= 0")
        if self.coord_lo > -radius or self.coord_hi < radius:
            raise ValueError(
                f"box of radius {radius} does not fit in coordinates "
                f"[{self.coord_lo}, {self.coord_hi}]"
            )
        sites = [
            self.site_of(c)
            for c in itertools.product(range(-radius, radius + 1), repeat=self.d)
        ]
        return tuple(sorted(sites))

    def require_dense(self) -> int:
        """State count, or InfeasibleSizeError beyond the dense cap."""
        n = self.n_states
        if n > MAX_DENSE_STATES:
            raise InfeasibleSizeError(
                f"state space of size {self.q}**{self.n_sites} exceeds the dense cap "
                f"2**24; use the kmc engine for volumes of this size"
            )
        return int(n)


@lru_cache(maxsize=None)
def _coords(d: int, side: int, lo: int) -> tuple[tuple[int, ...], ...]:
    axis = range(lo, lo + side)
    return tuple(itertools.product(axis, repeat=d))


@lru_cache(maxsize=4096)
def _neighbor_slots(volume: Volume, site: int) -> tuple:
    coord = volume.coord_of(site)
    slots = []
    for axis in range(volume.d):
        for step in (-1, +1):
            nb = list(coord)
            nb[axis] += step
            slots.append(volume.resolve(tuple(nb)))
    return tuple(slots)


# -- spin configurations ------------------------------------------------------


@dataclass(frozen=True)
class SpinConfig:
    """An immutable assignment of spins in {0..q-1} to the sites of a volume."""

    spins: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "spins", tuple(int(s) for s in self.spins))

    @classmethod
    def constant(cls, volume: Volume, value: int) -> "SpinConfig":
        if not 0 <= value < volume.q:
            raise ValueError(f"spin {value} out of range for q={volume.q}")
        return cls((value,) * volume.n_sites)

    def validate_for(self, volume: Volume) -> None:
        if len(self.spins) != volume.n_sites:
            raise ValueError(
                f"configuration has {len(self.spins)} sites, volume has {volume.n_sites}"
            )
        for s in self.spins:
            if not 0 <= s < volume.q:
                raise ValueError(f"spin value {s} out of range for q={volume.q}")

    def flip(self, site: int, value: int) -> "SpinConfig":
        """The configuration equal to this one except spin ``value`` at ``site``."""
        if not 0 <= site < len(self.spins):
            raise ValueError(f"site {site} out of range")
        spins = list(self.spins)
        spins[site] = int(value)
        return SpinConfig(tuple(spins))


def flip(config: SpinConfig, site: int, value: int) -> SpinConfig:
    return config.flip(site, value)


def encode(config: SpinConfig, volume: Volume) -> int:
    """Mixed-radix state index of a configuration (first site least significant)."""
    config.validate_for(volume)
    idx = 0
    for s in reversed(config.spins):
        idx = idx * volume.q + s
    return idx


def decode(index: int, volume: Volume) -> SpinConfig:
    if not 0 <= index < volume.n_states:
        raise ValueError(f"state index {index} out of range")
    spins = []
    for _ in range(volume.n_sites):
        index, s = divmod(index, volume.q)
        spins.append(s)
    return SpinConfig(tuple(spins))


@lru_cache(maxsize=16)
def _state_indices(volume: Volume) -> np.ndarray:
    n = volume.require_dense()
    idx = np.arange(n, dtype=np.int64)
    idx.setflags(write=False)
    return idx


@lru_cache(maxsize=256)
def site_digits(volume: Volume, site: int) -> np.ndarray:
    """Spin at ``site`` for every dense state index, as an int8 vector."""
    digits = (_state_indices(volume) // volume.q ** site) % volume.q
    digits = digits.astype(np.int8)
    digits.setflags(write=False)
    return digits


@lru_cache(maxsize=64)
def pattern_ids(volume: Volume, window: tuple[int, ...]) -> np.ndarray:
    """Window-pattern index of every dense state.

    Pattern indices use the window's own mixed-radix encoding: the first
    (lowest) site of the sorted window is least significant.
    """
    window = tuple(window)
    if window != tuple(sorted(set(window))):
        raise ValueError("window must be a sorted tuple of distinct site indices")
    if window and not (0 <= window[0] and window[-1] < volume.n_sites):
        raise ValueError("window not contained in volume")
    n = volume.require_dense()
    ids = np.zeros(n, dtype=np.int64)
    mult = 1
    for s in window:
        ids += mult * site_digits(volume, s).astype(np.int64)
        mult *= volume.q
    ids.setflags(write=False)
    return ids


def window_pattern_digits(q: int, size: int) -> np.ndarray:
    """Digit matrix (q**size, size) of all window patterns, slot-major."""
    n = q ** size
    idx = np.arange(n, dtype=np.int64)
    out = np.empty((n, size), dtype=np.int8)
    for j in range(size):
        out[:, j] = (idx // q ** j) % q
    return out


# -- distributions ------------------------------------------------------------


@dataclass(frozen=True)
class Distribution:
    """A dense probability vector over the q**n_sites configurations.

    Weights are indexed by the canonical mixed-radix encoding. The vector
    is copied and frozen at construction; entries must be nonnegative and
    sum to one within 1e-12.
    """

    q: int
    n_sites: int
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        n = self.q ** self.n_sites
        if n > MAX_DENSE_STATES:
            raise InfeasibleSizeError(
                f"distribution over {self.q}**{self.n_sites} states exceeds the dense "
                f"cap 2**24; use the kmc engine instead"
            )
        if w.shape != (n,):
            raise ValueError(f"expected {n} weights, got shape {w.shape}")
        if w.min(initial=0.0) < 0.0:
            raise ValueError(f"negative weight {w.min():.3e}")
        total = w.sum()
        if abs(total - 1.0) > _SUM_TOL:
            raise ValueError(f"weights sum to {total!r}, expected 1 within {_SUM_TOL}")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_weights(cls, q: int, n_sites: int, weights, clip: float = 1e-14):
        """Build a distribution, clipping rounding-level negatives and renormalizing."""
        w = np.asarray(weights, dtype=np.float64)
        if w.min(initial=0.0) < -clip:
            raise ValueError(f"weight {w.min():.3e} below the -{clip} rounding allowance")
        w = np.clip(w, 0.0, None)
        total = w.sum()
        if total <= 0.0:
            raise ValueError("weights sum to zero")
        return cls(q, n_sites, w / total)

    @classmethod
    def uniform(cls, volume: Volume) -> "Distribution":
        n = volume.require_dense()
        return cls(volume.q, volume.n_sites, np.full(n, 1.0 / n))

    @classmethod
    def point_mass(cls, volume: Volume, config: SpinConfig) -> "Distribution":
        n = volume.require_dense()
        w = np.zeros(n)
        w[encode(config, volume)] = 1.0
        return cls(volume.q, volume.n_sites, w)

    def marginal(self, keep) -> np.ndarray:
        """Marginal weights over the kept site positions (ascending order)."""
        keep = tuple(keep)
        if keep != tuple(sorted(set(keep))):
            raise ValueError("keep positions must be sorted and distinct")
        if keep and not (0 <= keep[0] and keep[-1] < self.n_sites):
            raise ValueError("keep positions out of range")
        arr = self.weights.reshape((self.q,) * self.n_sites)
        drop = tuple(self.n_sites - 1 - i for i in range(self.n_sites) if i not in keep)
        return arr.sum(axis=drop).reshape(-1)


def marginalize(dist: Distribution, window) -> Distribution:
    """Project a distribution onto a window of its sites.

    The result is a distribution over the window's own pattern encoding
    (first kept site least significant).
    """
    keep = tuple(window)
    return Distribution(dist.q, len(keep), dist.marginal(keep))


@dataclass(frozen=True)
class ProductMeasure:
    """Per-site marginals, all entries strictly positive.

    ``delta`` records the minimal marginal weight; it is the
    non-degeneracy constant entering the beta-vs-alpha bound.
    """

    marginals: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.marginals, dtype=np.float64)
        if m.ndim != 2:
            raise ValueError("marginals must be a (n_sites, q) matrix")
        if m.min() <= 0.0:
            raise ValueError(f"marginal entry {m.min():.3e} not strictly positive")
        sums = m.sum(axis=1)
        if np.abs(sums - 1.0).max() > _SUM_TOL:
            raise ValueError("every marginal must sum to 1 within 1e-12")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "marginals", m)

    @property
    def n_sites(self) -> int:
        return self.marginals.shape[0]

    @property
    def q(self) -> int:
        return self.marginals.shape[1]

    @property
    def delta(self) -> float:
        """Minimal marginal weight (> 0)."""
        return float(self.marginals.min())

    @classmethod
    def uniform(cls, volume: Volume) -> "ProductMeasure":
        return cls(np.full((volume.n_sites, volume.q), 1.0 / volume.q))

    @classmethod
    def bernoulli(cls, volume: Volume, p_one: float) -> "ProductMeasure":
        if volume.q != 2:
            raise ValueError("bernoulli marginals require q = 2")
        return cls(np.tile([1.0 - p_one, p_one], (volume.n_sites, 1)))

    @classmethod
    def from_single(cls, marginal, n_sites: int) -> "ProductMeasure":
        return cls(np.tile(np.asarray(marginal, dtype=np.float64), (n_sites, 1)))

    def window_weights(self, window) -> np.ndarray:
        """Product weights over the patterns of a window (sorted site indices)."""
        out = np.ones(1)
        for pos in window:
            out = np.outer(self.marginals[pos], out).reshape(-1)
        return out

    def expand(self) -> Distribution:
        n = self.q ** self.n_sites
        if n > MAX_DENSE_STATES:
            raise InfeasibleSizeError(
                "product measure expansion exceeds the dense cap 2**24"
            )
        return Distribution(self.q, self.n_sites, self.window_weights(range(self.n_sites)))


# -- divergences --------------------------------------------------------------


def kl_divergence(p: np.ndarray, r: np.ndarray) -> float:
    """Kullback-Leibler divergence sum p log(p/r) with the 0 log 0 = 0 convention.

    Returns ``inf`` when p puts mass where r does not.
    """
    p = np.asarray(p, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    support = p > 0.0
    if np.any(r[support] <= 0.0):
        return float("inf")
    ps = p[support]
    return float(np.sum(ps * np.log(ps / r[support])))


def tv_distance(p: np.ndarray, r: np.ndarray) -> float:
    """L1 distance between two weight vectors."""
    return float(np.abs(np.asarray(p) - np.asarray(r)).sum())
