"""Single-site transition-rate families and the rate-conditions audit.

A rate model assigns to every (configuration, site, target spin) a
nonnegative rate c_x(eta, j). Models declare which coordinate offsets
around a site can influence its rates; everything downstream (oscillation
tables, boundary coefficients, the conditions audit) enumerates exactly
those neighbourhoods, never samples them.

The model zoo:

  * ``IndependentFlip``  -- sites refresh independently towards a target
    distribution p; reversible, product-stationary for ``⊗p``.
  * ``GlauberIsing``     -- q=2 heat-bath dynamics for the nearest-neighbour
    Ising model; reversible for the Gibbs measure, which is *not* product
    for beta > 0 (the negative control for product stationarity).
  * ``DrivenClock``      -- q>=3 cyclic dynamics whose "advance by one"
    rate is boosted when the left neighbour sits in state 0; it is
    non-reversible yet leaves the uniform product measure stationary.
  * ``SoftFA``           -- q=2 kinetically constrained flips with a soft
    facilitation constraint; product-stationary for Bernoulli(p), and the
    eps=0 limit is the shipped zero-rate negative control.
  * ``TableRateModel``   -- arbitrary finite-range rates from a rate-table
    file keyed by (neighbourhood pattern, target).

Rates are pure functions of (neighbourhood pattern, target); identical
inputs reproduce identical floats.
"""

from __future__ import annotations

import itertools
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import InfeasibleSizeError, RateTableError
from .lattice import SpinConfig, Volume, site_digits, window_pattern_digits

#: Cap on neighbourhood enumeration size for exact oscillation suprema.
MAX_OSC_STATES = 2 ** 20

RATE_TABLE_MAGIC = "# ipslab-rate-table v1"


class RateModel(ABC):
    """Family c_x(eta, j) of single-site transition rates."""

    name: str
    q: int

    @abstractmethod
    def dependency_offsets(self, d: int) -> tuple[tuple[int, ...], ...]:
        """Coordinate offsets (relative to the site) that can affect its rates.

        Must include the zero offset when the rate depends on the site's
        own spin. Everything outside these offsets is declared inert,
        which the audit verifies exhaustively on small volumes.
        """

    @abstractmethod
    def rate_values(self, volume: Volume, get, site: int, target: int):
        """Rate c_site(., target) under the spin accessor ``get``.

        ``get`` maps a resolved reference (site index or ``("clamp", s)``)
        to a spin scalar or a vector of spins across an ensemble of
        configurations; the return value broadcasts against those.
        """

    @abstractmethod
    def bounds(self, volume: Volume) -> tuple[float, float]:
        """Declared rate bounds [r_min, r_max] on this volume."""

    @abstractmethod
    def params(self) -> dict:
        """Model parameters for manifests and hashing."""

    def radius(self, d: int) -> int:
        """Declared interaction radius: max Chebyshev norm of the offsets."""
        offs = self.dependency_offsets(d)
        return max((max(abs(c) for c in off) for off in offs), default=0)

    def validate_volume(self, volume: Volume) -> None:
        """Hook for model-specific volume restrictions."""
        if volume.q != self.q:
            raise ValueError(
                f"model {self.name} has q={self.q}, volume has q={volume.q}"
            )


def _scalar_getter(spins):
    def get(ref):
        if isinstance(ref, tuple):
            return ref[1]
        return int(spins[ref])

    return get


def _dense_getter(volume: Volume):
    def get(ref):
        if isinstance(ref, tuple):
            return ref[1]
        return site_digits(volume, ref)

    return get


def rate(model: RateModel, volume: Volume, config: SpinConfig, site: int, target: int) -> float:
    """The value c_x(eta, j). The generator ignores the diagonal j = eta_x."""
    if not 0 <= site < volume.n_sites:
        raise ValueError(f"site {site} out of range")
    if not 0 <= target < volume.q:
        raise ValueError(f"target spin {target} out of range")
    model.validate_volume(volume)
    return float(model.rate_values(volume, _scalar_getter(config.spins), site, target))


def total_rate(model: RateModel, volume: Volume, config: SpinConfig, site: int) -> float:
    """Total rate sum_{j != eta_x} c_x(eta, j) at which the site leaves its state."""
    own = config.spins[site]
    get = _scalar_getter(config.spins)
    return float(
        sum(
            model.rate_values(volume, get, site, j)
            for j in range(volume.q)
            if j != own
        )
    )


@lru_cache(maxsize=1024)
def rate_vector(model: RateModel, volume: Volume, site: int, target: int) -> np.ndarray:
    """c_site(., target) evaluated at every dense state of the volume."""
    n = volume.require_dense()
    vals = np.asarray(
        model.rate_values(volume, _dense_getter(volume), site, target), dtype=np.float64
    )
    vals = np.ascontiguousarray(np.broadcast_to(vals, (n,)))
    vals.setflags(write=False)
    return vals


# -- zoo ----------------------------------------------------------------------


def _axis_offsets(d: int) -> tuple[tuple[int, ...], ...]:
    offs = []
    for axis in range(d):
        for step in (-1, +1):
            off = [0] * d
            off[axis] = step
            offs.append(tuple(off))
    return tuple(offs)


@dataclass(frozen=True)
class IndependentFlip(RateModel):
    """c_x(eta, j) = p[j]: independent per-site refresh towards p."""

    p: tuple[float, ...]
    name: str = field(default="independent-flip", init=False)

    def __post_init__(self):
        p = tuple(float(v) for v in self.p)
        if len(p) < 2 or any(v < 0 for v in p) or abs(sum(p) - 1.0) > 1e-12:
            raise ValueError("p must be a probability vector of length q")
        object.__setattr__(self, "p", p)

    @classmethod
    def uniform(cls, q: int) -> "IndependentFlip":
        return cls(tuple(1.0 / q for _ in range(q)))

    @property
    def q(self) -> int:
        return len(self.p)

    def dependency_offsets(self, d):
        return ()

    def rate_values(self, volume, get, site, target):
        return self.p[target]

    def bounds(self, volume):
        return (min(self.p), max(self.p))

    def params(self):
        return {"p": list(self.p)}


@dataclass(frozen=True)
class GlauberIsing(RateModel):
    """Heat-bath Glauber dynamics for the nearest-neighbour Ising model.

    With sigma = 2*eta - 1 and local field h_x = sum of neighbour sigmas,
    the site refreshes to j with rate exp(beta*sigma_j*h_x)/(2 cosh(beta*h_x)).
    Reversible for the Ising Gibbs measure at inverse temperature beta.
    """

    beta: float
    name: str = field(default="glauber-ising", init=False)
    q: int = field(default=2, init=False)

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError("beta must be >= 0")

    def dependency_offsets(self, d):
        return _axis_offsets(d)

    def _field(self, volume, get, site):
        h = 0
        for ref in volume.neighbor_slots(site):
            h = h + (2 * get(ref) - 1)
        return h

    def rate_values(self, volume, get, site, target):
        h = np.asarray(self._field(volume, get, site), dtype=np.float64)
        sigma_j = 2 * target - 1
        return np.exp(self.beta * sigma_j * h) / (2.0 * np.cosh(self.beta * h))

    def bounds(self, volume):
        a = 2.0 * self.beta * (2 * volume.d)
        return (1.0 / (1.0 + np.exp(a)), 1.0 / (1.0 + np.exp(-a)))

    def params(self):
        return {"beta": self.beta}


@dataclass(frozen=True)
class DrivenClock(RateModel):
    """Cyclically driven clock dynamics, non-reversible but product-stationary.

    The move eta_x -> eta_x + 1 (mod q) runs at rate 1 + eps when the left
    neighbour (offset -e_1) is in state 0 and at rate 1 otherwise; all other
    moves run at the baseline rate. Because the boost never depends on the
    site's own spin, inflow and outflow cancel exactly under the uniform
    product measure, while the cycle 0 -> 1 -> 2 -> 0 at a single site has
    forward rate product (1+eps)^3 or 1 against backward base^3: the
    Kolmogorov criterion fails, so the dynamics is non-reversible.
    """

    q: int
    eps: float
    base: float
    name: str = field(default="driven-clock", init=False)

    def __post_init__(self):
        if self.q < 3:
            raise ValueError("driven clock needs q >= 3 for a non-trivial cycle")
        if self.eps < 0:
            raise ValueError("eps must be >= 0")
        if self.base <= 0:
            raise ValueError("baseline rate must be > 0")

    def validate_volume(self, volume):
        super().validate_volume(volume)
        if volume.side < 2:
            raise ValueError(
                "driven clock requires side >= 2: on side 1 the left neighbour "
                "is the site itself and the drive would read its own spin"
            )

    def dependency_offsets(self, d):
        left = tuple([-1] + [0] * (d - 1))
        zero = tuple([0] * d)
        return (zero, left)

    def _left_ref(self, volume, site):
        coord = list(volume.coord_of(site))
        coord[0] -= 1
        return volume.resolve(tuple(coord))

    def rate_values(self, volume, get, site, target):
        own = get(site)
        left = get(self._left_ref(volume, site))
        boost = 1.0 + self.eps * (np.asarray(left) == 0)
        elevated = (np.asarray(own) + 1) % self.q == target
        return np.where(elevated, boost, self.base)

    def bounds(self, volume):
        return (min(self.base, 1.0), max(self.base, 1.0 + self.eps))

    def params(self):
        return {"q": self.q, "eps": self.eps, "base": self.base}


@dataclass(frozen=True)
class SoftFA(RateModel):
    """Softened Fredrickson-Andersen dynamics: c = (eps + constraint) * p[j].

    The facilitation constraint is 1 when at least one neighbour is excited
    (spin 1). The mobility prefactor never reads the site's own spin, so the
    Bernoulli(p) product measure is reversible for every eps >= 0. For
    eps = 0 the all-empty configuration freezes: the (R3) audit fails and
    the positive-mass floor pins at zero, which is exactly the role of the
    shipped zero-rate negative control.
    """

    eps: float
    p_one: float
    name: str = field(default="soft-fa", init=False)
    q: int = field(default=2, init=False)

    def __post_init__(self):
        if self.eps < 0:
            raise ValueError("eps must be >= 0")
        if not 0.0 < self.p_one < 1.0:
            raise ValueError("p_one must lie in (0, 1)")

    def validate_volume(self, volume):
        super().validate_volume(volume)
        if volume.side < 2:
            raise ValueError(
                "soft-FA requires side >= 2: on side 1 the constraint would "
                "read the site's own spin"
            )

    def dependency_offsets(self, d):
        return _axis_offsets(d)

    def rate_values(self, volume, get, site, target):
        constraint = False
        for ref in volume.neighbor_slots(site):
            constraint = constraint | (np.asarray(get(ref)) == 1)
        mobility = self.eps + 1.0 * constraint
        pj = self.p_one if target == 1 else 1.0 - self.p_one
        return mobility * pj

    def bounds(self, volume):
        lo, hi = min(self.p_one, 1 - self.p_one), max(self.p_one, 1 - self.p_one)
        return (self.eps * lo, (self.eps + 1.0) * hi)

    def params(self):
        return {"eps": self.eps, "p_one": self.p_one}


@dataclass(frozen=True)
class TableRateModel(RateModel):
    """Finite-range rates looked up from an explicit (pattern, target) table.

    ``offsets`` fixes both the dependency set and the digit order of the
    neighbourhood pattern strings; entry i of a pattern is the spin at
    ``site + offsets[i]``. The table must be complete: q**len(offsets)
    patterns times q targets.
    """

    q: int
    d: int
    offsets: tuple[tuple[int, ...], ...]
    rates: tuple[float, ...]  # flat: rates[pattern + q**k * target]
    name: str = field(default="rate-table", init=False)

    def __post_init__(self):
        if self.q > 10:
            raise ValueError("rate tables use digit strings; q <= 10 required")
        k = len(self.offsets)
        if len(set(self.offsets)) != k:
            raise ValueError("duplicate offsets")
        if any(len(off) != self.d for off in self.offsets):
            raise ValueError("offset dimension mismatch")
        if len(self.rates) != self.q ** k * self.q:
            raise ValueError(
                f"table must have q**{k} * q = {self.q ** k * self.q} entries, "
                f"got {len(self.rates)}"
            )
        if any(r < 0 for r in self.rates):
            raise ValueError("rates must be nonnegative")

    def dependency_offsets(self, d):
        if d != self.d:
            raise ValueError(f"rate table is {self.d}-dimensional, volume is {d}")
        return self.offsets

    def pattern_index(self, spins_at_offsets) -> int:
        idx = 0
        for s in reversed(spins_at_offsets):
            idx = idx * self.q + int(s)
        return idx

    def rate_values(self, volume, get, site, target):
        coord = volume.coord_of(site)
        idx = 0
        mult = 1
        for off in self.offsets:
            ref = volume.resolve(tuple(c + o for c, o in zip(coord, off)))
            idx = idx + mult * np.asarray(get(ref), dtype=np.int64)
            mult *= self.q
        table = np.asarray(self.rates[target * self.q ** len(self.offsets):][: self.q ** len(self.offsets)])
        return table[idx]

    def bounds(self, volume):
        return (min(self.rates), max(self.rates))

    def params(self):
        return {"q": self.q, "d": self.d, "offsets": [list(o) for o in self.offsets]}

    # -- rate-table file format ------------------------------------------

    @classmethod
    def from_file(cls, path) -> "TableRateModel":
        """Parse the structured-text rate-table format (exact decimals)."""
        lines = Path(path).read_text().splitlines()
        if not lines or lines[0].strip() != RATE_TABLE_MAGIC:
            raise RateTableError(f"{path}: missing header line {RATE_TABLE_MAGIC!r}")
        q = d = None
        offsets = None
        entries = {}
        for ln, raw in enumerate(lines[1:], start=2):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            try:
                if parts[0] == "q":
                    q = int(parts[1])
                elif parts[0] == "d":
                    d = int(parts[1])
                elif parts[0] == "offsets":
                    offsets = tuple(
                        tuple(int(c) for c in tok.strip("()").split(","))
                        for tok in parts[1:]
                    )
                elif parts[0] == "rate":
                    pattern, target, value = parts[1], int(parts[2]), parts[3]
                    try:
                        dec = Decimal(value)
                    except InvalidOperation as exc:
                        raise RateTableError(
                            f"{path}:{ln}: not a decimal rate: {value!r}"
                        ) from exc
                    entries[(pattern, target)] = float(dec)
                else:
                    raise RateTableError(f"{path}:{ln}: unknown directive {parts[0]!r}")
            except (IndexError, ValueError) as exc:
                raise RateTableError(f"{path}:{ln}: malformed line {raw!r}") from exc
        if q is None or d is None or offsets is None:
            raise RateTableError(f"{path}: q, d and offsets are all required")
        k = len(offsets)
        rates = [0.0] * (q ** k * q)
        seen = set()
        for (pattern, target), value in entries.items():
            if len(pattern) != k or any(ch not in "0123456789" for ch in pattern):
                raise RateTableError(f"{path}: bad pattern {pattern!r}")
            digits = [int(ch) for ch in pattern]
            if any(s >= q for s in digits) or not 0 <= target < q:
                raise RateTableError(f"{path}: pattern/target out of range: {pattern} {target}")
            idx = 0
            for s in reversed(digits):
                idx = idx * q + s
            rates[target * q ** k + idx] = value
            seen.add((idx, target))
        expected = q ** k * q
        if len(seen) != expected:
            raise RateTableError(
                f"{path}: incomplete table, {len(seen)} of {expected} entries given"
            )
        return cls(q=q, d=d, offsets=offsets, rates=tuple(rates))

    def to_file(self, path) -> None:
        k = len(self.offsets)
        lines = [RATE_TABLE_MAGIC, f"q {self.q}", f"d {self.d}"]
        lines.append("offsets " + " ".join("(" + ",".join(map(str, o)) + ")" for o in self.offsets))
        for target in range(self.q):
            for idx in range(self.q ** k):
                digits = []
                rem = idx
                for _ in range(k):
                    rem, s = divmod(rem, self.q)
                    digits.append(str(s))
                pattern = "".join(digits)
                lines.append(f"rate {pattern} {target} {self.rates[target * self.q ** k + idx]!r}")
        Path(path).write_text("\n".join(lines) + "\n")


MODEL_BUILDERS = {
    "independent-flip": lambda q, params: IndependentFlip(
        tuple(params["p"]) if "p" in params else tuple(1.0 / q for _ in range(q))
    ),
    "glauber-ising": lambda q, params: GlauberIsing(beta=params["beta"]),
    "driven-clock": lambda q, params: DrivenClock(
        q=q, eps=params["eps"], base=params["base"]
    ),
    "soft-fa": lambda q, params: SoftFA(eps=params["eps"], p_one=params["p_one"]),
    "frozen-fa": lambda q, params: SoftFA(eps=0.0, p_one=params.get("p_one", 0.5)),
}


def build_model(name: str, q: int, params: dict) -> RateModel:
    if name == "rate-table":
        return TableRateModel.from_file(params["path"])
    if name not in MODEL_BUILDERS:
        raise ValueError(f"unknown model {name!r}; known: {sorted(MODEL_BUILDERS)}")
    return MODEL_BUILDERS[name](q, params)


# -- oscillation tables -------------------------------------------------------


def dependency_sites(model: RateModel, volume: Volume, site: int) -> tuple[int, ...]:
    """Distinct in-box sites that can influence c_site, the site included."""
    coord = volume.coord_of(site)
    sites = {site}
    for off in model.dependency_offsets(volume.d):
        ref = volume.resolve(tuple(c + o for c, o in zip(coord, off)))
        if isinstance(ref, int):
            sites.add(ref)
    return tuple(sorted(sites))


def _enumeration_getter(volume: Volume, sites: tuple[int, ...], digits: np.ndarray):
    pos = {s: i for i, s in enumerate(sites)}

    def get(ref):
        if isinstance(ref, tuple):
            return ref[1]
        if ref in pos:
            return digits[:, pos[ref]]
        return 0  # declared inert; any fixed spin gives the same rate

    return get


def _assignment_rates(model, volume, x, sites, targets=None) -> np.ndarray:
    """Rates (n_targets, q**len(sites)) over all assignments to ``sites``."""
    if targets is None:
        targets = range(volume.q)
    n = volume.q ** len(sites)
    if n > MAX_OSC_STATES:
        raise InfeasibleSizeError(
            f"oscillation enumeration needs {n} neighbourhood states, cap is {MAX_OSC_STATES}"
        )
    digits = window_pattern_digits(volume.q, len(sites))
    get = _enumeration_getter(volume, sites, digits)
    rows = [
        np.broadcast_to(
            np.asarray(model.rate_values(volume, get, x, j), dtype=np.float64), (n,)
        )
        for j in targets
    ]
    return np.stack(rows)


def _enum_sites_y_first(model, volume, x, y) -> tuple[int, ...]:
    deps = set(dependency_sites(model, volume, x))
    deps.add(x)
    deps.discard(y)
    return (y,) + tuple(sorted(deps))


def oscillation_per_target(model, volume, x: int, y: int, target: int) -> float:
    """delta_y of the function eta -> c_x(eta, target)."""
    if y != x and y not in dependency_sites(model, volume, x):
        return 0.0
    sites = _enum_sites_y_first(model, volume, x, y)
    vals = _assignment_rates(model, volume, x, sites, targets=(target,))[0]
    grouped = vals.reshape(-1, volume.q)
    return float((grouped.max(axis=1) - grouped.min(axis=1)).max())


def oscillation_total(model, volume, x: int, y: int) -> float:
    """delta_y of the total rate eta -> sum_{j != eta_x} c_x(eta, j)."""
    deps = dependency_sites(model, volume, x)
    if y not in deps and y != x:
        return 0.0
    sites = _enum_sites_y_first(model, volume, x, y)
    all_rates = _assignment_rates(model, volume, x, sites)
    digits = window_pattern_digits(volume.q, len(sites))
    own = digits[:, sites.index(x)].astype(np.int64)
    totals = all_rates.sum(axis=0) - np.take_along_axis(
        all_rates, own[None, :], axis=0
    )[0]
    grouped = totals.reshape(-1, volume.q)
    return float((grouped.max(axis=1) - grouped.min(axis=1)).max())


def gamma(model, volume, window, x: int) -> float:
    """Boundary interaction strength of site x relative to a window.

    Per-target convention: sum over exterior sites y and over all q targets
    of delta_y(c_x(., j)). This is the coefficient entering the
    zero-time-averaged-loss inequality.
    """
    window = set(window)
    if x not in window:
        raise ValueError("x must lie in the window")
    total = 0.0
    for y in dependency_sites(model, volume, x):
        if y in window or y == x:
            continue
        for j in range(volume.q):
            total += oscillation_per_target(model, volume, x, y, j)
    return total


def gamma_total_rate(model, volume, window, x: int) -> float:
    """Boundary coefficient with the total-rate oscillation convention."""
    window = set(window)
    total = 0.0
    for y in dependency_sites(model, volume, x):
        if y in window or y == x:
            continue
        total += oscillation_total(model, volume, x, y)
    return total


# -- the (R1)-(R4) audit ------------------------------------------------------


@dataclass(frozen=True)
class ConditionReport:
    name: str
    passed: bool
    value: float | None
    witness: dict | None
    note: str

    def to_json(self):
        return {
            "name": self.name,
            "passed": self.passed,
            "value": self.value,
            "witness": self.witness,
            "note": self.note,
        }


@dataclass(frozen=True)
class RateAudit:
    """Exact audit of the rate conditions plus the boundary-coefficient tables."""

    model: str
    conditions: tuple[ConditionReport, ...]
    c_min: float
    sup_rate: float
    oscillation_total_table: dict
    oscillation_per_target_sum: dict
    ladder: tuple[int, ...]
    gamma_ladder: dict          # {k: {x: gamma}} per-target convention
    gamma_ladder_total: dict    # {k: {x: gamma}} total-rate convention
    c1: float
    c2: float
    c1_total: float
    c2_total: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def condition(self, name: str) -> ConditionReport:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self):
        return {
            "model": self.model,
            "passed": self.passed,
            "conditions": [c.to_json() for c in self.conditions],
            "c_min": self.c_min,
            "sup_rate": self.sup_rate,
            "oscillation_total": {
                f"{x},{y}": v for (x, y), v in sorted(self.oscillation_total_table.items())
            },
            "oscillation_per_target_sum": {
                f"{x},{y}": v
                for (x, y), v in sorted(self.oscillation_per_target_sum.items())
            },
            "ladder": list(self.ladder),
            "gamma_ladder": {
                str(k): {str(x): v for x, v in sorted(g.items())}
                for k, g in self.gamma_ladder.items()
            },
            "gamma_ladder_total": {
                str(k): {str(x): v for x, v in sorted(g.items())}
                for k, g in self.gamma_ladder_total.items()
            },
            "c1": self.c1,
            "c2": self.c2,
            "c1_total": self.c1_total,
            "c2_total": self.c2_total,
            "gamma_note": (
                "gamma_ladder sums per-target oscillations over all q targets; "
                "gamma_ladder_total uses the total-rate oscillation. The two "
                "conventions coexist upstream; the loss inequality uses the "
                "per-target sum."
            ),
        }


def _pattern_string(digits_row, sites) -> str:
    return "".join(str(int(d)) for d in digits_row)


def audit(model: RateModel, volume: Volume, ladder=()) -> RateAudit:
    """Run the (R1)-(R4) audit and fill every coefficient table.

    ``ladder`` is a sequence of window radii k for the centered boxes used
    by the C1/C2 constants; it may be empty.
    """
    model.validate_volume(volume)
    q = volume.q
    r_lo, r_hi = (float(b) for b in model.bounds(volume))
    conditions = []

    sup_rate = 0.0
    c_min = np.inf
    c_min_witness = None
    bounds_witness = None
    for x in range(volume.n_sites):
        sites = tuple(sorted(set(dependency_sites(model, volume, x)) | {x}))
        all_rates = _assignment_rates(model, volume, x, sites)
        digits = window_pattern_digits(q, len(sites))
        own = digits[:, sites.index(x)].astype(np.int64)
        # (R1): sum over targets of the sup of c_x(., j)
        sup_here = float(all_rates.max(axis=1).sum())
        sup_rate = max(sup_rate, sup_here)
        # declared bounds
        lo_here, hi_here = float(all_rates.min()), float(all_rates.max())
        if (lo_here < r_lo - 1e-12 or hi_here > r_hi + 1e-12) and bounds_witness is None:
            j, a = np.unravel_index(
                np.argmin(all_rates) if lo_here < r_lo - 1e-12 else np.argmax(all_rates),
                all_rates.shape,
            )
            bounds_witness = {
                "site": x,
                "target": int(j),
                "pattern_sites": list(sites),
                "pattern": _pattern_string(digits[a], sites),
                "rate": float(all_rates[j, a]),
            }
        # (R3): min over off-diagonal targets
        offdiag = all_rates.copy()
        offdiag[own[None, :] == np.arange(q)[:, None]] = np.inf
        m = float(offdiag.min())
        if m < c_min:
            c_min = m
            j, a = np.unravel_index(np.argmin(offdiag), offdiag.shape)
            c_min_witness = {
                "site": x,
                "target": int(j),
                "pattern_sites": list(sites),
                "pattern": _pattern_string(digits[a], sites),
                "rate": m,
            }

    conditions.append(
        ConditionReport(
            name="R1",
            passed=bool(np.isfinite(sup_rate)),
            value=sup_rate,
            witness=None,
            note="sup over sites of the summed per-target sup rates (exact enumeration)",
        )
    )
    conditions.append(
        ConditionReport(
            name="bounds",
            passed=bounds_witness is None,
            value=None,
            witness=bounds_witness,
            note=f"all enumerated rates inside declared [{r_lo!r}, {r_hi!r}]",
        )
    )
    conditions.append(
        ConditionReport(
            name="R2",
            passed=True,
            value=None,
            witness=None,
            note="rates depend on finitely many spins, hence continuous",
        )
    )
    conditions.append(
        ConditionReport(
            name="R3",
            passed=bool(c_min > 0.0),
            value=float(c_min),
            witness=c_min_witness,
            note="minimum off-diagonal rate over exhaustive neighbourhood enumeration",
        )
    )

    # (R4): finite truncation of sum_y |y| sup_x delta_{x+y} c_x(.), tail zero
    # by the declared radius.
    radius = model.radius(volume.d)
    osc_total = {}
    osc_pt_sum = {}
    for x in range(volume.n_sites):
        for y in dependency_sites(model, volume, x):
            if y == x:
                continue
            osc_total[(x, y)] = oscillation_total(model, volume, x, y)
            osc_pt_sum[(x, y)] = sum(
                oscillation_per_target(model, volume, x, y, j) for j in range(q)
            )
    r4_value = 0.0
    for off in itertools.product(range(-radius, radius + 1), repeat=volume.d):
        if all(o == 0 for o in off):
            continue
        norm = float(np.sqrt(sum(o * o for o in off)))
        worst = 0.0
        for x in range(volume.n_sites):
            coord = volume.coord_of(x)
            ref = volume.resolve(tuple(c + o for c, o in zip(coord, off)))
            if isinstance(ref, int) and ref != x:
                worst = max(worst, osc_total.get((x, ref), 0.0))
        r4_value += norm * worst
    conditions.append(
        ConditionReport(
            name="R4",
            passed=True,
            value=r4_value,
            witness=None,
            note=(
                f"finite truncation over declared radius {radius}; the exterior "
                "tail vanishes for finite-range models"
            ),
        )
    )

    gamma_ladder = {}
    gamma_ladder_total = {}
    for k in ladder:
        window = volume.centered_box(k)
        gamma_ladder[k] = {x: gamma(model, volume, window, x) for x in window}
        gamma_ladder_total[k] = {
            x: gamma_total_rate(model, volume, window, x) for x in window
        }

    def _c1(gam):
        best = 0.0
        for x in set().union(*(set(g) for g in gam.values())) if gam else set():
            best = max(best, sum(g.get(x, 0.0) for g in gam.values()))
        return best

    def _c2(gam):
        best = 0.0
        for k, g in gam.items():
            best = max(best, sum(g.values()) / k ** (volume.d - 1))
        return best

    return RateAudit(
        model=model.name,
        conditions=tuple(conditions),
        c_min=float(c_min),
        sup_rate=float(sup_rate),
        oscillation_total_table=osc_total,
        oscillation_per_target_sum=osc_pt_sum,
        ladder=tuple(ladder),
        gamma_ladder=gamma_ladder,
        gamma_ladder_total=gamma_ladder_total,
        c1=_c1(gamma_ladder),
        c2=_c2(gamma_ladder),
        c1_total=_c1(gamma_ladder_total),
        c2_total=_c2(gamma_ladder_total),
    )


def check_declared_radius(model: RateModel, volume: Volume, x: int) -> float:
    """Max oscillation of c_x at sites outside the declared dependency set.

    Zero certifies the declaration on this volume (exhaustive check).
    """
    deps = set(dependency_sites(model, volume, x))
    worst = 0.0
    for y in range(volume.n_sites):
        if y in deps or y == x:
            continue
        sites = (y,) + tuple(sorted(deps))
        n = volume.q ** len(sites)
        if n > MAX_OSC_STATES:
            raise InfeasibleSizeError("radius check enumeration too large")
        for j in range(volume.q):
            vals = _assignment_rates(model, volume, x, sites, targets=(j,))[0]
            grouped = vals.reshape(-1, volume.q)
            worst = max(worst, float((grouped.max(axis=1) - grouped.min(axis=1)).max()))
    return worst


# -- non-reversibility witness ------------------------------------------------


@dataclass(frozen=True)
class CycleWitness:
    """A single-site 3-cycle with unequal forward/backward rate products."""

    site: int
    pattern_sites: tuple[int, ...]
    pattern: str
    cycle: tuple[int, int, int]
    forward: float
    backward: float

    @property
    def ratio(self) -> float:
        if self.backward == 0.0:
            return float("inf")
        return self.forward / self.backward

    def to_json(self):
        return {
            "site": self.site,
            "pattern_sites": list(self.pattern_sites),
            "pattern": self.pattern,
            "cycle": list(self.cycle),
            "forward": self.forward,
            "backward": self.backward,
            "ratio": self.ratio,
        }


def non_reversibility_witness(model: RateModel, volume: Volume) -> CycleWitness | None:
    """Search all single-site 3-cycles for a Kolmogorov-criterion violation.

    Returns the witness with the largest forward/backward ratio, or None
    when every single-site 3-cycle balances (e.g. q = 2).
    """
    if volume.q < 3:
        return None
    best = None
    for x in range(volume.n_sites):
        sites = tuple(sorted(set(dependency_sites(model, volume, x)) | {x}))
        pos_x = sites.index(x)
        digits = window_pattern_digits(volume.q, len(sites))
        all_rates = _assignment_rates(model, volume, x, sites)
        own = digits[:, pos_x].astype(np.int64)
        # Index of the assignment with the spin at x replaced by s.
        stride = volume.q ** pos_x
        base_idx = np.arange(digits.shape[0]) - own * stride
        for s0, s1, s2 in itertools.permutations(range(volume.q), 3):
            a0 = base_idx + s0 * stride
            a1 = base_idx + s1 * stride
            a2 = base_idx + s2 * stride
            fwd = all_rates[s1, a0] * all_rates[s2, a1] * all_rates[s0, a2]
            bwd = all_rates[s2, a0] * all_rates[s1, a2] * all_rates[s0, a1]
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(bwd > 0, fwd / np.maximum(bwd, 1e-300), np.inf)
            k = int(np.argmax(ratio))
            if best is None or ratio[k] > best.ratio:
                best = CycleWitness(
                    site=x,
                    pattern_sites=sites,
                    pattern=_pattern_string(digits[k], sites),
                    cycle=(s0, s1, s2),
                    forward=float(fwd[k]),
                    backward=float(bwd[k]),
                )
    return best
