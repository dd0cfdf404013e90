"""Event-driven stochastic simulation for lattices beyond exact reach.

Continuous-time trajectories are generated by direct (Gillespie-style)
sampling: exponential waiting times at the current total rate, site
picked proportionally to its total rate, target spin proportionally to
its transition rate, with incremental rate updates limited to the sites
whose dependency neighbourhoods contain the flipped site.

Randomness is counter-based and per-trajectory: trajectory i of a run
with master seed s draws from Philox keyed by (s, i), so ensembles are
bit-reproducible and independent of scheduling or thread count.
"""

from __future__ import annotations

import hashlib
import json
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .lattice import Distribution, SpinConfig, Volume, ENUMERATION_VERSION
from .models import RateModel, dependency_sites
from .exact import build_generator, evolve

TRAJECTORY_MAGIC = b"IPSTRAJ1"


def model_fingerprint(model: RateModel) -> str:
    """Stable content hash of a model's name and parameters."""
    blob = json.dumps({"name": model.name, "params": model.params()}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def trajectory_rng(master_seed: int, traj_index: int) -> np.random.Generator:
    """The counter-based stream of one trajectory."""
    return np.random.Generator(
        np.random.Philox(key=[int(master_seed) % 2 ** 64, int(traj_index) % 2 ** 64])
    )


@lru_cache(maxsize=64)
def _affected_map(model: RateModel, volume: Volume) -> tuple[tuple[int, ...], ...]:
    """affected[x]: sites whose rates can change when x flips (x included)."""
    deps = [set(dependency_sites(model, volume, y)) | {y} for y in range(volume.n_sites)]
    return tuple(
        tuple(sorted(y for y in range(volume.n_sites) if x in deps[y]))
        for x in range(volume.n_sites)
    )


@dataclass(frozen=True)
class Trajectory:
    """One continuous-time path: strictly increasing event times, one site per event."""

    master_seed: int
    traj_index: int
    t_end: float
    initial: SpinConfig
    times: np.ndarray
    sites: np.ndarray
    spins: np.ndarray
    final: SpinConfig
    model_hash: str

    @property
    def n_events(self) -> int:
        return int(self.times.size)


def _site_rates_fn(model, volume, spins):
    q = volume.q

    def get(ref):
        if isinstance(ref, tuple):
            return ref[1]
        return int(spins[ref])

    def site_total(x: int) -> float:
        own = spins[x]
        total = 0.0
        for j in range(q):
            if j != own:
                total += float(model.rate_values(volume, get, x, j))
        return total

    def target_rates(x: int) -> np.ndarray:
        own = spins[x]
        out = np.zeros(q)
        for j in range(q):
            if j != own:
                out[j] = float(model.rate_values(volume, get, x, j))
        return out

    return site_total, target_rates


def simulate(
    model: RateModel,
    volume: Volume,
    init: SpinConfig,
    t_end: float,
    master_seed: int,
    traj_index: int = 0,
    record_events: bool = True,
) -> Trajectory:
    """Exact event-driven simulation over [0, t_end], bit-reproducible."""
    if t_end < 0:
        raise ValueError("t_end must be >= 0")
    model.validate_volume(volume)
    init.validate_for(volume)
    rng = trajectory_rng(master_seed, traj_index)
    spins = np.array(init.spins, dtype=np.int64)
    site_total, target_rates = _site_rates_fn(model, volume, spins)
    affected = _affected_map(model, volume)
    rates = np.array([site_total(x) for x in range(volume.n_sites)])
    times, sites, new_spins = [], [], []
    t = 0.0
    while True:
        total = float(rates.sum())
        if total <= 0.0:
            break  # absorbing configuration
        t += rng.standard_exponential() / total
        if t > t_end:
            break
        cum = np.cumsum(rates)
        x = int(np.searchsorted(cum, rng.random() * total, side="right"))
        x = min(x, volume.n_sites - 1)
        tr = target_rates(x)
        tr_cum = np.cumsum(tr)
        j = int(np.searchsorted(tr_cum, rng.random() * tr_cum[-1], side="right"))
        j = min(j, volume.q - 1)
        spins[x] = j
        if record_events:
            times.append(t)
            sites.append(x)
            new_spins.append(j)
        for y in affected[x]:
            rates[y] = site_total(y)
    return Trajectory(
        master_seed=master_seed,
        traj_index=traj_index,
        t_end=float(t_end),
        initial=init,
        times=np.asarray(times, dtype=np.float64),
        sites=np.asarray(sites, dtype=np.int64),
        spins=np.asarray(new_spins, dtype=np.int64),
        final=SpinConfig(tuple(int(s) for s in spins)),
        model_hash=model_fingerprint(model),
    )


def _final_pattern(model, volume, init, t_end, master_seed, traj_index, window) -> int:
    traj = simulate(model, volume, init, t_end, master_seed, traj_index, record_events=False)
    pattern = 0
    for s in reversed(window):
        pattern = pattern * volume.q + traj.final.spins[s]
    return pattern


@dataclass(frozen=True)
class CylinderTable:
    """Monte Carlo estimates of the window cylinder probabilities."""

    window: tuple[int, ...]
    n_traj: int
    counts: np.ndarray
    master_seed: int
    t: float

    @property
    def p_hat(self) -> np.ndarray:
        return self.counts / self.n_traj

    @property
    def std_err(self) -> np.ndarray:
        p = self.p_hat
        return np.sqrt(p * (1.0 - p) / self.n_traj)

    def rows(self):
        q_pow = self.counts.size
        for pattern in range(q_pow):
            yield {
                "pattern": pattern,
                "count": int(self.counts[pattern]),
                "p_hat": float(self.p_hat[pattern]),
                "std_err": float(self.std_err[pattern]),
            }


def empirical_cylinder(
    model: RateModel,
    volume: Volume,
    init: SpinConfig,
    t: float,
    window,
    n_traj: int,
    master_seed: int,
    threads: int = 1,
) -> CylinderTable:
    """Estimate nu_t(eta_L) for every pattern from n_traj independent paths.

    Counts partition exactly, so the estimates sum to one. Aggregation is
    a sum over trajectory indices and is identical for any thread count.
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    w = tuple(window)
    n_pat = volume.q ** len(w)

    def run_chunk(indices) -> np.ndarray:
        counts = np.zeros(n_pat, dtype=np.int64)
        for i in indices:
            counts[_final_pattern(model, volume, init, t, master_seed, i, w)] += 1
        return counts

    if threads > 1:
        chunks = np.array_split(np.arange(n_traj), threads * 4)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run_chunk, chunks))
        counts = np.sum(parts, axis=0)
    else:
        counts = run_chunk(range(n_traj))
    return CylinderTable(window=w, n_traj=n_traj, counts=counts, master_seed=master_seed, t=float(t))


# -- positive-mass scans ----------------------------------------------------------


@dataclass(frozen=True)
class MassScanRow:
    t: float
    init_label: str
    floor: float
    argmin_pattern: int
    std_err: float
    method: str


@dataclass(frozen=True)
class MassScan:
    """Minimum cylinder mass over initial configurations and patterns per time."""

    window: tuple[int, ...]
    tau: float
    rows: tuple[MassScanRow, ...]

    def floor_at(self, t: float) -> float:
        vals = [r.floor for r in self.rows if r.t == t]
        if not vals:
            raise KeyError(f"no scan row at t={t}")
        return min(vals)

    @property
    def empirical_floor(self) -> float:
        """The floor over the whole grid: the empirical C(tau, window)."""
        return min(r.floor for r in self.rows)

    @property
    def times(self) -> tuple[float, ...]:
        return tuple(sorted({r.t for r in self.rows}))


def _scan_inits(volume: Volume, n_random: int, seed: int):
    inits = [(f"const-{v}", SpinConfig.constant(volume, v)) for v in range(volume.q)]
    rng = np.random.default_rng(seed)
    for i in range(n_random):
        spins = tuple(int(s) for s in rng.integers(0, volume.q, size=volume.n_sites))
        inits.append((f"random-{i}", SpinConfig(spins)))
    return inits


def positive_mass_scan(
    model: RateModel,
    volume: Volume,
    window,
    tau: float,
    t_grid,
    master_seed: int,
    n_traj: int = 4000,
    n_random_inits: int = 2,
    method: str = "auto",
    threads: int = 1,
) -> MassScan:
    """Scan the minimum cylinder probability over adversarial initial configs.

    For every t in the grid (all >= tau) and every initial configuration
    (the q constant extremes plus seeded random ones), the minimum pattern
    probability is computed exactly when the volume is dense-capable, or
    estimated from n_traj trajectories otherwise.
    """
    w = tuple(window)
    t_grid = [float(t) for t in t_grid]
    if any(t < tau for t in t_grid):
        raise ValueError("scan grid must lie in [tau, infinity)")
    if method == "auto":
        method = "exact" if volume.n_states <= 2 ** 16 else "kmc"
    inits = _scan_inits(volume, n_random_inits, master_seed + 1)
    rows = []
    if method == "exact":
        gen = build_generator(model, volume)
        from .lattice import marginalize

        for label, init in inits:
            current = Distribution.point_mass(volume, init)
            prev_t = 0.0
            for t in t_grid:
                current = evolve(current, gen, t - prev_t, tol=1e-12)
                prev_t = t
                marg = marginalize(current, w).weights
                k = int(np.argmin(marg))
                rows.append(
                    MassScanRow(
                        t=t,
                        init_label=label,
                        floor=float(marg[k]),
                        argmin_pattern=k,
                        std_err=0.0,
                        method="exact",
                    )
                )
    elif method == "kmc":
        base = 0
        for label, init in inits:
            for t in t_grid:
                table = empirical_cylinder(
                    model, volume, init, t, w, n_traj, master_seed + base, threads=threads
                )
                k = int(np.argmin(table.p_hat))
                rows.append(
                    MassScanRow(
                        t=t,
                        init_label=label,
                        floor=float(table.p_hat[k]),
                        argmin_pattern=k,
                        std_err=float(table.std_err[k]),
                        method="kmc",
                    )
                )
                base += n_traj
    else:
        raise ValueError(f"unknown method {method!r}")
    return MassScan(window=w, tau=float(tau), rows=tuple(rows))


# -- trajectory log format ---------------------------------------------------------


def write_trajectory(path, traj: Trajectory, volume: Volume) -> None:
    """Binary log: magic, JSON header, fixed-width events, final spins."""
    header = {
        "master_seed": traj.master_seed,
        "traj_index": traj.traj_index,
        "t_end": traj.t_end,
        "model_hash": traj.model_hash,
        "d": volume.d,
        "side": volume.side,
        "q": volume.q,
        "boundary": volume.boundary,
        "enumeration": ENUMERATION_VERSION,
        "n_events": traj.n_events,
        "initial": list(traj.initial.spins),
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(TRAJECTORY_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for t, x, s in zip(traj.times, traj.sites, traj.spins):
            fh.write(struct.pack("<dIH", float(t), int(x), int(s)))
        fh.write(bytes(int(s) for s in traj.final.spins))


def read_trajectory(path) -> tuple[dict, Trajectory]:
    """Parse a binary trajectory log; returns (header, trajectory)."""
    raw = Path(path).read_bytes()
    if raw[: len(TRAJECTORY_MAGIC)] != TRAJECTORY_MAGIC:
        raise ValueError(f"{path}: not a trajectory log")
    off = len(TRAJECTORY_MAGIC)
    (hlen,) = struct.unpack_from("<I", raw, off)
    off += 4
    header = json.loads(raw[off: off + hlen].decode())
    off += hlen
    n = header["n_events"]
    times = np.empty(n)
    sites = np.empty(n, dtype=np.int64)
    spins = np.empty(n, dtype=np.int64)
    for i in range(n):
        t, x, s = struct.unpack_from("<dIH", raw, off)
        off += struct.calcsize("<dIH")
        times[i], sites[i], spins[i] = t, x, s
    n_sites = header["side"] ** header["d"]
    final = SpinConfig(tuple(raw[off: off + n_sites]))
    traj = Trajectory(
        master_seed=header["master_seed"],
        traj_index=header["traj_index"],
        t_end=header["t_end"],
        initial=SpinConfig(tuple(header["initial"])),
        times=times,
        sites=sites,
        spins=spins,
        final=final,
        model_hash=header["model_hash"],
    )
    return header, traj
