"""Exact master-equation dynamics on dense finite state spaces.

The generator is assembled as a sparse matrix Q with the row convention
d/dt nu_t = nu_t Q: the entry Q[w, w^{x,j}] holds the rate c_x(w, j) for
j != w_x and the diagonal absorbs the total outflow, so every row sums
to zero. Time evolution uses uniformization (a Poisson mixture of powers
of the stochastic matrix P = I + Q/lam), which gives a total-variation
error bound from the truncated Poisson tail; long horizons are split into
substeps so the Poisson weights stay representable.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import StationarySolveError
from .lattice import Distribution, ProductMeasure, Volume, site_digits
from .models import RateModel, rate_vector

logger = logging.getLogger(__name__)

#: Direct sparse solve is used for the stationary distribution up to this
#: many states; beyond it, accelerated power iteration takes over.
DIRECT_SOLVE_CAP = 2 ** 16

#: Largest Poisson mean handled in one uniformization substep.
_MAX_POISSON_MEAN = 48.0


@dataclass(frozen=True)
class GeneratorMatrix:
    """Sparse generator Q of the single-site-flip dynamics on a volume."""

    volume: Volume
    model_name: str
    Q: sp.csr_matrix

    @property
    def n_states(self) -> int:
        return self.Q.shape[0]

    def uniformization_rate(self) -> float:
        return float(np.max(-self.Q.diagonal(), initial=0.0))

    def conservation_defect(self) -> float:
        """Max absolute row sum; zero means probability is conserved."""
        ones = np.ones(self.n_states)
        return float(np.abs(self.Q @ ones).max())


def build_generator(model: RateModel, volume: Volume) -> GeneratorMatrix:
    """Assemble Q(w -> w^{x,j}) = c_x(w, j), diagonal = -total outflow."""
    model.validate_volume(volume)
    n = volume.require_dense()
    q = volume.q
    idx = np.arange(n, dtype=np.int64)
    rows, cols, vals = [], [], []
    diag = np.zeros(n)
    for x in range(volume.n_sites):
        own = site_digits(volume, x).astype(np.int64)
        stride = q ** x
        for j in range(q):
            mask = own != j
            if not mask.any():
                continue
            c = rate_vector(model, volume, x, j)[mask]
            rows.append(idx[mask])
            cols.append(idx[mask] + (j - own[mask]) * stride)
            vals.append(c)
            np.add.at(diag, idx[mask], -c)
    rows.append(idx)
    cols.append(idx)
    vals.append(diag)
    Q = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()
    return GeneratorMatrix(volume=volume, model_name=model.name, Q=Q)


def _as_Q(gen) -> sp.csr_matrix:
    return gen.Q if isinstance(gen, GeneratorMatrix) else gen


def evolve(dist: Distribution, gen, t: float, tol: float = 1e-12) -> Distribution:
    """nu e^{tQ} by uniformization, truncated at Poisson tail mass < tol.

    The output is clipped at rounding level and renormalized; the
    renormalization drift is logged as a diagnostic.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    if t < 0:
        raise ValueError("t must be >= 0")
    Q = _as_Q(gen)
    if t == 0.0:
        return dist
    lam = float(np.max(-Q.diagonal(), initial=0.0))
    if lam == 0.0:
        return dist
    QT = Q.T.tocsr()
    n_sub = max(1, math.ceil(lam * t / _MAX_POISSON_MEAN))
    dt = t / n_sub
    sub_tol = tol / n_sub
    v = np.asarray(dist.weights, dtype=np.float64)
    a = lam * dt
    kmax = int(a + 12.0 * math.sqrt(a) + 60.0)
    for _ in range(n_sub):
        term = v
        w = math.exp(-a)
        acc = w * term
        cum = w
        k = 0
        while 1.0 - cum > sub_tol and k < kmax:
            k += 1
            term = term + (QT @ term) / lam
            w *= a / k
            acc = acc + w * term
            cum += w
        v = acc
        drift = abs(v.sum() - 1.0)
        if drift > 10 * sub_tol:
            logger.debug("uniformization renormalization drift %.3e", drift)
        v = np.clip(v, 0.0, None)
        v = v / v.sum()
    return Distribution.from_weights(dist.q, dist.n_sites, v)


def _power_iteration(Q: sp.csr_matrix, tol: float, maxiter: int = 200000) -> np.ndarray:
    n = Q.shape[0]
    lam = float(np.max(-Q.diagonal(), initial=0.0))
    if lam == 0.0:
        return np.full(n, 1.0 / n)
    QT = Q.T.tocsr()

    def step(v):
        v = v + (QT @ v) / lam
        v = np.clip(v, 0.0, None)
        return v / v.sum()

    v = np.full(n, 1.0 / n)
    history = []
    for it in range(maxiter):
        v_next = step(v)
        history.append(v)
        if len(history) == 3:
            v0, v1, v2 = history
            denom = v2 - 2 * v1 + v0
            safe = np.abs(denom) > 1e-14
            acc = v2.copy()
            acc[safe] = v2[safe] - (v2[safe] - v1[safe]) ** 2 / denom[safe]
            acc = np.clip(acc, 0.0, None)
            s = acc.sum()
            if s > 0:
                acc /= s
                if np.abs(acc @ Q).sum() < np.abs(v_next @ Q).sum():
                    v_next = acc
            history = []
        v = v_next
        if it % 16 == 0 and np.abs(v @ Q).sum() < tol:
            return v
    if np.abs(v @ Q).sum() < tol:
        return v
    raise StationarySolveError(float(np.abs(v @ Q).sum()), tol, "power-iteration")


def stationary(gen, tol: float = 1e-10) -> Distribution:
    """The probability vector with nu Q = 0, residual |nu Q|_1 < tol.

    Uniqueness holds for irreducible generators, which (R3)-passing models
    guarantee. Small systems use a direct sparse solve of the augmented
    system; larger ones use Aitken-accelerated power iteration on the
    uniformized chain.
    """
    Q = _as_Q(gen)
    n = Q.shape[0]
    if n <= DIRECT_SOLVE_CAP:
        A = Q.T.tolil()
        A[n - 1, :] = 1.0
        b = np.zeros(n)
        b[n - 1] = 1.0
        v = spla.spsolve(A.tocsc(), b)
        v = np.clip(v, 0.0, None)
        total = v.sum()
        if total <= 0:
            raise StationarySolveError(float("inf"), tol, "direct")
        v /= total
        residual = float(np.abs(v @ Q).sum())
        if residual >= tol:
            v = _power_iteration(Q, tol)
    else:
        v = _power_iteration(Q, tol)
    residual = float(np.abs(v @ Q).sum())
    if residual >= tol:
        raise StationarySolveError(residual, tol, "combined")
    q, n_sites = _infer_shape(gen, n)
    return Distribution.from_weights(q, n_sites, v)


def _infer_shape(gen, n) -> tuple[int, int]:
    if isinstance(gen, GeneratorMatrix):
        return gen.volume.q, gen.volume.n_sites
    # plain matrix: fall back to a single abstract axis
    return n, 1


def stationarity_residual(model: RateModel, volume: Volume, mu: ProductMeasure) -> float:
    """|mu Q|_1 for the expanded product measure: zero iff mu is stationary."""
    gen = build_generator(model, volume)
    w = mu.expand().weights
    return float(np.abs(w @ gen.Q).sum())
