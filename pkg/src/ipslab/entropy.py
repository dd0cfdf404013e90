"""Window relative entropy, its production rate, and the coefficient tables.

For a window L inside the ambient volume, a measure nu with strictly
positive cylinder weights, and a product measure mu, this module computes

  * h(nu|mu):        the window relative entropy (0 log 0 = 0 convention),
  * the loss g:      d/dt h(nu_t | mu) at t = 0, in two independent forms:
      - the direct inflow/outflow form
            sum_{eta,x,i != eta_x} [In - Out] log(nu(eta)/mu(eta)),
      - the rewritten form, split into a bulk part
            -sum F(ratio) * back-ratio * Int
        with F(u) = u log u - u + 1, and a boundary bracket part; the two
        forms agree identically whenever all window cylinders are positive,
        which is this module's core correctness oracle,
  * cylinder-averaged window rates,
  * the per-site coefficients alpha (squared Hellinger-type discrepancy of
    single flips) and beta (L1 discrepancy), plus grid traces of all of
    the above along the exact evolution.

All cylinder integrals are exact sums over ambient states grouped by
window pattern; nothing is sampled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ZeroCylinderError
from .lattice import (
    Distribution,
    ProductMeasure,
    Volume,
    kl_divergence,
    pattern_ids,
    window_pattern_digits,
)
from .models import RateModel, gamma, rate_vector
from .exact import GeneratorMatrix, build_generator, evolve


def F(x):
    """F(u) = u log u - u + 1, the convex witness of the entropy loss sign."""
    x = np.asarray(x, dtype=np.float64)
    return x * np.log(x) - x + 1.0


def _window_tuple(window) -> tuple[int, ...]:
    w = tuple(int(s) for s in window)
    if w != tuple(sorted(set(w))):
        raise ValueError("window must be sorted distinct site indices")
    return w


def window_marginal(nu: Distribution, volume: Volume, window) -> np.ndarray:
    """Cylinder weights nu(eta_L) for all window patterns."""
    w = _window_tuple(window)
    ids = pattern_ids(volume, w)
    return np.bincount(ids, weights=nu.weights, minlength=volume.q ** len(w))


def _pattern_weights(rho, volume, window) -> np.ndarray:
    """Window-pattern weights from a Distribution or a raw weight vector."""
    w = _window_tuple(window)
    if isinstance(rho, Distribution):
        if volume is None:
            raise ValueError("ambient volume required to marginalize a Distribution")
        if rho.n_sites == len(w) and rho.n_sites != volume.n_sites:
            return np.asarray(rho.weights)
        return window_marginal(rho, volume, w)
    rho = np.asarray(rho, dtype=np.float64)
    if rho.shape != (volume.q ** len(w),):
        raise ValueError("pattern weight vector has the wrong length")
    return rho


def _require_positive(marg: np.ndarray, q: int, k: int, window) -> None:
    zero = np.flatnonzero(marg <= 0.0)
    if zero.size:
        digits = window_pattern_digits(q, k)[zero[0]]
        raise ZeroCylinderError(digits, window)


def rel_entropy(nu: Distribution, mu: ProductMeasure, window, volume: Volume) -> float:
    """h(nu|mu) on the window: sum nu(eta) log(nu(eta)/mu(eta)), 0 log 0 = 0."""
    w = _window_tuple(window)
    marg = window_marginal(nu, volume, w)
    return kl_divergence(marg, mu.window_weights(w))


def cylinder_rate_integrals(
    model: RateModel, volume: Volume, weights: np.ndarray, window
) -> np.ndarray:
    """Exact integrals Int_{[eta_L]} c_x(w, j) d(weights) for x in the window.

    Returns an array of shape (|window|, q, n_patterns) indexed by the
    window slot of x, the target spin j, and the window pattern.
    """
    w = _window_tuple(window)
    q = volume.q
    ids = pattern_ids(volume, w)
    n_pat = q ** len(w)
    out = np.empty((len(w), q, n_pat))
    for slot, x in enumerate(w):
        for j in range(q):
            c = rate_vector(model, volume, x, j)
            out[slot, j] = np.bincount(ids, weights=c * weights, minlength=n_pat)
    return out


def entropy_loss_direct(
    model: RateModel, volume: Volume, nu: Distribution, mu: ProductMeasure, window
) -> float:
    """The loss g in the inflow/outflow form.

    g = sum_{eta_L} sum_{x in L} sum_{i != eta_x}
        [Int_{[eta^{x,i}]} c_x(., eta_x) dnu - Int_{[eta]} c_x(., i) dnu]
        * log(nu(eta)/mu(eta)).
    """
    w = _window_tuple(window)
    q = volume.q
    k = len(w)
    marg = window_marginal(nu, volume, w)
    _require_positive(marg, q, k, w)
    muw = mu.window_weights(w)
    logratio = np.log(marg / muw)
    integrals = cylinder_rate_integrals(model, volume, nu.weights, w)
    pdig = window_pattern_digits(q, k).astype(np.int64)
    pats = np.arange(q ** k, dtype=np.int64)
    g = 0.0
    for slot in range(k):
        dig = pdig[:, slot]
        stride = q ** slot
        for i in range(q):
            mask = dig != i
            p = pats[mask]
            flipped = p + (i - dig[mask]) * stride
            inflow = integrals[slot, dig[mask], flipped]
            outflow = integrals[slot, i, p]
            g += float(((inflow - outflow) * logratio[p]).sum())
    return g


def entropy_loss_rewritten(
    model: RateModel, volume: Volume, nu: Distribution, mu: ProductMeasure, window
) -> tuple[float, float]:
    """The loss split as (bulk, boundary).

    bulk     = -sum F(A) * (1/A) * Int,  A = nu(eta)mu(eta^{x,j}) / (nu(eta^{x,j})mu(eta)),
    boundary = -sum [Int - (1/A) * Int],

    summed over eta_L, x in L, j != eta_x with Int = Int_{[eta]} c_x(., j) dnu.
    Their sum reproduces the direct loss identically.
    """
    w = _window_tuple(window)
    q = volume.q
    k = len(w)
    marg = window_marginal(nu, volume, w)
    _require_positive(marg, q, k, w)
    muw = mu.window_weights(w)
    ratio = marg / muw
    integrals = cylinder_rate_integrals(model, volume, nu.weights, w)
    pdig = window_pattern_digits(q, k).astype(np.int64)
    pats = np.arange(q ** k, dtype=np.int64)
    bulk = 0.0
    boundary = 0.0
    for slot in range(k):
        dig = pdig[:, slot]
        stride = q ** slot
        for j in range(q):
            mask = dig != j
            p = pats[mask]
            flipped = p + (j - dig[mask]) * stride
            A = ratio[p] / ratio[flipped]
            B = ratio[flipped] / ratio[p]
            out_int = integrals[slot, j, p]
            bulk -= float((F(A) * B * out_int).sum())
            boundary -= float(((1.0 - B) * out_int).sum())
    return bulk, boundary


def window_rate(
    model: RateModel,
    volume: Volume,
    rho: Distribution,
    window,
    x: int,
    eta_window,
    j: int,
) -> float:
    """Cylinder-averaged rate c^{L,rho}_x(eta_L, j)."""
    w = _window_tuple(window)
    if x not in w:
        raise ValueError("x must lie in the window")
    slot = w.index(x)
    q = volume.q
    pattern = 0
    for s in reversed(tuple(eta_window)):
        pattern = pattern * q + int(s)
    marg = window_marginal(rho, volume, w)
    if marg[pattern] <= 0.0:
        raise ZeroCylinderError(tuple(eta_window), w)
    ids = pattern_ids(volume, w)
    c = rate_vector(model, volume, x, j)
    num = float(np.sum((c * rho.weights)[ids == pattern]))
    return num / float(marg[pattern])


def alpha_coeff(rho, mu: ProductMeasure, window, x: int, volume: Volume | None = None) -> float:
    """alpha_L(x, rho): squared Hellinger-type discrepancy of single flips at x.

    ``rho`` may be an ambient Distribution or a vector of window-pattern
    weights; only the window marginal enters.
    """
    w = _window_tuple(window)
    slot = w.index(x)
    q = mu.q
    rho_w = _pattern_weights(rho, volume, w)
    mu_w = mu.window_weights(w)
    r = rho_w / mu_w
    sqrt_r = np.sqrt(r)
    pdig = window_pattern_digits(q, len(w)).astype(np.int64)
    pats = np.arange(q ** len(w), dtype=np.int64)
    dig = pdig[:, slot]
    stride = q ** slot
    total = 0.0
    for j in range(q):
        mask = dig != j
        p = pats[mask]
        flipped = p + (j - dig[mask]) * stride
        total += float((((sqrt_r[flipped] - sqrt_r[p]) ** 2) * mu_w[p]).sum())
    return total


def beta_coeff(rho, mu: ProductMeasure, window, x: int, volume: Volume | None = None) -> float:
    """beta_L(x, rho): L1 discrepancy of single flips at x."""
    w = _window_tuple(window)
    slot = w.index(x)
    q = mu.q
    rho_w = _pattern_weights(rho, volume, w)
    mu_w = mu.window_weights(w)
    r = rho_w / mu_w
    pdig = window_pattern_digits(q, len(w)).astype(np.int64)
    pats = np.arange(q ** len(w), dtype=np.int64)
    dig = pdig[:, slot]
    stride = q ** slot
    total = 0.0
    for j in range(q):
        mask = dig != j
        p = pats[mask]
        flipped = p + (j - dig[mask]) * stride
        total += float((np.abs(r[flipped] - r[p]) * mu_w[p]).sum())
    return total


# -- traces along the exact evolution ------------------------------------------

TRACE_COLUMNS = (
    "t",
    "h",
    "g_direct",
    "g_bulk",
    "g_boundary",
    "alpha_sum",
    "beta_sum",
    "gamma_beta_sum",
)


@dataclass(frozen=True)
class TraceRow:
    t: float
    h: float
    g_direct: float
    g_bulk: float
    g_boundary: float
    alpha_sum: float
    beta_sum: float
    gamma_beta_sum: float


@dataclass(frozen=True)
class SiteTable:
    """Per-site window coefficients at the final grid time and integrated in time."""

    window: tuple[int, ...]
    coords: tuple[tuple[int, ...], ...]
    gamma: tuple[float, ...]
    alpha_final: tuple[float, ...]
    beta_final: tuple[float, ...]
    alpha_integral: tuple[float, ...]
    beta_integral: tuple[float, ...]

    def to_json(self):
        return {
            "window": list(self.window),
            "coords": [list(c) for c in self.coords],
            "gamma": list(self.gamma),
            "alpha_final": list(self.alpha_final),
            "beta_final": list(self.beta_final),
            "alpha_integral": list(self.alpha_integral),
            "beta_integral": list(self.beta_integral),
        }


@dataclass(frozen=True)
class EntropyTrace:
    rows: tuple[TraceRow, ...]
    site_table: SiteTable

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])


def entropy_trace(
    model: RateModel,
    volume: Volume,
    nu0: Distribution,
    mu: ProductMeasure,
    window,
    times,
    evolve_tol: float = 1e-12,
) -> EntropyTrace:
    """Evolve exactly along a time grid and tabulate all window diagnostics."""
    w = _window_tuple(window)
    times = [float(t) for t in times]
    if any(t < 0 for t in times) or any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("times must be nonnegative and strictly increasing")
    gen = build_generator(model, volume)
    gammas = [gamma(model, volume, w, x) for x in w]
    rows = []
    alpha_series = []
    beta_series = []
    current = nu0
    prev_t = 0.0
    for t in times:
        current = evolve(current, gen, t - prev_t, tol=evolve_tol)
        prev_t = t
        h = rel_entropy(current, mu, w, volume)
        g = entropy_loss_direct(model, volume, current, mu, w)
        bulk, boundary = entropy_loss_rewritten(model, volume, current, mu, w)
        alphas = [alpha_coeff(current, mu, w, x, volume) for x in w]
        betas = [beta_coeff(current, mu, w, x, volume) for x in w]
        alpha_series.append(alphas)
        beta_series.append(betas)
        rows.append(
            TraceRow(
                t=t,
                h=h,
                g_direct=g,
                g_bulk=bulk,
                g_boundary=boundary,
                alpha_sum=float(sum(alphas)),
                beta_sum=float(sum(betas)),
                gamma_beta_sum=float(sum(gm * b for gm, b in zip(gammas, betas))),
            )
        )
    alpha_arr = np.array(alpha_series)
    beta_arr = np.array(beta_series)
    t_arr = np.array(times)
    site_table = SiteTable(
        window=w,
        coords=tuple(volume.coord_of(x) for x in w),
        gamma=tuple(gammas),
        alpha_final=tuple(alpha_arr[-1]),
        beta_final=tuple(beta_arr[-1]),
        alpha_integral=tuple(np.trapezoid(alpha_arr, t_arr, axis=0)),
        beta_integral=tuple(np.trapezoid(beta_arr, t_arr, axis=0)),
    )
    return EntropyTrace(rows=tuple(rows), site_table=site_table)


def loss_on_grid(model, volume, nu0, mu, window, times, evolve_tol=1e-12) -> np.ndarray:
    """g(t) along a sorted grid, evolving incrementally.

    The per-step evolution tolerance is divided by the number of steps so
    the accumulated transport error stays below ``evolve_tol`` overall.
    """
    gen = build_generator(model, volume)
    step_tol = evolve_tol / max(1, len(times))
    out = []
    current = nu0
    prev_t = 0.0
    for t in times:
        current = evolve(current, gen, float(t) - prev_t, tol=step_tol)
        prev_t = float(t)
        out.append(entropy_loss_direct(model, volume, current, mu, window))
    return np.array(out)


def integrate_loss(
    model,
    volume,
    nu0,
    mu,
    window,
    T: float,
    tol: float = 1e-8,
    evolve_tol: float = 1e-12,
    max_levels: int = 14,
) -> float:
    """Integral of g over [0, T] by trapezoid refinement with a Romberg table.

    Converged when the last two diagonal Richardson extrapolants agree
    within ``tol``.
    """
    rows = []
    n = 8
    for level in range(max_levels):
        grid = np.linspace(0.0, T, n + 1)
        vals = loss_on_grid(model, volume, nu0, mu, window, grid, evolve_tol)
        row = [float(np.trapezoid(vals, grid))]
        for k in range(1, level + 1):
            factor = 4.0 ** k
            row.append((factor * row[k - 1] - rows[level - 1][k - 1]) / (factor - 1.0))
        rows.append(row)
        if level >= 1 and abs(rows[level][level] - rows[level - 1][level - 1]) < tol:
            return rows[level][level]
        n *= 2
    raise RuntimeError(
        f"quadrature did not reach tol {tol}; last diagonal {rows[-1][-1]!r}"
    )
