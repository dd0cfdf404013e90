"""The dimension dichotomy for the quadratic growth bound.

A nonnegative sequence (delta_n) satisfies the growth bound with constant
C > 0 in dimension d when

    delta_n >= C * n^{-d+1} * (sum_{k<=n} delta_k)^2   for every n.

For d in {1, 2} only the zero sequence qualifies: any positive entry
telescopes into a convergent sum dominating a divergent one. For d >= 3
the candidate delta_n = a * n^{-(d-1)} works for every amplitude a up to

    a*(C, d) = 1 / (C * S^2),    S = sum_{k>=1} k^{-(d-1)},

and the closing shell construction shows the bound alone cannot rule out
non-vanishing coefficient sequences in d >= 3. The tail of S is enclosed
two-sidedly by integral comparison, so a* carries a certified error bar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GrowthCheck:
    """Per-index slack of the growth bound for a finite sequence."""

    C: float
    d: int
    deltas: tuple[float, ...]
    slack: tuple[float, ...]  # delta_n - C n^{-d+1} S_n^2

    @property
    def n(self) -> int:
        return len(self.deltas)

    @property
    def min_slack(self) -> float:
        return min(self.slack) if self.slack else 0.0

    @property
    def holds(self) -> bool:
        return self.min_slack >= 0.0

    def first_violation(self) -> int | None:
        """1-based index of the first violated bound, if any."""
        for i, s in enumerate(self.slack):
            if s < 0.0:
                return i + 1
        return None


def growth_check(C: float, d: int, deltas) -> GrowthCheck:
    if C <= 0:
        raise ValueError("C must be > 0")
    if d < 1:
        raise ValueError("d must be >= 1")
    arr = np.asarray(deltas, dtype=np.float64)
    if arr.ndim != 1 or (arr < 0).any():
        raise ValueError("the sequence must be one-dimensional and nonnegative")
    n = np.arange(1, arr.size + 1, dtype=np.float64)
    partial = np.cumsum(arr)
    slack = arr - C * n ** (-(d - 1)) * partial ** 2
    return GrowthCheck(
        C=float(C),
        d=int(d),
        deltas=tuple(float(v) for v in arr),
        slack=tuple(float(s) for s in slack),
    )


@dataclass(frozen=True)
class AmplitudeResult:
    """Certified enclosure of the maximal admissible amplitude a*(C, d)."""

    C: float
    d: int
    lo: float
    hi: float
    terms: int

    @property
    def value(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def to_json(self):
        return {
            "C": self.C,
            "d": self.d,
            "lo": self.lo,
            "hi": self.hi,
            "value": self.value,
            "width": self.width,
            "terms": self.terms,
        }


def max_admissible_amplitude(C: float, d: int, tail_tol: float = 1e-10,
                             start_terms: int = 1 << 12,
                             max_terms: int = 1 << 27) -> AmplitudeResult:
    """Largest a with 1/a >= C * S^2, S = sum k^{-(d-1)}, certified enclosure.

    Partial sums plus the integral-comparison tail bound
    int_{N+1}^inf x^{-p} dx <= tail <= int_N^inf x^{-p} dx give a two-sided
    enclosure of S, refined by doubling N until the a* enclosure width is
    below ``tail_tol``.
    """
    if d < 3:
        raise ValueError("the admissible amplitude exists only for d >= 3")
    if C <= 0:
        raise ValueError("C must be > 0")
    p = d - 1
    n = start_terms
    partial = 0.0
    prev_n = 0
    while True:
        ks = np.arange(prev_n + 1, n + 1, dtype=np.float64)
        partial += float(np.sum(ks ** (-p)))
        s_lo = partial + (n + 1.0) ** (1 - p) / (p - 1)
        s_hi = partial + float(n) ** (1 - p) / (p - 1)
        a_lo = 1.0 / (C * s_hi ** 2)
        a_hi = 1.0 / (C * s_lo ** 2)
        if a_hi - a_lo <= tail_tol:
            return AmplitudeResult(C=float(C), d=int(d), lo=a_lo, hi=a_hi, terms=n)
        prev_n = n
        n *= 2
        if n > max_terms:
            raise RuntimeError(
                f"tail tolerance {tail_tol} not reached by {max_terms} terms"
            )


def candidate_sequence(a: float, d: int, N: int) -> np.ndarray:
    """The power-law candidate delta_n = a * n^{-(d-1)}, n = 1..N."""
    n = np.arange(1, N + 1, dtype=np.float64)
    return a * n ** (-(d - 1))


@dataclass(frozen=True)
class VanishingReport:
    """Outcome of the d in {1,2} vanishing argument for a claimed sequence.

    ``kind`` is one of
      * "pass":             the sequence is identically zero;
      * "bound-violation":  the growth bound already fails at ``index``;
      * "contradiction":    the bound holds on the given range but a
                            positive entry at ``first_positive`` forces a
                            failure by ``index`` (or by the analytic index
                            bound when enumeration is infeasible).
    """

    kind: str
    C: float
    d: int
    first_positive: int | None = None
    index: int | None = None
    threshold: float | None = None
    partial_sum_at_m: float | None = None
    analytic_index_bound: float | None = None
    detail: str = ""

    def to_json(self):
        return {
            "kind": self.kind,
            "C": self.C,
            "d": self.d,
            "first_positive": self.first_positive,
            "index": self.index,
            "threshold": self.threshold,
            "partial_sum_at_m": self.partial_sum_at_m,
            "analytic_index_bound": self.analytic_index_bound,
            "detail": self.detail,
        }


def verify_vanishing(C: float, d: int, deltas, max_enumeration: int = 10 ** 7) -> VanishingReport:
    """Locate the failure forced on any nonzero sequence when d is 1 or 2.

    If some delta_m > 0 while the bound holds up to the given range, summing
    n^{-d+1} <= C^{-1} (1/S_{n-1} - 1/S_n) over n > m telescopes to the
    finite total C^{-1}/S_m, so the divergent left side must overtake it at
    a concrete index: that index (or its analytic bound, for d = 2 horizons
    beyond ``max_enumeration``) is the contradiction witness.
    """
    if d not in (1, 2):
        raise ValueError("the vanishing argument applies to d in {1, 2}")
    gc = growth_check(C, d, deltas)
    violation = gc.first_violation()
    if violation is not None:
        n = violation
        partial = float(np.sum(np.asarray(deltas)[:n]))
        return VanishingReport(
            kind="bound-violation",
            C=C,
            d=d,
            index=n,
            detail=(
                f"delta_{n} = {gc.deltas[n - 1]!r} < "
                f"C*{n}^(-{d}+1)*(S_{n})^2 = {C * n ** (-(d - 1)) * partial ** 2!r}"
            ),
        )
    arr = np.asarray(deltas, dtype=np.float64)
    positive = np.flatnonzero(arr > 0.0)
    if positive.size == 0:
        return VanishingReport(kind="pass", C=C, d=d, detail="identically zero")
    m = int(positive[0]) + 1
    s_m = float(arr[: m].sum())
    threshold = 1.0 / (C * s_m)
    if d == 1:
        index = m + math.floor(threshold) + 1
        return VanishingReport(
            kind="contradiction",
            C=C,
            d=d,
            first_positive=m,
            index=index,
            threshold=threshold,
            partial_sum_at_m=s_m,
            detail=(
                f"sum_(n={m + 1})^{index} 1 = {index - m} exceeds C^-1/S_m = "
                f"{threshold!r}: the bound cannot hold through index {index}"
            ),
        )
    # d = 2: harmonic partial sums. Decide reachability first:
    # sum_{k=m+1}^{m+M} 1/k <= log((m+M)/m), so a threshold above
    # log((m+M)/m) cannot be crossed within the enumeration budget.
    reachable = threshold < math.log((m + max_enumeration) / m)
    total = 0.0
    n = m
    if reachable:
        block = 65536
        while total <= threshold and n - m < max_enumeration:
            ks = np.arange(n + 1, min(n + block, m + max_enumeration) + 1, dtype=np.float64)
            sums = total + np.cumsum(1.0 / ks)
            crossed = np.flatnonzero(sums > threshold)
            if crossed.size:
                n = int(ks[crossed[0]])
                total = float(sums[crossed[0]])
                break
            n = int(ks[-1])
            total = float(sums[-1])
    if total > threshold:
        return VanishingReport(
            kind="contradiction",
            C=C,
            d=d,
            first_positive=m,
            index=n,
            threshold=threshold,
            partial_sum_at_m=s_m,
            detail=(
                f"sum_(k={m + 1})^{n} 1/k = {total!r} exceeds C^-1/S_m = "
                f"{threshold!r}: the bound cannot hold through index {n}"
            ),
        )
    try:
        bound = (m + 1) * math.exp(threshold)
    except OverflowError:
        bound = math.inf
    return VanishingReport(
        kind="contradiction",
        C=C,
        d=d,
        first_positive=m,
        index=None,
        threshold=threshold,
        partial_sum_at_m=s_m,
        analytic_index_bound=bound,
        detail=(
            f"harmonic growth is logarithmic; the required partial sum "
            f"{threshold!r} is reached by index <= (m+1)*exp(threshold) = {bound!r} "
            f"(log10 of the bound: {threshold / math.log(10) + math.log10(m + 1)!r})"
        ),
    )


# -- the d >= 3 shell counterexample --------------------------------------------


@dataclass(frozen=True)
class ShellTable:
    """Shell-wise values of the non-vanishing coefficient construction.

    Sites in the shell at Chebyshev radius k >= 1 carry the value
    a * k^{-2d+2}; the origin is folded into the k = 1 shell. c(d) is the
    largest shell-count ratio |shell_k| / k^{d-1} over the tabulated range.
    """

    d: int
    a: float
    n: int
    shell_radius: tuple[int, ...]
    shell_size: tuple[int, ...]
    value: tuple[float, ...]
    c_d: float
    interior_sum: float
    interior_bound: float
    boundary_sqrt_sum: float
    boundary_bound: float

    @property
    def bounds_hold(self) -> bool:
        return (
            self.interior_sum <= self.interior_bound + 1e-12
            and self.boundary_sqrt_sum <= self.boundary_bound + 1e-12
        )

    def rows(self):
        for k, size, val in zip(self.shell_radius, self.shell_size, self.value):
            yield {"k": k, "shell_size": size, "alpha": val}


def box_size(d: int, k: int) -> int:
    return (2 * k + 1) ** d


def shell_size(d: int, k: int) -> int:
    """Number of sites at Chebyshev radius exactly k (origin folded into k=1)."""
    if k == 1:
        return box_size(d, 1)
    return box_size(d, k) - box_size(d, k - 1)


def counterexample_alpha(d: int, a: float, n: int) -> ShellTable:
    """Tabulate the shell construction and verify its two sum bounds.

    interior:  sum over the box of the values  <= c(d) * a * sum_{k<=n} k^{-d+1}
    boundary:  sum over the outer shell of the square roots <= c(d) * sqrt(a)
    """
    if d < 3:
        raise ValueError("the construction is a d >= 3 counterexample")
    if a < 0:
        raise ValueError("amplitude must be >= 0")
    if n < 1:
        raise ValueError("n must be >= 1")
    ks = np.arange(1, n + 1, dtype=np.int64)
    sizes = np.array([shell_size(d, int(k)) for k in ks], dtype=np.float64)
    values = a * ks.astype(np.float64) ** (-2 * d + 2)
    c_d = float(np.max(sizes / ks.astype(np.float64) ** (d - 1)))
    interior = float(np.sum(sizes * values))
    interior_bound = float(c_d * a * np.sum(ks.astype(np.float64) ** (-(d - 1))))
    boundary = float(sizes[-1] * np.sqrt(values[-1]))
    boundary_bound = float(c_d * np.sqrt(a))
    return ShellTable(
        d=d,
        a=a,
        n=n,
        shell_radius=tuple(int(k) for k in ks),
        shell_size=tuple(int(s) for s in sizes),
        value=tuple(float(v) for v in values),
        c_d=c_d,
        interior_sum=interior,
        interior_bound=interior_bound,
        boundary_sqrt_sum=boundary,
        boundary_bound=boundary_bound,
    )


def per_site_monotone_in_n(d: int, a: float, n: int) -> bool:
    """alpha_n(x) is nondecreasing in n for every fixed site x.

    A site at Chebyshev radius k contributes 0 for n < k and the constant
    a * max(k,1)^{-2d+2} for n >= k, so monotonicity reduces to the jump
    from zero being upward; verified over the tabulated radii.
    """
    for k in range(1, n + 1):
        value = a * max(k, 1) ** (-2 * d + 2)
        if value < 0.0:
            return False
    return True
