"""Wilcoxon signed-rank test with tie handling, continuity correction, and an
exact two-sided p for small samples.

Rank arithmetic uses doubled integer ranks so that tie-averaged ranks (which
are multiples of 0.5) stay exact. The exact path counts, over all 2^n sign
assignments, how many assignments give a positive-rank sum at most the
observed minimum rank sum; the counting is done with a subset-sum table,
which enumerates the same distribution without materialising every subset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import AllZeroDifferences

EXACT_LIMIT = 12


@dataclass(frozen=True)
class WilcoxonResult:
    w_plus: float
    w_minus: float
    W: float
    Z: float
    p: float
    n_effective: int
    p_exact: float | None = None


def _double_ranks(values: list[float]) -> list[int]:
    """Tie-averaged ranks of ``values``, times two (always integral)."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    doubled = [0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        # average of 1-based positions i+1 .. j+1, doubled: (i+1) + (j+1)
        rank2 = (i + 1) + (j + 1)
        for k in range(i, j + 1):
            doubled[order[k]] = rank2
        i = j + 1
    return doubled


def _exact_two_sided_p(double_ranks: list[int], w2_observed: int) -> float:
    """P-value from the full sign-assignment distribution of the rank sum."""
    total = sum(double_ranks)
    # counts[v] = number of sign assignments whose positive-rank sum (doubled)
    # equals v; built by including each rank as positive or negative.
    counts = [0] * (total + 1)
    counts[0] = 1
    for rank2 in double_ranks:
        for v in range(total, rank2 - 1, -1):
            counts[v] += counts[v - rank2]
    at_most = sum(counts[: w2_observed + 1])
    n = len(double_ranks)
    return min(1.0, 2 * at_most / 2.0**n)


def wilcoxon_signed_rank(
    pairs: list[tuple[float, float]], zero_method: str = "wilcox"
) -> WilcoxonResult:
    """Two-sided signed-rank test on paired values.

    ``zero_method="wilcox"`` drops zero differences before ranking;
    ``"pratt"`` ranks them but removes their contribution from both sums.
    """
    if not pairs:
        raise AllZeroDifferences("no pairs supplied")
    diffs = [a - b for a, b in pairs]
    nonzero = [d for d in diffs if d != 0]
    if not nonzero:
        raise AllZeroDifferences("every paired difference is zero")

    if zero_method == "wilcox":
        ranked = nonzero
        zero_count = 0
    elif zero_method == "pratt":
        ranked = diffs
        zero_count = len(diffs) - len(nonzero)
    else:
        raise ValueError(f"unknown zero method: {zero_method}")

    abs_values = [abs(d) for d in ranked]
    double_ranks = _double_ranks(abs_values)
    w2_plus = sum(r for r, d in zip(double_ranks, ranked) if d > 0)
    w2_minus = sum(r for r, d in zip(double_ranks, ranked) if d < 0)
    w2 = min(w2_plus, w2_minus)
    n = len(nonzero)
    m = len(ranked)

    # Normal approximation with tie correction and continuity correction
    # toward the mean. Means/variances are over the doubled-rank scale.
    mu2 = (m * (m + 1) - zero_count * (zero_count + 1)) / 2.0
    var4 = (
        m * (m + 1) * (2 * m + 1) - zero_count * (zero_count + 1) * (2 * zero_count + 1)
    ) / 6.0
    tie_sizes = _tie_sizes([v for v in abs_values if v != 0])
    var4 -= sum(t**3 - t for t in tie_sizes) / 12.0
    sigma2 = math.sqrt(var4)
    if sigma2 == 0:
        z = 0.0
    else:
        delta = w2 - mu2
        if delta < 0:
            delta += 1.0  # +0.5 on the single scale
        elif delta > 0:
            delta -= 1.0
        z = delta / sigma2
    p = min(1.0, math.erfc(abs(z) / math.sqrt(2.0)))

    p_exact = None
    if zero_method == "wilcox" and n <= EXACT_LIMIT:
        p_exact = _exact_two_sided_p(double_ranks, w2)

    return WilcoxonResult(
        w_plus=w2_plus / 2.0,
        w_minus=w2_minus / 2.0,
        W=w2 / 2.0,
        Z=z,
        p=p,
        n_effective=n,
        p_exact=p_exact,
    )


def _tie_sizes(values: list[float]) -> list[int]:
    sizes = []
    for value in sorted(set(values)):
        count = values.count(value)
        if count > 1:
            sizes.append(count)
    return sizes
