"""Optimal constants for the four equivalent weak-L-infinity conditions.

Reduction used throughout: between two consecutive values of ``|f|`` the
sets ``{|f| > lambda}`` do not change, so on such an interval ``d(lambda)``
and ``int_{|f|>lambda} |f|`` are constant and

    lambda -> int_{|f|>lambda} |f| / d(lambda) - lambda

is affine and decreasing.  Its supremum over an interval is therefore the
value at the left end, approached from the right (where right-continuity
makes it attained).  Suprema over all ``lambda > alpha`` thus reduce to a
maximum over ``alpha`` and the breakpoints of ``d`` above ``alpha``.  The
same corner argument applies to the tail-integral ratio of condition (iii)
and to the pairwise exponential inequality of condition (iv).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadParams, EmptyLevelSet, HypothesisViolated, NonPositiveM
from .metric_measure import SampleFunction
from .rearrangement import (
    StepFunction,
    _levels,
    _suffix,
    distribution_function,
    level_set_integral,
    weak_seminorm,
)

CONST_RTOL = 1e-9
CHECK_RTOL = 1e-12
LOG2 = math.log(2.0)


@dataclass
class ConstantReport:
    M_i: float
    M_ii: float
    M_iii: float
    alpha: float
    c1: float
    c2: float
    witnesses: dict = field(default_factory=dict)
    least_c1: float | None = None

    def to_dict(self) -> dict:
        return {
            "M_i": self.M_i,
            "M_ii": self.M_ii,
            "M_iii": self.M_iii,
            "alpha": self.alpha,
            "c1": self.c1,
            "c2": self.c2,
            "least_c1_given_c2": self.least_c1,
            "witnesses": dict(self.witnesses),
        }


def _candidates(d: StepFunction, alpha: float) -> np.ndarray:
    b = d.breakpoints
    return np.concatenate([[alpha], b[b > alpha]])


def _sup_ii(f: SampleFunction, alpha: float):
    """Condition (ii) supremum via direct sums over atoms; returns (M, witness)."""
    if alpha < 0:
        raise BadParams("alpha must be nonnegative")
    uniq, mass = _levels(f)
    above = _suffix(mass)
    above_int = _suffix(mass * uniq)
    lam = uniq[uniq > alpha]
    d_lam = above[uniq > alpha]
    int_lam = above_int[uniq > alpha]
    # the limit alpha+ sees the atoms with |f| > alpha
    hit = uniq > alpha
    d_a = float(np.sum(mass[hit][::-1]))
    int_a = float(np.sum((mass * uniq)[hit][::-1]))
    lam = np.concatenate([[alpha], lam])
    d_lam = np.concatenate([[d_a], d_lam])
    int_lam = np.concatenate([[int_a], int_lam])
    ok = d_lam > 0
    if not ok.any():
        return 0.0, None
    ratio = int_lam[ok] / d_lam[ok] - lam[ok]
    j = int(np.argmax(ratio))
    return max(0.0, float(ratio[j])), float(lam[ok][j])


def _sup_iii(d: StepFunction, alpha: float):
    if alpha < 0:
        raise BadParams("alpha must be nonnegative")
    lam = _candidates(d, alpha)
    d_lam = d(lam)
    ok = d_lam > 0
    if not ok.any():
        return 0.0, None
    ratio = d.tail(lam[ok]) / d_lam[ok]
    j = int(np.argmax(ratio))
    return float(ratio[j]), float(lam[ok][j])


def smallest_M_condition_i(f: SampleFunction) -> float:
    """Least ``M`` with ``f**(t) - f*(t) <= M`` for all t > 0."""
    return weak_seminorm(f)[0]


def smallest_M_condition_ii(f: SampleFunction, alpha: float = 0.0) -> float:
    """Least ``M`` with ``int_{|f|>l} |f| <= (l + M) d(l)`` for all l > alpha."""
    return _sup_ii(f, alpha)[0]


def smallest_M_condition_iii(f: SampleFunction, alpha: float = 0.0) -> float:
    """Least ``M`` with ``int_l^inf d <= M d(l)`` for all l > alpha."""
    return _sup_iii(distribution_function(f), alpha)[0]


def _decay_margins(g: StepFunction, c1: float, c2: float, lo: float = 0.0):
    """Worst violation of ``g(l2) <= c1 g(l1) exp(c2 (l1 - l2))`` over l2 > l1 >= lo.

    For ``l1`` in a constancy interval the right side is smallest at its left
    end; for ``l2`` it is smallest as ``l2`` approaches the right end from
    the left, where ``g`` still has the interval's value.  With ``L1`` the
    left ends and ``L2`` the right ends, the pair ``(L1[i], L2[j])`` is
    admissible for ``i <= j`` and ``g(L2[j]-) == g(L1[j])``.  Returns
    ``(log-margin, (l1, l2))``; a positive margin is a violation.
    """
    b = g.breakpoints
    L2 = b[b > lo]
    if L2.size == 0:
        return -math.inf, None
    L1 = np.concatenate([[lo], L2[:-1]])
    v = g(L1)
    pos = v > 0
    if not pos.any():
        return -math.inf, None
    with np.errstate(divide="ignore"):
        logv = np.log(v)
    key = np.where(pos, logv + c2 * L1, np.inf)
    best = np.minimum.accumulate(key)
    arg = _prefix_argmin(key)
    margin = np.where(pos, logv + c2 * L2 - math.log(c1) - best, -np.inf)
    j = int(np.argmax(margin))
    return float(margin[j]), (float(L1[arg[j]]), float(L2[j]))


def _prefix_argmin(key: np.ndarray) -> np.ndarray:
    out = np.empty(key.size, dtype=np.int64)
    cur = 0
    for j in range(key.size):
        if key[j] < key[cur]:
            cur = j
        out[j] = cur
    return out


def check_condition_iv(f: SampleFunction, c1: float, c2: float, rtol: float = CHECK_RTOL):
    """Check ``d(l2) <= c1 d(l1) exp(c2 (l1 - l2))`` for all l2 > l1 >= 0.

    Returns ``(holds, worst_pair)``; ``worst_pair`` is the corner pair with
    the largest violation margin, ``l2`` understood as a limit from the left.
    """
    if not (c1 > 0 and c2 > 0):
        raise BadParams("c1 and c2 must be positive")
    margin, pair = _decay_margins(distribution_function(f), c1, c2)
    return margin <= math.log1p(rtol), pair


def least_c1(f: SampleFunction, c2: float) -> float:
    """Smallest ``c1`` making condition (iv) hold for the given ``c2`` (reporting only)."""
    margin, _ = _decay_margins(distribution_function(f), 1.0, c2)
    return math.exp(margin) if margin > -math.inf else 0.0


def gap_lemma_constants(M: float):
    """``(c1, c2) = (4, log 2 / M)`` from the decay lemma for decreasing functions."""
    if not M > 0:
        raise NonPositiveM(f"M must be positive, got {M!r}")
    return 4.0, LOG2 / M


MAX_MULTIPLES = 10_000


def gap_lemma_check(g: StepFunction, M: float, alpha: float = 0.0, rtol: float = CHECK_RTOL) -> bool:
    """Decay lemma: ``int_s^inf g <= M g(s)`` for s > alpha implies
    ``g(s + t) <= 4 * 2**(-t/M) g(s)``.

    Raises :class:`HypothesisViolated` with the offending ``s`` when the
    integral condition fails.  The conclusion is checked at the step corners
    and at ``t = M, 2M, ...`` up to the end of the support.
    """
    c1, c2 = gap_lemma_constants(M)
    s = _candidates(g, alpha)
    gs = g(s)
    tails = g.tail(s)
    bad = tails > M * gs * (1 + rtol)
    if bad.any():
        w = float(s[int(np.argmax(bad))])
        raise HypothesisViolated(f"int_s^inf g > M g(s) at s={w!r}", witness=w)
    margin, _ = _decay_margins(g, c1, c2, alpha)
    if margin > math.log1p(rtol):
        return False
    end = float(g.breakpoints[-1]) if g.breakpoints.size else 0.0
    for s0, g0 in zip(s.tolist(), gs.tolist()):
        count = min(MAX_MULTIPLES, int(math.ceil((end - s0) / M)) + 1)
        if count <= 0 or g0 == 0:
            continue
        k = np.arange(1, count + 1)
        if np.any(g(s0 + k * M) > c1 * np.exp2(-k.astype(float)) * g0 * (1 + rtol)):
            return False
    return True


def concentration_check(f: SampleFunction, lam: float, gamma: float, rtol: float = CHECK_RTOL):
    """Share of ``{|f| > lam}`` sitting in ``{lam < |f| <= lam + gamma M}``.

    Returns ``(ratio, bound, holds)`` with ``bound = 1 - 2**(2 - gamma)`` and
    ``M`` the least condition (ii) constant.
    """
    if not gamma > 1:
        raise BadParams("gamma must exceed 1")
    a = np.abs(f.values)
    above = a > lam
    d_lam = math.fsum(f.masses[above].tolist())
    if d_lam == 0:
        raise EmptyLevelSet(f"mu(|f| > {lam!r}) = 0")
    M = smallest_M_condition_ii(f, 0.0)
    band = above & (a <= lam + gamma * M)
    ratio = math.fsum(f.masses[band].tolist()) / d_lam
    bound = 1.0 - 2.0 ** (2.0 - gamma)
    return ratio, bound, ratio >= bound - rtol


def extremality_ratio(space, f: SampleFunction, lam: float) -> float:
    """``int_{|f|>lam} |f| / ((lam + 1) d(lam))``; equals 1 for the log example."""
    a = np.abs(f.values)
    d_lam = math.fsum(f.masses[a > lam].tolist())
    if d_lam == 0:
        raise EmptyLevelSet(f"mu(|f| > {lam!r}) = 0")
    return level_set_integral(f, lam) / ((lam + 1.0) * d_lam)


def constant_report(f: SampleFunction, alpha: float = 0.0) -> ConstantReport:
    M_i, t_i = weak_seminorm(f)
    M_ii, l_ii = _sup_ii(f, alpha)
    M_iii, l_iii = _sup_iii(distribution_function(f), alpha)
    if M_iii > 0:
        c1, c2 = gap_lemma_constants(M_iii)
        lc1 = least_c1(f, c2)
    else:
        c1, c2, lc1 = 4.0, math.inf, None
    return ConstantReport(
        M_i=M_i,
        M_ii=M_ii,
        M_iii=M_iii,
        alpha=alpha,
        c1=c1,
        c2=c2,
        witnesses={"t_i": t_i, "lambda_ii": l_ii, "lambda_iii": l_iii},
        least_c1=lc1,
    )
