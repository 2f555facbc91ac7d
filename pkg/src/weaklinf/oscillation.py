"""Mean oscillation, tail oscillation and their ball-wise constants.

All "for every ball" statements run over the canonical balls of the space.
The ball-wise suprema over ``lambda`` use the corner reduction documented in
:mod:`weaklinf.weak_linf`: on each interval between consecutive values of
``|g|`` the objective is affine and decreasing, so only left ends matter.

Balls around one center are nested prefixes of the distance order, which
lets :func:`_sweep` handle all balls of a center with one sort per row.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadParams, IndexOutOfRange
from .metric_measure import (
    Ball,
    SampleFunction,
    counterexample_function,
    doubling_constant,
    dyadic_counterexample_space,
    enumerate_canonical_balls,
)
from .weak_linf import CHECK_RTOL, check_condition_iv, smallest_M_condition_ii

JN_C1 = 4.0


@dataclass
class BallRow:
    center: int
    radius: float
    size: int
    mass: float
    mean: float
    oscillation: float


@dataclass
class OscillationReport:
    bmo_norm: float
    bmo_witness: Ball | None
    bmto_M: float
    bmto_witness: tuple | None
    rows: list = field(default_factory=list)

    def to_dict(self) -> dict:
        bw = self.bmto_witness
        return {
            "bmo_norm": self.bmo_norm,
            "bmo_witness": None if self.bmo_witness is None else _ball_dict(self.bmo_witness),
            "bmto_M": self.bmto_M,
            "bmto_witness": None if bw is None else {"ball": _ball_dict(bw[0]), "lambda": bw[1]},
            "balls": len(self.rows),
        }


def _ball_dict(b: Ball) -> dict:
    return {"center": b.center, "radius": b.radius}


@dataclass
class _Sweep:
    balls: list
    sizes: np.ndarray
    mass: np.ndarray
    mean: np.ndarray
    osc: np.ndarray
    M: np.ndarray
    lam: np.ndarray
    jn: np.ndarray | None


def _sweep(f: SampleFunction, *, centered=True, rho=None, jn_M=None) -> _Sweep:
    """Per-ball mean, mean oscillation and least tail constant.

    For a ball ``B`` with ``g = |f - f_B|`` (or ``|f|`` when not centered)
    the tail constant is the least ``M >= 0`` with

        int_{B, g > l} g <= (l + M) mu({y in E : g(y) > l})  for all l >= 0,

    where ``E = B`` or, with ``rho``, ``E = {y : d(y, x) <= rho * D}`` for
    ``D`` the largest member distance of ``B``.  Sorting ``g`` over ``E`` in
    decreasing order, the candidate ``l`` equal to the (k+1)-th value sees
    the first k atoms; tied positions only dilute the average and never win.
    With ``jn_M``, also returns the worst ratio
    ``mu(B, g >= a) / (4 mu(B) 2**(-a/M))`` over values ``a > 0``.
    """
    space = f.space
    balls, sizes_all, mass_all, mean_all, osc_all, M_all, lam_all, jn_all = ([] for _ in range(8))
    for i in space.center_order().tolist():
        t = space.neighbor_table(i)
        cid = int(space.ids[i])
        sizes = t.sizes
        fs = f.values[t.order]
        ms = space.masses[t.order]
        cm = np.cumsum(ms)
        mass_B = cm[sizes - 1]
        if centered:
            f_B = np.cumsum(ms * fs)[sizes - 1] / mass_B
        else:
            f_B = np.zeros(sizes.size)
        if rho is None:
            ncol = sizes
        else:
            ncol = np.searchsorted(t.dist, rho * t.max_included, side="right")
        width = int(ncol.max())
        col = np.arange(width)
        G = np.abs(fs[None, :width] - f_B[:, None]) if centered else np.broadcast_to(np.abs(fs[:width]), (sizes.size, width))
        inB = col[None, :] < sizes[:, None]
        inE = col[None, :] < ncol[:, None]
        osc = np.sum(np.where(inB, G * ms[None, :width], 0.0), axis=1) / mass_B
        key = np.where(inE, G, -1.0)
        idx = np.argsort(-key, axis=1, kind="stable")
        v = np.take_along_axis(key, idx, axis=1)
        m_sorted = ms[idx]
        inE_s = np.take_along_axis(inE, idx, axis=1)
        inB_s = np.take_along_axis(inB, idx, axis=1)
        W = np.cumsum(np.where(inE_s, m_sorted, 0.0), axis=1)
        S = np.cumsum(np.where(inB_s, m_sorted * v, 0.0), axis=1)
        nxt = np.concatenate([v[:, 1:], np.zeros((v.shape[0], 1))], axis=1)
        lam = np.where(col[None, :] + 1 < ncol[:, None], nxt, 0.0)
        valid = col[None, :] < ncol[:, None]
        with np.errstate(invalid="ignore", divide="ignore"):
            val = np.where(valid, S / W - lam, -np.inf)
        k = np.argmax(val, axis=1)
        best = val[np.arange(val.shape[0]), k]
        M_all.append(np.maximum(best, 0.0))
        lam_all.append(lam[np.arange(val.shape[0]), k])
        if jn_M is not None:
            if rho is not None:
                raise BadParams("John-Nirenberg check uses the plain balls")
            pos = valid & (v > 0)
            if jn_M > 0:
                ratio = np.where(pos, W / (JN_C1 * mass_B[:, None] * np.exp2(-v / jn_M)), 0.0)
            else:
                ratio = np.where(pos, np.inf, 0.0)
            jn_all.append(ratio.max(axis=1) if width else np.zeros(sizes.size))
        balls.extend(Ball(cid, r) for r in t.radii.tolist())
        sizes_all.append(sizes)
        mass_all.append(mass_B)
        mean_all.append(f_B if centered else np.cumsum(ms * fs)[sizes - 1] / mass_B)
        osc_all.append(osc)
    cat = np.concatenate
    return _Sweep(
        balls,
        cat(sizes_all),
        cat(mass_all),
        cat(mean_all),
        cat(osc_all),
        cat(M_all),
        cat(lam_all),
        cat(jn_all) if jn_M is not None else None,
    )


def ball_mean(f: SampleFunction, ball: Ball) -> float:
    """Mass-weighted mean of ``f`` over the open ball; 0 on a massless ball."""
    idx = f.space.ball_indices(ball)
    mass = math.fsum(f.masses[idx].tolist())
    if mass == 0:
        return 0.0
    return math.fsum((f.masses[idx] * f.values[idx]).tolist()) / mass


def mean_oscillation(f: SampleFunction, ball: Ball) -> float:
    idx = f.space.ball_indices(ball)
    mass = math.fsum(f.masses[idx].tolist())
    if mass == 0:
        return 0.0
    fb = ball_mean(f, ball)
    return math.fsum((f.masses[idx] * np.abs(f.values[idx] - fb)).tolist()) / mass


def bmo_norm(f: SampleFunction):
    """Largest mean oscillation over the canonical balls, with its ball."""
    s = _sweep(f)
    j = int(np.argmax(s.osc))
    return float(s.osc[j]), s.balls[j]


def bmto_constant(f: SampleFunction):
    """Least tail-oscillation constant and its witness ``(ball, lambda)``.

    Ball-wise this is the least condition (ii) constant of ``f - f_B`` on the
    measure space ``(B, mu|_B)``; the result is the maximum over balls.
    """
    s = _sweep(f)
    j = int(np.argmax(s.M))
    return float(s.M[j]), (s.balls[j], float(s.lam[j]))


def jn_check(f: SampleFunction, M: float, rtol: float = CHECK_RTOL) -> bool:
    """``mu({y in B : |f - f_B| > l}) <= 4 mu(B) 2**(-l/M)`` on every ball and level."""
    s = _sweep(f, jn_M=M)
    return bool(np.all(s.jn <= 1 + rtol))


def bmto_decay_equivalence(f: SampleFunction, c1: float, c2: float):
    """Ball-wise condition (iv) for ``f - f_B`` on ``(B, mu|_B)``.

    Returns ``(holds, witness)`` where the witness is ``(ball, (l1, l2))`` for
    the first failing ball.  The decay direction ``exp(c2 (l1 - l2))`` is
    used.
    """
    fam = enumerate_canonical_balls(f.space)
    for j, ball in enumerate(fam):
        idx = fam.members[j]
        local = f.restrict(idx, shift=_mean(f, idx))
        holds, pair = check_condition_iv(local, c1, c2)
        if not holds:
            return False, (ball, pair)
    return True, None


def _mean(f: SampleFunction, idx) -> float:
    m = f.masses[idx]
    return math.fsum((m * f.values[idx]).tolist()) / math.fsum(m.tolist())


def local_linf_constant(f: SampleFunction) -> float:
    """Least ``M`` with ``int_{B, |f|>l} |f| <= (l + M) mu(B, |f| > l)`` for all balls."""
    return float(_sweep(f, centered=False).M.max())


def enlarged_ball_bmto_constant(f: SampleFunction, rho: float = 3.0) -> float:
    """Tail-oscillation constant with the level-set mass taken over ``rho B``.

    ``rho B`` is ``{y : d(y, x) <= rho D}`` with ``D`` the largest member
    distance of ``B``: the intersection over all radii realising ``B``.
    """
    if not rho >= 1:
        raise BadParams("rho must be at least 1")
    return float(_sweep(f, rho=rho).M.max())


def enlarged_ball_bound(c_mu: float, bmo: float) -> float:
    """Explicit constant ``2 lambda_0 + c ||f||_*`` with ``lambda_0 = 2 c^2 (1 + c^2) ||f||_*``
    and covering constant ``c = 2 c_mu**3``."""
    if c_mu < 1 or bmo < 0:
        raise BadParams("need c_mu >= 1 and bmo >= 0")
    return (2 * 2 * c_mu**2 * (1 + c_mu**2) + 2 * c_mu**3) * bmo


# name used by the public interface
theorem44_bound = enlarged_ball_bound


# For mu(X) < inf and lambda >= lambda_0 = 4 * mean|f|, Chebyshev gives
# mu(|f| > lambda) <= mu(X)/4, the covering lemma applies to the whole space
# and int_{|f|>lambda} (|f| - lambda) <= 2 c_mu**3 * ||  |f|  ||_* d(lambda)
# <= 4 c_mu**3 ||f||_* d(lambda).  For lambda < lambda_0 splitting at
# lambda_0 adds at most lambda_0.  Hence M_ii <= 4 mean|f| + 4 c_mu**3 ||f||_*
# <= C (||f||_* + mean|f|) with C = 4 c_mu**3 (c_mu >= 1).
GLOBAL_WEAK_FACTOR = 4.0


def global_weak_constant(c_mu: float) -> float:
    return GLOBAL_WEAK_FACTOR * c_mu**3


def global_weak_from_bmo_check(f: SampleFunction, C: float | None = None, rtol: float = CHECK_RTOL) -> bool:
    """``M_ii(f, 0) <= C (||f||_* + int |f| / mu(X))`` with ``C = 4 c_mu**3`` by default."""
    if C is None:
        C = global_weak_constant(doubling_constant(f.space))
    M = smallest_M_condition_ii(f, 0.0)
    mean_abs = math.fsum((f.masses * np.abs(f.values)).tolist()) / f.space.total_mass
    rhs = C * (bmo_norm(f)[0] + mean_abs)
    return bool(math.isfinite(M) and M <= rhs * (1 + rtol))


def counterexample_ball(k: int) -> Ball:
    """``B(x_{2k}, 5 * 2**(-2k-3))`` on the dyadic counterexample space."""
    return Ball(2 * k, 5.0 * 2.0 ** (-2 * k - 3))


def counterexample_oscillation(K: int, k: int) -> float:
    """Mean oscillation of the dyadic counterexample over ``B(x_{2k}, 5 * 2**(-2k-3))``."""
    if k < 0 or 2 * k + 1 > K:
        raise IndexOutOfRange(f"need 0 <= k and 2k + 1 <= K, got k={k}, K={K}")
    space = dyadic_counterexample_space(K)
    return mean_oscillation(counterexample_function(space), counterexample_ball(k))


def oscillation_report(f: SampleFunction) -> OscillationReport:
    s = _sweep(f)
    jb = int(np.argmax(s.osc))
    jm = int(np.argmax(s.M))
    rows = [
        BallRow(b.center, b.radius, int(n), float(m), float(mu), float(o))
        for b, n, m, mu, o in zip(s.balls, s.sizes, s.mass, s.mean, s.osc)
    ]
    return OscillationReport(
        bmo_norm=float(s.osc[jb]),
        bmo_witness=s.balls[jb],
        bmto_M=float(s.M[jm]),
        bmto_witness=(s.balls[jm], float(s.lam[jm])),
        rows=rows,
    )
