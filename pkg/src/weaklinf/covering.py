"""Calderon-Zygmund type ball covering on finite spaces.

Given a ball ``B0`` of radius ``r0`` and a set ``F`` inside ``3 B0`` holding
at most half the mass of ``B0``, every atom ``x`` of ``E = F & B0`` gets the
largest integer ``k`` for which ``B(x, 2**(1-k) r0)`` carries at most half of
its mass in ``F``.  The balls ``B(x, 2**(1-k) r0 / 5)`` are then thinned by a
greedy 5r (Vitali) selection.  Dilates are formed as exact powers of two
times ``r0``, never by dividing and re-multiplying by 5.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import HypothesisViolated, NotInE
from .metric_measure import Ball, MetricMeasureSpace, doubling_constant

RTOL = 1e-12


@dataclass(frozen=True)
class CoverInstance:
    space: MetricMeasureSpace
    B0: Ball
    F: frozenset

    def __post_init__(self):
        space = self.space
        F = frozenset(int(a) for a in self.F)
        object.__setattr__(self, "F", F)
        in_F = np.zeros(space.n, dtype=bool)
        in_F[space.indices(sorted(F))] = True
        c = space.index(self.B0.center)
        dist = space.distances_from(c)
        in_B0 = dist < self.B0.radius
        in_3B0 = dist < 3 * self.B0.radius
        if np.any(in_F & ~in_3B0):
            raise HypothesisViolated("F must lie inside 3 B0")
        mu_F = space.mass_of(np.flatnonzero(in_F))
        mu_B0 = space.mass_of(np.flatnonzero(in_B0))
        if mu_F > mu_B0 / 2:
            raise HypothesisViolated(f"mu(F)={mu_F!r} exceeds mu(B0)/2={mu_B0 / 2!r}")
        object.__setattr__(self, "_in_F", in_F)
        object.__setattr__(self, "_in_B0", in_B0)
        object.__setattr__(self, "mu_F", mu_F)
        object.__setattr__(self, "mu_B0", mu_B0)

    @property
    def r0(self) -> float:
        return self.B0.radius

    @property
    def E(self) -> frozenset:
        return frozenset(self.space.ids[self._in_F & self._in_B0].tolist())

    def masses_in(self, i: int, radius: float):
        """``(mu(B(x_i, radius) & F), mu(B(x_i, radius) - F))``."""
        hit = self.space.distances_from(i) < radius
        m = self.space.masses
        return math.fsum(m[hit & self._in_F].tolist()), math.fsum(m[hit & ~self._in_F].tolist())


@dataclass(frozen=True)
class CoverBall:
    center: int
    k: int
    radius: float
    dilate_radius: float
    members: frozenset
    dilate_members: frozenset

    @property
    def ball(self) -> Ball:
        return Ball(self.center, self.radius)


@dataclass
class CoverResult:
    balls: list
    measured_constant: float
    uncovered_mass: float
    c_mu: float
    dilate_masses: list = field(default_factory=list)
    balanced: list = field(default_factory=list)
    chain: list = field(default_factory=list)
    geometrically_disjoint: bool = True
    dilates_in_3B0: bool = True
    balls_in_3B0: bool = True

    @property
    def disjoint(self) -> bool:
        seen = set()
        for b in self.balls:
            if seen & b.members:
                return False
            seen |= b.members
        return True

    @property
    def property_i(self) -> bool:
        return all(self.balanced)

    @property
    def property_ii(self) -> bool:
        return self.uncovered_mass == 0

    @property
    def property_iii(self) -> bool:
        return self.measured_constant <= 2 * self.c_mu**3 * (1 + RTOL)

    @property
    def chain_holds(self) -> bool:
        c3 = self.c_mu**3
        return all(m5 <= c3 * m58 * (1 + RTOL) and m58 <= 2 * m58F * (1 + RTOL) for m5, m58, m58F in self.chain)

    def to_dict(self) -> dict:
        return {
            "balls": [
                {
                    "center": b.center,
                    "k": b.k,
                    "radius": b.radius,
                    "dilate_radius": b.dilate_radius,
                    "members": sorted(b.members),
                    "dilate_members": sorted(b.dilate_members),
                }
                for b in self.balls
            ],
            "measured_constant": self.measured_constant,
            "bound": 2 * self.c_mu**3,
            "uncovered_mass": self.uncovered_mass,
            "doubling_constant": self.c_mu,
            "properties": {
                "disjoint": self.disjoint,
                "i": self.property_i,
                "ii": self.property_ii,
                "iii": self.property_iii,
                "chain": self.chain_holds,
            },
            "diagnostics": {
                "geometrically_disjoint": self.geometrically_disjoint,
                "balls_in_3B0": self.balls_in_3B0,
                "dilates_in_3B0": self.dilates_in_3B0,
            },
        }


def _dilate_radius(r0: float, k: int) -> float:
    return math.ldexp(r0, 1 - k)


def stopping_radius(instance: CoverInstance, x: int) -> int:
    """Greatest ``k`` with ``mu(B(x, 2**(1-k) r0) & F) <= mu(B(x, 2**(1-k) r0) - F)``.

    The scan stops at the first ``k`` where the ball is ``{x}`` alone: from
    there on the ball lies in ``F`` and the balance fails for every larger k.
    """
    if int(x) not in instance.E:
        raise NotInE(f"atom {x!r} is not in E = F & B0")
    space = instance.space
    i = space.index(x)
    dist = space.distances_from(i)
    others = dist[dist > 0]
    dmin = float(others.min()) if others.size else math.inf
    best = None
    k = 0
    while True:
        r = _dilate_radius(instance.r0, k)
        inside, outside = instance.masses_in(i, r)
        if inside <= outside:
            best = k
        if r <= dmin:
            break
        k += 1
    if best is None:
        raise HypothesisViolated(f"balance fails at every scale around atom {x!r}", witness=x)
    return best


def vitali_select(space: MetricMeasureSpace, balls) -> list:
    """Greedy disjoint subfamily, largest radius first (ties by center id).

    Disjointness is between member sets.  A rejected ball shares an atom
    with a kept ball of at least its radius, so it lies in that ball's
    3-dilate and a fortiori in its 5-dilate.
    """
    items = sorted(balls, key=lambda b: (-b.radius, b.center))
    kept, taken = [], set()
    for b in items:
        mem = getattr(b, "members", None)
        if not isinstance(mem, frozenset):
            mem = frozenset(space.ids[space.ball_indices(b)].tolist())
        if taken.isdisjoint(mem):
            kept.append(b)
            taken |= mem
    return kept


def czd_cover(instance: CoverInstance, c_mu: float | None = None) -> CoverResult:
    """Covering with properties (i) balance on each 5-dilate, (ii) the dilates
    cover ``E``, and (iii) total dilate mass at most ``2 c_mu**3 mu(F)``."""
    space = instance.space
    if c_mu is None:
        c_mu = doubling_constant(space)
    r0 = instance.r0
    ids = space.ids
    candidates = []
    for x in sorted(instance.E):
        k = stopping_radius(instance, x)
        big = _dilate_radius(r0, k)
        i = space.index(x)
        dist = space.distances_from(i)
        radius = big / 5
        candidates.append(
            CoverBall(
                center=x,
                k=k,
                radius=radius,
                dilate_radius=big,
                members=frozenset(ids[dist < radius].tolist()),
                dilate_members=frozenset(ids[dist < big].tolist()),
            )
        )
    selected = vitali_select(space, candidates)

    covered = set()
    for b in selected:
        covered |= b.dilate_members
    uncovered = sorted(instance.E - covered)
    uncovered_mass = space.mass_of(space.indices(uncovered)) if uncovered else 0.0

    dilate_masses, balanced, chain = [], [], []
    for b in selected:
        i = space.index(b.center)
        inside, outside = instance.masses_in(i, b.dilate_radius)
        dilate_masses.append(inside + outside)
        balanced.append(inside <= outside)
        in58, out58 = instance.masses_in(i, _dilate_radius(r0, b.k + 3))
        chain.append((inside + outside, in58 + out58, in58))
    total = math.fsum(dilate_masses)
    measured = total / instance.mu_F if instance.mu_F > 0 else 0.0

    c = space.index(instance.B0.center)
    d0 = space.distances_from(c)
    in_3B0 = frozenset(ids[d0 < 3 * r0].tolist())
    geo = True
    for a in range(len(selected)):
        for b in range(a + 1, len(selected)):
            p, q = selected[a], selected[b]
            gap = space.distances_from(space.index(p.center))[space.index(q.center)]
            geo &= bool(gap >= p.radius + q.radius)
    return CoverResult(
        balls=selected,
        measured_constant=measured,
        uncovered_mass=uncovered_mass,
        c_mu=c_mu,
        dilate_masses=dilate_masses,
        balanced=balanced,
        chain=chain,
        geometrically_disjoint=geo,
        balls_in_3B0=all(b.members <= in_3B0 for b in selected),
        dilates_in_3B0=all(b.dilate_members <= in_3B0 for b in selected),
    )


def refined_containment_check(instance: CoverInstance, j: int, c_mu: float | None = None) -> bool:
    """Under ``mu(F) <= mu(B0) / (2 c_mu**j)``, every selected 5-dilate lies in
    ``(1 + 2**-j) B0``."""
    space = instance.space
    if c_mu is None:
        c_mu = doubling_constant(space)
    if instance.mu_F > instance.mu_B0 / (2 * c_mu**j) * (1 + RTOL):
        raise HypothesisViolated(f"mu(F) exceeds mu(B0) / (2 c_mu^{j})")
    result = czd_cover(instance, c_mu)
    c = space.index(instance.B0.center)
    target = frozenset(space.ids[space.distances_from(c) < (1 + 2.0**-j) * instance.r0].tolist())
    return all(b.dilate_members <= target for b in result.balls)
