"""Distribution functions, decreasing rearrangements and their integrals.

Everything here is exact step-function arithmetic: integrals of step
functions are sums of rectangle areas, never quadrature.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import BadParams, NonPositiveT
from .metric_measure import SampleFunction

__all__ = [
    "StepFunction",
    "SampleFunction",
    "distribution_function",
    "decreasing_rearrangement",
    "lebesgue_distribution",
    "duality_check",
    "maximal_average",
    "weak_seminorm",
    "cavalieri_lp",
    "power_sum",
    "level_set_integral",
    "level_set_integral_from_distribution",
    "identity_id1_check",
    "sample_points",
]

EXACT_RTOL = 1e-12


class StepFunction:
    """Nonincreasing, right-continuous, nonnegative step function on [0, inf).

    ``values[0]`` holds on ``[0, b[0])``, ``values[i + 1]`` on
    ``[b[i], b[i + 1])`` and ``values[-1]`` on ``[b[-1], inf)``.
    """

    __slots__ = ("breakpoints", "values", "_knots", "_cum", "_tail")

    def __init__(self, breakpoints, values):
        b = np.array(breakpoints, dtype=float).ravel()
        v = np.array(values, dtype=float).ravel()
        if v.size != b.size + 1:
            raise BadParams("need exactly one more value than breakpoints")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(v))):
            raise BadParams("step functions must be finite")
        if b.size and (b[0] < 0 or np.any(np.diff(b) <= 0)):
            raise BadParams("breakpoints must be nonnegative and strictly increasing")
        if np.any(v < 0) or np.any(np.diff(v) > 0):
            raise BadParams("values must be nonnegative and nonincreasing")
        knots = np.concatenate([[0.0], b])
        areas = v[:-1] * np.diff(knots)
        cum = np.concatenate([[0.0], np.cumsum(areas)])
        tail = np.concatenate([np.cumsum(areas[::-1])[::-1], [0.0]])
        if v[-1] > 0:
            tail = np.full_like(tail, np.inf)
        for a in (b, v, knots, cum, tail):
            a.flags.writeable = False
        self.breakpoints, self.values = b, v
        self._knots, self._cum, self._tail = knots, cum, tail

    @property
    def final(self) -> float:
        return float(self.values[-1])

    def __call__(self, x):
        idx = np.searchsorted(self.breakpoints, x, side="right")
        out = self.values[idx]
        return float(out) if np.ndim(out) == 0 else out

    def left_limit(self, x):
        """Value just to the left of ``x`` (``values[0]`` at x = 0)."""
        idx = np.searchsorted(self.breakpoints, x, side="left")
        out = self.values[idx]
        return float(out) if np.ndim(out) == 0 else out

    def cumulative(self, x):
        """``int_0^x`` of the function."""
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.breakpoints, x, side="right")
        out = self._cum[idx] + self.values[idx] * (x - self._knots[idx])
        return float(out) if out.ndim == 0 else out

    def tail(self, x):
        """``int_x^inf`` of the function; infinite unless the final value is 0."""
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.breakpoints, x, side="right")
        nb = self.breakpoints.size
        right = np.where(idx < nb, self._knots[np.minimum(idx + 1, nb)], x)
        out = self.values[idx] * (right - x) + self._tail[np.minimum(idx + 1, nb)]
        out = np.where(idx < nb, out, 0.0 if self.final == 0 else np.inf)
        return float(out) if out.ndim == 0 else out

    def integral(self) -> float:
        return float(self._tail[0])

    def power_moment(self, p: float) -> float:
        """``p * int_0^inf x**(p-1) g(x) dx`` in closed form."""
        if self.final != 0:
            return math.inf
        knots_p = self._knots**p
        return float(np.sum(self.values[:-1] * np.diff(knots_p)))

    def to_dict(self) -> dict:
        return {"breakpoints": self.breakpoints.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, data) -> "StepFunction":
        return cls(data["breakpoints"], data["values"])

    def __eq__(self, other):
        if not isinstance(other, StepFunction):
            return NotImplemented
        return np.array_equal(self.breakpoints, other.breakpoints) and np.array_equal(self.values, other.values)

    def __repr__(self):
        return f"StepFunction(breakpoints={self.breakpoints.tolist()}, values={self.values.tolist()})"


def _levels(f: SampleFunction):
    """Distinct ``|f|`` values (ascending) with the mass and ``mass*|f|`` at each."""
    a = np.abs(f.values)
    uniq, inv = np.unique(a, return_inverse=True)
    mass = np.bincount(inv, weights=f.masses, minlength=uniq.size)
    return uniq, mass


def _suffix(x: np.ndarray) -> np.ndarray:
    """``out[j] = sum(x[j + 1:])``, summed from the largest index down."""
    return np.concatenate([np.cumsum(x[::-1])[::-1][1:], [0.0]])


def distribution_function(f: SampleFunction) -> StepFunction:
    """``lambda -> mu({|f| > lambda})`` with breakpoints at the positive ``|f|`` values."""
    uniq, mass = _levels(f)
    above = _suffix(mass)  # mu(|f| > uniq[j])
    positive = uniq > 0
    d0 = float(np.sum(mass[positive][::-1]))
    return StepFunction(uniq[positive], np.concatenate([[d0], above[positive]]))


def decreasing_rearrangement(d: StepFunction) -> StepFunction:
    """Generalised inverse ``t -> inf{lambda : d(lambda) <= t}``.

    ``d`` takes the value ``val[i]`` from knot ``p[i]`` on (``p[0] = 0``), so
    the infimum is the first knot whose value is at most ``t``.  The jumps of
    the result sit at the distinct positive values of ``d``.
    """
    if d.final != 0:
        raise BadParams("distribution must vanish eventually; the rearrangement would be infinite")
    knots = np.concatenate([[0.0], d.breakpoints])
    vals = d.values
    thresholds = np.unique(vals[vals > 0])
    probes = np.concatenate([[0.0], thresholds])
    # number of knots with value <= t, counted on the nondecreasing reversal
    first = vals.size - np.searchsorted(vals[::-1], probes, side="right")
    return StepFunction(thresholds, knots[first])


def lebesgue_distribution(g: StepFunction) -> StepFunction:
    """Distribution of ``g`` itself under Lebesgue measure on (0, inf).

    For nonincreasing ``g`` the set ``{g > lambda}`` is an initial interval,
    so its length is the first knot where ``g`` drops to ``lambda`` or below.
    """
    if g.final != 0:
        raise BadParams("distribution is infinite")
    knots = np.concatenate([[0.0], g.breakpoints])
    levels = np.unique(g.values[g.values > 0])

    def length_above(lam):
        return float(knots[int(np.argmax(g.values <= lam))])

    return StepFunction(levels, [length_above(0.0)] + [length_above(x) for x in levels])


def sample_points(g: StepFunction, include_zero: bool = True) -> np.ndarray:
    """Breakpoints, midpoints between them, and points beyond the last one."""
    b = g.breakpoints
    pts = [b, (b[:-1] + b[1:]) / 2]
    if b.size:
        pts += [b[:1] / 2, b[-1:] * 1.5 + 1.0]
    else:
        pts.append(np.array([1.0]))
    if include_zero:
        pts.append(np.array([0.0]))
    return np.unique(np.concatenate(pts))


def duality_check(f: SampleFunction) -> bool:
    """``f*(d(l)) <= l`` and ``d(f*(t)) <= t`` at all breakpoints and midpoints."""
    d = distribution_function(f)
    fs = decreasing_rearrangement(d)
    lam = sample_points(d)
    t = sample_points(fs)
    return bool(np.all(fs(d(lam)) <= lam) and np.all(d(fs(t)) <= t))


def maximal_average(f_star: StepFunction, t: float) -> float:
    """``f**(t) = (1/t) int_0^t f*``."""
    if not t > 0:
        raise NonPositiveT(f"t must be positive, got {t!r}")
    return f_star.cumulative(t) / t


def weak_seminorm(f: SampleFunction):
    """``sup_{t>0} (f**(t) - f*(t))`` and a ``t`` attaining it.

    ``f*`` is constant on each ``[t_i, t_{i+1})`` while ``f**`` is
    nonincreasing, so the difference peaks at the left ends ``t_i``: the
    jumps of ``f*``.  Near ``t = 0`` the difference tends to 0.
    """
    fs = decreasing_rearrangement(distribution_function(f))
    t = fs.breakpoints
    if t.size == 0:
        return 0.0, 0.0
    gap = fs.cumulative(t) / t - fs(t)
    j = int(np.argmax(gap))
    return max(0.0, float(gap[j])), float(t[j])


def power_sum(f: SampleFunction, p: float) -> float:
    """``int |f|**p dmu`` by direct summation."""
    return math.fsum((f.masses * np.abs(f.values) ** p).tolist())


def cavalieri_lp(f: SampleFunction, p: float) -> float:
    """``p int_0^inf lambda**(p-1) d(lambda) dlambda`` in closed form."""
    if not p > 0:
        raise BadParams("p must be positive")
    return distribution_function(f).power_moment(p)


def level_set_integral(f: SampleFunction, lam: float) -> float:
    """``int_{|f| > lam} |f| dmu`` by direct summation."""
    if lam < 0:
        raise BadParams("lambda must be nonnegative")
    a = np.abs(f.values)
    hit = a > lam
    return math.fsum((f.masses[hit] * a[hit]).tolist())


def level_set_integral_from_distribution(d: StepFunction, lam: float) -> float:
    """``int_lam^inf d + lam d(lam)``; equals :func:`level_set_integral`."""
    return d.tail(lam) + lam * d(lam)


def identity_id1_check(f: SampleFunction, t: float, rtol: float = EXACT_RTOL) -> bool:
    """``f**(t) - f*(t) == (1/t) int_{f*(t)}^inf d``, both sides in closed form.

    The left side is a difference of two numbers of size ``f**(t)``, so the
    comparison is relative to that scale.
    """
    if not t > 0:
        raise NonPositiveT(f"t must be positive, got {t!r}")
    d = distribution_function(f)
    fs = decreasing_rearrangement(d)
    avg = maximal_average(fs, t)
    lhs = avg - fs(t)
    rhs = d.tail(fs(t)) / t
    return abs(lhs - rhs) <= rtol * max(abs(avg), abs(rhs), np.finfo(float).tiny)
