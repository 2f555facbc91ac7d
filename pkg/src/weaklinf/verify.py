"""Seeded random instances and the cross-module property suites.

Each suite draws its instances from ``numpy.random.default_rng([seed, tag])``
so suites are independent of each other and of their instance counts'
neighbours.  A failure records the serialised instance and both sides of
the violated inequality.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .covering import CoverInstance, czd_cover
from .io import function_to_dict, space_to_dict
from .metric_measure import (
    Ball,
    SampleFunction,
    doubling_constant,
    enumerate_canonical_balls,
    random_function,
    random_space,
)
from .oscillation import (
    bmo_norm,
    bmto_constant,
    enlarged_ball_bmto_constant,
    enlarged_ball_bound,
    global_weak_constant,
    global_weak_from_bmo_check,
    jn_check,
    local_linf_constant,
)
from .rearrangement import (
    cavalieri_lp,
    decreasing_rearrangement,
    distribution_function,
    duality_check,
    identity_id1_check,
    level_set_integral,
    level_set_integral_from_distribution,
    power_sum,
    sample_points,
)
from .weak_linf import (
    LOG2,
    check_condition_iv,
    concentration_check,
    smallest_M_condition_i,
    smallest_M_condition_ii,
    smallest_M_condition_iii,
)

TOL_EXACT = 1e-12
TOL_CONST = 1e-9
DEFAULT_COUNTS = {"weak_linf": 500, "oscillation": 300, "covering": 200}
SUITE_TAGS = {"weak_linf": 1, "oscillation": 2, "covering": 3}
GAMMAS = (2.5, 4.0, 8.0)
CAVALIERI_P = (0.5, 1.0, 2.0, 3.0)
MASS_TEMPLATES = ("unit", "dyadic")
FUNCTION_TEMPLATES = ("gaussian", "gaussian-ties", "log")


def suite_rng(seed: int, suite: str) -> np.random.Generator:
    return np.random.default_rng([int(seed), SUITE_TAGS[suite]])


def random_instance(rng: np.random.Generator, max_atoms: int) -> SampleFunction:
    n = int(rng.integers(1, max_atoms + 1))
    dim = int(rng.integers(1, 4))
    masses = MASS_TEMPLATES[int(rng.integers(len(MASS_TEMPLATES)))]
    template = FUNCTION_TEMPLATES[int(rng.integers(len(FUNCTION_TEMPLATES)))]
    space = random_space(rng, n, dim, masses)
    return random_function(rng, space, template)


def weak_linf_instances(seed: int, count: int, max_atoms: int = 64):
    rng = suite_rng(seed, "weak_linf")
    return [random_instance(rng, max_atoms) for _ in range(count)]


def oscillation_instances(seed: int, count: int, max_atoms: int = 48):
    rng = suite_rng(seed, "oscillation")
    return [random_instance(rng, max_atoms) for _ in range(count)]


def random_cover_instance(rng: np.random.Generator, max_atoms: int = 48) -> CoverInstance:
    """Random space, random canonical ``B0`` and a random ``F`` in ``3 B0``
    trimmed until ``mu(F) <= mu(B0)/2``."""
    n = int(rng.integers(2, max_atoms + 1))
    dim = int(rng.integers(1, 4))
    space = random_space(rng, n, dim, MASS_TEMPLATES[int(rng.integers(2))])
    fam = enumerate_canonical_balls(space)
    B0 = fam[int(rng.integers(len(fam)))]
    d = space.distances_from(space.index(B0.center))
    mu_B0 = space.mass_of(np.flatnonzero(d < B0.radius))
    pool = np.flatnonzero(d < 3 * B0.radius)
    pool = pool[rng.permutation(pool.size)]
    keep = pool[rng.random(pool.size) < rng.uniform(0.2, 0.9)]
    F, mass = [], 0.0
    for a in keep.tolist():
        if mass + space.masses[a] <= mu_B0 / 2:
            F.append(int(space.ids[a]))
            mass += float(space.masses[a])
    return CoverInstance(space, B0, frozenset(F))


def covering_instances(seed: int, count: int, max_atoms: int = 48):
    rng = suite_rng(seed, "covering")
    return [random_cover_instance(rng, max_atoms) for _ in range(count)]


@dataclass
class SuiteResult:
    name: str
    instances: int = 0
    checks: int = 0
    failures: list = field(default_factory=list)
    doubling_max: float | None = None

    def check(self, ok: bool, property_name: str, instance_no: int, **details) -> bool:
        self.checks += 1
        if not ok:
            self.failures.append({"property": property_name, "instance": instance_no, **_plain(details)})
        return ok

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "instances": self.instances,
            "checks": self.checks,
            "failed": len(self.failures),
            "max_doubling_constant": self.doubling_max,
            "failures": self.failures,
        }


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, Ball):
        return {"center": obj.center, "radius": obj.radius}
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _instance_blob(f: SampleFunction) -> dict:
    return {"space": space_to_dict(f.space), "function": function_to_dict(f)}


def _rel_close(a: float, b: float, rtol: float, scale: float | None = None) -> bool:
    ref = max(abs(a), abs(b)) if scale is None else scale
    return abs(a - b) <= rtol * max(ref, np.finfo(float).tiny)


def check_weak_linf(f: SampleFunction, res: SuiteResult, no: int, tol_exact=TOL_EXACT, tol_const=TOL_CONST) -> None:
    """Equal optimal constants, (iii) => (iv) => (ii), identities, concentration."""
    blob = None

    def fail_blob():
        nonlocal blob
        if blob is None:
            blob = _instance_blob(f)
        return blob

    def chk(ok, name, **kw):
        if not res.check(bool(ok), name, no, **kw):
            res.failures[-1]["witness_instance"] = _plain(fail_blob())

    Mi = smallest_M_condition_i(f)
    Mii = smallest_M_condition_ii(f, 0.0)
    Miii = smallest_M_condition_iii(f, 0.0)
    chk(abs(Mi - Mii) <= tol_const * max(1.0, Mi), "M_i == M_ii", M_i=Mi, M_ii=Mii)
    chk(abs(Mii - Miii) <= tol_exact * max(1.0, Mii), "M_ii == M_iii", M_ii=Mii, M_iii=Miii)
    if Miii > 0:
        holds, pair = check_condition_iv(f, 4.0, LOG2 / Miii)
        chk(holds, "(iii) => (iv) with (4, log2/M)", M_iii=Miii, worst_pair=pair)
        for c1 in (1.0, 2.0, 4.0, 8.0):
            for s in (0.25, 0.5, 1.0, 2.0):
                c2 = s * LOG2 / Miii
                if check_condition_iv(f, c1, c2)[0]:
                    chk(Mii <= c1 / c2 + tol_const, "(iv) => (ii) with M = c1/c2", c1=c1, c2=c2, M_ii=Mii)

    chk(duality_check(f), "duality f*(d(l)) <= l, d(f*(t)) <= t")
    d = distribution_function(f)
    fs = decreasing_rearrangement(d)
    for t in sample_points(fs, include_zero=False).tolist():
        chk(identity_id1_check(f, t, tol_exact), "identity f**-f* = tail/t", t=t)
    for p in CAVALIERI_P:
        lhs, rhs = power_sum(f, p), cavalieri_lp(f, p)
        chk(_rel_close(lhs, rhs, tol_exact), "Cavalieri", p=p, direct=lhs, layer_cake=rhs)
    for lam in sample_points(d).tolist():
        lhs = level_set_integral(f, lam)
        rhs = level_set_integral_from_distribution(d, lam)
        chk(_rel_close(lhs, rhs, tol_exact), "level-set integral", lam=lam, direct=lhs, tail_form=rhs)
    lams = np.concatenate([[0.0], d.breakpoints])
    for lam in lams[d(lams) > 0].tolist():
        for gamma in GAMMAS:
            ratio, bound, ok = concentration_check(f, lam, gamma)
            chk(ok, "concentration", lam=lam, gamma=gamma, ratio=ratio, bound=bound)


def check_oscillation(f: SampleFunction, res: SuiteResult, no: int, c_mu: float, rho: float = 3.0, tol=TOL_EXACT) -> None:
    def chk(ok, name, **kw):
        if not res.check(bool(ok), name, no, doubling_constant=c_mu, **kw):
            res.failures[-1]["witness_instance"] = _plain(_instance_blob(f))

    bmo, bmo_ball = bmo_norm(f)
    M, (ball, lam) = bmto_constant(f)
    chk(bmo <= M * (1 + tol), "bmo <= bmto", bmo=bmo, bmto=M, ball=bmo_ball)
    chk(jn_check(f, M), "John-Nirenberg with (4, log 2)", bmto=M, ball=ball, lam=lam)
    enl = enlarged_ball_bmto_constant(f, rho)
    bound = enlarged_ball_bound(c_mu, bmo)
    chk(enl <= bound * (1 + tol), "3B constant <= explicit bound", enlarged=enl, bound=bound)
    chk(bmo <= c_mu**2 * enl * (1 + tol), "bmo <= c_mu^2 * 3B constant", bmo=bmo, enlarged=enl)
    loc = local_linf_constant(f)
    top = float(np.max(np.abs(f.values)))
    chk(loc <= top * (1 + tol) and top <= 2 * loc * (1 + tol), "local L-inf bracket", local=loc, sup=top)
    chk(
        global_weak_from_bmo_check(f, global_weak_constant(c_mu)),
        "BMO => weak L-inf with C = 4 c_mu^3",
        M_ii=smallest_M_condition_ii(f, 0.0),
        bmo=bmo,
    )


def check_covering(inst: CoverInstance, res: SuiteResult, no: int, c_mu: float) -> None:
    r = czd_cover(inst, c_mu)

    def chk(ok, name, **kw):
        if not res.check(bool(ok), name, no, doubling_constant=c_mu, **kw):
            res.failures[-1]["witness_instance"] = _plain(
                {
                    "space": space_to_dict(inst.space),
                    "B0": inst.B0,
                    "F": sorted(inst.F),
                }
            )

    chk(r.disjoint, "selected balls disjoint")
    chk(r.balls_in_3B0, "selected balls inside 3 B0")
    chk(r.property_i, "(i) balance on each 5-dilate", balanced=r.balanced)
    chk(r.property_ii, "(ii) uncovered mass is 0", uncovered=r.uncovered_mass)
    chk(r.property_iii, "(iii) sum mu(5B) <= 2 c^3 mu(F)", measured=r.measured_constant, bound=2 * c_mu**3)
    chk(r.chain_holds, "stepwise chain", chain=r.chain)


def run_suites(seed: int, counts: dict | None = None, tol_exact=TOL_EXACT, tol_const=TOL_CONST, rho=3.0, extra=None) -> dict:
    """Run every suite and return the JSON-ready report."""
    counts = dict(DEFAULT_COUNTS if counts is None else counts)
    results = {}

    res = SuiteResult("weak_linf")
    for no, f in enumerate(weak_linf_instances(seed, counts["weak_linf"])):
        res.instances += 1
        check_weak_linf(f, res, no, tol_exact, tol_const)
    results["weak_linf"] = res

    res = SuiteResult("oscillation")
    for no, f in enumerate(oscillation_instances(seed, counts["oscillation"])):
        res.instances += 1
        c_mu = doubling_constant(f.space)
        res.doubling_max = c_mu if res.doubling_max is None else max(res.doubling_max, c_mu)
        check_oscillation(f, res, no, c_mu, rho, tol_exact)
    results["oscillation"] = res

    res = SuiteResult("covering")
    for no, inst in enumerate(covering_instances(seed, counts["covering"])):
        res.instances += 1
        c_mu = doubling_constant(inst.space)
        res.doubling_max = c_mu if res.doubling_max is None else max(res.doubling_max, c_mu)
        check_covering(inst, res, no, c_mu)
    results["covering"] = res

    if extra is not None:
        res = SuiteResult("input")
        res.instances = 1
        c_mu = doubling_constant(extra.space)
        res.doubling_max = c_mu
        check_weak_linf(extra, res, 0, tol_exact, tol_const)
        check_oscillation(extra, res, 0, c_mu, rho, tol_exact)
        results["input"] = res

    total = sum(r.checks for r in results.values())
    failed = sum(len(r.failures) for r in results.values())
    return {
        "header": {
            "tool": "weaklinf",
            "version": __version__,
            "command": "verify",
            "seed": int(seed),
            "tolerances": {"exact": tol_exact, "const": tol_const},
            "rho": rho,
            "instances": counts,
        },
        "summary": {"checks": total, "failed": failed, "passed": failed == 0},
        "suites": {name: r.to_dict() for name, r in results.items()},
    }


def run_covering_suite(seed: int, count: int) -> dict:
    res = SuiteResult("covering")
    for no, inst in enumerate(covering_instances(seed, count)):
        res.instances += 1
        c_mu = doubling_constant(inst.space)
        res.doubling_max = c_mu if res.doubling_max is None else max(res.doubling_max, c_mu)
        check_covering(inst, res, no, c_mu)
    return {
        "header": {
            "tool": "weaklinf",
            "version": __version__,
            "command": "cover verify",
            "seed": int(seed),
            "tolerances": {"exact": TOL_EXACT, "const": TOL_CONST},
        },
        "summary": {"checks": res.checks, "failed": len(res.failures), "passed": res.passed},
        "suites": {"covering": res.to_dict()},
    }
