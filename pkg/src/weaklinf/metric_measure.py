"""Finite weighted metric measure spaces.

A space is a finite list of atoms, each with an integer id and a positive
mass, together with a metric given either by coordinates (Euclidean) or by an
explicit distance matrix.  Balls are open: ``B(x, r) = {y : d(y, x) < r}``.

Because a finite space has only finitely many distinct open balls, every
"for all balls" statement is realised by :func:`enumerate_canonical_balls`,
which lists each realisable (center, member set) pair exactly once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    BadParams,
    MetricAxiomViolation,
    NonPositiveMass,
    UnknownAtom,
    UnsupportedDimension,
    WrongSpaceShape,
)

TRIANGLE_TOL = 1e-12
LAST_RADIUS_FACTOR = 1.0 + 2.0**-20
# beyond this many atoms a dense distance matrix is not materialised
DENSE_LIMIT = 4096


@dataclass(frozen=True)
class Ball:
    """Open ball ``{y : d(y, center) < radius}``; ``center`` is an atom id."""

    center: int
    radius: float

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise BadParams(f"ball radius must be positive and finite, got {self.radius!r}")

    def dilate(self, factor: float) -> "Ball":
        return Ball(self.center, self.radius * factor)


@dataclass(frozen=True)
class NeighborTable:
    """Atoms sorted by distance from one center.

    ``order`` lists atom indices by (distance, index); ``dist`` holds the
    sorted distances; ``sizes[j]`` is the member count of the j-th distinct
    open ball around the center and ``radii[j]`` its representative radius.
    """

    center: int
    order: np.ndarray
    dist: np.ndarray
    sizes: np.ndarray
    radii: np.ndarray

    @property
    def max_included(self) -> np.ndarray:
        """Largest member distance of each canonical ball."""
        return self.dist[self.sizes - 1]


class MetricMeasureSpace:
    """Immutable finite metric measure space.

    Atoms are addressed externally by id and internally by index (position in
    ``ids``).  Exactly one of ``coords`` or ``matrix`` must be given.
    """

    def __init__(self, ids, masses, coords=None, matrix=None, *, validate=True):
        ids = np.asarray(ids, dtype=np.int64).ravel()
        masses = np.asarray(masses, dtype=float).ravel()
        if ids.size == 0:
            raise BadParams("a space needs at least one atom")
        if masses.shape != ids.shape:
            raise BadParams("ids and masses differ in length")
        if len(set(ids.tolist())) != ids.size:
            raise BadParams("atom ids must be distinct")
        if not np.all(np.isfinite(masses)):
            raise NonPositiveMass("masses must be finite")
        bad = np.flatnonzero(masses <= 0)
        if bad.size:
            raise NonPositiveMass(f"atom {int(ids[bad[0]])} has non-positive mass {masses[bad[0]]!r}")
        if (coords is None) == (matrix is None):
            raise BadParams("give exactly one of coords or matrix")

        self.ids = ids
        self.masses = masses
        self._index = {int(a): i for i, a in enumerate(ids.tolist())}
        self.coords = None
        self._matrix = None
        if coords is not None:
            coords = np.asarray(coords, dtype=float)
            if coords.ndim == 1:
                coords = coords[:, None]
            if coords.shape[0] != ids.size:
                raise BadParams("one coordinate vector per atom required")
            if not np.all(np.isfinite(coords)):
                raise BadParams("coordinates must be finite")
            self.coords = coords
        else:
            matrix = np.asarray(matrix, dtype=float)
            if matrix.shape != (ids.size, ids.size):
                raise BadParams(f"distance matrix must be {ids.size}x{ids.size}")
            self._matrix = matrix
            if validate:
                _validate_matrix(matrix, ids)
        for arr in (self.ids, self.masses, self.coords, self._matrix):
            if arr is not None:
                arr.flags.writeable = False
        self._tables: dict[int, NeighborTable] = {}

    # -- basic accessors -------------------------------------------------

    @property
    def n(self) -> int:
        return int(self.ids.size)

    @property
    def is_euclidean(self) -> bool:
        return self.coords is not None

    @cached_property
    def total_mass(self) -> float:
        return math.fsum(self.masses.tolist())

    def index(self, atom_id) -> int:
        try:
            return self._index[int(atom_id)]
        except KeyError:
            raise UnknownAtom(f"no atom with id {atom_id!r}") from None

    def indices(self, atom_ids) -> np.ndarray:
        return np.array([self.index(a) for a in atom_ids], dtype=np.int64)

    def distances_from(self, i: int) -> np.ndarray:
        """Distances from atom index ``i`` to every atom."""
        if self._matrix is not None:
            return self._matrix[i]
        diff = self.coords - self.coords[i]
        if diff.shape[1] == 1:
            return np.abs(diff[:, 0])
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))

    @cached_property
    def distance_matrix(self) -> np.ndarray:
        if self._matrix is not None:
            return self._matrix
        if self.n > DENSE_LIMIT:
            raise BadParams(f"refusing to build a dense {self.n}x{self.n} distance matrix")
        c = self.coords
        if c.shape[1] == 1:
            out = np.abs(c[:, 0][:, None] - c[:, 0][None, :])
        else:
            diff = c[:, None, :] - c[None, :, :]
            out = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        out.flags.writeable = False
        return out

    def mass_of(self, idx) -> float:
        """Exact-as-possible mass of a collection of atom indices."""
        return math.fsum(self.masses[np.asarray(idx, dtype=np.int64)].tolist())

    def subspace(self, idx) -> "MetricMeasureSpace":
        idx = np.asarray(idx, dtype=np.int64)
        if self.coords is not None:
            return MetricMeasureSpace(self.ids[idx], self.masses[idx], coords=self.coords[idx])
        return MetricMeasureSpace(
            self.ids[idx], self.masses[idx], matrix=self._matrix[np.ix_(idx, idx)], validate=False
        )

    def scaled(self, mass_factor: float = 1.0, metric_factor: float = 1.0) -> "MetricMeasureSpace":
        if self.coords is not None:
            return MetricMeasureSpace(self.ids, self.masses * mass_factor, coords=self.coords * metric_factor)
        return MetricMeasureSpace(
            self.ids, self.masses * mass_factor, matrix=self._matrix * metric_factor, validate=False
        )

    # -- balls -----------------------------------------------------------

    def neighbor_table(self, i: int) -> NeighborTable:
        table = self._tables.get(i)
        if table is None:
            table = _neighbor_table(i, self.distances_from(i))
            self._tables[i] = table
        return table

    def ball_indices(self, ball: Ball) -> np.ndarray:
        i = self.index(ball.center)
        return np.flatnonzero(self.distances_from(i) < ball.radius)

    def center_order(self) -> np.ndarray:
        """Atom indices sorted by id; the canonical iteration order."""
        return np.argsort(self.ids, kind="stable")

    def __repr__(self):
        kind = "euclidean" if self.coords is not None else "matrix"
        return f"MetricMeasureSpace(n={self.n}, mass={self.total_mass!r}, metric={kind})"


def _validate_matrix(d: np.ndarray, ids: np.ndarray) -> None:
    if not np.all(np.isfinite(d)):
        raise MetricAxiomViolation("distances must be finite")
    if np.any(d < 0):
        i, j = np.argwhere(d < 0)[0]
        raise MetricAxiomViolation(f"negative distance d({ids[i]},{ids[j]})", (int(ids[i]), int(ids[j]), None))
    if np.any(np.diag(d) != 0):
        i = int(np.flatnonzero(np.diag(d) != 0)[0])
        raise MetricAxiomViolation(f"d({ids[i]},{ids[i]}) != 0", (int(ids[i]), int(ids[i]), None))
    asym = np.argwhere(d != d.T)
    if asym.size:
        i, j = asym[0]
        raise MetricAxiomViolation(
            f"asymmetric: d({ids[i]},{ids[j]})={d[i, j]!r} but d({ids[j]},{ids[i]})={d[j, i]!r}",
            (int(ids[i]), int(ids[j]), None),
        )
    off = d[~np.eye(d.shape[0], dtype=bool)]
    if off.size and np.any(off <= 0):
        i, j = np.argwhere((d <= 0) & ~np.eye(d.shape[0], dtype=bool))[0]
        raise MetricAxiomViolation(f"distinct atoms {ids[i]},{ids[j]} at distance 0", (int(ids[i]), int(ids[j]), None))
    tol = TRIANGLE_TOL * max(1.0, float(d.max()))
    # d(i,k) <= d(i,j) + d(j,k), one intermediate j at a time to bound memory
    for j in range(d.shape[0]):
        excess = d - (d[:, j][:, None] + d[j, :][None, :])
        if excess.max() > tol:
            i, k = np.unravel_index(int(np.argmax(excess)), excess.shape)
            raise MetricAxiomViolation(
                f"triangle inequality fails: d({ids[i]},{ids[k]}) > d({ids[i]},{ids[j]}) + d({ids[j]},{ids[k]})",
                (int(ids[i]), int(ids[j]), int(ids[k])),
            )


def _neighbor_table(i: int, dist: np.ndarray) -> NeighborTable:
    n = dist.size
    order = np.lexsort((np.arange(n), dist))
    ds = dist[order]
    # a new member set starts wherever the sorted distance strictly increases
    ends = np.flatnonzero(np.diff(ds) > 0) + 1
    sizes = np.concatenate([ends, [n]]).astype(np.int64)
    inner = ds[sizes - 1]
    radii = np.empty(sizes.size)
    if sizes.size > 1:
        nxt = ds[sizes[:-1]]
        mid = inner[:-1] + (nxt - inner[:-1]) / 2
        # adjacent floats: the midpoint may round down onto the included distance
        radii[:-1] = np.where(mid > inner[:-1], mid, nxt)
    last = inner[-1]
    radii[-1] = last * LAST_RADIUS_FACTOR if last > 0 else 1.0
    for a in (order, ds, sizes, radii):
        a.flags.writeable = False
    return NeighborTable(i, order, ds, sizes, radii)


class BallFamily:
    """Ordered balls with cached member index arrays and masses."""

    def __init__(self, space: MetricMeasureSpace, balls, members, center_index=None):
        self.space = space
        self.balls = list(balls)
        self.members = [np.sort(np.asarray(m, dtype=np.int64)) for m in members]
        self.masses = np.array([space.mass_of(m) for m in self.members])
        self.center_index = (
            np.asarray(center_index, dtype=np.int64)
            if center_index is not None
            else np.array([space.index(b.center) for b in self.balls], dtype=np.int64)
        )

    def __len__(self):
        return len(self.balls)

    def __iter__(self):
        return iter(self.balls)

    def __getitem__(self, j):
        return self.balls[j]

    def member_ids(self, j) -> frozenset:
        return frozenset(self.space.ids[self.members[j]].tolist())


def build_space(atoms, metric_spec="euclidean") -> MetricMeasureSpace:
    """Build a space from atom records.

    ``atoms`` is a sequence of mappings with ``id``, ``mass`` and, for the
    Euclidean metric, ``coords``.  ``metric_spec`` is ``"euclidean"`` or a
    mapping ``{"matrix": [[...], ...]}``.
    """
    atoms = list(atoms)
    if not atoms:
        raise BadParams("a space needs at least one atom")
    ids = [int(a["id"]) for a in atoms]
    masses = [float(a["mass"]) for a in atoms]
    if metric_spec == "euclidean":
        try:
            coords = [list(map(float, np.atleast_1d(a["coords"]))) for a in atoms]
        except KeyError:
            raise BadParams("euclidean metric needs coords on every atom") from None
        if len({len(c) for c in coords}) != 1:
            raise BadParams("all coordinate vectors must have the same dimension")
        return MetricMeasureSpace(ids, masses, coords=coords)
    if isinstance(metric_spec, dict) and "matrix" in metric_spec:
        return MetricMeasureSpace(ids, masses, matrix=metric_spec["matrix"])
    raise BadParams(f"unknown metric specification {metric_spec!r}")


def ball_members(space: MetricMeasureSpace, ball: Ball) -> frozenset:
    """Ids of the atoms at distance strictly less than the radius."""
    return frozenset(space.ids[space.ball_indices(ball)].tolist())


def enumerate_canonical_balls(space: MetricMeasureSpace) -> BallFamily:
    """One representative ball per distinct (center, member set) pair.

    Ordered by center id, then radius.  The representative radius is the
    midpoint between the largest included distance and the next larger one;
    for the whole-space ball it is ``D * (1 + 2**-20)``.
    """
    balls, members, centers = [], [], []
    for i in space.center_order():
        t = space.neighbor_table(int(i))
        cid = int(space.ids[i])
        for size, r in zip(t.sizes.tolist(), t.radii.tolist()):
            balls.append(Ball(cid, r))
            members.append(t.order[:size])
            centers.append(int(i))
    return BallFamily(space, balls, members, centers)


def doubling_constant(space: MetricMeasureSpace) -> float:
    """Least ``c`` with ``mu(B(x, 2r)) <= c mu(B(x, r))`` for all x and r > 0.

    For a fixed center both ``r -> mu(B(x, r))`` and ``r -> mu(B(x, 2r))``
    are left-continuous step functions whose jumps sit just after ``D`` and
    ``D/2`` for the distances ``D`` from x.  Between consecutive jump points
    the ratio is constant and it is attained at the right end, so evaluating
    at every ``D`` and ``D/2`` gives the exact supremum.
    """
    best = 1.0
    for i in range(space.n):
        t = space.neighbor_table(i)
        pos = t.dist[t.dist > 0]
        if pos.size == 0:
            continue
        cm = np.cumsum(space.masses[t.order])
        r = np.unique(np.concatenate([pos, pos / 2]))
        inner = cm[np.searchsorted(t.dist, r, side="left") - 1]
        outer = cm[np.searchsorted(t.dist, 2 * r, side="left") - 1]
        best = max(best, float(np.max(outer / inner)))
    return best


# -- example spaces -------------------------------------------------------


def dyadic_counterexample_space(K: int) -> MetricMeasureSpace:
    """Atoms ``x_k = 2**-k`` on the line with masses ``2**-k``, k = 0..K."""
    K = int(K)
    if K < 1:
        raise BadParams("K must be at least 1")
    k = np.arange(K + 1)
    pts = np.ldexp(1.0, -k)
    return MetricMeasureSpace(k, pts, coords=pts[:, None])


def counterexample_function(space: MetricMeasureSpace):
    """``f(x_k) = (-1)**k * k`` on a dyadic counterexample space."""
    K = space.n - 1
    k = np.arange(K + 1)
    pts = np.ldexp(1.0, -k)
    ok = (
        K >= 1
        and space.coords is not None
        and space.coords.shape[1] == 1
        and np.array_equal(space.ids, k)
        and np.array_equal(space.masses, pts)
        and np.array_equal(space.coords[:, 0], pts)
    )
    if not ok:
        raise WrongSpaceShape("space is not a dyadic counterexample space")
    return SampleFunction(space, np.where(k % 2 == 0, k, -k).astype(float))


def log_example_space(n: int, m: int):
    """Grid discretisation of ``log(|x|**-n)`` on the unit ball of R^n.

    Each grid cell of side ``2/m`` meeting the ball becomes an atom at the
    cell center whose mass is the Lebesgue measure of the cell inside the
    ball.  Returns ``(space, f)``.
    """
    n, m = int(n), int(m)
    if n not in (1, 2):
        raise UnsupportedDimension(f"log example supports n in {{1, 2}}, got {n}")
    if m < 10:
        raise BadParams("need at least 10 cells per axis")
    h = 2.0 / m
    centers = (2.0 * np.arange(m) + 1.0 - m) / m
    if n == 1:
        masses = np.full(m, h)
        radius = np.abs(centers)
        radius[radius == 0] = h / 4
        values = -np.log(radius)
        space = MetricMeasureSpace(np.arange(m), masses, coords=centers[:, None])
        return space, SampleFunction(space, values)
    return _log_example_2d(m, h, centers)


SUBSAMPLES = 32


def _log_example_2d(m, h, centers):
    cx, cy = np.meshgrid(centers, centers, indexing="ij")
    cx, cy = cx.ravel(), cy.ravel()
    ax, ay = np.abs(cx), np.abs(cy)
    near = np.hypot(np.maximum(ax - h / 2, 0), np.maximum(ay - h / 2, 0))
    far = np.hypot(ax + h / 2, ay + h / 2)
    inside = far <= 1.0
    boundary = (near < 1.0) & ~inside

    masses = np.where(inside, h * h, 0.0)
    eval_r = np.hypot(cx, cy)
    off = (np.arange(SUBSAMPLES) + 0.5) / SUBSAMPLES - 0.5
    sx, sy = np.meshgrid(off * h, off * h, indexing="ij")
    sx, sy = sx.ravel(), sy.ravel()
    for c in np.flatnonzero(boundary):
        px, py = cx[c] + sx, cy[c] + sy
        hit = px * px + py * py < 1.0
        frac = hit.mean()
        masses[c] = frac * h * h
        if frac > 0 and eval_r[c] >= 1.0:
            # center outside the ball: evaluate at the centroid of the clipped part
            eval_r[c] = np.hypot(px[hit].mean(), py[hit].mean())
    eval_r[eval_r == 0] = h / 4
    keep = masses > 0
    coords = np.column_stack([cx[keep], cy[keep]])
    space = MetricMeasureSpace(np.arange(int(keep.sum())), masses[keep], coords=coords)
    return space, SampleFunction(space, -2.0 * np.log(eval_r[keep]))


def random_space(rng: np.random.Generator, n: int, dim: int = 1, masses: str = "unit") -> MetricMeasureSpace:
    """``n`` atoms uniform in ``[0, 1]**dim`` with unit or dyadic masses."""
    if n < 1 or dim < 1:
        raise BadParams("need n >= 1 and dim >= 1")
    coords = rng.random((n, dim))
    if masses == "unit":
        w = np.ones(n)
    elif masses == "dyadic":
        w = np.ldexp(1.0, -rng.integers(0, 6, size=n))
    else:
        raise BadParams(f"unknown mass template {masses!r}")
    return MetricMeasureSpace(np.arange(n), w, coords=coords)


def random_function(rng: np.random.Generator, space: MetricMeasureSpace, template: str = "gaussian"):
    """Random sample function from a Gaussian or a log-singular template.

    ``gaussian-ties`` rounds Gaussian values to one decimal so that ties occur.
    """
    n = space.n
    if template == "gaussian":
        v = rng.normal(size=n) * rng.uniform(0.1, 5.0)
    elif template == "gaussian-ties":
        v = np.round(rng.normal(size=n) * 2.0, 1)
    elif template == "log":
        x0 = int(rng.integers(n))
        d = space.distances_from(x0)
        v = -np.log(d + 1e-3) * rng.choice([-1.0, 1.0], size=n, p=[0.2, 0.8])
    else:
        raise BadParams(f"unknown function template {template!r}")
    return SampleFunction(space, v)


class SampleFunction:
    """A finite real value on every atom of a space (indexed like the space)."""

    __slots__ = ("space", "values")

    def __init__(self, space: MetricMeasureSpace, values):
        values = np.array(values, dtype=float).ravel()
        if values.size != space.n:
            raise BadParams(f"expected {space.n} values, got {values.size}")
        if not np.all(np.isfinite(values)):
            raise BadParams("function values must be finite")
        values.flags.writeable = False
        self.space = space
        self.values = values

    @classmethod
    def from_mapping(cls, space: MetricMeasureSpace, mapping) -> "SampleFunction":
        mapping = {int(k): float(v) for k, v in mapping.items()}
        if set(mapping) != set(space.ids.tolist()):
            raise BadParams("function must assign exactly one value to every atom")
        return cls(space, [mapping[int(a)] for a in space.ids])

    @property
    def masses(self) -> np.ndarray:
        return self.space.masses

    def __call__(self, atom_id) -> float:
        return float(self.values[self.space.index(atom_id)])

    def scaled(self, c: float) -> "SampleFunction":
        return SampleFunction(self.space, self.values * c)

    def restrict(self, idx, shift: float = 0.0) -> "SampleFunction":
        """Restriction to the atoms ``idx`` (as a subspace), minus ``shift``."""
        idx = np.asarray(idx, dtype=np.int64)
        return SampleFunction(self.space.subspace(idx), self.values[idx] - shift)

    def as_mapping(self) -> dict:
        return {int(a): float(v) for a, v in zip(self.space.ids.tolist(), self.values.tolist())}
