"""Cut-and-project schemes over Euclidean spaces and their model sets.

A scheme is a lattice in ``R^d x R^e`` given by a square basis matrix whose
columns generate the lattice; the first ``d`` rows are the physical
coordinates, the last ``e`` rows the internal ones.  Presets carry an exact
basis over a real quadratic field so that window membership is decided
without tolerance.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .quadratic import QuadraticNumber, Scalar, is_exact, sign, to_exact

log = logging.getLogger(__name__)

__all__ = [
    "SchemeError",
    "Box",
    "Window",
    "CutProjectScheme",
    "ModelSetPoint",
    "Patch",
    "VanHoveSequence",
    "build_scheme",
    "star",
    "enumerate_points",
    "density",
    "min_gap",
    "max_gap",
    "thick_boundary_ratio",
    "as_box",
]

FLOAT_TOL = 1e-9


class SchemeError(ValueError):
    """A scheme, window or region violates one of its invariants."""


# ---------------------------------------------------------------------------
# exact linear algebra over a field (Fraction or QuadraticNumber entries)


def _field_entry(x):
    return x if isinstance(x, QuadraticNumber) else Fraction(x)


def _exact_det(rows: Sequence[Sequence[Scalar]]):
    m = [[_field_entry(x) for x in r] for r in rows]
    size = len(m)
    det = Fraction(1)
    for col in range(size):
        piv = next((i for i in range(col, size) if m[i][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        det = det * m[col][col]
        for i in range(col + 1, size):
            if m[i][col] != 0:
                f = m[i][col] / m[col][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[col])]
    return det


def _exact_inverse(rows: Sequence[Sequence[Scalar]]) -> list[list[Scalar]]:
    size = len(rows)
    m = [[_field_entry(x) for x in r] + [Fraction(int(i == j)) for j in range(size)] for i, r in enumerate(rows)]
    for col in range(size):
        piv = next((i for i in range(col, size) if m[i][col] != 0), None)
        if piv is None:
            raise SchemeError("basis matrix is singular")
        m[col], m[piv] = m[piv], m[col]
        p = m[col][col]
        m[col] = [a / p for a in m[col]]
        for i in range(size):
            if i != col and m[i][col] != 0:
                f = m[i][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[col])]
    return [r[size:] for r in m]


def _rational_rank(rows: list[list[Fraction]]) -> int:
    m = [list(r) for r in rows]
    rank = 0
    ncols = len(m[0]) if m else 0
    for col in range(ncols):
        piv = next((i for i in range(rank, len(m)) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for i in range(len(m)):
            if i != rank and m[i][col] != 0:
                f = m[i][col] / m[rank][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[rank])]
        rank += 1
    return rank


def _split(x, n: int | None) -> tuple[Fraction, Fraction]:
    if isinstance(x, QuadraticNumber):
        if x.b != 0 and x.n != n:
            raise SchemeError(f"entry {x} is not in Q(sqrt {n})")
        return x.a, x.b
    return Fraction(x), Fraction(0)


# ---------------------------------------------------------------------------
# boxes and windows


@dataclass(frozen=True)
class Box:
    """Closed box ``[lo, hi]`` in ``R^d``; used for regions and van Hove sets."""

    lo: tuple
    hi: tuple

    def __post_init__(self) -> None:
        if len(self.lo) != len(self.hi):
            raise SchemeError("box bounds have different dimensions")
        for a, b in zip(self.lo, self.hi):
            if not (math.isfinite(float(a)) and math.isfinite(float(b))):
                raise SchemeError("region is unbounded")
            if a > b:
                raise SchemeError(f"region is empty: lower bound {a} exceeds upper bound {b}")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod([float(b) - float(a) for a, b in zip(self.lo, self.hi)]))

    def shifted(self, v) -> Box:
        return Box(tuple(a + x for a, x in zip(self.lo, v)), tuple(b + x for b, x in zip(self.hi, v)))

    def contains(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        lo = np.array([float(a) for a in self.lo])
        hi = np.array([float(b) for b in self.hi])
        return np.all((x >= lo) & (x <= hi), axis=1)


def as_box(region, d: int) -> Box:
    """Accept a :class:`Box`, a ``(lo, hi)`` pair or a radius ``r`` for ``[-r, r]^d``."""
    if isinstance(region, Box):
        return region
    if isinstance(region, (int, float, Fraction)):
        return Box((-region,) * d, (region,) * d)
    lo, hi = region
    if not isinstance(lo, (tuple, list)):
        lo, hi = (lo,) * d, (hi,) * d
    return Box(tuple(lo), tuple(hi))


def _box_intersect(a, b):
    out = []
    for (alo, ahi), (blo, bhi) in zip(a, b):
        lo, hi = max(alo, blo), min(ahi, bhi)
        if not lo < hi:
            return None
        out.append((lo, hi))
    return tuple(out)


def _box_difference(a, b) -> list:
    if _box_intersect(a, b) is None:
        return [a]
    pieces = []
    rest = list(a)
    for i, ((alo, ahi), (blo, bhi)) in enumerate(zip(a, b)):
        if alo < blo:
            pieces.append(tuple(rest[:i]) + ((alo, blo),) + tuple(rest[i + 1:]))
        if bhi < ahi:
            pieces.append(tuple(rest[:i]) + ((bhi, ahi),) + tuple(rest[i + 1:]))
        rest[i] = (max(alo, blo), min(ahi, bhi))
    return pieces


@dataclass(frozen=True)
class Window:
    """Finite union of pairwise-disjoint half-open boxes ``[a, b)`` in ``R^e``.

    May be empty as an intermediate result of set algebra; windows handed
    to :func:`enumerate_points` by users should come from the constructors,
    which reject empty input.
    """

    e: int
    boxes: tuple = ()

    def __post_init__(self) -> None:
        boxes = tuple(tuple((lo, hi) for lo, hi in b) for b in self.boxes)
        for b in boxes:
            if len(b) != self.e:
                raise SchemeError("box dimension does not match window dimension")
            for lo, hi in b:
                if not lo < hi:
                    raise SchemeError(f"degenerate box side [{lo}, {hi})")
        if self.e == 1:
            boxes = _merge_intervals(boxes)
        else:
            for b1, b2 in itertools.combinations(boxes, 2):
                if _box_intersect(b1, b2) is not None:
                    raise SchemeError("window boxes overlap")
        object.__setattr__(self, "boxes", boxes)

    # constructors ---------------------------------------------------------
    @classmethod
    def interval(cls, a, b) -> Window:
        return cls.from_intervals([(a, b)])

    @classmethod
    def from_intervals(cls, intervals) -> Window:
        intervals = [tuple(iv) for iv in intervals]
        if not intervals:
            raise SchemeError("window must be nonempty")
        srt = sorted(intervals, key=lambda iv: iv[0])
        for (a0, b0), (a1, b1) in zip(srt, srt[1:]):
            if a1 < b0:
                raise SchemeError("window intervals overlap")
        return cls(1, tuple(((a, b),) for a, b in intervals))

    @classmethod
    def from_boxes(cls, boxes) -> Window:
        boxes = [tuple(tuple(side) for side in b) for b in boxes]
        if not boxes:
            raise SchemeError("window must be nonempty")
        return cls(len(boxes[0]), tuple(boxes))

    @classmethod
    def empty(cls, e: int) -> Window:
        return cls(e, ())

    # set algebra ----------------------------------------------------------
    @property
    def is_empty(self) -> bool:
        return not self.boxes

    @property
    def measure(self):
        total = 0
        for b in self.boxes:
            vol = 1
            for lo, hi in b:
                vol = vol * (hi - lo)
            total = total + vol
        return total

    @property
    def intervals(self) -> list[tuple]:
        """``[(a, b), ...]`` for one-dimensional windows."""
        if self.e != 1:
            raise SchemeError("intervals are defined for one-dimensional windows only")
        return [b[0] for b in self.boxes]

    def hull(self) -> tuple[tuple, tuple]:
        if self.is_empty:
            raise SchemeError("empty window has no hull")
        lo = tuple(min(b[i][0] for b in self.boxes) for i in range(self.e))
        hi = tuple(max(b[i][1] for b in self.boxes) for i in range(self.e))
        return lo, hi

    def diameter(self) -> float:
        lo, hi = self.hull()
        return math.sqrt(sum((float(b) - float(a)) ** 2 for a, b in zip(lo, hi)))

    def translate(self, v) -> Window:
        v = _as_vector(v, self.e)
        return Window(self.e, tuple(tuple((lo + x, hi + x) for (lo, hi), x in zip(b, v)) for b in self.boxes))

    def intersect(self, other: Window) -> Window:
        out = []
        for a in self.boxes:
            for b in other.boxes:
                c = _box_intersect(a, b)
                if c is not None:
                    out.append(c)
        return Window(self.e, tuple(out))

    def difference(self, other: Window) -> Window:
        pieces = list(self.boxes)
        for b in other.boxes:
            pieces = [p for a in pieces for p in _box_difference(a, b)]
        return Window(self.e, tuple(pieces))

    def union(self, other: Window) -> Window:
        return Window(self.e, self.boxes + other.difference(self).boxes)

    def minkowski_sum(self, other: Window) -> Window:
        """``W + R`` for box unions."""
        out = Window.empty(self.e)
        for a in self.boxes:
            for b in other.boxes:
                box = tuple((alo + blo, ahi + bhi) for (alo, ahi), (blo, bhi) in zip(a, b))
                out = out.union(Window(self.e, (box,)))
        return out

    def contains_point(self, y) -> bool:
        """Exact half-open membership for a single point (scalars may be exact)."""
        y = _as_vector(y, self.e)
        return any(all(lo <= x < hi for (lo, hi), x in zip(b, y)) for b in self.boxes)

    def contains(self, y: np.ndarray) -> np.ndarray:
        """Vectorized float membership; ``y`` has shape (N, e) or (N,) for e=1."""
        y = np.asarray(y, dtype=float).reshape(-1, self.e)
        inside = np.zeros(len(y), dtype=bool)
        for b in self.boxes:
            m = np.ones(len(y), dtype=bool)
            for i, (lo, hi) in enumerate(b):
                m &= (y[:, i] >= float(lo)) & (y[:, i] < float(hi))
            inside |= m
        return inside

    def __str__(self) -> str:
        if self.e == 1:
            return " u ".join(f"[{float(a):.6g}, {float(b):.6g})" for a, b in self.intervals) or "{}"
        return f"Window(e={self.e}, {len(self.boxes)} boxes)"


def _merge_intervals(boxes) -> tuple:
    ivs = sorted((b[0] for b in boxes), key=lambda iv: iv[0])
    merged: list[list] = []
    for lo, hi in ivs:
        if merged and lo <= merged[-1][1]:
            if hi > merged[-1][1]:
                merged[-1][1] = hi
        else:
            merged.append([lo, hi])
    return tuple(((lo, hi),) for lo, hi in merged)


def _as_vector(v, n: int) -> tuple:
    if isinstance(v, (list, tuple)):
        if len(v) != n:
            raise SchemeError(f"expected a vector of length {n}")
        return tuple(v)
    if isinstance(v, np.ndarray):
        return tuple(v.reshape(-1).tolist())
    if n != 1:
        raise SchemeError(f"expected a vector of length {n}")
    return (v,)


# ---------------------------------------------------------------------------
# schemes


@dataclass(frozen=True, eq=False)
class CutProjectScheme:
    """Lattice ``basis @ Z^(d+e)`` in physical x internal space.

    ``exact_basis`` holds the entries over Q(sqrt(field)) in exact mode and
    is ``None`` in floating mode.
    """

    d: int
    e: int
    basis: np.ndarray
    exact_basis: tuple | None = None
    field: int | None = None
    name: str = "custom"
    internal_dense: bool | None = None

    @property
    def dim(self) -> int:
        return self.d + self.e

    @property
    def exact(self) -> bool:
        return self.exact_basis is not None

    @cached_property
    def covolume_exact(self):
        if not self.exact:
            return None
        return abs(_exact_det(self.exact_basis))

    @cached_property
    def covolume(self) -> float:
        if self.exact:
            return float(self.covolume_exact)
        return float(abs(np.linalg.det(self.basis)))

    @cached_property
    def _integer_parts(self) -> tuple[np.ndarray, np.ndarray, int]:
        """``basis = (A + B*sqrt(field)) / den`` with integer matrices A, B."""
        parts = [[_split(x, self.field) for x in row] for row in self.exact_basis]
        den = 1
        for row in parts:
            for a, b in row:
                den = math.lcm(den, a.denominator, b.denominator)
        A = np.array([[int(a * den) for a, _ in row] for row in parts], dtype=np.int64)
        B = np.array([[int(b * den) for _, b in row] for row in parts], dtype=np.int64)
        return A, B, den

    def coordinates(self, coords: np.ndarray) -> np.ndarray:
        """Float image ``basis @ n`` for integer rows ``coords`` (N, d+e) -> (N, d+e).

        In exact mode each value is the float of the exact value, computed
        the same way as ``float(QuadraticNumber)``.
        """
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, self.dim)
        if not self.exact:
            return coords @ self.basis.T
        A, B, den = self._integer_parts
        a = (coords @ A.T).astype(np.float64) / den
        if self.field is None:
            return a
        b = (coords @ B.T).astype(np.float64) / den
        return a + b * math.sqrt(self.field)

    def exact_image(self, coords) -> tuple:
        """Exact ``basis @ n`` as a tuple of field elements."""
        coords = [int(c) for c in coords]
        if not self.exact:
            v = self.basis @ np.asarray(coords, dtype=float)
            return tuple(float(x) for x in v)
        out = []
        for row in self.exact_basis:
            acc = Fraction(0)
            for c, x in zip(coords, row):
                if c:
                    acc = acc + c * x
            out.append(acc)
        return tuple(out)

    def scaled(self, k: int, name: str | None = None) -> CutProjectScheme:
        """The scheme of the sublattice ``k L`` (same spaces, basis times k)."""
        exact = None
        if self.exact:
            exact = tuple(tuple(k * x for x in row) for row in self.exact_basis)
        return CutProjectScheme(
            self.d, self.e, self.basis * k, exact, self.field,
            name or f"{k}*{self.name}", self.internal_dense,
        )


def _check_injective_exact(rows, d: int, n: int | None) -> np.ndarray | None:
    """Return a nonzero integer kernel vector of the physical projection, or None."""
    rat_rows = []
    for row in rows[:d]:
        parts = [_split(x, n) for x in row]
        rat_rows.append([a for a, _ in parts])
        rat_rows.append([b for _, b in parts])
    dim = len(rows)
    if _rational_rank(rat_rows) == dim:
        return None
    import sympy

    ns = sympy.Matrix(rat_rows).nullspace()[0]
    den = sympy.ilcm(*[x.q for x in ns])
    return np.array([int(x * den) for x in ns], dtype=np.int64)


def _check_injective_float(basis: np.ndarray, d: int, radius: int = 6) -> np.ndarray | None:
    dim = basis.shape[0]
    radius = min(radius, max(1, int(round(60000 ** (1.0 / dim) / 2))))
    rng = np.arange(-radius, radius + 1)
    grid = np.array(np.meshgrid(*[rng] * dim, indexing="ij")).reshape(dim, -1).T
    grid = grid[np.any(grid != 0, axis=1)]
    phys = grid @ basis[:d].T
    scale = np.abs(basis).max()
    bad = np.where(np.linalg.norm(phys, axis=1) < FLOAT_TOL * scale)[0]
    return grid[bad[0]] if len(bad) else None


def _internal_dense_exact(rows, d: int, e: int, n: int | None) -> bool | None:
    if e != 1:
        return None
    vecs = [list(_split(x, n)) for x in rows[d]]
    return _rational_rank(vecs) >= 2


def build_scheme(preset: str = "fibonacci", matrix=None, d: int = 1, e: int = 1) -> CutProjectScheme:
    """Build a scheme from a preset name or a custom basis.

    Parameters
    ----------
    preset : {"fibonacci", "silver_mean", "custom"}
    matrix : rows of the (d+e)x(d+e) basis for ``custom``; columns generate
        the lattice.  Entries that are all exact (int, Fraction,
        QuadraticNumber over one field) select exact mode, otherwise
        floating mode.
    """
    if preset == "fibonacci":
        tau = QuadraticNumber.golden()
        rows = ((1, tau), (1, 1 - tau))
        return _make_scheme(rows, 1, 1, "fibonacci")
    if preset == "silver_mean":
        r2 = QuadraticNumber.sqrt(2)
        rows = ((1, 1 + r2), (1, 1 - r2))
        return _make_scheme(rows, 1, 1, "silver_mean")
    if preset != "custom":
        raise SchemeError(f"unknown scheme preset {preset!r}")
    if matrix is None:
        raise SchemeError("custom scheme requires a basis matrix")
    return _make_scheme(matrix, d, e, "custom")


def _make_scheme(rows, d: int, e: int, name: str) -> CutProjectScheme:
    rows = [list(r) for r in rows]
    dim = d + e
    if d < 1 or e < 1:
        raise SchemeError("physical and internal dimensions must be positive")
    if len(rows) != dim or any(len(r) != dim for r in rows):
        raise SchemeError(f"basis must be a {dim}x{dim} matrix")
    basis = np.array([[float(x) for x in r] for r in rows])
    exact = all(is_exact(x) for r in rows for x in r)
    if exact:
        fields = {x.n for r in rows for x in r if isinstance(x, QuadraticNumber) and x.b != 0}
        if len(fields) > 1:
            raise SchemeError(f"basis mixes quadratic fields {sorted(fields)}")
        fld = fields.pop() if fields else None
        det = _exact_det(rows)
        if det == 0:
            raise SchemeError("basis matrix is singular")
        kernel = _check_injective_exact(rows, d, fld)
        if kernel is not None:
            raise SchemeError(
                f"physical projection is not injective on the lattice: {tuple(kernel.tolist())} maps to 0"
            )
        dense = _internal_dense_exact(rows, d, e, fld)
        if dense is False:
            log.warning("internal projection of %s lattice is not dense", name)
        exact_rows = tuple(tuple(_field_entry(x) for x in r) for r in rows)
        return CutProjectScheme(d, e, basis, exact_rows, fld, name, dense)
    if abs(np.linalg.det(basis)) <= 1e-12 * max(1.0, np.abs(basis).max()) ** dim:
        raise SchemeError("basis matrix is singular")
    kernel = _check_injective_float(basis, d)
    if kernel is not None:
        raise SchemeError(
            f"physical projection is not injective on the lattice: {tuple(kernel.tolist())} maps to 0"
        )
    log.info("floating-mode scheme: density of the internal projection is not verified")
    return CutProjectScheme(d, e, basis, None, None, name, None)


def star(scheme: CutProjectScheme, lattice_coords) -> tuple:
    """Internal component of ``basis @ lattice_coords`` (exact in exact mode)."""
    return scheme.exact_image(lattice_coords)[scheme.d:]


# ---------------------------------------------------------------------------
# points and patches


@dataclass(frozen=True)
class ModelSetPoint:
    lattice_coords: tuple[int, ...]
    physical: tuple[float, ...]
    internal: tuple[float, ...]


@dataclass(eq=False)
class Patch(Sequence):
    """Finite set of lattice points with float images, sorted by physical coordinate."""

    scheme: CutProjectScheme
    coords: np.ndarray
    physical: np.ndarray
    internal: np.ndarray
    boundary_warnings: int = 0

    def __len__(self) -> int:
        return len(self.coords)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        return ModelSetPoint(
            tuple(int(c) for c in self.coords[i]),
            tuple(float(x) for x in self.physical[i]),
            tuple(float(x) for x in self.internal[i]),
        )

    def __iter__(self) -> Iterator[ModelSetPoint]:
        for i in range(len(self)):
            yield self[i]

    @cached_property
    def index(self) -> dict[tuple[int, ...], int]:
        return {tuple(c): i for i, c in enumerate(self.coords.tolist())}

    def key_set(self) -> set[tuple[int, ...]]:
        return set(self.index)

    def subset(self, mask) -> Patch:
        return Patch(self.scheme, self.coords[mask], self.physical[mask], self.internal[mask])

    @classmethod
    def from_coords(cls, scheme: CutProjectScheme, coords) -> Patch:
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, scheme.dim)
        img = scheme.coordinates(coords)
        phys, internal = img[:, : scheme.d], img[:, scheme.d:]
        order = np.lexsort(phys.T[::-1]) if len(coords) else np.arange(0)
        return cls(scheme, coords[order], phys[order], internal[order])

    def exact_internal(self, i: int) -> tuple:
        return star(self.scheme, self.coords[i])


def _candidate_coords(basis: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Superset of integer ``n`` with ``basis @ n`` in the closed box [lo, hi]."""
    dim = basis.shape[0]
    inv = np.linalg.inv(basis)
    pos, neg = np.clip(inv, 0, None), np.clip(inv, None, 0)
    nmin = np.floor(pos @ lo + neg @ hi) - 1
    nmax = np.ceil(pos @ hi + neg @ lo) + 1
    spans = nmax - nmin
    j = int(np.argmax(spans))  # solve for the widest coordinate
    others = [i for i in range(dim) if i != j]
    if np.prod(spans[others] + 1) > 5e7:
        raise SchemeError("region too large for enumeration")
    grids = [np.arange(nmin[i], nmax[i] + 1, dtype=np.int64) for i in others]
    if others:
        combo = np.array(np.meshgrid(*grids, indexing="ij")).reshape(len(others), -1).T
    else:
        combo = np.zeros((1, 0), dtype=np.int64)
    partial = combo @ basis[:, others].T  # (M, dim)
    col = basis[:, j]
    low = np.full(len(combo), nmin[j])
    high = np.full(len(combo), nmax[j])
    scale = np.abs(basis).max() * (np.abs(lo).max() + np.abs(hi).max() + 1)
    eps = 1e-9 * scale
    for r in range(dim):
        c = col[r]
        if abs(c) < 1e-15:
            ok = (partial[:, r] >= lo[r] - eps) & (partial[:, r] <= hi[r] + eps)
            high = np.where(ok, high, low - 1)
            continue
        a = (lo[r] - eps - partial[:, r]) / c
        b = (hi[r] + eps - partial[:, r]) / c
        low = np.maximum(low, np.minimum(a, b))
        high = np.minimum(high, np.maximum(a, b))
    low = np.ceil(low).astype(np.int64)
    high = np.floor(high).astype(np.int64)
    counts = np.maximum(high - low + 1, 0)
    total = int(counts.sum())
    out = np.empty((total, dim), dtype=np.int64)
    if total == 0:
        return out
    rep = np.repeat(np.arange(len(combo)), counts)
    starts = np.repeat(low, counts)
    offsets = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    out[:, others] = combo[rep]
    out[:, j] = starts + offsets
    return out


def _signs(scheme: CutProjectScheme, coords: np.ndarray, values: np.ndarray, row: int, bound) -> np.ndarray:
    """Sign of ``value - bound`` per candidate; exact near the bound in exact mode.

    In floating mode values within tolerance of the bound get sign 0.
    """
    bf = float(bound)
    diff = values - bf
    tol = FLOAT_TOL * max(1.0, abs(bf))
    s = np.sign(diff).astype(np.int64)
    near = np.abs(diff) <= tol
    if not near.any():
        return s
    if scheme.exact:
        b = to_exact(bound)
        for i in np.flatnonzero(near):
            v = scheme.exact_image(coords[i])[row]
            s[i] = sign(v - b)
    else:
        s[near] = 0
    return s


def enumerate_points(scheme: CutProjectScheme, window: Window, region) -> Patch:
    """All points of the model set with physical part in ``region``.

    ``region`` is a compact box (see :func:`as_box`).  Window membership is
    half-open and exact in exact mode; region membership is closed.
    Floating-mode points within 1e-9 of the window boundary are counted in
    ``Patch.boundary_warnings`` and logged.
    """
    region = as_box(region, scheme.d)
    if region.dim != scheme.d:
        raise SchemeError("region dimension does not match physical dimension")
    if window.e != scheme.e:
        raise SchemeError("window dimension does not match internal dimension")
    if window.is_empty:
        return Patch.from_coords(scheme, np.zeros((0, scheme.dim)))
    wlo, whi = window.hull()
    lo = np.array([float(x) for x in region.lo] + [float(x) for x in wlo])
    hi = np.array([float(x) for x in region.hi] + [float(x) for x in whi])
    cand = _candidate_coords(scheme.basis, lo, hi)
    img = scheme.coordinates(cand)
    keep = np.ones(len(cand), dtype=bool)
    for r in range(scheme.d):
        keep &= _signs(scheme, cand, img[:, r], r, region.lo[r]) >= 0
        keep &= _signs(scheme, cand, img[:, r], r, region.hi[r]) <= 0
    cand, img = cand[keep], img[keep]
    inside = np.zeros(len(cand), dtype=bool)
    n_warn = 0
    for box in window.boxes:
        m = np.ones(len(cand), dtype=bool)
        for i, (blo, bhi) in enumerate(box):
            row = scheme.d + i
            s_lo = _signs(scheme, cand, img[:, row], row, blo)
            s_hi = _signs(scheme, cand, img[:, row], row, bhi)
            if not scheme.exact:
                n_warn += int(np.sum((s_lo == 0) | (s_hi == 0)))
            m &= (s_lo >= 0) & (s_hi < 0)
        inside |= m
    if n_warn:
        log.warning("%d candidate points lie within %.0e of the window boundary", n_warn, FLOAT_TOL)
    patch = Patch.from_coords(scheme, cand[inside])
    patch.boundary_warnings = n_warn
    return patch


def density(scheme: CutProjectScheme, window: Window) -> float:
    """Weyl density ``measure(W) / covolume`` of the model set."""
    if scheme.exact and all(is_exact(x) for b in window.boxes for side in b for x in side):
        return float(window.measure / scheme.covolume_exact)
    return float(window.measure) / scheme.covolume


def min_gap(points: Patch) -> float:
    """Smallest distance between distinct points (uniform discreteness)."""
    if len(points) < 2:
        raise SchemeError("min_gap needs at least two points")
    x = points.physical
    if x.shape[1] == 1:
        return float(np.min(np.diff(np.sort(x[:, 0]))))
    dist, _ = cKDTree(x).query(x, k=2)
    return float(dist[:, 1].min())


def max_gap(points: Patch, region=None) -> float:
    """Largest hole of the point set.

    In one dimension this is the largest difference between consecutive
    points.  For d > 1 it is the largest empty-ball radius found on a grid
    scan of the central half of ``region``.
    """
    if len(points) < 2:
        raise SchemeError("max_gap needs at least two points")
    x = points.physical
    if x.shape[1] == 1:
        return float(np.max(np.diff(np.sort(x[:, 0]))))
    if region is None:
        raise SchemeError("max_gap in d > 1 needs the scanned region")
    region = as_box(region, x.shape[1])
    h = min_gap(points) / 4
    axes = []
    for a, b in zip(region.lo, region.hi):
        c, w = (float(a) + float(b)) / 2, (float(b) - float(a)) / 4
        axes.append(np.arange(c - w, c + w + h, h))
    grid = np.array(np.meshgrid(*axes, indexing="ij")).reshape(len(axes), -1).T
    dist, _ = cKDTree(x).query(grid)
    return float(dist.max())


@dataclass(frozen=True)
class VanHoveSequence:
    """Centered boxes ``D_n = [-r_n, r_n]^d`` (0-based index ``n``)."""

    radii: tuple[float, ...]
    d: int = 1

    def __post_init__(self) -> None:
        radii = tuple(float(r) for r in self.radii)
        if not radii:
            raise SchemeError("van Hove sequence needs at least one radius")
        if radii[0] <= 0 or any(b <= a for a, b in zip(radii, radii[1:])):
            raise SchemeError("van Hove radii must be positive and strictly increasing")
        object.__setattr__(self, "radii", radii)

    def __len__(self) -> int:
        return len(self.radii)

    def box(self, n: int) -> Box:
        r = self.radii[n]
        return Box((-r,) * self.d, (r,) * self.d)

    def volume(self, n: int) -> float:
        return (2 * self.radii[n]) ** self.d


def thick_boundary_ratio(vanhove: VanHoveSequence, n: int, K_halfwidth: float) -> float:
    """``|thick boundary of D_n w.r.t. K| / |D_n|`` for ``K = [-h, h]^d``.

    For a box the thick boundary is the outer shell ``(D+K) \\ Int D`` plus
    the inner shell of points within ``K`` of the complement, so its volume
    is ``(2(r+h))^d - (2(r-h))_+^d``.
    """
    h = float(K_halfwidth)
    if h < 0:
        raise SchemeError("K half-width must be nonnegative")
    r, d = vanhove.radii[n], vanhove.d
    outer = (2 * (r + h)) ** d
    inner = (2 * max(r - h, 0.0)) ** d
    return (outer - inner) / (2 * r) ** d
