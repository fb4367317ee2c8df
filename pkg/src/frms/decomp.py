"""Partition of a model set into cells with independent products.

For a difference ``g`` and a dependency set ``D`` the model set splits
into cells ``S_{C,k} = r_C + Λ_M(V_{C,k})``: ``C`` runs over the cosets of
the sublattice ``M = kL`` and the level ``k`` counts how many steps of
``delta = g* - r*`` stay inside the window.  Within a cell, distinct sites
``s, t`` never have ``{s, s-g} - {t, t-g}`` meeting ``D``.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .quadratic import to_exact
from .randfield import DependencySet
from .scheme import Box, CutProjectScheme, Patch, SchemeError, Window, as_box, enumerate_points, star

log = logging.getLogger(__name__)

__all__ = [
    "SubScheme",
    "LevelSetFamily",
    "PartitionCell",
    "Partition",
    "ell",
    "build_subscheme",
    "level_sets",
    "partition",
    "verify_cell_separation",
    "separation_witness",
    "partition_witness",
]


def _key(v) -> tuple[int, ...]:
    return tuple(int(x) for x in v)


@dataclass(frozen=True, eq=False)
class SubScheme:
    """Sublattice ``M = k L`` with a representative system ``R`` of ``L / M``."""

    parent: CutProjectScheme
    k: int
    scheme: CutProjectScheme
    representatives: tuple
    dset: DependencySet

    def coset(self, v) -> tuple[int, ...]:
        return tuple(int(x) % self.k for x in v)

    @property
    def coset_index(self) -> dict:
        return {self.coset(r): i for i, r in enumerate(self.representatives)}

    def representative_of(self, v) -> tuple[int, ...]:
        idx = self.coset_index.get(self.coset(v))
        if idx is None:
            raise SchemeError(f"{tuple(v)} is not congruent to any representative mod {self.k}L")
        return self.representatives[idx]

    def invariant_violations(self) -> list[str]:
        out = []
        n = self.k ** self.parent.dim
        if len(self.representatives) != n:
            out.append(f"|R| = {len(self.representatives)} but k^(d+e) = {n}")
        seen: dict = {}
        for r in self.representatives:
            c = self.coset(r)
            if c in seen:
                out.append(f"representatives {seen[c]} and {r} are congruent mod {self.k}L")
            seen[c] = r
        rset = set(self.representatives)
        for d in self.dset:
            if d not in rset:
                out.append(f"dependency element {d} is not a representative")
        return out


@dataclass(frozen=True)
class LevelSetFamily:
    delta: tuple
    sets: tuple

    @property
    def ell(self) -> int:
        return len(self.sets) - 1


@dataclass(eq=False)
class PartitionCell:
    coset: tuple
    level: int
    representative: tuple
    window: Window
    points: Patch
    region_volume: float
    separation_ok: bool | None = None

    @property
    def count(self) -> int:
        return len(self.points)

    @property
    def density(self) -> float:
        return self.count / self.region_volume

    def to_dict(self) -> dict:
        win = [[[float(a), float(b)] for a, b in box] for box in self.window.boxes]
        return {
            "coset": list(self.coset),
            "level": self.level,
            "representative": list(self.representative),
            "window": win,
            "point_count": self.count,
            "density_estimate": self.density,
            "separation_ok": self.separation_ok,
        }


class Partition(list):
    """List of cells plus the subscheme and level sets that produced them."""

    def __init__(self, cells, subscheme: SubScheme, levels: LevelSetFamily, g, r) -> None:
        super().__init__(cells)
        self.subscheme = subscheme
        self.levels = levels
        self.g = _key(g)
        self.r = _key(r)


# ---------------------------------------------------------------------------


def _vec(x, e: int) -> tuple:
    if isinstance(x, (tuple, list)):
        return tuple(to_exact(v) for v in x)
    if isinstance(x, np.ndarray):
        return tuple(to_exact(float(v)) for v in x.reshape(-1))
    if e != 1:
        raise SchemeError(f"expected a vector of length {e}")
    return (to_exact(x),)


def _max_steps(window: Window, x: tuple) -> int:
    """Upper bound on progression length: diameter / |x| + 2."""
    norm = math.sqrt(sum(float(v) ** 2 for v in x))
    return int(window.diameter() / norm) + 2


def ell(window: Window, x, s) -> int:
    """Largest ``k`` with ``s - n x`` in ``W`` for ``0 <= n <= k``.

    0 when ``x = 0``; also 0 when ``s`` itself is outside ``W`` (no
    progression fits).  Finite for bounded windows and ``x != 0``.
    """
    xv = _vec(x, window.e)
    sv = _vec(s, window.e)
    if all(v == 0 for v in xv) or not window.contains_point(sv):
        return 0
    k = 0
    for _ in range(_max_steps(window, xv) + 1):
        nxt = tuple(a - (k + 1) * b for a, b in zip(sv, xv))
        if not window.contains_point(nxt):
            return k
        k += 1
    raise SchemeError("progression did not leave the window; is the window bounded?")


def build_subscheme(scheme: CutProjectScheme, D: DependencySet, representatives=None, check: bool = True) -> SubScheme:
    """Sublattice ``M = kL`` with ``k = 2 max|coord| + 1`` and ``R ⊇ D``.

    With ``representatives`` given, that list is used instead of the
    canonical completion; ``check=False`` keeps an invalid list so that
    downstream checks can exhibit the failure.
    """
    if D.dim != scheme.dim:
        raise SchemeError("dependency set dimension does not match lattice dimension")
    k = 2 * D.max_abs_coord() + 1
    if representatives is None:
        reps: list = []
        seen: set = set()
        for dvec in D.sorted():
            c = tuple(x % k for x in dvec)
            if c in seen:
                raise SchemeError(f"dependency elements collide mod {k}L at {dvec}")
            seen.add(c)
            reps.append(dvec)
        for v in itertools.product(range(k), repeat=scheme.dim):
            if v not in seen:
                seen.add(v)
                reps.append(v)
    else:
        reps = [_key(r) for r in representatives]
    sub = SubScheme(scheme, k, scheme.scaled(k, f"{k}L"), tuple(reps), D)
    bad = sub.invariant_violations()
    if bad and check:
        raise SchemeError("; ".join(bad))
    if scheme.internal_dense is not True:
        log.warning("internal projection of M is not certified dense; V_{C,k} is not intersected with it")
    return sub


def level_sets(window: Window, delta) -> LevelSetFamily:
    """``W_k = {y in W : ell(W; delta, y) = k}`` by box arithmetic.

    ``P_0 = W``, ``P_j = P_{j-1} ∩ (W + j delta)`` and ``W_k = P_k \\ P_{k+1}``.
    """
    dv = _vec(delta, window.e)
    if all(v == 0 for v in dv):
        return LevelSetFamily(dv, (window,))
    sets = []
    P = window
    for j in range(1, _max_steps(window, dv) + 2):
        nxt = P.intersect(window.translate(tuple(j * v for v in dv)))
        sets.append(P.difference(nxt))
        P = nxt
        if P.is_empty:
            break
    else:
        raise SchemeError("level sets did not terminate")
    while len(sets) > 1 and sets[-1].is_empty:
        sets.pop()
    return LevelSetFamily(dv, tuple(sets))


def _shift_box(box: Box, v) -> Box:
    return Box(tuple(to_exact(a) - x for a, x in zip(box.lo, v)), tuple(to_exact(b) - x for b, x in zip(box.hi, v)))


def partition(
    scheme: CutProjectScheme,
    window: Window,
    D: DependencySet,
    g,
    region,
    representatives=None,
    check: bool = True,
) -> Partition:
    """Cells ``S_{C,k}`` covering ``Λ(W) ∩ region``, each enumerated independently."""
    g = _key(g)
    region = as_box(region, scheme.d)
    sub = build_subscheme(scheme, D, representatives, check)
    r = sub.representative_of(g)
    gs, rs = star(scheme, g), star(scheme, r)
    delta = tuple(a - b for a, b in zip(gs, rs))
    levels = level_sets(window, delta)
    vol = float(np.prod([float(b) - float(a) for a, b in zip(region.lo, region.hi)]))
    cells = []
    for rc in sub.representatives:
        img = scheme.exact_image(rc)
        phys, internal = img[: scheme.d], img[scheme.d:]
        sub_region = _shift_box(region, phys)
        for lev, Wk in enumerate(levels.sets):
            if Wk.is_empty:
                continue
            V = Wk.translate(tuple(-x for x in internal))
            found = enumerate_points(sub.scheme, V, sub_region)
            coords = np.asarray(rc, dtype=np.int64) + sub.k * found.coords
            pts = Patch.from_coords(scheme, coords)
            cells.append(PartitionCell(sub.coset(rc), lev, rc, V, pts, vol))
    return Partition(cells, sub, levels, g, r)


def separation_witness(cell: PartitionCell, g, D) -> tuple | None:
    """A pair ``(s, t)`` of distinct cell sites violating separation, or None.

    Checks ``s - t``, ``s - t + g`` and ``s - g - t`` against ``D`` by
    hashing: for each site and each ``d`` the only possible partners are
    ``s - d``, ``s + g - d`` and ``s - g - d``.
    """
    g = np.asarray(_key(g), dtype=np.int64)
    members = cell.points.key_set()
    Dl = [np.asarray(d, dtype=np.int64) for d in (D.elements if isinstance(D, DependencySet) else D)]
    for s in cell.points.coords:
        for d in Dl:
            for t in (s - d, s + g - d, s - g - d):
                tk = tuple(int(x) for x in t)
                if tk in members and not np.array_equal(t, s):
                    return tuple(int(x) for x in s), tk
    return None


def verify_cell_separation(cell: PartitionCell, g, D) -> bool:
    """True iff no distinct ``s, t`` in the cell have ``({s, s-g} - {t, t-g}) ∩ D`` nonempty."""
    return separation_witness(cell, g, D) is None


def partition_witness(cells, reference: Patch) -> str | None:
    """Describe the first defect of ``cells`` as a partition of ``reference``, or None."""
    counts = Counter(tuple(c) for cell in cells for c in cell.points.coords.tolist())
    ref = reference.key_set()
    for key, n in counts.items():
        if n > 1:
            return f"site {key} lies in {n} cells"
        if key not in ref:
            return f"site {key} is in a cell but not in the model set"
    for key in ref:
        if key not in counts:
            return f"site {key} of the model set is in no cell"
    return None
