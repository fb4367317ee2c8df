"""Autocorrelation coefficients of weighted combs over van Hove boxes.

The finite-volume autocorrelation of a comb ``ω = Σ w_s δ_s`` restricted
to ``D_n`` has coefficient

    η_n(g) = Σ_{s, s-g ∈ D_n} w_s conj(w_{s-g}) / |D_n|

at the lattice difference ``g``.  For a random field the excess over the
expectation comb estimates ``A_g``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .piecewise import PiecewisePolynomial
from .randfield import (
    Envelope,
    WeightedComb,
    mean_function,
    sample_weights,
    seed_list,
)
from .scheme import Box, Patch, SchemeError, as_box

__all__ = [
    "AgEstimate",
    "AutocorrRow",
    "eta_n",
    "eta_many",
    "expectation_comb",
    "expectation_weights",
    "ag_empirical",
    "difference_set",
    "candidate_set",
    "autocorr_table",
]


def _key(v) -> tuple[int, ...]:
    return tuple(int(x) for x in v)


def _pairs(patch: Patch, g) -> tuple[np.ndarray, np.ndarray]:
    """Indices ``(i, j)`` with ``coords[j] = coords[i] - g``."""
    idx = patch.index
    g = np.asarray(g, dtype=np.int64)
    j = np.array([idx.get(tuple(c), -1) for c in (patch.coords - g).tolist()], dtype=np.int64)
    i = np.flatnonzero(j >= 0)
    return i, j[i]


def _restrict(patch: Patch, box: Box) -> np.ndarray:
    return box.contains(patch.physical)


def eta_many(patch: Patch, weights: np.ndarray, box, g) -> np.ndarray:
    """``η_n(g)`` for each row of ``weights`` (shape (S, N)); returns (S,)."""
    box = as_box(box, patch.scheme.d)
    vol = box.volume
    if vol <= 0:
        raise SchemeError("van Hove box has zero volume")
    m = _restrict(patch, box)
    sub = patch.subset(m)
    w = np.atleast_2d(weights)[:, m]
    i, j = _pairs(sub, g)
    return np.sum(w[:, i] * np.conj(w[:, j]), axis=1) / vol


def eta_n(comb: WeightedComb, box, g) -> complex:
    """Autocorrelation coefficient of ``comb`` restricted to ``box`` at ``g``."""
    return complex(eta_many(comb.patch, comb.weights[None, :], box, g)[0])


def expectation_weights(source, points: Patch) -> np.ndarray:
    """``e(s*)`` at every point; ``source`` is a sampler, an :class:`Envelope` or a mean function."""
    if isinstance(source, Envelope):
        fn = source.mean_fn
    elif isinstance(source, PiecewisePolynomial):
        fn = source
    else:
        fn = mean_function(source)
    if not len(points):
        return np.zeros(0, dtype=complex)
    return fn(points.internal[:, 0])


def expectation_comb(source, points: Patch) -> WeightedComb:
    """The comb ``E[ω] = Σ e(s*) δ_s``."""
    return WeightedComb(points, expectation_weights(source, points), "expectation")


@dataclass
class AgEstimate:
    """Both estimates of ``A_g`` with standard errors across seeds."""

    g: tuple
    eta_difference: complex
    eta_difference_se: float
    covariance_sum: complex
    covariance_sum_se: float
    num_seeds: int

    @property
    def value(self) -> complex:
        return self.eta_difference

    @property
    def stderr(self) -> float:
        return self.eta_difference_se

    @property
    def combined_se(self) -> float:
        return float(np.hypot(self.eta_difference_se, self.covariance_sum_se))

    @property
    def consistent(self) -> bool:
        """The two estimates agree within 4 combined standard errors."""
        diff = abs(self.eta_difference - self.covariance_sum)
        return bool(diff <= 4 * self.combined_se) or diff == 0


def _estimates(patch: Patch, X: np.ndarray, e: np.ndarray, box: Box, g) -> AgEstimate:
    S = X.shape[0]
    vol = box.volume
    m = _restrict(patch, box)
    sub = patch.subset(m)
    Xm, em = X[:, m], e[m]
    i, j = _pairs(sub, g)
    # η-difference: per-seed η(sample) - η(expectation comb)
    terms = Xm[:, i] * np.conj(Xm[:, j]) - (em[i] * np.conj(em[j]))[None, :]
    per_seed = terms.sum(axis=1) / vol
    d_mean = per_seed.mean()
    d_se = float(np.sqrt(np.sum(np.abs(per_seed - d_mean) ** 2) / (S - 1) / S))
    # covariance sum, on data shifted by the first seed (exact zero for deterministic combs)
    Y = Xm - Xm[0]
    A = Y[:, i] - Y[:, i].mean(axis=0)
    B = np.conj(Y[:, j] - Y[:, j].mean(axis=0))
    psi = (A * B).sum(axis=1) / vol
    c_sum = psi.sum() / (S - 1)
    c_se = float(np.sqrt(np.sum(np.abs(psi - psi.mean()) ** 2) / (S - 1) / S) * S / (S - 1))
    if not np.iscomplexobj(X) or np.all(X.imag == 0):
        d_mean, c_sum = complex(d_mean.real), complex(c_sum.real)
    return AgEstimate(_key(g), complex(d_mean), d_se, complex(c_sum), c_se, S)


def ag_empirical(sampler, points: Patch, box, g, num_seeds: int, base_seed: int = 0) -> AgEstimate:
    """Estimate ``A_g`` by the η-difference and the covariance-sum forms."""
    if num_seeds < 2:
        raise SchemeError("ag_empirical needs at least two seeds")
    box = as_box(box, points.scheme.d)
    X = sample_weights(sampler, points, seed_list(base_seed, num_seeds))
    e = expectation_weights(sampler, points)
    return _estimates(points, X, e, box, g)


def difference_set(points: Patch, radius: float) -> list[tuple[int, ...]]:
    """Lattice differences ``s - t`` of patch points with ``0 < |s - t| <= radius``."""
    x = points.physical
    out: set = set()
    if x.shape[1] == 1:
        order = np.argsort(x[:, 0], kind="stable")
        xs, cs = x[order, 0], points.coords[order]
        for off in range(1, len(xs)):
            dx = xs[off:] - xs[:-off]
            ok = dx <= radius
            if not ok.any():
                break
            for v in np.unique(cs[off:][ok] - cs[:-off][ok], axis=0):
                out.add(_key(v))
                out.add(tuple(-int(a) for a in v))
    else:
        from scipy.spatial import cKDTree

        for a, b in cKDTree(x).query_pairs(radius):
            v = points.coords[a] - points.coords[b]
            out.add(_key(v))
            out.add(tuple(-int(c) for c in v))
    return sorted(out)


def _positive(scheme, g) -> bool:
    phys = scheme.coordinates(np.asarray(g).reshape(1, -1))[0, : scheme.d]
    for v in phys:
        if v != 0:
            return v > 0
    return False


def candidate_set(points: Patch, dset, extra: int = 5, radius: float | None = None) -> list[tuple[int, ...]]:
    """``D`` plus ``±`` the ``extra`` shortest positive differences of the patch.

    With ``radius`` set, all differences up to that length are added instead.
    """
    scheme = points.scheme
    out = {_key(g) for g in dset}
    dset_len = max((float(np.abs(scheme.coordinates(np.asarray(g).reshape(1, -1))[0, : scheme.d]).max()) for g in out), default=0.0)
    if radius is None:
        r = max(dset_len, 1.0)
        while True:
            diffs = [g for g in difference_set(points, r) if _positive(scheme, g)]
            if len(diffs) >= extra or r > 1e6:
                break
            r *= 2
        lengths = scheme.coordinates(np.asarray(diffs).reshape(-1, scheme.dim))[:, : scheme.d]
        order = np.lexsort((np.arange(len(diffs)), np.linalg.norm(lengths, axis=1)))
        for i in order[:extra]:
            g = diffs[i]
            out.add(g)
            out.add(tuple(-x for x in g))
    else:
        out.update(difference_set(points, radius))
    phys = scheme.coordinates(np.asarray(sorted(out)).reshape(-1, scheme.dim))[:, : scheme.d]
    keyed = sorted(zip(sorted(out), phys.tolist()), key=lambda t: (t[1], t[0]))
    return [g for g, _ in keyed]


@dataclass
class AutocorrRow:
    g: tuple
    g_physical: tuple
    eta: complex
    ag: AgEstimate | None
    n: int


def autocorr_table(sampler, points: Patch, box, gs, num_seeds: int, base_seed: int = 0, n: int = 0) -> list[AutocorrRow]:
    """η of the first sample and both A_g estimates for each ``g`` in ``gs``."""
    box = as_box(box, points.scheme.d)
    X = sample_weights(sampler, points, seed_list(base_seed, num_seeds))
    e = expectation_weights(sampler, points)
    rows = []
    for g in gs:
        eta = complex(eta_many(points, X[:1], box, g)[0])
        est = _estimates(points, X, e, box, g) if num_seeds >= 2 else None
        phys = points.scheme.coordinates(np.asarray(g).reshape(1, -1))[0, : points.scheme.d]
        rows.append(AutocorrRow(_key(g), tuple(phys.tolist()), eta, est, n))
    return rows
