"""Random fields on model sets with finite dependency sets.

Each sampler produces weights ``X_s`` for sites ``s`` of a model set as a
pure function of ``(seed, lattice coordinates)``, so a site's weight does
not depend on which other sites were enumerated.  Samplers with a finite
dependency set also expose their analytic envelope: the mean ``e(s*)``
and the covariances ``c_g(s*) = Cov[X_s, X_{s-g}]``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.signal import lfilter

from .piecewise import PiecewisePolynomial, constant_on, convolve_indicator, indicator, tent
from .rng import keyed_normal, keyed_uniform, stream_id
from .scheme import CutProjectScheme, Patch, SchemeError, Window, star

log = logging.getLogger(__name__)

__all__ = [
    "NoFiniteDependencySet",
    "DependencySet",
    "Envelope",
    "WeightedComb",
    "IndependentSampler",
    "BlockSampler",
    "ShiftedWindowSampler",
    "MovingAverageSampler",
    "OUPathSampler",
    "FieldSampler",
    "MomentEstimate",
    "sample",
    "sample_weights",
    "envelope_of",
    "dset_of",
    "mean_function",
    "mc_moments",
    "separation_check",
    "hermitian_residual",
    "seed_list",
]


class NoFiniteDependencySet(SchemeError):
    """The sampler is not an FRMS: no finite dependency set exists."""


def _key(v) -> tuple[int, ...]:
    return tuple(int(x) for x in v)


@dataclass(frozen=True)
class DependencySet:
    """Finite symmetric set of lattice differences containing 0."""

    elements: frozenset

    def __post_init__(self) -> None:
        elems = frozenset(_key(v) for v in self.elements)
        if not elems:
            raise SchemeError("dependency set is empty")
        dim = len(next(iter(elems)))
        if any(len(v) != dim for v in elems):
            raise SchemeError("dependency set mixes dimensions")
        if (0,) * dim not in elems:
            raise SchemeError("dependency set must contain 0")
        for v in elems:
            if tuple(-x for x in v) not in elems:
                raise SchemeError(f"dependency set is not symmetric: {v} present, {tuple(-x for x in v)} missing")
        object.__setattr__(self, "elements", elems)

    @classmethod
    def of(cls, vectors: Iterable) -> DependencySet:
        return cls(frozenset(_key(v) for v in vectors))

    @classmethod
    def difference_set(cls, vectors: Iterable) -> DependencySet:
        """``C - C`` for a finite set ``C``."""
        vs = [_key(v) for v in vectors]
        return cls(frozenset(tuple(a - b for a, b in zip(p, q)) for p in vs for q in vs))

    @property
    def dim(self) -> int:
        return len(next(iter(self.elements)))

    def sorted(self) -> list[tuple[int, ...]]:
        return sorted(self.elements, key=lambda v: (sum(abs(x) for x in v), v))

    def max_abs_coord(self) -> int:
        return max(abs(x) for v in self.elements for x in v)

    def __contains__(self, v) -> bool:
        return _key(v) in self.elements

    def __iter__(self):
        return iter(self.sorted())

    def __len__(self) -> int:
        return len(self.elements)


@dataclass(eq=False)
class WeightedComb:
    """Points of a patch with complex weights ``w_s``."""

    patch: Patch
    weights: np.ndarray
    provenance: str = "deterministic"

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=complex).reshape(-1)
        if len(self.weights) != len(self.patch):
            raise SchemeError("weights and points have different lengths")
        if not np.all(np.isfinite(self.weights)):
            raise SchemeError("weights must be finite")

    def __len__(self) -> int:
        return len(self.patch)

    @property
    def coords(self) -> np.ndarray:
        return self.patch.coords

    @property
    def physical(self) -> np.ndarray:
        return self.patch.physical

    @property
    def internal(self) -> np.ndarray:
        return self.patch.internal

    def restrict(self, box) -> WeightedComb:
        m = box.contains(self.patch.physical)
        return WeightedComb(self.patch.subset(m), self.weights[m], self.provenance)


@dataclass(frozen=True)
class Envelope:
    """Mean and covariance functions of a field, in one internal dimension.

    ``tag`` is ``"continuous"`` or ``"piecewise"`` (jumps on a null set).
    """

    scheme: CutProjectScheme
    window: Window
    mean_fn: PiecewisePolynomial
    cov_fns: dict
    dset: DependencySet
    tag: str = "piecewise"

    def g_star(self, g):
        return star(self.scheme, g)[0]

    def c(self, g, y) -> np.ndarray:
        fn = self.cov_fns.get(_key(g))
        if fn is None:
            return np.zeros(np.shape(y), dtype=complex)
        return fn(y)


def _zero_dset(dim: int) -> DependencySet:
    return DependencySet.of([(0,) * dim])


def _overlap(window: Window, scheme: CutProjectScheme, g) -> Window:
    return window.intersect(window.translate(star(scheme, g)))


def _require_1d(scheme: CutProjectScheme, what: str) -> None:
    if scheme.e != 1:
        raise SchemeError(f"{what} is implemented for one-dimensional internal space only")


def _profile_fn(profile: str, window: Window) -> PiecewisePolynomial:
    if profile == "flat":
        return indicator(window)
    if profile == "tent":
        pieces = [tent(a, b, 1.0) for a, b in window.intervals]
        out = PiecewisePolynomial.zero()
        for p in pieces:
            out = out + p
        return out
    raise SchemeError(f"unknown profile {profile!r}")


# ---------------------------------------------------------------------------
# samplers


@dataclass(frozen=True, eq=False)
class IndependentSampler:
    """``X_s = f(s*) * Y_s`` with i.i.d. ``Y_s`` and a profile ``f`` on ``W``.

    ``law`` is ``bernoulli`` (P[Y=1]=p), ``gaussian`` (mean, sd) or
    ``constant`` (Y = value, a deterministic comb).  The profile is
    ``flat`` (indicator of W) or ``tent`` (continuous, 1 at the center of
    each window interval).
    """

    scheme: CutProjectScheme
    window: Window
    law: str = "bernoulli"
    p: float = 0.5
    mean: float = 0.0
    sd: float = 1.0
    value: complex = 1.0
    profile: str = "flat"
    kind: str = "independent"

    def __post_init__(self) -> None:
        if self.law not in ("bernoulli", "gaussian", "constant"):
            raise SchemeError(f"unknown independent law {self.law!r}")
        if self.law == "bernoulli" and not 0 <= self.p <= 1:
            raise SchemeError("bernoulli p must lie in [0, 1]")
        if self.sd < 0:
            raise SchemeError("sd must be nonnegative")

    @property
    def site_window(self) -> Window:
        return self.window

    @property
    def y_mean(self) -> complex:
        return {"bernoulli": self.p, "gaussian": self.mean, "constant": self.value}[self.law]

    @property
    def y_var(self) -> float:
        return {"bernoulli": self.p * (1 - self.p), "gaussian": self.sd**2, "constant": 0.0}[self.law]

    def _profile_values(self, internal: np.ndarray) -> np.ndarray:
        if self.profile == "flat":
            return np.ones(len(internal))
        return _profile_fn(self.profile, self.window)(internal[:, 0]).real

    def weights(self, coords, internal, seeds) -> np.ndarray:
        S = len(seeds)
        if self.law == "constant":
            # evaluated exactly like the expectation comb, so the two agree bitwise
            w = mean_function(self)(internal[:, 0]) if self.scheme.e == 1 else np.full(len(coords), complex(self.value))
            return np.broadcast_to(w, (S, len(coords))).copy()
        f = self._profile_values(internal)
        if self.law == "bernoulli":
            u = keyed_uniform(seeds, coords, stream_id("independent/bernoulli"))
            y = (u < self.p).astype(float)
        else:
            y = self.mean + self.sd * keyed_normal(seeds, coords, stream_id("independent/gaussian"))
        return y * f


@dataclass(frozen=True, eq=False)
class BlockSampler:
    """Block field: sites ``t + p_i`` (``t* in V``) carry component i of ``Y_t``.

    The translates ``V + p_i*`` must be pairwise disjoint; the site window
    is their union.  ``law`` is ``gaussian`` (mean vector ``m``, covariance
    ``S``) or ``onehot`` (``Y_t`` is a random unit vector, P[e_i] = q_i).
    """

    scheme: CutProjectScheme
    base_window: Window
    translations: tuple
    law: str = "gaussian"
    m: tuple = ()
    S: tuple = ()
    q: tuple = ()
    kind: str = "block"

    def __post_init__(self) -> None:
        C = tuple(_key(p) for p in self.translations)
        object.__setattr__(self, "translations", C)
        if len(set(C)) != len(C) or not C:
            raise SchemeError("block translations must be distinct and nonempty")
        shifted = [self.base_window.translate(star(self.scheme, p)) for p in C]
        for i in range(len(C)):
            for j in range(i + 1, len(C)):
                if not shifted[i].intersect(shifted[j]).is_empty:
                    raise SchemeError(f"block windows V+p* overlap for p={C[i]} and p={C[j]}")
        n = len(C)
        if self.law == "gaussian":
            m = tuple(self.m) if self.m else (0.0,) * n
            S = np.asarray(self.S if len(self.S) else np.eye(n), dtype=float)
            if len(m) != n or S.shape != (n, n):
                raise SchemeError("block mean/covariance dimensions do not match translations")
            if not np.allclose(S, S.T) or np.linalg.eigvalsh(S).min() < -1e-12:
                raise SchemeError("block covariance must be symmetric positive semidefinite")
            object.__setattr__(self, "m", m)
            object.__setattr__(self, "S", tuple(map(tuple, S.tolist())))
        elif self.law == "onehot":
            q = np.asarray(self.q if self.q else np.full(n, 1.0 / n), dtype=float)
            if len(q) != n or np.any(q < 0) or abs(q.sum() - 1) > 1e-12:
                raise SchemeError("onehot probabilities must be nonnegative and sum to 1")
            object.__setattr__(self, "q", tuple(q.tolist()))
        else:
            raise SchemeError(f"unknown block law {self.law!r}")

    @cached_property
    def _shifted(self) -> list[Window]:
        return [self.base_window.translate(star(self.scheme, p)) for p in self.translations]

    @property
    def site_window(self) -> Window:
        out = self._shifted[0]
        for w in self._shifted[1:]:
            out = out.union(w)
        return out

    @property
    def mean_vector(self) -> np.ndarray:
        return np.asarray(self.m if self.law == "gaussian" else self.q, dtype=float)

    @property
    def cov_matrix(self) -> np.ndarray:
        if self.law == "gaussian":
            return np.asarray(self.S, dtype=float)
        q = np.asarray(self.q)
        return np.diag(q) - np.outer(q, q)

    def component(self, internal: np.ndarray) -> np.ndarray:
        """Index i with ``s* in V + p_i*`` for each site (-1 if none)."""
        comp = np.full(len(internal), -1)
        for i, w in enumerate(self._shifted):
            comp[w.contains(internal)] = i
        return comp

    def block_coords(self, coords: np.ndarray, internal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        comp = self.component(internal)
        if np.any(comp < 0):
            raise SchemeError("site outside the block sampler's site window")
        C = np.asarray(self.translations, dtype=np.int64)
        return coords - C[comp], comp

    def block_vectors(self, t_coords: np.ndarray, seeds) -> np.ndarray:
        """``Y_t`` for block anchors ``t``; shape (S, N, n)."""
        n = len(self.translations)
        if self.law == "gaussian":
            N = len(t_coords)
            keys = np.repeat(t_coords, n, axis=0)
            keys = np.hstack([keys, np.tile(np.arange(n), N)[:, None]])
            z = keyed_normal(seeds, keys, stream_id("block/gaussian")).reshape(len(seeds), N, n)
            cov = self.cov_matrix
            w, v = np.linalg.eigh(cov)
            L = v * np.sqrt(np.clip(w, 0, None))
            return self.mean_vector + z @ L.T
        u = keyed_uniform(seeds, t_coords, stream_id("block/onehot"))
        cat = np.searchsorted(np.cumsum(self.q)[:-1], u, side="right")
        return (cat[..., None] == np.arange(n)).astype(float)

    def weights(self, coords, internal, seeds) -> np.ndarray:
        t, comp = self.block_coords(coords, internal)
        Y = self.block_vectors(t, seeds)
        return Y[:, np.arange(len(comp)), comp]


@dataclass(frozen=True, eq=False)
class ShiftedWindowSampler:
    """``X_s = 1[s* - y_s in W]`` with i.i.d. shifts ``y_s`` of density ``h`` on ``R``.

    ``shift_density`` is ``uniform`` or ``tent`` on the interval ``R``.
    The field lives on the model set of ``W + R``.
    """

    scheme: CutProjectScheme
    window: Window
    shift_range: tuple
    shift_density: str = "uniform"
    kind: str = "shifted_window"

    def __post_init__(self) -> None:
        _require_1d(self.scheme, "shifted_window sampler")
        a, b = self.shift_range
        if not a < b:
            raise SchemeError("shift range must be a nonempty interval")
        if self.shift_density not in ("uniform", "tent"):
            raise SchemeError(f"unknown shift density {self.shift_density!r}")

    @property
    def R(self) -> Window:
        return Window.interval(*self.shift_range)

    @property
    def site_window(self) -> Window:
        return self.window.minkowski_sum(self.R)

    @property
    def h(self) -> PiecewisePolynomial:
        a, b = self.shift_range
        if self.shift_density == "uniform":
            return constant_on(self.R, 1.0 / (float(b) - float(a)))
        return tent(a, b, 2.0 / (float(b) - float(a)))

    def shifts(self, coords, seeds) -> np.ndarray:
        u = keyed_uniform(seeds, coords, stream_id("shifted_window/shift"))
        a, b = float(self.shift_range[0]), float(self.shift_range[1])
        if self.shift_density == "uniform":
            return a + (b - a) * u
        # inverse CDF of the symmetric tent
        half = (b - a) / 2
        lo = a + half * np.sqrt(2 * u)
        hi = b - half * np.sqrt(2 * (1 - u))
        return np.where(u < 0.5, lo, hi)

    def weights(self, coords, internal, seeds) -> np.ndarray:
        y = self.shifts(coords, seeds)
        rel = internal[:, 0][None, :] - y
        return self.window.contains(rel.reshape(-1, 1)).reshape(rel.shape).astype(float)


@dataclass(frozen=True, eq=False)
class MovingAverageSampler:
    """``X_s = e(s*) + sum_{d in D0} a_d(s*) Z_{s-d}`` on ``Λ(W)``.

    Innovations ``Z`` are i.i.d. standard Gaussians attached to all lattice
    points.  Coefficients are constants or piecewise polynomials of the
    internal coordinate; ``mean`` likewise (default 0).
    """

    scheme: CutProjectScheme
    window: Window
    stencil: tuple
    coefficients: tuple
    mean: PiecewisePolynomial | complex = 0.0
    kind: str = "moving_average"

    def __post_init__(self) -> None:
        D0 = tuple(_key(d) for d in self.stencil)
        if not D0:
            raise SchemeError("moving-average stencil is empty")
        if len(set(D0)) != len(D0):
            raise SchemeError("moving-average stencil has repeated elements")
        if len(self.coefficients) != len(D0):
            raise SchemeError("one coefficient per stencil element is required")
        object.__setattr__(self, "stencil", D0)

    @property
    def site_window(self) -> Window:
        return self.window

    def _coef(self, i: int, y: np.ndarray) -> np.ndarray:
        a = self.coefficients[i]
        if isinstance(a, PiecewisePolynomial):
            return a(y[:, 0])
        return np.full(len(y), complex(a))

    def _coef_fn(self, i: int) -> PiecewisePolynomial:
        a = self.coefficients[i]
        if isinstance(a, PiecewisePolynomial):
            return a.restrict(self.window)
        return constant_on(self.window, complex(a))

    def _mean(self, y: np.ndarray) -> np.ndarray:
        if isinstance(self.mean, PiecewisePolynomial):
            return self.mean(y[:, 0])
        return np.full(len(y), complex(self.mean))

    @property
    def is_real(self) -> bool:
        coefs = [a.is_real if isinstance(a, PiecewisePolynomial) else complex(a).imag == 0 for a in self.coefficients]
        m = self.mean.is_real if isinstance(self.mean, PiecewisePolynomial) else complex(self.mean).imag == 0
        return all(coefs) and m

    def weights(self, coords, internal, seeds) -> np.ndarray:
        out = np.zeros((len(seeds), len(coords)), dtype=complex)
        for i, dvec in enumerate(self.stencil):
            z = keyed_normal(seeds, coords - np.asarray(dvec, dtype=np.int64), stream_id("moving_average/innovation"))
            out += self._coef(i, internal)[None, :] * z
        out += self._mean(internal)[None, :]
        return out.real if self.is_real else out


@dataclass(frozen=True, eq=False)
class OUPathSampler:
    """Weights ``B(s*)`` read off one stationary Ornstein-Uhlenbeck path.

    The path solves ``dB = -rate (B - mean) dt + sigma dW`` over the hull of
    the window, simulated exactly on a uniform grid of at least
    ``grid_points`` nodes and interpolated linearly.  All sites of a sample
    share the path, so there is no finite dependency set.
    """

    scheme: CutProjectScheme
    window: Window
    rate: float = 5.0
    sigma: float = 1.0
    mean: float = 0.5
    grid_points: int = 1001
    kind: str = "ou_path"

    def __post_init__(self) -> None:
        _require_1d(self.scheme, "ou_path sampler")
        if self.rate <= 0 or self.sigma < 0:
            raise SchemeError("OU rate must be positive and sigma nonnegative")
        if self.grid_points < 2:
            raise SchemeError("OU grid needs at least two nodes")

    @property
    def site_window(self) -> Window:
        return self.window

    @property
    def grid(self) -> np.ndarray:
        (lo,), (hi,) = self.window.hull()
        return np.linspace(float(lo), float(hi), self.grid_points)

    def paths(self, seeds) -> np.ndarray:
        """One path per seed on :attr:`grid`; shape (S, grid_points)."""
        grid = self.grid
        dt = grid[1] - grid[0]
        rho = np.exp(-self.rate * dt)
        sd_stat = self.sigma / np.sqrt(2 * self.rate)
        z = keyed_normal(seeds, np.arange(len(grid)), stream_id("ou_path/increment"))
        drive = z * sd_stat * np.sqrt(1 - rho**2)
        drive[:, 0] = z[:, 0] * sd_stat  # stationary start
        # x_i = rho x_{i-1} + drive_i
        x = lfilter([1.0], [1.0, -rho], drive, axis=1)
        return self.mean + x

    def weights(self, coords, internal, seeds) -> np.ndarray:
        grid = self.grid
        P = self.paths(seeds)
        y = internal[:, 0]
        return np.stack([np.interp(y, grid, p) for p in P])


FieldSampler = IndependentSampler | BlockSampler | ShiftedWindowSampler | MovingAverageSampler | OUPathSampler


# ---------------------------------------------------------------------------
# operations


def seed_list(base_seed: int, count: int) -> np.ndarray:
    """Seeds ``base, base+1, ...`` as uint64 (wrapping)."""
    return (np.uint64(base_seed % 2**64) + np.arange(count, dtype=np.uint64)).astype(np.uint64)


def sample_weights(sampler, points: Patch, seeds) -> np.ndarray:
    """Weights for many seeds at once; shape (S, N)."""
    if points.scheme is not sampler.scheme and points.scheme.name != sampler.scheme.name:
        raise SchemeError("points come from a different scheme than the sampler")
    seeds = np.atleast_1d(np.asarray(seeds, dtype=np.uint64))
    if not len(points):
        return np.zeros((len(seeds), 0))
    return np.asarray(sampler.weights(points.coords, points.internal, seeds))


def sample(sampler, points: Patch, seed: int) -> WeightedComb:
    """One realization of the field on ``points``."""
    if not hasattr(sampler, "weights"):
        raise SchemeError(f"unknown sampler kind {getattr(sampler, 'kind', sampler)!r}")
    w = sample_weights(sampler, points, [seed])[0]
    return WeightedComb(points, w, f"{sampler.kind}:{seed}")


def dset_of(sampler) -> DependencySet:
    dim = sampler.scheme.dim
    if sampler.kind in ("independent", "shifted_window"):
        return _zero_dset(dim)
    if sampler.kind == "block":
        return DependencySet.difference_set(sampler.translations)
    if sampler.kind == "moving_average":
        return DependencySet.difference_set(sampler.stencil)
    if sampler.kind == "ou_path":
        raise NoFiniteDependencySet("ou_path field has no finite d-set")
    raise SchemeError(f"unknown sampler kind {sampler.kind!r}")


def mean_function(sampler) -> PiecewisePolynomial:
    """``e(y) = E[X_s]`` for ``s* = y`` (available for every kind, e = 1)."""
    _require_1d(sampler.scheme, "analytic envelope")
    if sampler.kind == "independent":
        return _profile_fn(sampler.profile, sampler.window) * sampler.y_mean
    if sampler.kind == "block":
        out = PiecewisePolynomial.zero()
        for w, mi in zip(sampler._shifted, sampler.mean_vector):
            out = out + constant_on(w, mi)
        return out
    if sampler.kind == "shifted_window":
        return convolve_indicator(sampler.window, sampler.h)
    if sampler.kind == "moving_average":
        if isinstance(sampler.mean, PiecewisePolynomial):
            return sampler.mean.restrict(sampler.window)
        return constant_on(sampler.window, complex(sampler.mean))
    if sampler.kind == "ou_path":
        return constant_on(sampler.window, sampler.mean)
    raise SchemeError(f"unknown sampler kind {sampler.kind!r}")


def envelope_of(sampler) -> Envelope:
    """Analytic mean and covariance functions (one internal dimension)."""
    _require_1d(sampler.scheme, "analytic envelope")
    D = dset_of(sampler)
    scheme = sampler.scheme
    W = sampler.site_window
    e = mean_function(sampler)
    cov: dict = {}
    tag = "piecewise"
    if sampler.kind == "independent":
        f = _profile_fn(sampler.profile, sampler.window)
        cov[D.sorted()[0]] = (f * f.conj()) * sampler.y_var
        tag = "continuous" if sampler.profile == "tent" else "piecewise"
    elif sampler.kind == "shifted_window":
        cov[D.sorted()[0]] = e * (constant_on(W, 1.0) - e)
        tag = "continuous" if sampler.shift_density == "tent" else "piecewise"
    elif sampler.kind == "block":
        S = sampler.cov_matrix
        for i, pi in enumerate(sampler.translations):
            for j, pj in enumerate(sampler.translations):
                g = tuple(a - b for a, b in zip(pi, pj))
                term = constant_on(sampler._shifted[i], S[i, j])
                cov[g] = cov[g] + term if g in cov else term
    elif sampler.kind == "moving_average":
        fns = [sampler._coef_fn(i) for i in range(len(sampler.stencil))]
        for i, di in enumerate(sampler.stencil):
            for j, dj in enumerate(sampler.stencil):
                g = tuple(a - b for a, b in zip(di, dj))
                gs = star(scheme, g)[0]
                term = fns[i] * fns[j].conj().shift(gs)
                term = term.restrict(_overlap(W, scheme, g))
                cov[g] = cov[g] + term if g in cov else term
        tag = "continuous" if all(isinstance(a, PiecewisePolynomial) for a in sampler.coefficients) else "piecewise"
    for g in D:
        cov.setdefault(g, PiecewisePolynomial.zero())
    return Envelope(scheme, W, e, cov, D, tag)


def hermitian_residual(envelope: Envelope, probes) -> float:
    """``max |c_{-g}(y) - conj(c_g(y + g*))|`` over probes and g in the d-set."""
    y = np.asarray(probes, dtype=float)
    worst = 0.0
    for g in envelope.dset:
        neg = tuple(-x for x in g)
        gs = float(envelope.g_star(g))
        lhs = envelope.c(neg, y)
        rhs = np.conj(envelope.c(g, y + gs))
        worst = max(worst, float(np.max(np.abs(lhs - rhs))) if len(y) else 0.0)
    return worst


@dataclass
class MomentEstimate:
    """Monte-Carlo moments per site; covariances are NaN where ``s - g`` is absent."""

    mean: np.ndarray
    mean_se: np.ndarray
    cov: dict
    cov_se: dict
    num_seeds: int


def _partner_index(points: Patch, g) -> np.ndarray:
    idx = points.index
    g = np.asarray(g, dtype=np.int64)
    return np.array([idx.get(tuple(c), -1) for c in (points.coords - g).tolist()], dtype=np.int64)


def mc_moments(sampler, points: Patch, num_seeds: int, base_seed: int = 0, dset: Sequence | None = None) -> MomentEstimate:
    """Empirical mean per site and covariance per (site, g) across seeds.

    Covariances use data shifted by the first seed's sample, so a
    deterministic comb gives exactly zero.
    """
    if num_seeds < 2:
        raise SchemeError("mc_moments needs at least two seeds")
    X = sample_weights(sampler, points, seed_list(base_seed, num_seeds))
    S = num_seeds
    mean = X.mean(axis=0)
    Y = X - X[0]
    ybar = Y.mean(axis=0)
    mean_se = np.sqrt(np.sum(np.abs(Y - ybar) ** 2, axis=0) / (S - 1) / S)
    if dset is None:
        try:
            dset = list(dset_of(sampler))
        except NoFiniteDependencySet:
            dset = [(0,) * sampler.scheme.dim]
    cov, cov_se = {}, {}
    for g in dset:
        g = _key(g)
        j = _partner_index(points, g)
        ok = j >= 0
        c = np.full(len(points), np.nan, dtype=complex)
        se = np.full(len(points), np.nan)
        if ok.any():
            c[ok], se[ok] = _cov_with_se(Y[:, ok], np.conj(Y[:, j[ok]]))
        cov[g] = c if np.iscomplexobj(X) else c.real
        cov_se[g] = se
    return MomentEstimate(mean, mean_se, cov, cov_se, S)


def _cov_with_se(A: np.ndarray, B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unbiased covariance of columns ``A``, ``B`` (B already conjugated) and its SE.

    The variance of the estimator is ``Var(psi)/n + (vA vB + |c|^2)/(n(n-1))``
    with ``psi`` the centered product.  The second term matters for
    two-point laws such as Bernoulli(1/2), where ``psi`` is constant.
    """
    n = A.shape[0]
    Ad = A - A.mean(axis=0)
    Bd = B - B.mean(axis=0)
    prod = Ad * Bd
    c = prod.sum(axis=0) / (n - 1)
    var_psi = np.sum(np.abs(prod - prod.mean(axis=0)) ** 2, axis=0) / (n - 1)
    vA = np.sum(np.abs(Ad) ** 2, axis=0) / (n - 1)
    vB = np.sum(np.abs(Bd) ** 2, axis=0) / (n - 1)
    se = np.sqrt(var_psi / n + (vA * vB + np.abs(c) ** 2) / (n * (n - 1)))
    return c, se


def separation_check(P, Q, D) -> bool:
    """True iff ``(P - Q) ∩ D`` is empty."""
    Dset = D.elements if isinstance(D, DependencySet) else {_key(v) for v in D}
    Qset = {_key(q) for q in Q}
    for p in P:
        p = _key(p)
        for d in Dset:
            if tuple(a - b for a, b in zip(p, d)) in Qset:
                return False
    return True
