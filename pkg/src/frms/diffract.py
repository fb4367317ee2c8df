"""Diffraction predictions, periodograms and their comparison.

Conventions: characters ``exp(2πi<k, x>)``; the periodogram of a comb on
``D_n`` is ``I_n(k) = |Σ w_s exp(-2πi<k, s>)|^2 / |D_n|``.  At a dual
lattice point ``chi`` the ratio ``I_n(chi)/|D_n|`` tends to
``|ê(-chi*)|^2 / covolume^2`` (equal to ``|ê(chi*)|^2/covolume^2`` for
real ``e``), and away from peaks the seed-averaged excess over the
expectation comb tends to ``Σ_g A_g exp(-2πi<k, g>)``.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dual import DualScheme, FourierModulePoint
from .piecewise import PiecewisePolynomial, constant_on
from .randfield import Envelope, WeightedComb, sample_weights, seed_list
from .scheme import Box, CutProjectScheme, Patch, SchemeError, Window, as_box, star

log = logging.getLogger(__name__)

__all__ = [
    "AcCoefficients",
    "PeakRow",
    "BackgroundRow",
    "DiffractionReport",
    "BackgroundFit",
    "WindowAmplitude",
    "fourier_window",
    "pp_intensity",
    "expected_peak_intensity",
    "ag_theoretical",
    "theoretical_coefficients",
    "ac_density",
    "fourier_sums",
    "periodogram",
    "measure_peaks_and_background",
    "fit_background",
]

_CHUNK = 2048
_K_CHUNK = 64


def fourier_window(fn: PiecewisePolynomial, window: Window, freq) -> complex | np.ndarray:
    """``∫_W fn(y) exp(-2πi<freq, y>) dy`` in closed form."""
    if not isinstance(fn, PiecewisePolynomial):
        raise SchemeError(f"unsupported envelope piece type {type(fn).__name__}")
    f = fn.restrict(window)
    if np.ndim(freq) == 0:
        return f.fourier(float(freq))
    freq = np.asarray(freq, dtype=float).reshape(-1)
    return np.array([f.fourier(q) for q in freq])


@dataclass(frozen=True)
class WindowAmplitude:
    """``|ê(-q)|`` for ``e = fn·1_W`` with the decay bound ``TV / (2π|q|)``."""

    fn: PiecewisePolynomial
    window: Window

    def __call__(self, chi_star) -> np.ndarray:
        q = np.asarray(chi_star, dtype=float).reshape(-1)
        return np.abs(fourier_window(self.fn, self.window, -q))

    def cutoff_radius(self, threshold: float) -> float:
        tv = self.fn.restrict(self.window).total_variation_bound()
        if threshold <= 0:
            return math.inf
        return tv / (2 * math.pi * threshold)

    @property
    def max_amplitude(self) -> float:
        return float(abs(fourier_window(self.fn, self.window, 0.0)))


def pp_intensity(dual: DualScheme, mean_fn: PiecewisePolynomial, window: Window, chi) -> float:
    """Bragg intensity ``|ê(-chi*)|^2 / covolume^2`` at the dual point with coordinates ``chi``."""
    coords = np.asarray(chi)
    if coords.shape != (dual.parent.dim,) or not np.all(np.equal(np.round(coords), coords)):
        raise SchemeError("chi must be given by integer dual-lattice coordinates")
    pt = dual.point(coords.astype(np.int64))
    amp = fourier_window(mean_fn, window, -pt.chi_star[0])
    return float(abs(amp) ** 2 / dual.parent.covolume**2)


@dataclass
class AcCoefficients:
    """Table ``g -> A_g`` with the physical position of each ``g``."""

    coeffs: dict
    positions: dict
    provenance: str = "theoretical"
    stderr: dict = field(default_factory=dict)
    support: list = field(default_factory=list)
    noise_floor: dict = field(default_factory=dict)

    def hermitian_defect(self) -> float:
        worst = 0.0
        scale = max([abs(v) for v in self.coeffs.values()] + [1e-300])
        for g, a in self.coeffs.items():
            neg = tuple(-x for x in g)
            b = self.coeffs.get(neg, 0.0)
            worst = max(worst, abs(a - np.conj(b)) / scale)
        return worst


def ag_theoretical(envelope: Envelope, window: Window, g) -> complex:
    """``(1/covolume) ∫_{W ∩ (W+g*)} c_g(y) dy`` in closed form."""
    g = tuple(int(x) for x in g)
    if g not in envelope.dset:
        log.info("g=%s is outside the dependency set; A_g = 0", g)
        return 0j
    scheme = envelope.scheme
    overlap = window.intersect(window.translate(star(scheme, g)))
    if overlap.is_empty:
        return 0j
    c = envelope.cov_fns[g].restrict(overlap)
    return complex(c.integrate() / scheme.covolume)


def theoretical_coefficients(envelope: Envelope) -> AcCoefficients:
    scheme = envelope.scheme
    coeffs, pos = {}, {}
    for g in envelope.dset:
        a = ag_theoretical(envelope, envelope.window, g)
        coeffs[g] = a
        pos[g] = tuple(scheme.coordinates(np.asarray(g).reshape(1, -1))[0, : scheme.d].tolist())
    return AcCoefficients(coeffs, pos, "theoretical")


def ac_density(coeffs: AcCoefficients, k) -> float | np.ndarray:
    """``Σ_g A_g exp(-2πi<k, g>)``, verified real."""
    if coeffs.hermitian_defect() > 1e-9:
        raise SchemeError("coefficient table is not Hermitian")
    d = len(next(iter(coeffs.positions.values()), (0.0,)))
    kk = np.asarray(k, dtype=float).reshape(-1, d)
    scalar = np.ndim(k) == 0 or (d > 1 and np.ndim(k) == 1)
    total = np.zeros(len(kk), dtype=complex)
    for g, a in coeffs.coeffs.items():
        x = np.asarray(coeffs.positions[g], dtype=float)
        total += a * np.exp(-2j * np.pi * (kk @ x))
    scale = max(1.0, sum(abs(a) for a in coeffs.coeffs.values()))
    if np.max(np.abs(total.imag), initial=0.0) > 1e-12 * scale:
        raise SchemeError("density has a non-negligible imaginary part")
    out = total.real
    return float(out[0]) if scalar else out


def _ou_intensity(sampler, q: float) -> float:
    """``E|B̂(q)|^2`` for a stationary OU path times the indicator of one interval.

    With ``v = sigma^2/(2 rate)`` and ``λ = rate + 2πiq`` the random part is
    ``2 v Re[L/λ - (1 - exp(-λL))/λ^2]`` on an interval of length ``L``.
    """
    ivs = sampler.window.intervals
    if len(ivs) != 1:
        raise SchemeError("OU peak prediction needs a single-interval window")
    (a, b), = ivs
    L = float(b) - float(a)
    lam = sampler.rate + 2j * math.pi * q
    v = sampler.sigma**2 / (2 * sampler.rate)
    rand = 2 * v * (L / lam - (1 - np.exp(-lam * L)) / lam**2).real
    mean_part = abs(fourier_window(constant_on(sampler.window, sampler.mean), sampler.window, -q)) ** 2
    return float(mean_part + rand)


def expected_peak_intensity(sampler, chi_star: float) -> float:
    """Bragg intensity of the expected diffraction at a dual point with internal part ``chi_star``.

    For a field with a finite d-set the random part is absolutely
    continuous, so this is ``|ê(-chi*)|^2 / covolume^2``.  For OU-path
    weights the whole path diffracts into the Bragg peaks and
    ``E|B̂(-chi*)|^2 / covolume^2`` is returned.
    """
    from .randfield import mean_function

    cov2 = sampler.scheme.covolume**2
    if sampler.kind == "ou_path":
        return _ou_intensity(sampler, -chi_star) / cov2
    return float(abs(fourier_window(mean_function(sampler), sampler.site_window, -chi_star)) ** 2 / cov2)


# ---------------------------------------------------------------------------
# periodograms


def _neumaier(parts: list[np.ndarray]) -> np.ndarray:
    s = np.zeros_like(parts[0])
    c = np.zeros_like(parts[0])
    for x in parts:
        t = s + x
        big = np.abs(s) >= np.abs(x)
        c += np.where(big, (s - t) + x, (x - t) + s)
        s = t
    return s + c


def _phases(k: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``exp(-2πi<k, x>)`` for k (K, d) and x (N, d), reduced mod 1 first."""
    t = k @ x.T
    t -= np.round(t)
    return np.exp(-2j * np.pi * t)


def fourier_sums(x: np.ndarray, weights: np.ndarray, k) -> np.ndarray:
    """``F(k) = Σ_s w_s exp(-2πi<k, s>)`` per weight row; shape (S, K).

    Points are processed in fixed chunks whose partial sums are combined
    with Neumaier compensation, so results do not depend on threading.
    """
    x = np.asarray(x, dtype=float).reshape(len(x), -1)
    k = np.asarray(k, dtype=float).reshape(-1, x.shape[1]) if np.ndim(k) else np.array([[float(k)]])
    W = np.atleast_2d(np.asarray(weights))
    out = np.zeros((W.shape[0], len(k)), dtype=complex)
    if not len(x):
        return out
    for k0 in range(0, len(k), _K_CHUNK):
        kc = k[k0 : k0 + _K_CHUNK]
        parts = []
        for p0 in range(0, len(x), _CHUNK):
            E = _phases(kc, x[p0 : p0 + _CHUNK])  # (Kc, P)
            w = W[:, p0 : p0 + _CHUNK]
            parts.append(np.stack([(E * row).sum(axis=1) for row in w]))
        out[:, k0 : k0 + len(kc)] = _neumaier(parts)
    return out


def periodogram(comb: WeightedComb, box, k_list) -> np.ndarray:
    """``I_n(k) = |Σ_{s in D_n} w_s exp(-2πi<k, s>)|^2 / |D_n|``."""
    box = as_box(box, comb.patch.scheme.d)
    m = box.contains(comb.physical)
    F = fourier_sums(comb.physical[m], comb.weights[m][None, :], k_list)[0]
    return np.abs(F) ** 2 / box.volume


def _periodograms(x: np.ndarray, X: np.ndarray, k, vol: float, threads: int) -> np.ndarray:
    """``|F|^2 / vol`` for every weight row, parallel over rows in fixed order."""
    if threads <= 1 or X.shape[0] < 2:
        return np.abs(fourier_sums(x, X, k)) ** 2 / vol
    rows = list(X)
    with ThreadPoolExecutor(max_workers=threads) as ex:
        res = list(ex.map(lambda r: fourier_sums(x, r[None, :], k)[0], rows))
    return np.abs(np.stack(res)) ** 2 / vol


@dataclass
class PeakRow:
    dual_coords: tuple
    chi: float
    chi_star: float
    predicted: float
    measured: float
    stderr: float = float("nan")

    @property
    def relative_error(self) -> float:
        if self.predicted == 0:
            return math.inf if self.measured else 0.0
        return abs(self.measured - self.predicted) / self.predicted


@dataclass
class BackgroundRow:
    k: float
    predicted: float
    measured: float
    stderr: float


@dataclass
class DiffractionReport:
    peaks: list
    background: list
    metadata: dict

    def to_dict(self) -> dict:
        return {
            "metadata": self.metadata,
            "peaks": [
                {
                    "dual_coords": list(p.dual_coords),
                    "chi": p.chi,
                    "chi_star": p.chi_star,
                    "predicted_intensity": p.predicted,
                    "measured_intensity": p.measured,
                    "relative_error": p.relative_error,
                    "stderr": p.stderr,
                }
                for p in self.peaks
            ],
            "background": [
                {"k": b.k, "predicted": b.predicted, "measured": b.measured, "stderr": b.stderr}
                for b in self.background
            ],
        }

    @property
    def background_levels(self) -> np.ndarray:
        return np.array([b.measured for b in self.background])


def measure_peaks_and_background(
    sampler,
    points: Patch,
    box,
    seeds,
    peak_list: list[FourierModulePoint],
    k_grid,
    dual: DualScheme | None = None,
    envelope: Envelope | None = None,
    threads: int = 1,
    metadata: dict | None = None,
) -> DiffractionReport:
    """Seed-averaged peak intensities and background against the predictions.

    Peaks: mean over seeds of ``I_n(chi)/|D_n|``.  Background: mean over
    seeds of ``I_n(k) - I_n^det(k)`` with ``I_n^det`` the periodogram of
    the expectation comb; predicted from ``envelope`` when given.
    """
    seeds = np.atleast_1d(np.asarray(seeds, dtype=np.uint64))
    if not len(seeds):
        raise SchemeError("at least one seed is required")
    from .autocorr import expectation_weights

    box = as_box(box, points.scheme.d)
    vol = box.volume
    m = box.contains(points.physical)
    pts = points.subset(m)
    X = sample_weights(sampler, pts, seeds)
    e = expectation_weights(sampler, pts)
    x = pts.physical
    k_grid = np.asarray(k_grid, dtype=float).reshape(-1)

    peaks = []
    if peak_list:
        chis = np.array([p.chi for p in peak_list], dtype=float)
        I = _periodograms(x, X, chis, vol, threads)
        measured = I.mean(axis=0) / vol
        se = I.std(axis=0, ddof=1) / np.sqrt(len(seeds)) / vol if len(seeds) > 1 else np.full(len(chis), np.nan)
        for p, meas, s in zip(peak_list, measured, se):
            pred = expected_peak_intensity(sampler, p.chi_star[0])
            peaks.append(PeakRow(p.dual_coords, p.chi[0], p.chi_star[0], pred, float(meas), float(s)))

    I = _periodograms(x, X, k_grid, vol, threads)
    Idet = np.abs(fourier_sums(x, e[None, :], k_grid)[0]) ** 2 / vol
    diff = I - Idet[None, :]
    bg = diff.mean(axis=0)
    S = len(seeds)
    bg_se = diff.std(axis=0, ddof=1) / np.sqrt(S) if S > 1 else np.full(len(k_grid), np.nan)
    if envelope is not None:
        pred = ac_density(theoretical_coefficients(envelope), k_grid)
    else:
        pred = np.full(len(k_grid), np.nan)
    background = [BackgroundRow(float(k), float(p), float(b), float(s)) for k, p, b, s in zip(k_grid, pred, bg, bg_se)]
    meta = {"n_points": int(len(pts)), "volume": vol, "seeds": int(S)}
    meta.update(metadata or {})
    return DiffractionReport(peaks, background, meta)


# ---------------------------------------------------------------------------
# inverse problem


@dataclass
class BackgroundFit:
    coefficients: AcCoefficients
    residual_rms: float
    condition_number: float

    @property
    def support(self) -> list:
        return self.coefficients.support

    def density(self, k) -> np.ndarray:
        return ac_density(self.coefficients, k)


def _split_positive(scheme: CutProjectScheme, gs) -> tuple[list, list]:
    zero, pos = [], []
    for g in gs:
        g = tuple(int(x) for x in g)
        phys = scheme.coordinates(np.asarray(g).reshape(1, -1))[0, : scheme.d]
        nz = phys[np.abs(phys) > 0]
        if not any(g):
            zero.append(g)
        elif len(nz) and nz[0] > 0:
            pos.append(g)
    return zero, pos


def fit_background(
    k_grid,
    values,
    candidates,
    scheme: CutProjectScheme,
    stderr=None,
    floor_fraction: float = 0.05,
    max_condition: float = 1e8,
) -> BackgroundFit:
    """Least-squares fit of ``Σ_g A_g exp(-2πi k g)`` with ``A_{-g} = conj(A_g)``.

    Unknowns are ``A_0`` (real) and ``Re A_g``, ``Im A_g`` for the positive
    half of the candidate set; the basis is ``1, 2cos(2πkx_g), 2sin(2πkx_g)``.
    A coefficient belongs to the recovered support when ``|A_g|`` exceeds its
    noise floor ``max(4 SE_g, floor_fraction·|A_0|)``; SEs come from the
    per-k standard errors when given, else from the residuals.
    """
    k = np.asarray(k_grid, dtype=float).reshape(-1)
    y = np.asarray(values, dtype=float).reshape(-1)
    zero, pos = _split_positive(scheme, candidates)
    n_unknown = 1 + 2 * len(pos)
    if len(k) < 2 * (len(zero) + 2 * len(pos)):
        raise SchemeError("k grid must have at least twice as many points as candidates")
    xs = [float(scheme.coordinates(np.asarray(g).reshape(1, -1))[0, 0]) for g in pos]
    cols = [np.ones_like(k)]
    for xg in xs:
        cols.append(2 * np.cos(2 * np.pi * k * xg))
        cols.append(2 * np.sin(2 * np.pi * k * xg))
    A = np.stack(cols, axis=1)
    cond = float(np.linalg.cond(A))
    if not np.isfinite(cond) or cond > max_condition:
        raise SchemeError(f"rank-deficient design (condition number {cond:.3g}); k grid resonates with candidates")
    beta, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ beta
    AtA_inv = np.linalg.inv(A.T @ A)
    if stderr is not None:
        s = np.asarray(stderr, dtype=float).reshape(-1)
        cov = AtA_inv @ (A.T * s**2) @ A @ AtA_inv
    else:
        dof = max(len(k) - n_unknown, 1)
        cov = AtA_inv * float(resid @ resid) / dof
    se_beta = np.sqrt(np.clip(np.diag(cov), 0, None))
    origin = (0,) * scheme.dim
    coeffs = {origin: complex(beta[0])}
    stderr_map = {origin: float(se_beta[0])}
    positions = {origin: (0.0,) * scheme.d}
    for i, (g, xg) in enumerate(zip(pos, xs)):
        a, b = beta[1 + 2 * i], beta[2 + 2 * i]
        se = float(np.hypot(se_beta[1 + 2 * i], se_beta[2 + 2 * i]))
        neg = tuple(-x for x in g)
        coeffs[g] = complex(a, b)
        coeffs[neg] = complex(a, -b)
        stderr_map[g] = stderr_map[neg] = se
        positions[g] = (xg,)
        positions[neg] = (-xg,)
    a0 = abs(coeffs[origin])
    floors = {g: max(4 * stderr_map[g], floor_fraction * a0) if g != origin else 4 * stderr_map[g] for g in coeffs}
    support = sorted((g for g in coeffs if abs(coeffs[g]) > floors[g]), key=lambda g: (positions[g], g))
    ac = AcCoefficients(coeffs, positions, "empirical", stderr_map, support, floors)
    return BackgroundFit(ac, float(np.sqrt(np.mean(resid**2))), cond)
