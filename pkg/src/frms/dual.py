"""The dual scheme: annihilator lattice, dual star map and Bragg candidates.

Characters are written ``x -> exp(2πi<k, x>)``.  A dual lattice vector
``(chi, chi*)`` pairs with every lattice vector ``(s, s*)`` to an integer,
so on the lattice ``exp(2πi<chi, s>) = conj(exp(2πi<chi*, s*>))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Protocol

import numpy as np

from .quadratic import QuadraticNumber
from .scheme import (
    CutProjectScheme,
    SchemeError,
    Window,
    _exact_inverse,
    as_box,
    enumerate_points,
)

__all__ = [
    "DualScheme",
    "FourierModulePoint",
    "AmplitudeFunction",
    "annihilator",
    "character_residual",
    "bragg_candidates",
]


@dataclass(frozen=True)
class FourierModulePoint:
    dual_coords: tuple[int, ...]
    chi: tuple[float, ...]
    chi_star: tuple[float, ...]
    amplitude: float = float("nan")


@dataclass(frozen=True, eq=False)
class DualScheme:
    """Dual lattice with basis ``(parent.basis^T)^-1``.

    ``lattice`` is a :class:`CutProjectScheme` carrying the dual basis; it
    is used for enumeration only and is not validated as a scheme.
    """

    parent: CutProjectScheme
    lattice: CutProjectScheme

    @property
    def dual_basis(self) -> np.ndarray:
        return self.lattice.basis

    @property
    def exact_dual_basis(self):
        return self.lattice.exact_basis

    @property
    def covolume(self) -> float:
        return 1.0 / self.parent.covolume

    def point(self, dual_coords) -> FourierModulePoint:
        img = self.lattice.coordinates(np.asarray(dual_coords).reshape(1, -1))[0]
        d = self.parent.d
        return FourierModulePoint(tuple(int(c) for c in dual_coords), tuple(img[:d].tolist()), tuple(img[d:].tolist()))

    def exact_point(self, dual_coords) -> tuple:
        return self.lattice.exact_image(dual_coords)


def annihilator(scheme: CutProjectScheme) -> DualScheme:
    """Dual scheme with basis ``(B^T)^-1``, exact in exact mode."""
    if scheme.exact:
        inv = _exact_inverse(scheme.exact_basis)  # B^-1; its transpose is the dual basis
        exact = tuple(tuple(inv[j][i] for j in range(scheme.dim)) for i in range(scheme.dim))
        basis = np.array([[float(x) for x in row] for row in exact])
    else:
        exact = None
        basis = np.linalg.inv(scheme.basis.T)
    lattice = CutProjectScheme(scheme.d, scheme.e, basis, exact, scheme.field, f"dual({scheme.name})", None)
    return DualScheme(scheme, lattice)


def character_residual(dual: DualScheme, dual_coords, lattice_coords) -> float:
    """Distance of ``<chi, s> + <chi*, s*>`` to the nearest integer."""
    if dual.parent.exact:
        k = dual.exact_point(dual_coords)
        v = dual.parent.exact_image(lattice_coords)
        pairing = sum((a * b for a, b in zip(k, v)), Fraction(0))
        if isinstance(pairing, QuadraticNumber) and pairing.b != 0:
            x = float(pairing)
            return abs(x - round(x))
        r = Fraction(pairing.a if isinstance(pairing, QuadraticNumber) else pairing)
        return float(abs(r - round(r)))
    k = dual.dual_basis @ np.asarray(dual_coords, dtype=float)
    v = dual.parent.basis @ np.asarray(lattice_coords, dtype=float)
    x = float(k @ v)
    return abs(x - round(x))


class AmplitudeFunction(Protocol):
    """``|ê(chi*)|`` with a decay bound: beyond ``cutoff_radius(t)`` it is below ``t``."""

    def __call__(self, chi_star: np.ndarray) -> np.ndarray: ...

    def cutoff_radius(self, threshold: float) -> float: ...


def bragg_candidates(
    dual: DualScheme,
    k_range,
    amplitude_fn: AmplitudeFunction,
    threshold: float,
    max_internal: float | None = None,
) -> list[FourierModulePoint]:
    """Dual-lattice points with ``chi`` in ``k_range`` and amplitude >= threshold.

    The dual lattice projects densely, so the search is confined to
    ``|chi*| <= R`` where ``R = amplitude_fn.cutoff_radius(threshold)``
    (optionally capped by ``max_internal``).  Sorted by descending
    amplitude, ties broken by ``|chi|`` then ``chi``.
    """
    if threshold < 0:
        raise SchemeError("threshold must be nonnegative")
    radius = amplitude_fn.cutoff_radius(threshold) if threshold > 0 else math.inf
    if max_internal is not None:
        radius = min(radius, float(max_internal))
    if not math.isfinite(radius):
        raise SchemeError("threshold 0 needs an explicit max_internal search radius")
    e = dual.parent.e
    # closed ball of internal frequencies, as a slightly enlarged half-open box
    R = Fraction(radius)
    window = Window.from_boxes([tuple((-R, R + Fraction(1, 10**9)) for _ in range(e))])
    patch = enumerate_points(dual.lattice, window, as_box(k_range, dual.parent.d))
    if not len(patch):
        return []
    amp = np.asarray(amplitude_fn(patch.internal), dtype=float).reshape(-1)
    keep = (amp >= threshold) & (np.linalg.norm(patch.internal, axis=1) <= radius)
    idx = np.flatnonzero(keep)
    norms = np.linalg.norm(patch.physical, axis=1)
    order = sorted(idx, key=lambda i: (-amp[i], norms[i], tuple(patch.physical[i])))
    return [
        FourierModulePoint(
            tuple(int(c) for c in patch.coords[i]),
            tuple(patch.physical[i].tolist()),
            tuple(patch.internal[i].tolist()),
            float(amp[i]),
        )
        for i in order
    ]
