"""Finitely randomized model sets: cut-and-project point sets, random
fields with finite dependency sets, and their diffraction."""

from __future__ import annotations

from .dual import annihilator, bragg_candidates, character_residual
from .randfield import dset_of, envelope_of, mc_moments, sample
from .scheme import SchemeError, Window, build_scheme, enumerate_points, star

__all__ = [
    "SchemeError",
    "Window",
    "build_scheme",
    "enumerate_points",
    "star",
    "annihilator",
    "bragg_candidates",
    "character_residual",
    "sample",
    "dset_of",
    "envelope_of",
    "mc_moments",
]

__version__ = "0.1.0"
