"""Numerical lab for 2-soliton solutions of the modified Camassa-Holm equation
on a nonzero background: exact solutions, conserved integrals, the
second-variation spectrum, the 2x2 Hessian and pseudospectral evolution.
"""

from .errors import MchlabError, NumericalFailure, ValidationError
from .soliton import SolitonParams, build_params, collision_phase_shift, eval_curve
from .fields import GridField, sample_one_soliton, sample_two_soliton, sobolev_distance
from .functionals import conserved_report, criticality_residual, lagrange_multipliers
from .spectral import assemble_L, bottom_spectrum, essential_edge, two_soliton_spectrum
from .hessian import det_closed_form, hessian_M
from .evolution import EvolutionConfig, evolve, orbital_distance

__all__ = [
    "MchlabError", "NumericalFailure", "ValidationError",
    "SolitonParams", "build_params", "collision_phase_shift", "eval_curve",
    "GridField", "sample_one_soliton", "sample_two_soliton", "sobolev_distance",
    "conserved_report", "criticality_residual", "lagrange_multipliers",
    "assemble_L", "bottom_spectrum", "essential_edge", "two_soliton_spectrum",
    "det_closed_form", "hessian_M",
    "EvolutionConfig", "evolve", "orbital_distance",
]

__version__ = "0.1.0"
