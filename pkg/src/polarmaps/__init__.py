"""Polar maps: birational discretizations of polynomial ODEs built by polarization.

The modules are

* :mod:`polarmaps.multipoly`: exact sparse multivariate polynomials.
* :mod:`polarmaps.polarize`: polarization of polynomials and fields.
* :mod:`polarmaps.polarmap`: second-order polar maps, their integrals and measures.
* :mod:`polarmaps.higherorder`: polar maps of order ``m`` and the Kahan map.
* :mod:`polarmaps.darboux`: discrete Darboux polynomial discovery.
* :mod:`polarmaps.harness`: problem specs, runs, baselines, built-in problems.
"""
from .exceptions import ConfigError, NonInvertibleK, OddInadmissible, PolarMapError, SingularStep
from .higherorder import (
    HigherState,
    HigherSystem,
    hjacobian_det,
    hjacobian_matrix,
    hmeasure_density,
    hstep,
    odd_admissible,
)
from .multipoly import MultiPoly, parse
from .polarize import PolarizedForm, PotentialPolarization, pol_eval
from .polarmap import (
    PolarState,
    PolarSystem,
    first_integral,
    first_integral_nonhom,
    hamiltonian,
    inverse_step,
    jacobian_det,
    jacobian_matrix,
    kahan_inverse,
    kahan_step,
    measure_density,
    step,
    step_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "HigherState",
    "HigherSystem",
    "MultiPoly",
    "NonInvertibleK",
    "OddInadmissible",
    "PolarMapError",
    "PolarState",
    "PolarSystem",
    "PolarizedForm",
    "PotentialPolarization",
    "SingularStep",
    "first_integral",
    "first_integral_nonhom",
    "hamiltonian",
    "hjacobian_det",
    "hjacobian_matrix",
    "hmeasure_density",
    "hstep",
    "inverse_step",
    "jacobian_det",
    "jacobian_matrix",
    "kahan_inverse",
    "kahan_step",
    "measure_density",
    "odd_admissible",
    "parse",
    "pol_eval",
    "step",
    "step_matrix",
]
