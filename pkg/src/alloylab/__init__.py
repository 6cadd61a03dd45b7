"""Numerical laboratory for finite-volume alloy-type random operators.

The package builds finite restrictions of a lattice Schroedinger operator with
random alloy potential and measures, sample by sample, the quantities that
localization proofs control: eigenvalue counts in small windows, fractional
moments of Green functions, regularity and suitability events, transport
moments and the spectral envelope under coupling scaling.  A separate layer of
deterministic averaging inequalities for polynomials and matrix pencils can be
checked on randomized instances.
"""

from .lattice import (
    BoxSpec,
    CoverageError,
    DisorderSample,
    DisorderSpec,
    HamiltonianMatrix,
    SingleSitePotential,
    assemble_hamiltonian,
    boundary,
    exterior_boundary,
    interior_boundary,
    sample_disorder,
)
from .spectral import (
    EigenSystem,
    SpectralCollisionError,
    eigen_decomposition,
    green_function,
    resolvent_norm,
)
from .ensemble import EnsembleConfig, Statistic, derive_seed, run_ensemble
from .polyavg import InequalityReport, MonicPolynomial
from .diagnostics import ModelSpec

__version__ = "0.1.0"
