"""Exact Krawtchouk polynomials and their asymptotics in terms of Hermite polynomials."""

from .arith import (
    AsymptoticSeries,
    RadicalCoeff,
    TruncationError,
    VPoly,
    bernoulli_number,
    binomial,
    double_factorial,
    falling_factorial,
    weighted_partitions,
)
from .diffcalc import a_coefficient, delta_s_rho_expansion, forward_difference, psi, PsiSpec
from .edgeworth import bernoulli_cumulants, g_tilde, petrov_density, petrov_density_derivative, q_tilde
from .expansion import (
    CorollaryCoeffs,
    ExpansionResult,
    ExpansionStructureError,
    corollary1_eval,
    corollary2_eval,
    symbolic_expansion,
    theorem2_eval,
)
from .orthopoly import (
    DomainError,
    KrawtchoukParams,
    hermite,
    krawtchouk,
    krawtchouk_leibniz,
    krawtchouk_nonnormalized,
    krawtchouk_rodrigues,
    weight_rho,
)
from .stirling import StirlingContext, f_m, lemma1_check, ln_gamma, phi_m
from .verify import ConvergenceReport, GridSpec, SweepConfig, estimate_order, uniform_sweep

__version__ = "0.1.0"
