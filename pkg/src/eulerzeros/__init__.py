"""Zeros of combinations of Euler products in the half-plane sigma > 1.

Builds the completely multiplicative unimodular twist sending a
non-monomial combination of orthogonal Euler products to zero at an
explicit sigma_0 > 1, transfers the zero to the original function, and
certifies it by the argument principle.
"""

from .primes import PrimeTable, sieve_primes
from .characters import DirichletCharacter, character_table
from .euler import (
    AxiomReport,
    EulerFunction,
    SelbergMatrixEstimate,
    audit_axioms,
    estimate_selberg_matrix,
    eval_truncated,
    make_dirichlet_L,
    make_zeta,
    prime_sum_over_all_primes,
    stream_from_csv,
)
from .density import (
    DensityEstimate,
    DirectionSampler,
    PrimeSubset,
    ThresholdSetResult,
    check_log_to_dirichlet,
    direction_set,
    dirichlet_density,
    natural_density,
    subset_with_density,
    threshold_set,
)
from .phases import (
    FamilyContext,
    PhaseAssignment,
    SolverConfig,
    build_partition,
    bounded_remainder_signs,
    assemble_matrices,
    hit_euler_targets,
    solve_linear_phase_system,
    unimodular_decompose,
)
from .twist import (
    LiftTarget,
    Rectangle,
    TwistFunction,
    ZeroCertificate,
    count_zeros_rectangle,
    kronecker_lift,
    twist_from_phases,
    zero_density_scan,
)
from .combine import (
    CombinationPolynomial,
    PFiniteSeries,
    ShiftedPolynomial,
    annulus_root,
    continue_root_in_sigma,
    eval_twisted_combination,
    find_t0,
    shift_polynomial,
    synthesize_zero,
)
from .census import ExperimentConfig, Report, davenport_heilbronn, run

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
