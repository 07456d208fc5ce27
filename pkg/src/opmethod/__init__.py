"""Operator-method solver for the 1D Schrodinger equation with the rational
potential ``V(x) = x^2/2 + lam x^(2L) / (1 + g x^2)``."""

__version__ = "0.1.0"

from .fock import (
    BandedOperator,
    FrequencyContext,
    op_combine,
    op_product,
    p_squared,
    x_power,
    x_power_closed_form,
    x_squared,
)
from .iteration import (
    DenominatorNearZero,
    IterationError,
    NotConverged,
    SolveConfig,
    SolveResult,
    TailOverflow,
    e_zeroth,
    om_iterate,
    om_steps,
    residual,
)
from .omega import (
    AutoSolution,
    EscalationBudgetExceeded,
    Extremum,
    NoExtremumInRange,
    OmegaScan,
    auto_solve,
    find_extremum,
    scan_omega,
    solve_at,
    solve_fixed,
    stable_basis_size,
)
from .oracles import (
    OracleResult,
    exact_case_L1,
    fd_solve,
    pencil_eigen_near,
)
from .pencil import (
    Pencil,
    PotentialSpec,
    SpectrumDomainError,
    assemble,
    validate_spectrum_domain,
    verify_against_normal_ordered,
)
from .wavefunction import WaveSample, evaluate_psi, norm_squared
