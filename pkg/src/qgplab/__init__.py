"""Numerical laboratory for dark solitons of a quasilinear Gross-Pitaevskii model.

Subpackages by concern: profile (traveling-wave construction), conserved
(branch functionals and the momentum-slope stability test), spectral
(linearized operator and Hessian forms), dynamics (pseudo-spectral time
evolution and stability experiments), grid (periodic grid plumbing).
"""

__version__ = "0.1.0"

from .errors import FrameError, NumericalError, QgplabError, ValidationError
from .grid import Grid, GridFunction, derivative, from_csv, integrate, norm_h1, norm_l2, shift, to_csv
from .profile import (
    SolitonParams,
    SolitonProfile,
    analytic_gp_profile,
    decay_rate,
    default_box,
    default_grid,
    residual_first_integral,
    residual_ode,
    solve_profile,
)
from .conserved import (
    BranchCurve,
    BranchSample,
    StabilityVerdict,
    branch_curve,
    dEdc,
    dPdc,
    emit_diagram,
    energy,
    energy_of_speed,
    find_c_tilde,
    find_kappa0,
    find_q_star,
    momentum,
    momentum_endpoint,
    momentum_of_speed,
    particles,
    twist,
    vk_classify,
)
from .spectral import (
    OperatorLc,
    SpectrumReport,
    assemble_lc,
    branch_pairing,
    count_negative_eigenvalues,
    d_second,
    eigenpairs_below,
    hessian_full,
    hessian_reduced,
    kernel_residual,
    negative_direction,
    spectrum_report,
    unstable_curve,
)
from .dynamics import (
    EvolutionReport,
    HydroState,
    default_dt,
    evolve,
    lyapunov,
    orbital_distance,
    rhs,
    stability_experiment,
    step_rk4,
)

__all__ = [name for name in dir() if not name.startswith("_")]
