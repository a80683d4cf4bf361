"""Dark-soliton profiles of the quasilinear model in hydrodynamical variables.

A traveling dip of speed c on the unit background satisfies, in terms of
the depth field eta = 1 - |amplitude|^2, the second-order equation

    a(eta) eta'' + eta'^2/(4(1-eta)^2) - eta - c^2 (eta^2 - 2 eta)/(4(1-eta)^2) = 0,
    a(eta) = (1 - 2 kappa + 2 kappa eta) / (2 (1 - eta)),

whose first integral (multiply by a * eta', integrate, fix the constant by
decay at infinity) is

    eta'^2 = G(eta) = eta^2 (2 - 2 eta - c^2) / (1 - 2 kappa (1 - eta)).

The profile is built by integrating the first integral.  Substituting
s = sqrt(eta0 - eta) with eta0 = 1 - c^2/2 removes the square-root
degeneracy at the crest exactly:

    s' = (eta0 - s^2) / sqrt(2 (b0 - 2 kappa s^2)),   b0 = 1 - kappa c^2,

a smooth, nowhere-degenerate scalar ODE.  Marching u = sqrt(eta0) - s keeps
the exponential tail relatively accurate down to the truncation floor.  All
derived fields then have cancellation-free closed forms in s:

    eta = eta0 - s^2,   1 - eta = c^2/2 + s^2,   2 - 2 eta - c^2 = 2 s^2,
    1 - 2 kappa (1 - eta) = b0 - 2 kappa s^2,
    eta' = -sign(x) s (eta0 - s^2) sqrt(2/(b0 - 2 kappa s^2)),
    eta'' = G'(eta)/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import NumericalError, ValidationError
from .grid import Grid, GridFunction

SPEED_MAX = math.sqrt(2.0)
KAPPA_MAX = 0.5
MARCH_SUBSTEPS = 16
TAIL_DECADES = 28.0  # decay lengths per half box: exp(-28) ~ 6.9e-13 tail
CORE_POINTS = 10.0   # grid points across the core width of the potential spike


@dataclass(frozen=True)
class SolitonParams:
    """Admissible traveling-wave parameters: 0 < c < sqrt(2), kappa < 1/2."""

    c: float
    kappa: float

    def __post_init__(self):
        if not (0.0 < self.c < SPEED_MAX):
            raise ValidationError(
                f"speed c must lie in (0, sqrt(2)) ~ (0, 1.41421356), got {self.c}")
        if not (self.kappa < KAPPA_MAX):
            raise ValidationError(f"kappa must be < 1/2, got {self.kappa}")

    @property
    def eta_max(self) -> float:
        return 1.0 - self.c * self.c / 2.0


@dataclass
class SolitonProfile:
    """Sampled soliton (eta, v, theta) with cached exact derivatives."""

    params: SolitonParams
    grid: Grid
    eta: GridFunction
    v: GridFunction
    theta: GridFunction
    eta_x: GridFunction
    eta_xx: GridFunction
    one_minus_eta: np.ndarray = field(repr=False)

    @property
    def c(self) -> float:
        return self.params.c

    @property
    def kappa(self) -> float:
        return self.params.kappa


def decay_rate(params: SolitonParams) -> float:
    """Exponential rate of the eta tail: sqrt((2 - c^2)/(1 - 2 kappa))."""
    return math.sqrt((2.0 - params.c ** 2) / (1.0 - 2.0 * params.kappa))


def core_width(params: SolitonParams) -> float:
    """Half-width of the density-trough region where 1 - eta ~ c^2/2.

    1 - eta(x) = c^2/2 + |G'(eta0)| x^2/4 + ..., so the trough scale is
    c sqrt(2/|G'(eta0)|) = c sqrt(b0)/eta0.  Operators carrying powers of
    1/(1 - eta) vary on this scale and the grid must resolve it.
    """
    c, kappa = params.c, params.kappa
    eta0 = params.eta_max
    b0 = 1.0 - kappa * c * c
    return c * math.sqrt(b0) / eta0


def default_box(params: SolitonParams) -> float:
    """Half-length putting the tail at exp(-TAIL_DECADES) ~ 7e-13."""
    return float(math.ceil(TAIL_DECADES / decay_rate(params)))


def default_grid(params: SolitonParams, n_min: int = 4096,
                 half_length: float | None = None) -> Grid:
    """Grid sized for both the exponential tail and the core trough."""
    L = default_box(params) if half_length is None else float(half_length)
    need = max(n_min, CORE_POINTS * L / core_width(params))
    n = 1 << int(math.ceil(math.log2(need)))
    return Grid(L, n)


def first_integral_rhs(eta, params: SolitonParams):
    """G(eta) = eta^2 (2 - 2 eta - c^2)/(1 - 2 kappa (1 - eta)) = (eta')^2.

    Accepts a scalar or an array; the domain is 0 <= eta <= 1 - c^2/2.
    """
    arr = np.asarray(eta, dtype=float)
    if np.any(arr < -1e-15) or np.any(arr > params.eta_max + 1e-15):
        raise ValidationError(
            f"eta must lie in [0, {params.eta_max}] for c={params.c}, kappa={params.kappa}")
    out = arr * arr * (2.0 - 2.0 * arr - params.c ** 2) / (1.0 - 2.0 * params.kappa * (1.0 - arr))
    return float(out) if np.isscalar(eta) else out


def first_integral_slope(eta, params: SolitonParams):
    """dG/deta, used for the exact second derivative eta'' = G'(eta)/2."""
    arr = np.asarray(eta, dtype=float)
    c2 = params.c ** 2
    kappa = params.kappa
    b = 1.0 - 2.0 * kappa * (1.0 - arr)
    num = arr * arr * (2.0 - 2.0 * arr - c2)
    dnum = 2.0 * arr * (2.0 - c2) - 6.0 * arr * arr
    out = (dnum * b - num * 2.0 * kappa) / (b * b)
    return float(out) if np.isscalar(eta) else out


def _check_grid(params: SolitonParams, grid: Grid) -> None:
    min_L = 12.0 / decay_rate(params)
    if grid.half_length < min_L:
        raise ValidationError(
            f"grid half_length {grid.half_length} below the tail requirement "
            f"{min_L:.3f} (12 decay lengths) for c={params.c}, kappa={params.kappa}")


def _mirror_even(half: np.ndarray, n: int) -> np.ndarray:
    out = np.empty(n)
    m = n // 2
    out[m:] = half[:m]
    out[:m] = half[1:m + 1][::-1]
    return out


def _mirror_odd(half: np.ndarray, n: int) -> np.ndarray:
    out = np.empty(n)
    m = n // 2
    out[m:] = half[:m]
    out[:m] = -half[1:m + 1][::-1]
    return out


def _assemble(params: SolitonParams, grid: Grid, s_half: np.ndarray) -> SolitonProfile:
    """Build all profile fields from the half-line march of s = sqrt(eta0 - eta)."""
    c, kappa = params.c, params.kappa
    eta0 = params.eta_max
    b0 = 1.0 - kappa * c * c
    r0 = math.sqrt(eta0)
    n = grid.n

    u_half = r0 - s_half
    eta_h = u_half * (2.0 * r0 - u_half)           # eta0 - s^2 without cancellation
    one_m_h = c * c / 2.0 + s_half * s_half        # 1 - eta, exact
    deta_h = -s_half * eta_h * np.sqrt(2.0 / (b0 - 2.0 * kappa * s_half * s_half))

    eta = _mirror_even(eta_h, n)
    one_m = _mirror_even(one_m_h, n)
    deta = _mirror_odd(deta_h, n)
    ddeta = first_integral_slope(eta, params) / 2.0
    v = -c * eta / (2.0 * one_m)
    theta = grid.antideriv(v)
    theta = theta - theta[n // 2]                  # theta(0) = 0 convention

    return SolitonProfile(
        params=params,
        grid=grid,
        eta=GridFunction(grid, eta),
        v=GridFunction(grid, v),
        theta=GridFunction(grid, theta),
        eta_x=GridFunction(grid, deta),
        eta_xx=GridFunction(grid, ddeta),
        one_minus_eta=one_m,
    )


def solve_profile(params: SolitonParams, grid: Grid | None = None,
                  substeps: int = MARCH_SUBSTEPS) -> SolitonProfile:
    """Construct the soliton profile for admissible (c, kappa).

    The crest sits at x = 0 with eta(0) = 1 - c^2/2; eta is even and the
    tail decays at decay_rate(params).  Raises a truncation error with a
    suggested box size when the sampled tail exceeds 1e-10.
    """
    if grid is None:
        grid = default_grid(params)
    _check_grid(params, grid)
    eta0 = params.eta_max
    b0 = 1.0 - params.kappa * params.c ** 2
    u = _kernels.march_profile(eta0, b0, params.kappa, grid.dx, grid.n // 2, substeps)
    s_half = math.sqrt(eta0) - u
    prof = _assemble(params, grid, s_half)
    tail = prof.eta.values[0]
    if tail > 1e-10:
        raise NumericalError(
            f"tail eta({-grid.half_length}) = {tail:.3e} exceeds 1e-10; "
            f"increase the box to half_length >= {default_box(params)}")
    return prof


def analytic_gp_profile(c: float, grid: Grid | None = None) -> SolitonProfile:
    """Closed-form kappa = 0 soliton: eta = (1 - c^2/2) sech^2(sqrt(2-c^2) x/2)."""
    params = SolitonParams(c, 0.0)
    if grid is None:
        grid = default_grid(params)
    _check_grid(params, grid)
    eta0 = params.eta_max
    root = math.sqrt(2.0 - c * c)
    half_x = grid.dx * np.arange(grid.n // 2 + 1)
    eta_h = eta0 / np.cosh(0.5 * root * half_x) ** 2
    s_half = np.sqrt(np.maximum(eta0 - eta_h, 0.0))
    return _assemble(params, grid, s_half)


def residual_ode(profile: SolitonProfile) -> float:
    """Max norm of the profile equation residual with spectral derivatives."""
    params = profile.params
    eta = profile.eta.values
    one_m = profile.one_minus_eta
    ex = profile.grid.deriv(eta, 1)
    exx = profile.grid.deriv(eta, 2)
    c2 = params.c ** 2
    a = (1.0 - 2.0 * params.kappa + 2.0 * params.kappa * eta) / (2.0 * one_m)
    res = (a * exx + ex * ex / (4.0 * one_m ** 2) - eta
           - c2 * (eta * eta - 2.0 * eta) / (4.0 * one_m ** 2))
    return float(np.abs(res).max())


def residual_first_integral(profile: SolitonProfile) -> float:
    """Max norm of (eta')^2 - G(eta) with the spectral derivative."""
    eta = profile.eta.values
    ex = profile.grid.deriv(eta, 1)
    g = first_integral_rhs(np.clip(eta, 0.0, profile.params.eta_max), profile.params)
    return float(np.abs(ex * ex - g).max())
