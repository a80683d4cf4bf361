"""Linearized scalar operator: assembly, spectrum, and Hessian quadratic forms.

The second variation of E - cP at a soliton factorizes through a scalar
Sturm-Liouville operator acting on the depth perturbation,

    T f = -(a f')' + w f,
    a = (1 - 2 kappa + 2 kappa eta)/(2 (1 - eta)),
    w = -eta''/(2 (1-eta)^2) - eta'^2/(2 (1-eta)^3) + 1 - c^2/(2 (1-eta)^3),

whose essential spectrum starts at 1 - c^2/2.  The discretization is a
divergence-form second-order stencil with Dirichlet ends, kept exactly
symmetric tridiagonal so eigenvalue counts reduce to Sturm-sequence pivot
signs.  Quadratic forms (Rayleigh values, Hessians) are evaluated with
spectral derivatives instead, which keeps them at quadrature accuracy
independent of the matrix truncation error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import NumericalError, ValidationError
from .grid import Grid, GridFunction
from .profile import SolitonParams, SolitonProfile, solve_profile

EIGEN_TOL = 1e-10
INVERSE_ITERATIONS = 3
SPEED_STEP = 1e-4


@dataclass
class OperatorLc:
    """Assembled tridiagonal operator on the interior nodes of a symmetric box.

    diag/off hold the matrix over nodes x[1..n-1] (function pinned to zero at
    both box ends).  kernel holds interior samples of the profile's depth
    derivative when the operator comes from a soliton, else None.
    """
    grid: Grid
    c: float
    kappa: float
    a: GridFunction
    w: GridFunction
    diag: np.ndarray
    off: np.ndarray
    essential_edge: float
    kernel: np.ndarray | None = None

    @property
    def size(self) -> int:
        return self.diag.shape[0]


@dataclass
class SpectrumReport:
    """Discrete spectrum summary below the essential edge.

    mu_minus is the spectral quadratic-form value of the ground eigenvector
    (variationally sharper than the raw matrix eigenvalue, which appears as
    discrete_eigenvalues[0]); mu_zero is the raw matrix eigenvalue nearest
    zero, the discretization of the translation kernel.
    """
    negative_count: int
    mu_minus: float
    mu_zero: float
    kernel_residual: float
    essential_edge: float
    discrete_eigenvalues: list[float]
    chi1: GridFunction


def coefficient_fields(profile: SolitonProfile) -> tuple[np.ndarray, np.ndarray]:
    """Divergence coefficient a and potential w sampled on the profile grid."""
    one_m = profile.one_minus_eta
    ex = profile.eta_x.values
    exx = profile.eta_xx.values
    c = profile.c
    a = (1.0 - 2.0 * profile.kappa * one_m) / (2.0 * one_m)
    w = (-exx / (2.0 * one_m ** 2) - ex * ex / (2.0 * one_m ** 3)
         + 1.0 - c * c / (2.0 * one_m ** 3))
    return a, w


def assemble_operator(grid: Grid, c: float, kappa: float,
                      a: np.ndarray, w: np.ndarray,
                      kernel: np.ndarray | None = None) -> OperatorLc:
    """Build the Dirichlet tridiagonal matrix from sampled coefficients."""
    if a.min() <= 0.0:
        raise ValidationError(
            "divergence coefficient must be positive (requires kappa < 1/2)")
    n, dx = grid.n, grid.dx
    a_half = 0.5 * (a + np.roll(a, -1))  # value at x_{i+1/2}, wrapping at +L
    inv = 1.0 / (dx * dx)
    diag = (a_half[:-1] + a_half[1:]) * inv + w[1:]
    off = -a_half[1:-1] * inv
    kern = None if kernel is None else np.ascontiguousarray(kernel[1:])
    return OperatorLc(grid=grid, c=c, kappa=kappa,
                      a=GridFunction(grid, a), w=GridFunction(grid, w),
                      diag=np.ascontiguousarray(diag),
                      off=np.ascontiguousarray(off),
                      essential_edge=1.0 - c * c / 2.0, kernel=kern)


def assemble_lc(profile: SolitonProfile) -> OperatorLc:
    """Assemble the linearized operator of a solved soliton profile."""
    a, w = coefficient_fields(profile)
    return assemble_operator(profile.grid, profile.c, profile.kappa,
                             a, w, kernel=profile.eta_x.values)


def _sturm(op: OperatorLc, shift: float) -> int:
    s = shift
    for _ in range(4):
        count = _kernels.sturm_count(op.diag, op.off, s)
        if count >= 0:
            return int(count)
        s = s + 1e-12 * max(1.0, abs(s))  # exact zero pivot: nudge the shift
    raise NumericalError(f"Sturm count failed near shift {shift}")


def kernel_residual(op: OperatorLc) -> float:
    """||T z|| / ||z|| for the interior samples z of the profile's kernel field."""
    z = op.kernel
    if z is None:
        raise ValidationError("operator carries no kernel field")
    r = op.diag * z
    r[:-1] += op.off * z[1:]
    r[1:] += op.off * z[:-1]
    nz = float(np.linalg.norm(z))
    if nz == 0.0:
        return 0.0
    return float(np.linalg.norm(r)) / nz


def count_negative_eigenvalues(op: OperatorLc, kernel_tol: float | None = None) -> int:
    """Number of eigenvalues below zero, excluding the discretized kernel.

    The translation kernel discretizes to an eigenvalue of size O(dx^2) on
    either side of zero; counting it when it lands barely negative would
    report a spurious second negative direction.  Any single eigenvalue
    inside (-kernel_tol, 0) is therefore attributed to the kernel.  The
    default tolerance is three times the kernel residual (which bounds the
    distance of the discretized kernel eigenvalue from zero); operators
    without a kernel field count plainly at shift zero.
    """
    n0 = _sturm(op, 0.0)
    if kernel_tol is None:
        kernel_tol = 3.0 * kernel_residual(op) if op.kernel is not None else 0.0
    if kernel_tol < 0.0:
        raise ValidationError(f"kernel_tol must be >= 0, got {kernel_tol}")
    if kernel_tol == 0.0:
        return n0
    nt = _sturm(op, -kernel_tol)
    if n0 == nt:
        return n0
    if n0 - nt == 1:
        return n0 - 1
    raise NumericalError(
        f"{n0 - nt} eigenvalues inside (-{kernel_tol:.3g}, 0); tolerance window "
        "is too wide to isolate the kernel, refine the grid")


def _gershgorin_low(op: OperatorLc) -> float:
    m = op.size
    radius = np.zeros(m)
    radius[:-1] += np.abs(op.off)
    radius[1:] += np.abs(op.off)
    return float(np.min(op.diag - radius)) - 1.0


def _inverse_iteration(op: OperatorLc, shift: float,
                       found: list[np.ndarray], seed: int) -> np.ndarray:
    rng = np.random.default_rng(20240 + seed)
    y = rng.standard_normal(op.size)
    s = shift
    for attempt in range(4):
        ok = True
        z = y / np.linalg.norm(y)
        for _ in range(INVERSE_ITERATIONS):
            z = _kernels.tridiag_solve(op.diag, op.off, s, z)
            for prev in found:
                z = z - np.dot(z, prev) * prev
            nz = np.linalg.norm(z)
            if not np.isfinite(nz) or nz == 0.0:
                ok = False
                break
            z = z / nz
        if ok:
            return z
        s = shift + EIGEN_TOL * (10.0 ** attempt) * max(1.0, abs(shift))
    raise NumericalError(f"inverse iteration stagnated at shift {shift}")


def eigenpairs_below(op: OperatorLc, edge: float | None = None,
                     max_pairs: int = 16) -> list[tuple[float, GridFunction]]:
    """All discrete eigenpairs below the essential edge.

    Eigenvalues by Sturm bisection to 1e-10, eigenvectors by inverse
    iteration re-orthogonalized against earlier pairs; vectors are unit in
    the grid L2 norm with sign fixed positive at the max-magnitude node.
    """
    if edge is None:
        edge = op.essential_edge
    hi0 = edge - 1e-9 * max(1.0, abs(edge))
    lo0 = _gershgorin_low(op)
    m = min(_sturm(op, hi0), max_pairs)
    pairs: list[tuple[float, GridFunction]] = []
    found: list[np.ndarray] = []
    for j in range(1, m + 1):
        lo, hi = lo0, hi0
        while hi - lo > EIGEN_TOL:
            mid = 0.5 * (lo + hi)
            if _sturm(op, mid) >= j:
                hi = mid
            else:
                lo = mid
        lam = 0.5 * (lo + hi)
        vec = _inverse_iteration(op, lam, found, seed=j)
        found.append(vec.copy())
        full = np.zeros(op.grid.n)
        full[1:] = vec
        nrm = math.sqrt(op.grid.dx) * np.linalg.norm(full)
        full /= nrm
        i_star = int(np.argmax(np.abs(full)))
        if full[i_star] < 0.0:
            full = -full
        pairs.append((lam, GridFunction(op.grid, full)))
    return pairs


# -- quadratic forms (spectral evaluation) --------------------------------------

def quadratic_form(profile: SolitonProfile, f) -> float:
    """<T f, f> evaluated as integral of a f'^2 + w f^2 with spectral f'."""
    vals = f.values if isinstance(f, GridFunction) else np.asarray(f)
    a, w = coefficient_fields(profile)
    fx = profile.grid.deriv(vals, 1)
    return profile.grid.integrate(a * fx * fx + w * vals * vals)


def rayleigh(profile: SolitonProfile, f) -> float:
    vals = f.values if isinstance(f, GridFunction) else np.asarray(f)
    return quadratic_form(profile, vals) / profile.grid.integrate(vals * vals)


def spectrum_report(profile: SolitonProfile,
                    kernel_tol: float | None = None) -> SpectrumReport:
    """Solve the discrete eigenproblem and summarize the spectral picture."""
    op = assemble_lc(profile)
    kres = kernel_residual(op)
    pairs = eigenpairs_below(op)
    if not pairs:
        raise NumericalError("no discrete eigenvalues found below the edge")
    count = count_negative_eigenvalues(op, kernel_tol)
    eigvals = [lam for lam, _ in pairs]
    chi1 = pairs[0][1]
    mu_zero = min(eigvals, key=abs)
    mu_minus = rayleigh(profile, chi1)
    return SpectrumReport(negative_count=count, mu_minus=mu_minus,
                          mu_zero=mu_zero, kernel_residual=kres,
                          essential_edge=op.essential_edge,
                          discrete_eigenvalues=eigvals, chi1=chi1)


def hessian_full(profile: SolitonProfile, d_eta: GridFunction,
                 d_v: GridFunction) -> float:
    """Second variation of E - cP, assembled term by term in expanded form."""
    g = profile.grid
    de, dv = d_eta.values, d_v.values
    one_m = profile.one_minus_eta
    ex = profile.eta_x.values
    vc = profile.v.values
    c = profile.c
    a = (1.0 - 2.0 * profile.kappa * one_m) / (2.0 * one_m)
    de_x = g.deriv(de, 1)
    t1 = g.integrate(-g.deriv(a * de_x, 1) * de)
    t2 = g.integrate(-g.deriv(ex / (2.0 * one_m ** 2), 1) * de * de)
    t3 = g.integrate(ex * ex / (2.0 * one_m ** 3) * de * de)
    t4 = g.integrate(de * de)
    t5 = g.integrate(-4.0 * vc * dv * de + 2.0 * one_m * dv * dv
                     + 2.0 * c * dv * de)
    return t1 + t2 + t3 + t4 + t5


def hessian_reduced(profile: SolitonProfile, d_eta: GridFunction,
                    d_v: GridFunction) -> float:
    """Second variation in factorized form: <T de, de> + weighted square."""
    g = profile.grid
    de, dv = d_eta.values, d_v.values
    one_m = profile.one_minus_eta
    square = dv + profile.c * de / (2.0 * one_m ** 2)
    return quadratic_form(profile, de) + g.integrate(2.0 * one_m * square * square)


def negative_direction(profile: SolitonProfile,
                       chi1: GridFunction | None = None
                       ) -> tuple[GridFunction, GridFunction]:
    """Direction (chi1, -c chi1 / (2 (1-eta)^2)) with negative Hessian value."""
    if chi1 is None:
        op = assemble_lc(profile)
        pairs = eigenpairs_below(op, max_pairs=1)
        if not pairs:
            raise NumericalError("ground eigenvector not found below the edge")
        chi1 = pairs[0][1]
    chi2 = -profile.c * chi1.values / (2.0 * profile.one_minus_eta ** 2)
    return chi1, GridFunction(profile.grid, chi2)


def branch_pairing(profile: SolitonProfile, h: float = SPEED_STEP) -> float:
    """Hessian value of the speed derivative of the branch.

    The derivative is a central difference of profiles re-solved at c +- h
    on the profile's own grid; the value should match the momentum slope
    dP/dc.
    """
    g = profile.grid
    hi = solve_profile(SolitonParams(profile.c + h, profile.kappa), g)
    lo = solve_profile(SolitonParams(profile.c - h, profile.kappa), g)
    de = GridFunction(g, (hi.eta.values - lo.eta.values) / (2.0 * h))
    dv = GridFunction(g, (hi.v.values - lo.v.values) / (2.0 * h))
    return hessian_reduced(profile, de, dv)


def unstable_curve(profile: SolitonProfile, q: float
                   ) -> tuple[tuple[GridFunction, GridFunction], float, float]:
    """Fixed-momentum curve through nearby solitons, tilted along chi_minus.

    Psi(q) = (eta_q, v_q) + l(q) chi_minus with l solving the momentum
    constraint P(Psi(q)) = P(eta_c, v_c); since P is a quadratic pairing the
    constraint is a scalar quadratic in l, solved in closed form with the
    root that is continuous in q and vanishes at q = c.  Returns the state,
    l, and the energy difference E(Psi(q)) - E(eta_c, v_c).
    """
    from .conserved import energy, momentum

    c = profile.c
    if not (abs(q - c) < 0.05):
        raise ValidationError(f"q must lie within 0.05 of c = {c}, got {q}")
    g = profile.grid
    chi1, chi2 = negative_direction(profile)
    if q == c:
        state = (GridFunction(g, profile.eta.values.copy()),
                 GridFunction(g, profile.v.values.copy()))
        return state, 0.0, 0.0
    prof_q = solve_profile(SolitonParams(q, profile.kappa), g)
    p_c = momentum(profile.eta, profile.v)
    p_q = momentum(prof_q.eta, prof_q.v)
    x1, x2 = chi1.values, chi2.values
    # P((eta_q, v_q) + l chi) = p_q + l*beta + l^2*gamma
    beta = -g.integrate(prof_q.eta.values * x2 + prof_q.v.values * x1)
    gamma = -g.integrate(x1 * x2)
    disc = beta * beta - 4.0 * gamma * (p_q - p_c)
    if disc < 0.0:
        raise ValidationError(
            f"momentum constraint has no real solution at q = {q}")
    # root continuous in q with l(c) = 0: the "small" quadratic root
    denom = -(beta + math.copysign(math.sqrt(disc), beta)) / 2.0
    if denom == 0.0:
        raise NumericalError("degenerate momentum constraint")
    lam = (p_q - p_c) / denom
    eta_new = GridFunction(g, prof_q.eta.values + lam * x1)
    v_new = GridFunction(g, prof_q.v.values + lam * x2)
    e_c = energy(profile.eta, profile.v, profile.kappa)
    e_new = energy(eta_new, v_new, profile.kappa)
    return (eta_new, v_new), lam, e_new - e_c


def d_second(c: float, kappa: float) -> float:
    """Second derivative of the scalar action d(c) = E - cP: equals -dP/dc."""
    from .conserved import dPdc

    return -dPdc(c, kappa)[0]
