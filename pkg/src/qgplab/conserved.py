"""Conserved functionals, branch curves, and the momentum-slope stability test.

Grid functionals evaluate energy, momentum, particle number and twisting
angle of sampled (eta, v) fields.  Branch quantities P(c), E(c) are computed
independently of any grid by quadrature over depth: along the profile
dx = -d eta/sqrt(G(eta)), and the substitution eta = eta0 sin^2(phi)
removes the inverse-square-root turning point at eta0 = 1 - c^2/2 exactly.
Key identities used by the integrands, all exact in floating point:

    2 - 2 eta - c^2 = 2 eta0 cos^2(phi)
    1 - eta         = c^2/2 + eta0 cos^2(phi)
    1 - 2 kappa (1 - eta) = b0 - 2 kappa eta0 cos^2(phi),  b0 = 1 - kappa c^2

The phi-panels are geometrically graded toward pi/2 so the small-c boundary
layer (width ~ c in cos(phi)) is always resolved.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import FrameError, NumericalError, ValidationError
from .grid import GridFunction
from .profile import SPEED_MAX, KAPPA_MAX, SolitonParams

GL_PANELS = 17
GL_NODES = 64
VK_TOLERANCE = 1e-6
_NODE_CACHE: dict = {}


# -- grid functionals ----------------------------------------------------------

def energy(eta: GridFunction, v: GridFunction, kappa: float) -> float:
    """E = integral of eta_x^2/(4(1-eta)) + v^2 (1-eta) + (eta^2 - kappa eta_x^2)/2."""
    e, w = eta.values, v.values
    if e.max() >= 1.0:
        i = int(np.argmax(e))
        raise FrameError(
            f"eta reaches {e[i]:.6g} >= 1 at x = {eta.grid.x[i]:.6g}; "
            "energy is defined only inside the hydrodynamical frame",
            x=float(eta.grid.x[i]))
    ex = eta.grid.deriv(e, 1)
    dens = ex * ex / (4.0 * (1.0 - e)) + w * w * (1.0 - e) + 0.5 * (e * e - kappa * ex * ex)
    return eta.grid.integrate(dens)


def momentum(eta: GridFunction, v: GridFunction) -> float:
    """P = -integral of eta*v."""
    return -eta.grid.integrate(eta.values * v.values)


def particles(eta: GridFunction) -> float:
    """Renormalized particle number N = -integral of eta."""
    return -eta.grid.integrate(eta.values)


def twist(v: GridFunction) -> float:
    """Twisting angle = integral of v (total phase increment)."""
    return v.grid.integrate(v.values)


# -- branch quadratures ---------------------------------------------------------

def _panels(n_panels: int = GL_PANELS, n_nodes: int = GL_NODES):
    key = (n_panels, n_nodes)
    hit = _NODE_CACHE.get(key)
    if hit is not None:
        return hit
    breaks = [0.5 * math.pi * (1.0 - 0.5 ** j) for j in range(n_panels)]
    breaks.append(0.5 * math.pi)
    t, w = np.polynomial.legendre.leggauss(n_nodes)
    phi = []
    wts = []
    for a, b in zip(breaks[:-1], breaks[1:]):
        mid, rad = 0.5 * (a + b), 0.5 * (b - a)
        phi.append(mid + rad * t)
        wts.append(rad * w)
    out = (np.concatenate(phi), np.concatenate(wts))
    _NODE_CACHE[key] = out
    return out


def momentum_of_speed(c: float, kappa: float) -> float:
    """P(c) by quadrature over depth; requires 0 < c < sqrt(2)."""
    SolitonParams(c, kappa)
    phi, w = _panels()
    eta0 = 1.0 - c * c / 2.0
    b0 = 1.0 - kappa * c * c
    sin_p, cos_p = np.sin(phi), np.cos(phi)
    cos2 = cos_p * cos_p
    eta = eta0 * sin_p * sin_p
    one_m = c * c / 2.0 + eta0 * cos2
    b = b0 - 2.0 * kappa * eta0 * cos2
    integ = eta * np.sqrt(b) / one_m * sin_p
    return float(c * math.sqrt(2.0 * eta0) * np.dot(w, integ))


def energy_of_speed(c: float, kappa: float) -> float:
    """E(c) by quadrature over depth; c = 0 (zero-speed limit) is allowed."""
    if not (0.0 <= c < SPEED_MAX):
        raise ValidationError(f"speed must lie in [0, sqrt(2)), got {c}")
    if not (kappa < KAPPA_MAX):
        raise ValidationError(f"kappa must be < 1/2, got {kappa}")
    phi, w = _panels()
    eta0 = 1.0 - c * c / 2.0
    b0 = 1.0 - kappa * c * c
    sin_p, cos_p = np.sin(phi), np.cos(phi)
    cos2 = cos_p * cos_p
    eta = eta0 * sin_p * sin_p
    one_m = c * c / 2.0 + eta0 * cos2
    b = b0 - 2.0 * kappa * eta0 * cos2
    rb = np.sqrt(b)
    # gradient + quasilinear part: cos^2 absorbed before dividing by 1 - eta,
    # which keeps the c -> 0 limit finite without cancellation
    term1 = 2.0 * eta0 * (eta / rb) * (cos2 / (4.0 * one_m) - 0.5 * kappa * cos2) * sin_p
    # kinetic + potential part
    term2 = eta * rb * (c * c / (4.0 * one_m) + 0.5) * sin_p
    total = 2.0 * math.sqrt(2.0 * eta0) * np.dot(w, term1 + term2)
    return float(total)


def _central_slope(fun, c: float, kappa: float) -> tuple[float, float]:
    h = 1e-3 * min(c, SPEED_MAX - c)
    if h <= 0.0:
        raise ValidationError(f"speed {c} leaves no room for a finite-difference step")
    d_h = (fun(c + h, kappa) - fun(c - h, kappa)) / (2.0 * h)
    d_h2 = (fun(c + 0.5 * h, kappa) - fun(c - 0.5 * h, kappa)) / h
    value = (4.0 * d_h2 - d_h) / 3.0
    return value, abs(d_h2 - d_h) / 3.0


def dPdc(c: float, kappa: float) -> tuple[float, float]:
    """Momentum slope along the branch: (value, error estimate)."""
    SolitonParams(c, kappa)
    return _central_slope(momentum_of_speed, c, kappa)


def dEdc(c: float, kappa: float) -> tuple[float, float]:
    """Energy slope along the branch: (value, error estimate)."""
    SolitonParams(c, kappa)
    return _central_slope(energy_of_speed, c, kappa)


def momentum_endpoint(kappa: float) -> float:
    """Zero-speed momentum limit, extrapolated quadratically from small speeds."""
    cs = np.array([0.05, 0.02, 0.01])
    ps = np.array([momentum_of_speed(c, kappa) for c in cs])
    coef = np.polyfit(cs, ps, 2)
    return float(np.polyval(coef, 0.0))


# -- branch curve and stability classification ---------------------------------

@dataclass
class BranchSample:
    c: float
    P: float
    E: float
    dPdc: float
    dEdc: float


@dataclass
class BranchCurve:
    kappa: float
    samples: list[BranchSample]
    cusp: float | None = None

    def __post_init__(self):
        cs = [s.c for s in self.samples]
        if any(b <= a for a, b in zip(cs, cs[1:])):
            raise ValidationError("branch samples must have strictly increasing speeds")
        if any(s.P <= 0 for s in self.samples):
            raise NumericalError("branch momentum must stay positive")


@dataclass
class StabilityVerdict:
    c: float
    kappa: float
    dPdc: float
    verdict: str  # "Stable" | "Unstable" | "Degenerate"
    tolerance: float


def branch_curve(kappa: float, c_min: float, c_max: float, n_samples: int) -> BranchCurve:
    """Tabulate (c, P, E, dP/dc, dE/dc) and record the slope sign change if any."""
    if not (0.0 < c_min < c_max < SPEED_MAX):
        raise ValidationError(
            f"need 0 < c_min < c_max < sqrt(2), got ({c_min}, {c_max})")
    if n_samples < 2:
        raise ValidationError("n_samples must be at least 2")
    cs = np.linspace(c_min, c_max, n_samples)
    samples = []
    for c in cs:
        p = momentum_of_speed(c, kappa)
        e = energy_of_speed(c, kappa)
        dp, _ = dPdc(c, kappa)
        de, _ = dEdc(c, kappa)
        samples.append(BranchSample(float(c), p, e, dp, de))
    cusp = None
    for a, b in zip(samples, samples[1:]):
        if a.dPdc == 0.0 or a.dPdc * b.dPdc < 0.0:
            cusp = _refine_slope_root(kappa, a.c, b.c)
            break
    return BranchCurve(kappa=kappa, samples=samples, cusp=cusp)


def vk_classify(c: float, kappa: float, tolerance: float = VK_TOLERANCE) -> StabilityVerdict:
    """Classify orbital stability by the sign of the momentum slope."""
    slope, _ = dPdc(c, kappa)
    if slope < -tolerance:
        verdict = "Stable"
    elif slope > tolerance:
        verdict = "Unstable"
    else:
        verdict = "Degenerate"
    return StabilityVerdict(c=c, kappa=kappa, dPdc=slope, verdict=verdict, tolerance=tolerance)


def _scan_speeds() -> np.ndarray:
    lo = np.geomspace(1e-3, 0.2, 18)
    hi = np.linspace(0.25, 1.40, 24)
    return np.concatenate([lo, hi])


def _refine_slope_root(kappa: float, c_lo: float, c_hi: float) -> float:
    """Safeguarded Newton on dPdc inside a sign-change bracket."""
    f_lo, _ = dPdc(c_lo, kappa)
    f_hi, _ = dPdc(c_hi, kappa)
    if f_lo == 0.0:
        return c_lo
    if f_hi == 0.0:
        return c_hi
    if f_lo * f_hi > 0.0:
        raise ValidationError(f"no slope sign change in [{c_lo}, {c_hi}]")
    c = 0.5 * (c_lo + c_hi)
    for _ in range(50):
        f, _ = dPdc(c, kappa)
        if abs(f) <= 1e-8:
            return c
        if f * f_lo < 0.0:
            c_hi = c
        else:
            c_lo, f_lo = c, f
        step = 1e-4 * min(c, SPEED_MAX - c)
        fp = (dPdc(c + step, kappa)[0] - dPdc(c - step, kappa)[0]) / (2.0 * step)
        c_new = c - f / fp if fp != 0.0 else c
        if not (c_lo < c_new < c_hi):
            c_new = 0.5 * (c_lo + c_hi)
        c = c_new
    # bisection fallback
    for _ in range(80):
        c = 0.5 * (c_lo + c_hi)
        f, _ = dPdc(c, kappa)
        if abs(f) <= 1e-8:
            return c
        if f * f_lo < 0.0:
            c_hi = c
        else:
            c_lo, f_lo = c, f
        if c_hi - c_lo < 1e-15:
            break
    raise NumericalError(
        f"slope root refinement stalled on [{c_lo}, {c_hi}] for kappa={kappa}")


def find_c_tilde(kappa: float) -> float | None:
    """Speed where dP/dc changes sign, or None when the slope is one-signed."""
    if not (kappa < KAPPA_MAX):
        raise ValidationError(f"kappa must be < 1/2, got {kappa}")
    cs = _scan_speeds()
    prev_c, prev_f = None, None
    for c in cs:
        f, _ = dPdc(float(c), kappa)
        if prev_f is not None and (prev_f == 0.0 or prev_f * f < 0.0):
            return _refine_slope_root(kappa, prev_c, float(c))
        prev_c, prev_f = float(c), f
    return None


def _has_slope_sign_change(kappa: float) -> bool:
    cs = _scan_speeds()
    signs = [dPdc(float(c), kappa)[0] > 0.0 for c in cs]
    return any(signs) and not all(signs)


def find_kappa0(width: float = 1e-3) -> float:
    """Coupling threshold below which the momentum slope changes sign.

    Bisection on the sign-change predicate over the speed scan (speeds are
    scanned down to 1e-3; the zero-speed endpoint is excluded).
    """
    lo, hi = -4.0, -3.0
    tries = 0
    while not _has_slope_sign_change(lo):
        lo *= 1.5
        tries += 1
        if tries > 4:
            raise NumericalError("no slope sign change found down to kappa = -20")
    if _has_slope_sign_change(hi):
        raise NumericalError("slope sign change persists at kappa = -3; widen the scan")
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if _has_slope_sign_change(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_q_star(kappa: float) -> tuple[float, float] | None:
    """Momentum and speed where the branch meets the zero-speed energy level.

    Returns (q_star, c_star) with E(c_star) equal to the c -> 0 energy
    limit, searched on the stable sub-branch.  When the slope never changes
    sign the branch only reaches the level in the zero-speed limit and the
    endpoint pair (momentum endpoint, 0) is returned.  Returns None when
    the stable sub-branch stays strictly below the level.
    """
    if kappa > 0.0:
        raise ValidationError(f"find_q_star expects kappa <= 0, got {kappa}")
    level = energy_of_speed(0.0, kappa)
    c_tilde = find_c_tilde(kappa)
    if c_tilde is None:
        return momentum_endpoint(kappa), 0.0
    lo, hi = c_tilde, SPEED_MAX * (1.0 - 1e-9)
    f_lo = energy_of_speed(lo, kappa) - level
    f_hi = energy_of_speed(hi, kappa) - level
    if f_lo <= 0.0 or f_hi >= 0.0:
        return None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f = energy_of_speed(mid, kappa) - level
        if abs(f) <= 1e-12 or hi - lo < 1e-14:
            return momentum_of_speed(mid, kappa), mid
        if f > 0.0:
            lo = mid
        else:
            hi = mid
    return momentum_of_speed(0.5 * (lo + hi), kappa), 0.5 * (lo + hi)


def emit_diagram(curve: BranchCurve, path, svg_path=None, level: float | None = None,
                 meta: list[str] | None = None) -> None:
    """Write the branch as CSV plus an SVG of E against P.

    The SVG path defaults to the CSV path with an .svg suffix; the zero-speed
    energy level is drawn (computed when not supplied) and the cusp marked.
    Values are emitted at full normalization with half-normalization columns
    alongside.
    """
    import os

    from ._svg import polyline_figure

    if not curve.samples:
        raise ValidationError("refusing to emit an empty branch curve")
    if svg_path is None:
        svg_path = os.path.splitext(str(path))[0] + ".svg"
    if level is None:
        level = energy_of_speed(0.0, curve.kappa)
    lines = []
    for m in meta or []:
        lines.append(f"# {m}")
    lines.append(f"# kappa={curve.kappa:.17g}")
    if curve.cusp is not None:
        lines.append(f"# cusp_c={curve.cusp:.17g}")
    if level is not None:
        lines.append(f"# level_E={level:.17g} level_E_half={0.5 * level:.17g}")
    lines.append("c,P,E,dPdc,dEdc,P_half,E_half")
    for s in curve.samples:
        lines.append(
            f"{s.c:.17g},{s.P:.17g},{s.E:.17g},{s.dPdc:.17g},{s.dEdc:.17g},"
            f"{0.5 * s.P:.17g},{0.5 * s.E:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    ps = [s.P for s in curve.samples]
    es = [s.E for s in curve.samples]
    marks = []
    if curve.cusp is not None:
        marks.append((momentum_of_speed(curve.cusp, curve.kappa),
                      energy_of_speed(curve.cusp, curve.kappa),
                      f"cusp c={curve.cusp:.4f}"))
    polyline_figure(
        svg_path, ps, es,
        xlabel="P", ylabel="E",
        title=f"energy-momentum diagram, kappa={curve.kappa:g}",
        hline=level, marks=marks, meta=meta)
