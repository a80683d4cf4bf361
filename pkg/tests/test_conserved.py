"""Branch functionals: quadrature oracles, slopes, critical constants, diagram."""
import math
import os

import numpy as np
import pytest

from conftest import get_profile
from qgplab.conserved import (BranchCurve, BranchSample, branch_curve, dEdc,
                              dPdc, emit_diagram, energy, energy_of_speed,
                              find_c_tilde, find_kappa0, find_q_star,
                              momentum, momentum_endpoint, momentum_of_speed,
                              particles, twist, vk_classify)
from qgplab.errors import FrameError, NumericalError, ValidationError
from qgplab.grid import Grid, GridFunction


def closed_form_P(c):
    return 2.0 * math.atan(math.sqrt(2.0 - c * c) / c) - c * math.sqrt(2.0 - c * c)


def closed_form_E(c):
    return (2.0 / 3.0) * (2.0 - c * c) ** 1.5


def test_kappa0_closed_forms():
    for c in (0.2, 0.8, 1.3):
        assert momentum_of_speed(c, 0.0) == pytest.approx(closed_form_P(c), abs=1e-9)
        assert energy_of_speed(c, 0.0) == pytest.approx(closed_form_E(c), abs=1e-9)
        slope, err = dPdc(c, 0.0)
        assert slope == pytest.approx(-2.0 * math.sqrt(2.0 - c * c), abs=1e-8)
        assert err < 1e-6
    assert dPdc(1.0, 0.0)[0] == pytest.approx(-2.0, abs=1e-10)


def test_zero_speed_levels():
    assert energy_of_speed(0.0, 0.0) == pytest.approx(4.0 * math.sqrt(2.0) / 3.0, abs=1e-10)
    assert energy_of_speed(0.0, -3.0) == pytest.approx(2.694200751985, abs=1e-9)
    assert energy_of_speed(0.0, -50.0) == pytest.approx(7.495876313590, abs=1e-9)
    with pytest.raises(ValidationError):
        momentum_of_speed(0.0, 0.0)  # momentum quadrature needs c > 0


def test_quadrature_matches_grid_functionals():
    for c, kap in ((0.8, 0.0), (0.5, -3.0), (0.2, -50.0), (1.1, -10.0)):
        prof = get_profile(c, kap)
        p_grid = momentum(prof.eta, prof.v)
        e_grid = energy(prof.eta, prof.v, kap)
        assert abs(momentum_of_speed(c, kap) - p_grid) <= 1e-7, (c, kap)
        assert abs(energy_of_speed(c, kap) - e_grid) <= 1e-7, (c, kap)


def test_grid_functionals_basics():
    g = Grid(30.0, 1024)
    eta = GridFunction(g, 0.3 * np.exp(-g.x ** 2))
    v = GridFunction(g, 0.1 * g.x * np.exp(-g.x ** 2))
    assert momentum(eta, v) == pytest.approx(-g.integrate(eta.values * v.values))
    assert particles(eta) == pytest.approx(-g.integrate(eta.values))
    assert twist(v) == pytest.approx(g.integrate(v.values))
    bad = GridFunction(g, 1.0 + 0.5 * np.exp(-g.x ** 2))
    with pytest.raises(FrameError):
        energy(bad, v, 0.0)


def test_hamilton_relation_sample():
    for c, kap in ((0.3, 0.0), (0.9, -3.0), (0.7, -50.0)):
        de, _ = dEdc(c, kap)
        dp, _ = dPdc(c, kap)
        assert abs(de - c * dp) <= 1e-6 * (1.0 + abs(de)), (c, kap)


def test_momentum_endpoint_universal():
    # half-normalized momentum tends to pi/2 at zero speed for every kappa
    for kap in (0.0, -3.0, -50.0):
        assert momentum_endpoint(kap) / 2.0 == pytest.approx(math.pi / 2.0,
                                                             abs=1e-3), kap


def test_branch_curve_structure():
    flat = branch_curve(0.0, 0.1, 1.3, 12)
    assert flat.cusp is None
    assert all(s.dPdc < 0 for s in flat.samples)
    assert all(s.P > 0 and s.E > 0 for s in flat.samples)
    cs = [s.c for s in flat.samples]
    assert cs == sorted(cs)

    cusped = branch_curve(-50.0, 0.1, 1.3, 24)
    assert cusped.cusp == pytest.approx(0.4734813676, abs=1e-6)
    # momentum slope positive below the cusp, negative above
    assert all(s.dPdc > 0 for s in cusped.samples if s.c < cusped.cusp - 0.05)
    assert all(s.dPdc < 0 for s in cusped.samples if s.c > cusped.cusp + 0.05)

    # P and E vanish toward the sonic endpoint
    tail = branch_curve(0.0, 1.40, 1.4141, 4).samples[-1]
    assert tail.P < 1e-3 and tail.E < 1e-3

    with pytest.raises(ValidationError):
        branch_curve(0.0, 0.5, 0.2, 8)
    with pytest.raises(ValidationError):
        branch_curve(0.0, 0.1, 1.3, 1)


def test_branch_types_validate():
    good = BranchSample(0.5, 1.0, 1.0, -1.0, -0.5)
    with pytest.raises(ValidationError):
        BranchCurve(0.0, [good, BranchSample(0.4, 1.0, 1.0, -1.0, -0.5)])
    with pytest.raises(NumericalError):
        BranchCurve(0.0, [BranchSample(0.5, -1.0, 1.0, -1.0, -0.5)])


def test_vk_classify():
    assert vk_classify(1.0, 0.0).verdict == "Stable"
    assert vk_classify(0.2, -50.0).verdict == "Unstable"
    assert vk_classify(1.0, -50.0).verdict == "Stable"
    wide = vk_classify(1.0, 0.0, tolerance=10.0)
    assert wide.verdict == "Degenerate"
    assert wide.tolerance == 10.0
    v = vk_classify(0.8, 0.0)
    assert v.c == 0.8 and v.kappa == 0.0 and v.dPdc < 0


def test_find_c_tilde():
    ct = find_c_tilde(-50.0)
    assert ct == pytest.approx(0.473, abs=0.005)
    assert abs(dPdc(ct, -50.0)[0]) <= 1e-8
    assert find_c_tilde(-3.0) is None
    assert find_c_tilde(0.0) is None
    with pytest.raises(ValidationError):
        find_c_tilde(0.7)


def test_find_kappa0_dichotomy_and_trend():
    kappa0 = find_kappa0()
    assert -3.65 <= kappa0 <= -3.62
    assert find_c_tilde(kappa0 - 0.1) is not None
    assert find_c_tilde(kappa0 + 0.1) is None
    # critical speed shrinks to zero as kappa rises toward the threshold
    cts = [find_c_tilde(k) for k in (-50.0, -20.0, -10.0, -6.0, -4.2)]
    assert all(ct is not None for ct in cts)
    assert all(b < a for a, b in zip(cts, cts[1:]))


def test_find_q_star():
    q0, c0 = find_q_star(0.0)
    assert c0 == 0.0 and q0 == pytest.approx(math.pi, abs=1e-3)
    q3, c3 = find_q_star(-3.0)
    assert c3 == 0.0 and q3 == pytest.approx(math.pi, abs=1e-3)
    q50, c50 = find_q_star(-50.0)
    level = energy_of_speed(0.0, -50.0)
    assert c50 > find_c_tilde(-50.0)
    assert energy_of_speed(c50, -50.0) == pytest.approx(level, abs=1e-9)
    assert q50 == pytest.approx(momentum_of_speed(c50, -50.0), abs=1e-12)
    with pytest.raises(ValidationError):
        find_q_star(0.2)


def test_emit_diagram(tmp_path):
    curve = branch_curve(-50.0, 0.2, 1.2, 10)
    csv = tmp_path / "branch.csv"
    emit_diagram(curve, csv)
    svg = tmp_path / "branch.svg"  # default: csv path with .svg suffix
    assert csv.exists() and svg.exists()
    text = csv.read_text()
    assert "# kappa=-50" in text
    assert "# cusp_c=0.4734" in text
    assert "# level_E=" in text and "level_E_half=" in text
    header = [ln for ln in text.splitlines() if not ln.startswith("#")][0]
    assert header == "c,P,E,dPdc,dEdc,P_half,E_half"
    body = [ln for ln in text.splitlines() if not ln.startswith("#")][1:]
    assert len(body) == 10
    first = [float(tok) for tok in body[0].split(",")]
    assert first[5] == pytest.approx(first[1] / 2.0)
    assert "cusp" in svg.read_text()

    missing = tmp_path / "empty.csv"
    with pytest.raises(ValidationError):
        emit_diagram(BranchCurve(0.0, []), missing)
    assert not missing.exists() and not (tmp_path / "empty.svg").exists()


def test_slope_error_estimates():
    _, perr = dPdc(0.8, -3.0)
    _, eerr = dEdc(0.8, -3.0)
    assert 0.0 <= perr < 1e-6 and 0.0 <= eerr < 1e-6
    # where the truth is known the estimate must bound the actual error
    val, perr0 = dPdc(0.8, 0.0)
    truth = -2.0 * math.sqrt(2.0 - 0.64)
    assert abs(val - truth) <= max(perr0, 1e-9) * 10.0
