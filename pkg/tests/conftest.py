"""Shared fixtures: cached profile/spectrum construction and the
acceptance-criterion summary printed at the end of the run."""
from __future__ import annotations

import functools

from qgplab.grid import Grid
from qgplab.profile import SolitonParams, default_grid, solve_profile
from qgplab.spectral import spectrum_report

LATTICE_C = (0.1, 0.4, 0.8, 1.1, 1.4)
LATTICE_KAPPA = (0.0, -1.0, -3.0, -10.0, -50.0)


@functools.lru_cache(maxsize=None)
def get_grid(c: float, kappa: float, n_min: int = 4096, refine: int = 1) -> Grid:
    g = default_grid(SolitonParams(c, kappa), n_min=n_min)
    if refine == 1:
        return g
    return Grid(g.half_length, refine * g.n)


@functools.lru_cache(maxsize=None)
def get_profile(c: float, kappa: float, n_min: int = 4096, refine: int = 1):
    return solve_profile(SolitonParams(c, kappa), get_grid(c, kappa, n_min, refine))


@functools.lru_cache(maxsize=None)
def get_report(c: float, kappa: float, n_min: int = 4096, refine: int = 1):
    return spectrum_report(get_profile(c, kappa, n_min, refine))


# -- acceptance summary ----------------------------------------------------------
#
# test_acceptance.py registers each criterion when it starts and overwrites
# the entry on success, so the terminal summary carries one line per
# criterion that ran: "criterion NN: PASS/FAIL  <detail>".

ACCEPTANCE_RESULTS: dict[int, tuple[str, str]] = {}


def criterion_started(num: int, title: str) -> None:
    ACCEPTANCE_RESULTS[num] = ("FAIL", title)


def criterion_passed(num: int, detail: str) -> None:
    title = ACCEPTANCE_RESULTS.get(num, ("", ""))[1]
    ACCEPTANCE_RESULTS[num] = ("PASS", f"{title}: {detail}" if title else detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_RESULTS):
        status, detail = ACCEPTANCE_RESULTS[num]
        terminalreporter.write_line(f"criterion {num:02d}: {status}  {detail}")
