"""Uniform periodic grid with spectral calculus.

The domain is [-L, L) sampled at n equispaced points x_j = -L + j*dx,
dx = 2L/n.  Derivatives, shifts and norms are computed through real FFTs;
a 4th-order centered finite-difference derivative is provided as a
fallback for data that does not wrap periodically.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


class Grid:
    """Uniform periodic grid on [-L, L) with n points."""

    def __init__(self, half_length: float, n: int):
        if not (half_length > 0):
            raise ValidationError(f"grid half_length must be positive, got {half_length}")
        if n < 8 or n % 2 != 0:
            raise ValidationError(f"grid size must be even and >= 8, got {n}")
        self.half_length = float(half_length)
        self.n = int(n)
        self.dx = 2.0 * self.half_length / self.n
        self.x = -self.half_length + self.dx * np.arange(self.n)
        # rfft wavenumbers for the 2L-periodic box; the Nyquist mode of an
        # odd-order derivative is zeroed to keep the operator antisymmetric
        self.k = np.arange(self.n // 2 + 1) * (np.pi / self.half_length)

    def __repr__(self) -> str:
        return f"Grid(half_length={self.half_length}, n={self.n})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Grid) and other.half_length == self.half_length and other.n == self.n

    # -- array-level calculus ------------------------------------------------

    def deriv(self, values: np.ndarray, order: int = 1) -> np.ndarray:
        if order not in (1, 2, 3):
            raise ValidationError(f"derivative order must be 1, 2 or 3, got {order}")
        fh = np.fft.rfft(values)
        mult = (1j * self.k) ** order
        if order % 2 == 1:
            mult[-1] = 0.0
        return np.fft.irfft(mult * fh, n=self.n)

    def antideriv(self, values: np.ndarray) -> np.ndarray:
        """Periodic antiderivative plus the linear ramp carrying the mean."""
        fh = np.fft.rfft(values)
        mean = fh[0].real / self.n
        mult = np.zeros_like(fh)
        mult[1:] = 1.0 / (1j * self.k[1:])
        out = np.fft.irfft(mult * fh, n=self.n)
        return out + mean * self.x

    def integrate(self, values: np.ndarray) -> float:
        return float(self.dx * values.sum())

    def shift(self, values: np.ndarray, s: float) -> np.ndarray:
        fh = np.fft.rfft(values)
        return np.fft.irfft(fh * np.exp(-1j * self.k * s), n=self.n)

    def norm_l2(self, values: np.ndarray) -> float:
        return float(np.sqrt(self.dx * np.sum(values * values)))

    def norm_h1(self, values: np.ndarray) -> float:
        d = self.deriv(values, 1)
        return float(np.sqrt(self.dx * (np.sum(values * values) + np.sum(d * d))))

    def deriv_fd4(self, values: np.ndarray, order: int = 1) -> np.ndarray:
        """4th-order centered finite difference, one-sided at the ends.

        Intended for diagnostics on data that does not wrap cleanly.
        """
        if order not in (1, 2):
            raise ValidationError(f"fd4 derivative order must be 1 or 2, got {order}")
        f = values
        n, h = self.n, self.dx
        out = np.empty_like(f)
        if order == 1:
            out[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * h)
            c = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12 * h)
            for i in (0, 1):
                out[i] = c @ f[i:i + 5]
            for i in (n - 2, n - 1):
                out[i] = -(c @ f[i - 4:i + 1][::-1])
        else:
            out[2:-2] = (-f[:-4] + 16 * f[1:-3] - 30 * f[2:-2] + 16 * f[3:-1] - f[4:]) / (12 * h * h)
            c = np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) / (12 * h * h)
            for i in (0, 1):
                out[i] = c @ f[i:i + 6]
            for i in (n - 2, n - 1):
                out[i] = c @ f[i - 5:i + 1][::-1]
        return out


@dataclass
class GridFunction:
    """Sampled real field on a Grid."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n,):
            raise ValidationError(
                f"grid function needs {self.grid.n} values, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("grid function values must be finite")


def derivative(f: GridFunction, order: int = 1) -> GridFunction:
    """Spectral derivative of order 1, 2 or 3."""
    return GridFunction(f.grid, f.grid.deriv(f.values, order))


def integrate(f: GridFunction) -> float:
    """Rectangle-rule integral, spectrally accurate for decaying data."""
    return f.grid.integrate(f.values)


def shift(f: GridFunction, s: float) -> GridFunction:
    """Translate: returns f(. - s) by Fourier phase multiplication."""
    return GridFunction(f.grid, f.grid.shift(f.values, s))


def norm_l2(f: GridFunction) -> float:
    return f.grid.norm_l2(f.values)


def norm_h1(f: GridFunction) -> float:
    return f.grid.norm_h1(f.values)


def to_csv(f: GridFunction, path) -> None:
    """Write the sampled field as CSV with header x,value."""
    with open(path, "w") as fh:
        fh.write("x,value\n")
        for xj, vj in zip(f.grid.x, f.values):
            fh.write(f"{xj:.17g},{vj:.17g}\n")


def from_csv(path) -> GridFunction:
    """Read a field written by to_csv; the grid is rebuilt from the x column."""
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    x, vals = data[:, 0], data[:, 1]
    n = len(x)
    dx = x[1] - x[0]
    if not np.allclose(np.diff(x), dx, rtol=0, atol=1e-12 * abs(dx) * n):
        raise ValidationError(f"non-uniform x column in {path}")
    grid = Grid(-x[0], n)
    if abs(grid.dx - dx) > 1e-12 * dx:
        raise ValidationError(f"x column of {path} is not a [-L, L) grid")
    return GridFunction(grid, vals)
