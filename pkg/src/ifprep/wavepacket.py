"""Transverse atom wavepacket on a uniform grid and its momentum-space spread.

Positions are given in micrometres at the interface and converted to SI
internally. The momentum representation uses the unitary continuous Fourier
convention ``phi(p) = (2 pi hbar)^(-1/2) * integral psi(x) exp(-i p x / hbar) dx``
evaluated with an FFT, so that ``sum |phi|^2 dp == sum |psi|^2 dx``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import GridTooCoarse, NumericalDomainError, ZeroOverlap

H_PLANCK = 6.62607015e-34  # J s, exact
HBAR = H_PLANCK / (2 * math.pi)
ELEMENTARY_CHARGE = 1.602176634e-19  # C, exact
DALTON = 1.66053906660e-27  # kg
GD157_MASS = 156.9240 * DALTON
UM = 1e-6


@dataclass(frozen=True)
class Grid:
    x_min: float = -600.0
    x_max: float = 600.0
    n_samples: int = 32768

    def __post_init__(self):
        n = self.n_samples
        if n < 64 or n & (n - 1):
            raise ValueError("n_samples must be a power of two >= 64")
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_samples

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_samples)

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.x_min, self.x_max, self.n_samples * factor)


@dataclass(frozen=True, eq=False)
class TransverseWavepacket:
    grid: Grid
    amplitudes: np.ndarray  # units um^-1/2
    edge_fraction: float | None = None  # None: not a smoothed rectangle

    @property
    def x_min(self) -> float:
        return self.grid.x_min

    @property
    def x_max(self) -> float:
        return self.grid.x_max

    @property
    def n_samples(self) -> int:
        return self.grid.n_samples

    @property
    def dx(self) -> float:
        return self.grid.dx

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def norm(self) -> float:
        return float(np.sum(self.density) * self.dx)


def _normalized(grid: Grid, psi: np.ndarray, edge_fraction=None) -> TransverseWavepacket:
    norm = float(np.sum(np.abs(psi) ** 2) * grid.dx)
    if norm < 1e-14:
        raise ZeroOverlap("wavepacket has vanishing norm")
    return TransverseWavepacket(grid, psi / math.sqrt(norm), edge_fraction)


def smoothed_rectangle_profile(
    x: np.ndarray, width: float, center: float, edge_fraction: float
) -> np.ndarray:
    """Flat-top amplitude with raised-cosine ramps of length edge_fraction*width.

    The support is exactly ``[center - width/2, center + width/2]``.
    """
    if not 0.0 <= edge_fraction < 0.5:
        raise ValueError("edge_fraction must lie in [0, 0.5)")
    d = np.abs(np.asarray(x, dtype=float) - center)
    half = width / 2
    edge = edge_fraction * width
    out = np.where(d <= half, 1.0, 0.0)
    if edge > 0:
        ramp = (d > half - edge) & (d <= half)
        s = (half - d[ramp]) / edge
        out[ramp] = 0.5 * (1.0 - np.cos(np.pi * s))
    return out


def make_smoothed_rectangle(
    width: float,
    center: float = 0.0,
    edge_fraction: float = 0.1,
    grid: Grid = Grid(),
) -> TransverseWavepacket:
    dx = grid.dx
    if width < 8 * dx:
        raise GridTooCoarse(f"width {width} um spans fewer than 8 grid steps of {dx} um")
    lo, hi = center - width / 2, center + width / 2
    if lo < grid.x_min + 4 * dx or hi > grid.x_max - 4 * dx:
        raise NumericalDomainError(
            f"packet [{lo}, {hi}] um does not fit the grid with a 4-sample margin"
        )
    psi = smoothed_rectangle_profile(grid.x, width, center, edge_fraction).astype(complex)
    return _normalized(grid, psi, edge_fraction)


def make_gaussian(sigma_x: float, center: float = 0.0, k0: float = 0.0,
                  grid: Grid = Grid()) -> TransverseWavepacket:
    """Gaussian with position spread ``sigma_x`` (um) and mean wavenumber ``k0`` (1/um)."""
    x = grid.x
    psi = np.exp(-((x - center) ** 2) / (4 * sigma_x**2) + 1j * k0 * x)
    return _normalized(grid, psi)


@dataclass(frozen=True)
class SpreadReport:
    sigma_x: float  # um
    sigma_p: float  # kg m/s
    product: float  # J s
    kinetic_energy: float  # J
    heisenberg_ratio: float
    iqr_x: float  # um
    iqr_p: float  # kg m/s
    mean_p: float
    grid_regularized: bool  # pure rectangle: <p^2> depends on the grid

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def momentum_grid(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Monotonic momenta (kg m/s) and the index order that sorts FFT output."""
    k = 2 * np.pi * np.fft.fftfreq(grid.n_samples, d=grid.dx * UM)
    order = np.argsort(k, kind="stable")
    return HBAR * k[order], order


def momentum_amplitudes(wp: TransverseWavepacket) -> tuple[np.ndarray, np.ndarray]:
    """Momentum-space wavefunction in (kg m/s)^-1/2 on a monotonic grid."""
    dx_si = wp.dx * UM
    psi_si = wp.amplitudes / math.sqrt(UM)
    # Phase from the grid origin keeps the transform a true continuous FT.
    p, order = momentum_grid(wp.grid)
    phi = np.fft.fft(psi_si)[order] * dx_si / math.sqrt(2 * np.pi * HBAR)
    phi *= np.exp(-1j * p * (wp.x_min * UM) / HBAR)
    return p, phi


def _weighted_quantile(values: np.ndarray, weights: np.ndarray, q: float) -> float:
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    return float(np.interp(q, cdf, values))


def momentum_distribution(wp: TransverseWavepacket, mass: float = GD157_MASS) -> SpreadReport:
    p, phi = momentum_amplitudes(wp)
    dp = p[1] - p[0]
    wp_dens = np.abs(phi) ** 2 * dp
    w = wp_dens / wp_dens.sum()
    mean_p = float(np.sum(w * p))
    p2 = float(np.sum(w * p**2))
    sigma_p = math.sqrt(max(p2 - mean_p**2, 0.0))

    x = wp.x
    wx = wp.density / wp.density.sum()
    mean_x = float(np.sum(wx * x))
    sigma_x = math.sqrt(max(float(np.sum(wx * (x - mean_x) ** 2)), 0.0))

    product = sigma_x * UM * sigma_p
    return SpreadReport(
        sigma_x=sigma_x,
        sigma_p=sigma_p,
        product=product,
        kinetic_energy=p2 / (2 * mass),
        heisenberg_ratio=product / (HBAR / 2),
        iqr_x=_weighted_quantile(x, wx, 0.75) - _weighted_quantile(x, wx, 0.25),
        iqr_p=_weighted_quantile(p, w, 0.75) - _weighted_quantile(p, w, 0.25),
        mean_p=mean_p,
        grid_regularized=wp.edge_fraction == 0,
    )


def parseval_norm(wp: TransverseWavepacket) -> float:
    p, phi = momentum_amplitudes(wp)
    return float(np.sum(np.abs(phi) ** 2) * (p[1] - p[0]))


def window_and_renormalize(
    wide: TransverseWavepacket,
    window_width: float,
    window_center: float = 0.0,
    edge_fraction: float = 0.1,
) -> TransverseWavepacket:
    """Multiply by a smoothed window and renormalize: the state reduction to
    the part of the atom that crossed the neutron beam."""
    grid = wide.grid
    if window_width < 8 * grid.dx:
        raise GridTooCoarse(
            f"window {window_width} um spans fewer than 8 grid steps of {grid.dx} um"
        )
    window = smoothed_rectangle_profile(grid.x, window_width, window_center, edge_fraction)
    product = wide.amplitudes * window
    if float(np.sum(np.abs(product) ** 2) * grid.dx) < 1e-14:
        raise ZeroOverlap("window does not overlap the wavepacket")
    family = edge_fraction if wide.edge_fraction is not None else None
    return _normalized(grid, product, family)


@dataclass(frozen=True)
class EnergyBudget:
    delta_joule: float
    delta_nev: float


def energy_budget(before: SpreadReport, after: SpreadReport) -> EnergyBudget:
    delta = after.kinetic_energy - before.kinetic_energy
    return EnergyBudget(delta_joule=delta, delta_nev=delta / ELEMENTARY_CHARGE * 1e9)


def write_position_csv(wp: TransverseWavepacket, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["x_um", "density"])
        for x, d in zip(wp.x, wp.density):
            out.writerow([repr(float(x)), repr(float(d))])


def write_momentum_csv(wp: TransverseWavepacket, path: Path) -> None:
    p, phi = momentum_amplitudes(wp)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["p_SI", "density"])
        for pi, d in zip(p, np.abs(phi) ** 2):
            out.writerow([repr(float(pi)), repr(float(d))])
