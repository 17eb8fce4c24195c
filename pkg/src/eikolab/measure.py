"""Observable extraction: azimuthal averages, wavenumber, drift, tail fits.

Everything here is a pure function of field snapshots.  The wavenumber
estimate is the annulus mean of the radial component of the spectral
gradient; the sweep law k = C exp(-1/a) is probed two ways, through the
transform y = 1/(log k - 1) against a and through log k against -1/a.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, DomainError, StatisticsError
from .radial import RadialGrid, RadialProfile
from .spectral import Field2D, spectral_gradient

ANNULUS_FRACTIONS = (0.35, 0.45)
MIN_ANNULUS_CELLS = 100


def default_annulus(grid) -> tuple[float, float]:
    return (ANNULUS_FRACTIONS[0] * grid.l, ANNULUS_FRACTIONS[1] * grid.l)


def _center_offsets(grid):
    """(dx, dy, r) of every cell relative to the domain center."""
    x = grid.axes()
    cx, cy = grid.center()
    ox = (x - cx)[:, None] * np.ones(grid.n)[None, :]
    oy = np.ones(grid.n)[:, None] * (x - cy)[None, :]
    return ox, oy, np.hypot(ox, oy)


def _bin_average(grid, values: np.ndarray, n_bins: int,
                 center_value: float) -> RadialProfile:
    if n_bins < 16:
        raise ConfigError(f"n_bins must be >= 16, got {n_bins}")
    _, _, r = _center_offsets(grid)
    r_max = 0.5 * grid.l
    width = r_max / n_bins
    idx = np.minimum((r / width).astype(int), n_bins - 1)
    keep = (r <= r_max).ravel()
    idx = idx.ravel()[keep]
    vals = np.asarray(values, dtype=float).ravel()[keep]
    counts = np.bincount(idx, minlength=n_bins)
    sums = np.bincount(idx, weights=vals, minlength=n_bins)
    empty = counts == 0
    means = np.where(empty, 0.0, sums / np.maximum(counts, 1))
    centers = (np.arange(n_bins) + 0.5) * width
    if np.any(empty):
        filled = ~empty
        means[empty] = np.interp(centers[empty], centers[filled], means[filled])
    nodes = np.concatenate(([0.0], centers))
    profile_vals = np.concatenate(([center_value], means))
    return RadialProfile(
        RadialGrid(nodes),
        profile_vals,
        bin_counts=np.concatenate(([1], counts)),
        interpolated=np.concatenate(([False], empty)),
    )


def azimuthal_average(field: Field2D, n_bins: int = 64) -> RadialProfile:
    """Mean of the field over circular bins out to the inscribed radius L/2.

    A node at r = 0 holding the exact center-cell value is prepended; empty
    bins are filled by linear interpolation and flagged.
    """
    c = field.grid.n // 2
    return _bin_average(field.grid, field.values, n_bins, float(field.values[c, c]))


def radial_gradient_profile(phi: Field2D, n_bins: int = 64) -> RadialProfile:
    """Azimuthal average of the radial component of the spectral gradient."""
    px, py = spectral_gradient(phi)
    ox, oy, r = _center_offsets(phi.grid)
    with np.errstate(invalid="ignore", divide="ignore"):
        radial = np.where(r > 0, (px * ox + py * oy) / np.where(r > 0, r, 1.0), 0.0)
    # the radial derivative vanishes at the center by symmetry
    return _bin_average(phi.grid, radial, n_bins, 0.0)


def measure_wavenumber(field: Field2D,
                       annulus: tuple[float, float] | None = None) -> float:
    """Mean radial gradient component over an annulus around the center."""
    grid = field.grid
    if annulus is None:
        annulus = default_annulus(grid)
    r_in, r_out = annulus
    if not (0.0 < r_in < r_out <= 0.45 * grid.l * (1.0 + 1e-12)):
        raise ConfigError(
            f"annulus must satisfy 0 < r_in < r_out <= 0.45 L, got {annulus}"
        )
    px, py = spectral_gradient(field)
    ox, oy, r = _center_offsets(grid)
    sel = (r >= r_in) & (r <= r_out)
    n_cells = int(np.count_nonzero(sel))
    if n_cells < MIN_ANNULUS_CELLS:
        raise StatisticsError(
            f"annulus {annulus} holds only {n_cells} cells (< {MIN_ANNULUS_CELLS})"
        )
    radial = (px[sel] * ox[sel] + py[sel] * oy[sel]) / r[sel]
    return float(np.mean(radial))


def plateau_value(profile: RadialProfile, window: tuple[float, float]) -> float:
    """Mean of the profile over a radius window (the plateau estimator)."""
    r = profile.grid.nodes
    sel = (r >= window[0]) & (r <= window[1])
    if not np.any(sel):
        raise StatisticsError(f"no profile nodes inside window {window}")
    return float(np.mean(profile.values[sel]))


@dataclass(frozen=True)
class SteadyStateReport:
    """Observables of one run: wavenumber, drift frequency, residual, profile."""

    k_measured: float
    omega_drift: float
    steady_residual: float
    annulus: tuple[float, float]
    radial_profile: RadialProfile
    converged: bool = True
    steady_tol: float = math.nan
    t_final: float = math.nan
    steps: int = 0
    corner_ratio: float = math.nan

    def as_dict(self, include_profile: bool = True) -> dict:
        out = {
            "k_measured": self.k_measured,
            "omega_drift": self.omega_drift,
            "steady_residual": self.steady_residual,
            "annulus": list(self.annulus),
            "converged": self.converged,
            "steady_tol": self.steady_tol,
            "t_final": self.t_final,
            "steps": self.steps,
            "corner_ratio": self.corner_ratio,
        }
        if include_profile:
            out["radial_profile"] = {
                "r": self.radial_profile.grid.nodes.tolist(),
                "value": self.radial_profile.values.tolist(),
                "count": None
                if self.radial_profile.bin_counts is None
                else np.asarray(self.radial_profile.bin_counts).tolist(),
                "interpolated": None
                if self.radial_profile.interpolated is None
                else np.asarray(self.radial_profile.interpolated, dtype=bool)
                .astype(int)
                .tolist(),
            }
        return out


def build_report(phi: Field2D, *, omega_drift: float, steady_residual: float,
                 steady_tol: float, converged: bool, t_final: float, steps: int,
                 corner_ratio: float,
                 annulus: tuple[float, float] | None = None,
                 n_bins: int = 64) -> SteadyStateReport:
    if annulus is None:
        annulus = default_annulus(phi.grid)
    return SteadyStateReport(
        k_measured=measure_wavenumber(phi, annulus),
        omega_drift=omega_drift,
        steady_residual=steady_residual,
        annulus=annulus,
        radial_profile=radial_gradient_profile(phi, n_bins),
        converged=converged,
        steady_tol=steady_tol,
        t_final=t_final,
        steps=steps,
        corner_ratio=corner_ratio,
    )


# ------------------------------------------------------------------ fitting


@dataclass(frozen=True)
class FitResult:
    """Least-squares line through transformed sweep points."""

    slope: float
    intercept: float
    pearson_r: float
    points: tuple[tuple[float, float], ...] = field(default=())

    def predict(self, x: float) -> float:
        return self.slope * x + self.intercept


def _line_fit(x: np.ndarray, y: np.ndarray) -> FitResult:
    sx = x - np.mean(x)
    sy = y - np.mean(y)
    ss_x = float(np.dot(sx, sx))
    ss_y = float(np.dot(sy, sy))
    if ss_x == 0.0:
        raise StatisticsError("all abscissae coincide, line fit is degenerate")
    cov = float(np.dot(sx, sy))
    slope = cov / ss_x
    intercept = float(np.mean(y)) - slope * float(np.mean(x))
    pearson = cov / math.sqrt(ss_x * ss_y) if ss_y > 0.0 else 0.0
    return FitResult(slope, intercept, pearson, tuple(zip(x.tolist(), y.tolist())))


def fit_k_law(points: Sequence[tuple[float, float]]) -> FitResult:
    """Fit y = 1/(log k - 1) against a over a sweep of (a, k) pairs.

    Under k = C exp(-1/a) with log C = 1 this transform is y = -a exactly, so
    near-unit |pearson_r| is the signature of the exponential law.
    """
    if len(points) < 4:
        raise StatisticsError(f"need at least 4 sweep points, got {len(points)}")
    a = np.asarray([p[0] for p in points], dtype=float)
    k = np.asarray([p[1] for p in points], dtype=float)
    if np.any(k <= 0.0) or np.any(k >= 1.0):
        raise DomainError("transform requires 0 < k < 1 for every point")
    y = 1.0 / (np.log(k) - 1.0)
    return _line_fit(a, y)


def fit_log_k_vs_inv_a(points: Sequence[tuple[float, float]]) -> FitResult:
    """Fit log k against -1/a; slope ~ 1 and intercept = log C under the law."""
    if len(points) < 4:
        raise StatisticsError(f"need at least 4 sweep points, got {len(points)}")
    a = np.asarray([p[0] for p in points], dtype=float)
    k = np.asarray([p[1] for p in points], dtype=float)
    if np.any(k <= 0.0):
        raise DomainError("log transform requires k > 0 for every point")
    if np.any(a == 0.0):
        raise DomainError("a = 0 has no -1/a abscissa")
    return _line_fit(-1.0 / a, np.log(k))


def estimate_decay_exponent(profile: RadialProfile,
                            window: tuple[float, float]) -> tuple[float, float]:
    """(slope, prefactor) of the power law f ~ prefactor * r^slope on a window.

    The slope of log f vs log r is returned as-is, so decaying profiles give a
    negative exponent.  Values must be strictly positive on the window; pass
    |f| for signed tails.
    """
    r1, r2 = window
    if not 0.0 < r1 < r2:
        raise ConfigError(f"window must satisfy 0 < r1 < r2, got {window}")
    r = profile.grid.nodes
    sel = (r >= r1) & (r <= r2)
    if int(np.count_nonzero(sel)) < 2:
        raise StatisticsError(f"fewer than 2 profile nodes inside window {window}")
    vals = profile.values[sel]
    if np.any(vals <= 0.0):
        raise DomainError("profile must be strictly positive on the fit window")
    fit = _line_fit(np.log(r[sel]), np.log(vals))
    return fit.slope, math.exp(fit.intercept)
