"""First-order matched-asymptotics predictions for the pattern wavenumber.

The far-field decay rate obeys lam = 2 e^{-gamma} exp(1/a) where a < 0 is the
signed matching constant (theorem convention); the equivalent simulation
convention writes exp(-1/a_sim) with a_sim = -a > 0.  The frequency always
follows by squaring: b*omega = lam^2, and the selected wavenumber is lam/b.
The overall prefactor C multiplying k is never derived, only fitted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    ConfigError,
    ConventionError,
    DomainError,
    OutOfRegimeError,
    StatisticsError,
)
from .profiles import InhomogeneitySpec, core_mass
from .specfun import EULER_GAMMA

CONVENTION_THEOREM = "theorem"
CONVENTION_SIMULATION = "simulation"

BRANCH_CLOSED_FORM = "closed_form"
BRANCH_TRUNCATED = "truncated"

# 2 e^{-gamma}: the K0 small-argument constant that sets the law's prefactor
LAW_PREFACTOR = 2.0 * math.exp(-EULER_GAMMA)


def predict_lambda(a_signed: float) -> float:
    """Far-field decay rate 2 e^{-gamma} exp(1/a) for a signed constant a < 0.

    Underflows gracefully to 0 as a -> 0^- (the rate is small beyond all
    orders there).
    """
    if not a_signed < 0.0:
        raise ConventionError(
            f"a_signed must be negative (theorem convention), got {a_signed}; "
            "a positive simulation-convention mass a_sim should be negated"
        )
    return LAW_PREFACTOR * math.exp(1.0 / a_signed)


def predict_omega(a_signed: float, b: float, c_fitted: float = 1.0) -> float:
    """Rotation frequency lam^2/b, optionally scaled by a fitted prefactor."""
    if not b > 0.0:
        raise ConfigError(f"b must be > 0, got {b}")
    lam = predict_lambda(a_signed)
    return c_fitted * lam * lam / b


@dataclass(frozen=True)
class AsymptoticPrediction:
    """Consistent (a, lam, omega, k) tuple under one sign convention.

    Stored rates are the C = 1 shapes; c_fitted is carried as metadata so the
    exact relations lam^2 = b*omega and k = lam/b hold on the stored fields.
    """

    a_signed: float
    b: float
    decay_rate: float
    frequency: float
    wavenumber: float
    convention: str
    c_fitted: float | None = None

    def __post_init__(self):
        if self.convention not in (CONVENTION_THEOREM, CONVENTION_SIMULATION):
            raise ConfigError(f"unknown convention {self.convention!r}")
        if not self.b > 0.0:
            raise ConfigError(f"b must be > 0, got {self.b}")
        if self.frequency != self.decay_rate**2 / self.b:
            raise ConfigError("frequency must equal decay_rate^2 / b exactly")
        if self.wavenumber != self.decay_rate / self.b:
            raise ConfigError("wavenumber must equal decay_rate / b exactly")

    @property
    def a_sim(self) -> float:
        return -self.a_signed


def make_prediction(a_signed: float | None = None, a_sim: float | None = None,
                    b: float = 1.0, c_fitted: float | None = None
                    ) -> AsymptoticPrediction:
    """Build a prediction from either sign convention (pass exactly one a)."""
    if (a_signed is None) == (a_sim is None):
        raise ConfigError("pass exactly one of a_signed or a_sim")
    if a_sim is not None:
        if not a_sim > 0.0:
            raise ConventionError(
                f"a_sim must be positive (simulation convention), got {a_sim}"
            )
        a_signed = -a_sim
        convention = CONVENTION_SIMULATION
    else:
        convention = CONVENTION_THEOREM
    lam = predict_lambda(a_signed)
    return AsymptoticPrediction(
        a_signed=a_signed,
        b=b,
        decay_rate=lam,
        frequency=lam**2 / b,
        wavenumber=lam / b,
        convention=convention,
        c_fitted=c_fitted,
    )


@dataclass(frozen=True)
class FamilyPrediction:
    """Wavenumber shape for one member of the algebraic defect family."""

    amplitude: float
    decay_exponent: float
    a_sim: float
    branch: str
    truncation_radius: float | None
    k_shape: float

    @property
    def a_signed(self) -> float:
        return -self.a_sim

    def __float__(self) -> float:
        return self.k_shape


def predict_k_for_family(amplitude: float, decay_exponent: float,
                         convention_R: float = 3.0,
                         prefactor: float = 1.0) -> FamilyPrediction:
    """k ~ prefactor * exp(-1/a_sim) for the family A/(1+r^2)^p.

    amplitude is the effective strength (fold eps and b in before calling).
    The mass a_sim uses the closed form A/(2p-2) for p > 1 and the truncated
    integral out to convention_R otherwise; the branch taken is recorded.
    """
    p = decay_exponent
    if not p > 0.5:
        raise OutOfRegimeError(
            f"defect exponent p = {p} <= 1/2 produces no target pattern"
        )
    if not amplitude > 0.0:
        raise ConventionError(
            f"amplitude must be positive for a positive mass, got {amplitude}"
        )
    spec = InhomogeneitySpec(amplitude, p, 1.0)
    if p > 1.0:
        a_sim = core_mass(spec, convention="closed_form")
        branch, radius = BRANCH_CLOSED_FORM, None
    else:
        a_sim = core_mass(spec, convention="truncated", r_cut=convention_R)
        branch, radius = BRANCH_TRUNCATED, convention_R
    return FamilyPrediction(
        amplitude=amplitude,
        decay_exponent=p,
        a_sim=a_sim,
        branch=branch,
        truncation_radius=radius,
        k_shape=prefactor * math.exp(-1.0 / a_sim),
    )


# ------------------------------------------------------- sweep comparison


@dataclass(frozen=True)
class ComparisonRow:
    p: float
    a_sim: float
    k_measured: float
    k_shape: float
    log_residual: float
    steady: bool
    branch: str


@dataclass(frozen=True)
class ComparisonTable:
    """Per-run prediction vs measurement with a single fitted prefactor."""

    rows: tuple[ComparisonRow, ...]
    c_fitted: float
    rms_log_residual: float
    n_used: int
    n_excluded: int


def _resolve_run(params: Mapping, convention_R: float):
    """(p, a_sim, branch) for one sweep entry."""
    if "a_sim" in params:
        return float(params.get("p", math.nan)), float(params["a_sim"]), "given"
    amplitude = float(params["A"]) if "A" in params else float(params["amplitude"])
    p = float(params["p"])
    eff = amplitude * float(params.get("eps", 1.0)) * float(params.get("b", 1.0))
    fam = predict_k_for_family(eff, p, convention_R=convention_R)
    return p, fam.a_sim, fam.branch


def compare_prediction_to_runs(sweep: Sequence[tuple[Mapping, object]],
                               convention_R: float = 3.0) -> ComparisonTable:
    """Fit the one free prefactor C over steady runs and report log residuals.

    Non-steady runs stay in the table flagged steady=False with nan residual;
    they never enter the fit.
    """
    if len(sweep) < 3:
        raise StatisticsError(f"need at least 3 runs to compare, got {len(sweep)}")
    resolved = []
    for params, report in sweep:
        p, a_sim, branch = _resolve_run(params, convention_R)
        if not a_sim > 0.0:
            raise ConventionError(f"run has non-positive a_sim = {a_sim}")
        k_shape = math.exp(-1.0 / a_sim)
        steady = bool(getattr(report, "converged", True))
        k_measured = float(report.k_measured)
        if steady and not k_measured > 0.0:
            raise DomainError(
                f"steady run reports non-positive k_measured = {k_measured}"
            )
        resolved.append((p, a_sim, k_measured, k_shape, steady, branch))

    used = [(math.log(km) - math.log(ks)) for p, a, km, ks, s, br in resolved if s]
    if not used:
        raise StatisticsError("no steady runs available to fit the prefactor")
    log_c = float(np.mean(used))
    c_fitted = math.exp(log_c)

    rows = []
    sq = 0.0
    for p, a_sim, k_measured, k_shape, steady, branch in resolved:
        if steady:
            res = math.log(k_measured) - math.log(k_shape) - log_c
            sq += res * res
        else:
            res = math.nan
        rows.append(
            ComparisonRow(p, a_sim, k_measured, k_shape, res, steady, branch)
        )
    return ComparisonTable(
        rows=tuple(rows),
        c_fitted=c_fitted,
        rms_log_residual=math.sqrt(sq / len(used)),
        n_used=len(used),
        n_excluded=len(resolved) - len(used),
    )
