"""Analytic uncertainty propagation for the allocation pipeline.

First-order budgets for the reference meters, the HCA counters, the
calibrated energy estimates, and the consumption fractions and
allocation errors, each with a Monte-Carlo cross-check. Distribution
shapes follow the stated source of each contribution: rectangular where
a bound is quoted (display deviation, model residual, cut-off
correction), Gaussian otherwise.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

SQRT3 = math.sqrt(3.0)

# Default relative contributions.
U_K_DEFAULT = 0.02 / SQRT3   # EN-442 residual bound, +/-2 % rectangular
U_H_DEFAULT = 0.01           # central meter, combined sub-assemblies
U_D_BAND_15_40 = 0.05 / SQRT3  # display deviation, dT band 15-40 K
U_D_OUT_OF_BAND = 0.08 / SQRT3  # placeholder outside the quoted band
U_FLOW_REL_DEFAULT = 0.0015
U_DT_K_DEFAULT = 0.04        # K, absolute on inlet-outlet difference

U_P_BAND = (0.003, 0.03)     # expected range of the parameter contribution


def u_display(delta_t_surface_k: float) -> float:
    """Relative display-deviation contribution for an HCA operating at the
    given surface-to-room temperature difference. Only the 15-40 K band
    has a quoted bound; outside it a wider placeholder applies."""
    if 15.0 <= delta_t_surface_k <= 40.0:
        return U_D_BAND_15_40
    warnings.warn(
        f"HCA display deviation outside the 15-40 K band (dTs = "
        f"{delta_t_surface_k} K): using placeholder bound +/-8 %",
        stacklevel=2)
    return U_D_OUT_OF_BAND


def u_cutoff(correction_integral_kwh: float) -> float:
    """Standard uncertainty of the cut-off correction, kWh: the applied
    correction is the midpoint of a rectangular distribution between zero
    and twice itself."""
    if correction_integral_kwh < 0:
        raise ValueError("correction integral must be >= 0")
    return correction_integral_kwh / SQRT3


def u_reference_energy(q_ref: float, rel_flow: float, rel_dt: float,
                       rel_rho: float, rel_cp: float, u_co: float) -> float:
    """Standard uncertainty of a reference energy measurement, kWh."""
    for v in (rel_flow, rel_dt, rel_rho, rel_cp, u_co):
        if v < 0:
            raise ValueError("uncertainty contributions must be >= 0")
    if q_ref == 0:
        if u_co != 0:
            raise ValueError("zero reference energy with nonzero cut-off term")
        return 0.0
    rel_sq = rel_flow**2 + rel_dt**2 + rel_rho**2 + rel_cp**2
    return abs(q_ref) * math.sqrt(rel_sq + (u_co / q_ref) ** 2)


def u_hca_units(r_count: int, u_d: float) -> float:
    """Standard uncertainty of a totalized allocation-unit count.

    Two counter-resolution terms (one per boundary read, each uniform
    within half a count) plus the relative display-deviation term."""
    if r_count < 1:
        raise ValueError("count must be >= 1")
    if u_d < 0:
        raise ValueError("u_d must be >= 0")
    res = 1.0 / (r_count * 2.0 * SQRT3)
    return r_count * math.sqrt(2.0 * res**2 + u_d**2)


def u_estimated_energy(q_rad: float, u_h: float, u_k: float,
                       u_p: float) -> float:
    """Standard uncertainty of a calibrated radiator energy estimate, kWh."""
    for v in (u_h, u_k, u_p):
        if v < 0:
            raise ValueError("uncertainty contributions must be >= 0")
    if not U_P_BAND[0] <= u_p <= U_P_BAND[1] and u_p > 0:
        warnings.warn(
            f"parameter uncertainty contribution u_p = {u_p:.4g} outside "
            f"the expected band {U_P_BAND}", stacklevel=2)
    return abs(q_rad) * math.sqrt(u_h**2 + u_k**2 + u_p**2)


def u_fraction(x: Sequence[float], u_x: Sequence[float]) -> list:
    """Standard uncertainty of each consumption fraction, percentage points.

    Propagates the ratio of a subset to the total, with the total's
    uncertainty taken as the uncorrelated root-sum-square and the
    subset/total covariance equal to the subset variance."""
    x = [float(v) for v in x]
    u_x = [float(v) for v in u_x]
    if len(x) != len(u_x):
        raise ValueError("x and u_x must have equal length")
    total = sum(x)
    if total <= 0:
        raise ValueError("total consumption must be > 0")
    u_total_sq = sum(u * u for u in u_x)
    out = []
    for xs, us in zip(x, u_x):
        if xs == 0:
            if us != 0:
                raise ValueError("zero consumption with nonzero uncertainty")
            out.append(0.0)
            continue
        f = 100.0 * xs / total
        var = (us / xs) ** 2 + u_total_sq / total**2 - 2.0 * us**2 / (xs * total)
        out.append(f * math.sqrt(max(var, 0.0)))
    return out


def u_allocation_error(u_f_ref: float, u_f_x: float) -> float:
    """Standard uncertainty of one allocation error, percentage points."""
    if u_f_ref < 0 or u_f_x < 0:
        raise ValueError("inputs must be >= 0")
    return math.hypot(u_f_ref, u_f_x)


@dataclass(frozen=True)
class UncertaintyBudget:
    """Full per-radiator and per-subset budget for one method run."""

    radiator_ids: tuple
    u_q_rad: tuple            # kWh per radiator
    subset_ids: tuple
    u_x: tuple                # kWh per subset
    u_f_x: tuple              # pp per subset
    u_f_ref: tuple            # pp per subset
    u_e: tuple                # pp per subset

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "radiators": [{"radiator_id": r, "u_q_rad_kwh": u}
                          for r, u in zip(self.radiator_ids, self.u_q_rad)],
            "subsets": [
                {"subset_id": s, "u_x_kwh": ux, "u_f_x_pp": uf,
                 "u_f_ref_pp": ur, "u_e_pp": ue}
                for s, ux, uf, ur, ue in zip(self.subset_ids, self.u_x,
                                             self.u_f_x, self.u_f_ref,
                                             self.u_e)
            ],
        }


def subset_u_x(member_u: Sequence[float]) -> float:
    """Subset energy uncertainty: root-sum-square of member radiators."""
    return math.sqrt(sum(u * u for u in member_u))


# --- Monte-Carlo cross-check -------------------------------------------------


@dataclass(frozen=True)
class MCCheckResult:
    analytic: float
    empirical: float
    z_score: float
    n_draws: int


class ReferenceEnergyCase:
    """Reference-meter propagation: four Gaussian relative contributions
    plus the rectangular cut-off correction."""

    def __init__(self, q_ref, rel_flow, rel_dt, rel_rho, rel_cp,
                 correction_integral):
        self.q_ref = q_ref
        self.rels = (rel_flow, rel_dt, rel_rho, rel_cp)
        self.correction = correction_integral

    def analytic(self):
        return u_reference_energy(self.q_ref, *self.rels,
                                  u_co=u_cutoff(self.correction))

    def sample(self, rng, n):
        out = np.full(n, float(self.q_ref))
        for rel in self.rels:
            out *= 1.0 + rel * rng.standard_normal(n)
        if self.correction > 0:
            out += rng.uniform(0.0, 2.0 * self.correction, n) - self.correction
        return out


class HcaUnitsCase:
    """Counter propagation: rectangular display deviation plus two
    half-count rectangular resolution terms."""

    def __init__(self, r_count, u_d):
        self.r_count = r_count
        self.u_d = u_d

    def analytic(self):
        return u_hca_units(self.r_count, self.u_d)

    def sample(self, rng, n):
        out = self.r_count * (1.0 + rng.uniform(-self.u_d * SQRT3,
                                                self.u_d * SQRT3, n))
        out += rng.uniform(-0.5, 0.5, n) + rng.uniform(-0.5, 0.5, n)
        return out


class EstimatedEnergyCase:
    """Calibrated-energy propagation: Gaussian meter and parameter terms,
    rectangular model-residual term."""

    def __init__(self, q_rad, u_h, u_k, u_p):
        self.q_rad = q_rad
        self.u_h, self.u_k, self.u_p = u_h, u_k, u_p

    def analytic(self):
        return u_estimated_energy(self.q_rad, self.u_h, self.u_k, self.u_p)

    def sample(self, rng, n):
        out = self.q_rad * (1.0 + self.u_h * rng.standard_normal(n))
        out *= 1.0 + rng.uniform(-self.u_k * SQRT3, self.u_k * SQRT3, n)
        out *= 1.0 + self.u_p * rng.standard_normal(n)
        return out


class FractionCase:
    """Fraction propagation for one subset out of the full vector."""

    def __init__(self, x, u_x, index):
        self.x = list(x)
        self.u_x = list(u_x)
        self.index = index

    def analytic(self):
        return u_fraction(self.x, self.u_x)[self.index]

    def sample(self, rng, n):
        draws = np.empty((len(self.x), n))
        for i, (xs, us) in enumerate(zip(self.x, self.u_x)):
            draws[i] = xs + us * rng.standard_normal(n)
        return 100.0 * draws[self.index] / draws.sum(axis=0)


class AllocationErrorCase:
    """Error propagation: independent Gaussian fraction uncertainties."""

    def __init__(self, u_f_ref, u_f_x):
        self.u_f_ref, self.u_f_x = u_f_ref, u_f_x

    def analytic(self):
        return u_allocation_error(self.u_f_ref, self.u_f_x)

    def sample(self, rng, n):
        return (self.u_f_x * rng.standard_normal(n)
                - self.u_f_ref * rng.standard_normal(n))


def monte_carlo_check(case, n_draws: int = 100_000,
                      seed: int = 0) -> MCCheckResult:
    """Compare a case's analytic uncertainty to an empirical one.

    Uses a counter-based generator keyed on the seed so replications are
    deterministic and independent across cases. The z-score is the
    deviation in units of the MC estimator's own standard error."""
    if n_draws < 10_000:
        raise ValueError("need at least 1e4 draws")
    rng = np.random.Generator(np.random.Philox(key=seed))
    analytic = case.analytic()
    draws = np.asarray(case.sample(rng, n_draws), dtype=float)
    empirical = float(np.std(draws, ddof=1))
    if empirical == 0.0:
        z = 0.0 if analytic == 0.0 else float("inf")
    else:
        se = empirical / math.sqrt(2.0 * (n_draws - 1))
        z = abs(analytic - empirical) / se
    return MCCheckResult(analytic=float(analytic), empirical=empirical,
                         z_score=float(z), n_draws=n_draws)
