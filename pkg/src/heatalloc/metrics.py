"""Heat-consumption fractions, allocation errors and global indicators.

All fractions are percentages of the building total; allocation errors
are percentage points and sum to zero by construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence


@dataclass(frozen=True)
class SubsetConsumption:
    """Heat consumption of one apartment / subset of radiators."""

    subset_id: str
    x: float                 # kWh, or allocation units for the nominal case
    member_radiators: tuple

    def __post_init__(self):
        if self.x < 0:
            raise ValueError(f"subset {self.subset_id}: consumption < 0")
        if not self.member_radiators:
            raise ValueError(f"subset {self.subset_id}: no member radiators")


@dataclass(frozen=True)
class GlobalIndicators:
    sigma_e: float
    max_e: float
    min_e: float
    mape: float
    delta_e_hca: Optional[float] = None
    p_l: Optional[float] = None
    mean_u_e: Optional[float] = None
    u_g: Optional[float] = None


@dataclass(frozen=True)
class AllocationReport:
    subset_ids: tuple
    fractions: tuple        # %
    fractions_ref: tuple    # %
    errors: tuple           # percentage points
    indicators: GlobalIndicators
    u_errors: tuple = ()    # pp, per subset (optional)

    def to_dict(self) -> dict:
        ind = self.indicators
        u_errors = self.u_errors or (None,) * len(self.subset_ids)
        return {
            "schema_version": 1,
            "subsets": [
                {"subset_id": s, "fraction_pct": f, "fraction_ref_pct": fr,
                 "error_pp": e, "u_error_pp": u}
                for s, f, fr, e, u in zip(self.subset_ids, self.fractions,
                                          self.fractions_ref, self.errors,
                                          u_errors)
            ],
            "globals": {
                "sigma_e_pct": ind.sigma_e,
                "max_e_pct": ind.max_e,
                "min_e_pct": ind.min_e,
                "mape_pct": ind.mape,
                "delta_e_hca_pct": ind.delta_e_hca,
                "p_l_pct": ind.p_l,
                "mean_u_e_pct": ind.mean_u_e,
                "u_g_pct": ind.u_g,
            },
        }


def fractions(consumptions: Sequence[float]) -> list:
    """Per-subset share of the total, in percent."""
    xs = [float(x) for x in consumptions]
    if len(xs) < 2:
        raise ValueError("need at least 2 subsets")
    if any(x < 0 for x in xs):
        raise ValueError("consumptions must be >= 0")
    total = sum(xs)
    if total <= 0:
        raise ValueError("total consumption must be > 0")
    return [100.0 * x / total for x in xs]


def allocation_errors(f: Sequence[float], f_ref: Sequence[float]) -> list:
    """Errors of estimated vs reference fractions, percentage points.

    Both inputs must sum to 100; the returned errors sum to zero."""
    if len(f) != len(f_ref):
        raise ValueError("fraction vectors must have equal length")
    for name, v in (("fractions", f), ("reference fractions", f_ref)):
        if abs(sum(v) - 100.0) > 1e-6:
            raise ValueError(f"{name} must sum to 100")
    return [a - b for a, b in zip(f, f_ref)]


def global_indicators(errors: Sequence[float], f_ref: Sequence[float],
                      baseline_errors: Optional[Sequence[float]] = None
                      ) -> GlobalIndicators:
    """Standard deviation, extrema and MAPE of allocation errors, plus the
    against-baseline indicators when a baseline error vector is supplied.

    The standard deviation is population (divide by the subset count):
    the subsets are a complete enumeration, not a sample. The baseline
    comparison counts a subset as improved only on strict inequality."""
    e = [float(x) for x in errors]
    if len(e) != len(f_ref):
        raise ValueError("errors and reference fractions length mismatch")
    n = len(e)
    mean = sum(e) / n
    sigma = math.sqrt(sum((x - mean) ** 2 for x in e) / n)
    if any(fr == 0 for fr in f_ref):
        raise ValueError("MAPE undefined: a reference fraction is zero")
    mape = (100.0 / n) * sum(abs(x) / fr for x, fr in zip(e, f_ref))
    delta = p_l = None
    if baseline_errors is not None:
        b = [float(x) for x in baseline_errors]
        if len(b) != n:
            raise ValueError("baseline length mismatch")
        delta = sum(abs(x) - abs(y) for x, y in zip(e, b))
        p_l = 100.0 * sum(1 for x, y in zip(e, b) if abs(x) < abs(y)) / n
    return GlobalIndicators(sigma_e=sigma, max_e=max(e), min_e=min(e),
                            mape=mape, delta_e_hca=delta, p_l=p_l)


def global_uncertainty(sigma_e: float, mean_u_e: float) -> float:
    """Global uncertainty of the average individual fraction:
    root-sum-square of the error spread and the mean error uncertainty."""
    if sigma_e < 0 or mean_u_e < 0:
        raise ValueError("inputs must be >= 0")
    return math.hypot(sigma_e, mean_u_e)


def build_report(subset_ids, consumptions, consumptions_ref,
                 baseline_consumptions=None, u_errors=None
                 ) -> AllocationReport:
    """Convenience pipeline: fractions, errors and indicators in one go."""
    f = fractions(consumptions)
    f_ref = fractions(consumptions_ref)
    e = allocation_errors(f, f_ref)
    baseline_e = None
    if baseline_consumptions is not None:
        baseline_e = allocation_errors(fractions(baseline_consumptions), f_ref)
    ind = global_indicators(e, f_ref, baseline_e)
    if u_errors is not None:
        mean_u = sum(u_errors) / len(u_errors)
        ind = GlobalIndicators(
            sigma_e=ind.sigma_e, max_e=ind.max_e, min_e=ind.min_e,
            mape=ind.mape, delta_e_hca=ind.delta_e_hca, p_l=ind.p_l,
            mean_u_e=mean_u, u_g=global_uncertainty(ind.sigma_e, mean_u))
    return AllocationReport(
        subset_ids=tuple(subset_ids), fractions=tuple(f),
        fractions_ref=tuple(f_ref), errors=tuple(e), indicators=ind,
        u_errors=tuple(u_errors) if u_errors is not None else ())
