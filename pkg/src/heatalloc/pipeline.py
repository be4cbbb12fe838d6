"""End-to-end evaluation runs: estimate, allocate, score, and budget.

Produces the comparison between the nominal HCA allocation, the
calibrated HCA method, and the calibrated STV method, against reference
per-radiator energies, together with the full uncertainty budget.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import metrics, uncertainty
from .domain import HCA, STV, Dataset
from .estimator import (EstimationResult, SamplingMatrix, assemble,
                        lcurve_select, solve_rls)
from .simulator import ScenarioConfig, prior_vector, simulate_season

METHOD_HCA_NOMINAL = "hca_nominal"
METHOD_HCA_IMPROVED = "hca_improved"
METHOD_STV_IMPROVED = "stv_improved"
ALL_METHODS = (METHOD_HCA_NOMINAL, METHOD_HCA_IMPROVED, METHOD_STV_IMPROVED)

# default reference-meter relative uncertainty: flow, dT (0.04 K at a
# 10 K difference), water density and specific heat, root-sum-squared
DEFAULT_U_REF_REL = float(np.sqrt(0.0015**2 + 0.004**2
                                  + 0.0005**2 + 0.0075**2))


def subsets_of(dataset: Dataset):
    """Ordered mapping subset_id -> list of radiator indices."""
    out = {}
    for i, r in enumerate(dataset.radiators):
        sid = r.subset_id or r.id
        out.setdefault(sid, []).append(i)
    return out


def _aggregate(values, subsets):
    return [float(sum(values[i] for i in idx)) for idx in subsets.values()]


def _aggregate_u(u_values, subsets):
    return [uncertainty.subset_u_x([u_values[i] for i in idx])
            for idx in subsets.values()]


@dataclass(frozen=True)
class MethodEvaluation:
    label: str
    report: metrics.AllocationReport
    budget: uncertainty.UncertaintyBudget
    estimate: EstimationResult = None


def _resolve_lambda(sm: SamplingMatrix, theta0, lam, lambda_grid):
    if lam == "auto":
        lam_star, points = lcurve_select(sm, theta0, lambda_grid)
        return lam_star, points
    return float(lam), None


def evaluate_methods(dataset: Dataset, reference_kwh_per_radiator,
                     methods=ALL_METHODS, lam="auto", lambda_grid=None,
                     u_ref_rel=DEFAULT_U_REF_REL,
                     u_h=uncertainty.U_H_DEFAULT,
                     u_k=uncertainty.U_K_DEFAULT,
                     u_d=uncertainty.U_D_BAND_15_40):
    """Score each requested method against the reference energies.

    Returns ``{label: MethodEvaluation}``. The nominal-HCA allocation is
    always computed first so it can serve as the comparison baseline."""
    subsets = subsets_of(dataset)
    subset_ids = list(subsets.keys())
    ref = np.asarray(reference_kwh_per_radiator, dtype=float)
    if len(ref) != len(dataset.radiators):
        raise ValueError("reference energies length mismatch")
    x_ref = _aggregate(ref, subsets)
    u_ref = [u_ref_rel * q for q in ref]
    u_x_ref = _aggregate_u(u_ref, subsets)
    u_f_ref = uncertainty.u_fraction(x_ref, u_x_ref)
    f_ref = metrics.fractions(x_ref)

    sm_hca = assemble(dataset, HCA) if any(
        m.startswith("hca") for m in (*methods, METHOD_HCA_NOMINAL)) else None
    results = {}

    def build(label, per_radiator_x, per_radiator_u, estimate=None,
              baseline_errors=None):
        x = _aggregate(per_radiator_x, subsets)
        u_x = _aggregate_u(per_radiator_u, subsets)
        f = metrics.fractions(x)
        errors = metrics.allocation_errors(f, f_ref)
        u_f = uncertainty.u_fraction(x, u_x)
        u_e = [uncertainty.u_allocation_error(a, b)
               for a, b in zip(u_f_ref, u_f)]
        ind = metrics.global_indicators(errors, f_ref, baseline_errors)
        mean_u = sum(u_e) / len(u_e)
        ind = metrics.GlobalIndicators(
            sigma_e=ind.sigma_e, max_e=ind.max_e, min_e=ind.min_e,
            mape=ind.mape, delta_e_hca=ind.delta_e_hca, p_l=ind.p_l,
            mean_u_e=mean_u,
            u_g=metrics.global_uncertainty(ind.sigma_e, mean_u))
        report = metrics.AllocationReport(
            subset_ids=tuple(subset_ids), fractions=tuple(f),
            fractions_ref=tuple(f_ref), errors=tuple(errors),
            indicators=ind, u_errors=tuple(u_e))
        budget = uncertainty.UncertaintyBudget(
            radiator_ids=tuple(r.id for r in dataset.radiators),
            u_q_rad=tuple(per_radiator_u),
            subset_ids=tuple(subset_ids),
            u_x=tuple(u_x), u_f_x=tuple(u_f),
            u_f_ref=tuple(u_f_ref), u_e=tuple(u_e))
        return MethodEvaluation(label=label, report=report, budget=budget,
                                estimate=estimate)

    # nominal HCA baseline (manufacturer rating factors, no calibration)
    units = sm_hca.A.sum(axis=0)  # ratings-1 allocation unit-hours
    ratings = np.array([r.rating_product for r in dataset.radiators])
    x_nom = ratings * units
    u_nom = []
    for j, r in enumerate(dataset.radiators):
        series = dataset.series_for(r.id, HCA)
        raw = max(int(round(units[j] * series.count_scale)), 1)
        u_nom.append(ratings[j]
                     * uncertainty.u_hca_units(raw, u_d) / series.count_scale)
    baseline = build(METHOD_HCA_NOMINAL, x_nom, u_nom)
    baseline_errors = baseline.report.errors
    if METHOD_HCA_NOMINAL in methods:
        results[METHOD_HCA_NOMINAL] = build(METHOD_HCA_NOMINAL, x_nom, u_nom,
                                            baseline_errors=baseline_errors)

    for label, method in ((METHOD_HCA_IMPROVED, HCA),
                          (METHOD_STV_IMPROVED, STV)):
        if label not in methods:
            continue
        sm = sm_hca if method == HCA else assemble(dataset, STV)
        theta0 = prior_vector(dataset, method)
        lam_val, _ = _resolve_lambda(sm, theta0, lam, lambda_grid)
        est = solve_rls(sm, theta0, lam_val)
        col = sm.A.sum(axis=0)
        x = est.theta_hat * col / 1000.0  # kWh per radiator
        u_p = est.u_parameter_rel()
        u_q = [uncertainty.u_estimated_energy(q, u_h, u_k, up)
               for q, up in zip(x, u_p)]
        results[label] = build(label, x, u_q, estimate=est,
                               baseline_errors=baseline_errors)
    return results


def sensitivity_suite(base: ScenarioConfig, axis: str, levels,
                      lam="auto", lambda_grid=None):
    """Re-run the whole pipeline across one sensitivity axis.

    ``axis`` is "frequency" (samplings per hour), "heat_loss" (fraction
    of the total), or "prior_offset" (constant relative offset applied to
    the prior parameters). Returns one indicator row per level for the
    calibrated HCA method, with the nominal HCA numbers alongside."""
    if not levels:
        raise ValueError("need at least one level")
    rows = []
    for level in levels:
        if axis == "frequency":
            cfg = replace(base, sampling_frequency_per_h=level)
        elif axis == "heat_loss":
            cfg = replace(base, heat_loss_fraction=level)
        elif axis == "prior_offset":
            cfg = base
        else:
            raise ValueError(f"unknown axis {axis!r}")
        dataset, truth = simulate_season(cfg)
        ref = truth.season_energy_per_radiator()
        if axis == "prior_offset":
            theta0 = prior_vector(dataset, HCA) * (1.0 + level)
            sm = assemble(dataset, HCA)
            lam_val, _ = _resolve_lambda(sm, theta0, lam, lambda_grid)
            est = solve_rls(sm, theta0, lam_val)
            subsets = subsets_of(dataset)
            units = sm.A.sum(axis=0)
            x = est.theta_hat * units / 1000.0
            ratings = np.array([r.rating_product for r in dataset.radiators])
            f = metrics.fractions(_aggregate(x, subsets))
            f_ref = metrics.fractions(
                _aggregate(ref, subsets))
            f_nom = metrics.fractions(_aggregate(ratings * units, subsets))
            errors = metrics.allocation_errors(f, f_ref)
            base_errors = metrics.allocation_errors(f_nom, f_ref)
            ind = metrics.global_indicators(errors, f_ref, base_errors)
        else:
            evals = evaluate_methods(
                dataset, ref, methods=(METHOD_HCA_NOMINAL,
                                       METHOD_HCA_IMPROVED),
                lam=lam, lambda_grid=lambda_grid)
            ind = evals[METHOD_HCA_IMPROVED].report.indicators
        rows.append({
            "axis": axis, "level": float(level),
            "sigma_e_pct": ind.sigma_e, "max_e_pct": ind.max_e,
            "min_e_pct": ind.min_e, "mape_pct": ind.mape,
            "p_l_pct": ind.p_l, "delta_e_hca_pct": ind.delta_e_hca,
        })
    return rows
