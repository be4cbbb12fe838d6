"""Reference thermal energy from direct heat meters.

Integrates rho * V * c_p * dT over an integration period and applies the
low-flow cut-off correction: half the cut-off flow is assumed whenever the
metered flow has sat at exactly zero for more than one hour while the
inlet-outlet temperature difference stays at or above 8 K.
"""
from __future__ import annotations

from dataclasses import dataclass

from .domain import IntegrationPeriod
from .thermal import clip_to_period

DEFAULT_CUTOFF_L_H = 2.5
CUTOFF_MIN_DT_K = 8.0
CUTOFF_DELAY_S = 3600.0

# Default relative standard uncertainties for the water properties.
U_RHO_REL = 0.0005
U_CP_REL = 0.0075


@dataclass(frozen=True)
class WaterProperties:
    density: float = 997.0        # kg m^-3
    specific_heat: float = 4186.0  # J kg^-1 K^-1
    u_density_rel: float = U_RHO_REL
    u_specific_heat_rel: float = U_CP_REL

    def __post_init__(self):
        if not 900.0 <= self.density <= 1010.0:
            raise ValueError("density outside [900, 1010] kg/m3")
        if not 4100.0 <= self.specific_heat <= 4300.0:
            raise ValueError("specific heat outside [4100, 4300] J/(kg K)")
        if self.u_density_rel < 0 or self.u_specific_heat_rel < 0:
            raise ValueError("uncertainties must be >= 0")


def _zero_flow_eligible_intervals(times, flows):
    """Intervals (after the 1 h delay) in which the cut-off correction may
    apply. The delay clock resets on any nonzero flow sample."""
    intervals = []
    run_start = None
    for i, (t, f) in enumerate(zip(times, flows)):
        if f == 0.0:
            if run_start is None:
                run_start = t
        else:
            if run_start is not None:
                run_end = times[i - 1]  # last sample still metered at zero
                if run_end > run_start + CUTOFF_DELAY_S:
                    intervals.append((run_start + CUTOFF_DELAY_S, run_end))
                run_start = None
    if run_start is not None and times[-1] > run_start + CUTOFF_DELAY_S:
        intervals.append((run_start + CUTOFF_DELAY_S, times[-1]))
    return intervals


def _trapz_ws_to_kwh(ts, ps):
    total = 0.0
    for t0, p0, t1, p1 in zip(ts, ps, ts[1:], ps[1:]):
        total += 0.5 * (p0 + p1) * (t1 - t0)
    return total / 3.6e6  # W*s -> kWh


def _interp_series(ts, vs, t):
    for t0, v0, t1, v1 in zip(ts, vs, ts[1:], vs[1:]):
        if t0 <= t <= t1:
            if t1 == t0:
                return v0
            return v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    raise ValueError("time outside series")


def reference_energy(times, flow_l_h, delta_t_k, props: WaterProperties,
                     period: IntegrationPeriod,
                     cutoff_l_h: float = DEFAULT_CUTOFF_L_H):
    """Reference energy over a period, kWh.

    Returns ``(energy, correction_integral)`` where the second value is
    the integral of the cut-off correction power alone (kWh), needed by
    the uncertainty budget. dT is signed: a direct meter measures the
    actual enthalpy difference, so no clamping is applied.
    """
    if cutoff_l_h <= 0:
        raise ValueError("cutoff must be > 0")
    for f in flow_l_h:
        if f < 0:
            raise ValueError(f"negative flow sample {f}")

    rho_cp = props.density * props.specific_heat
    ts_f, fs = clip_to_period(times, list(flow_l_h), period)
    ts_d, ds = clip_to_period(times, list(delta_t_k), period)

    # base enthalpy power on the clipped flow grid (shared timestamps)
    powers = [rho_cp * (f / 3.6e6) * d for f, d in zip(fs, ds)]
    energy = _trapz_ws_to_kwh(ts_f, powers)

    # cut-off episodes detected on the unclipped series so an episode that
    # began before the period still counts
    correction = 0.0
    q_co_coeff = 0.5 * (cutoff_l_h / 3.6e6) * rho_cp  # W per K of dT
    for lo, hi in _zero_flow_eligible_intervals(list(times), list(flow_l_h)):
        lo = max(lo, float(period.start))
        hi = min(hi, float(period.end))
        if hi <= lo:
            continue
        # refine the dT trace over [lo, hi] with breakpoints at the 8 K
        # threshold crossings so the piecewise integral is exact
        seg_t = [lo] + [t for t in ts_d if lo < t < hi] + [hi]
        seg_d = [_interp_series(ts_d, ds, t) for t in seg_t]
        ref_t, ref_d = [seg_t[0]], [seg_d[0]]
        for t0, d0, t1, d1 in zip(seg_t, seg_d, seg_t[1:], seg_d[1:]):
            if (d0 - CUTOFF_MIN_DT_K) * (d1 - CUTOFF_MIN_DT_K) < 0:
                tc = t0 + (t1 - t0) * (CUTOFF_MIN_DT_K - d0) / (d1 - d0)
                ref_t.append(tc)
                ref_d.append(CUTOFF_MIN_DT_K)
            ref_t.append(t1)
            ref_d.append(d1)
        for t0, d0, t1, d1 in zip(ref_t, ref_d, ref_t[1:], ref_d[1:]):
            if d0 >= CUTOFF_MIN_DT_K and d1 >= CUTOFF_MIN_DT_K:
                correction += 0.5 * (q_co_coeff * d0 + q_co_coeff * d1) \
                    * (t1 - t0) / 3.6e6
    return energy + correction, correction
