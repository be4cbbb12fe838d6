"""Forward models of heating-body output and device readings.

Covers the EN 442 steady-state radiator model, the HCA allocation-unit
model with its rating factors, the STV inlet/room-temperature energy
model, and the normalized temperature integrals that populate the
calibration matrix.

Conventions: temperatures in degC, powers in W, energies in kWh, all
time integrals carried in hours. Negative instantaneous temperature
differences are clamped to zero before exponentiation.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass

from .domain import HCA, STV, Dataset, IntegrationPeriod

EN442_BASE_DT = 50.0  # K, base difference for q_N,50 and the STV model
HCA_BASE_DT = 60.0    # K, base for the allocation-unit model


class PeriodNotCoveredError(ValueError):
    """Raised when a series cannot be interpolated over a whole period."""


@dataclass(frozen=True)
class NormalizedTempIntegral:
    """One matrix entry: integral of the normalized temperature term, hours."""

    radiator_id: str
    period_index: int
    value: float


def en442_power(q_n50: float, n: float, t_mean: float, t_air: float) -> float:
    """Steady-state radiator power, W, from the EN 442 model."""
    if q_n50 <= 0:
        raise ValueError("q_n50 must be > 0")
    if not 1.0 <= n <= 2.0:
        raise ValueError("exponent n must be in [1, 2]")
    dt = t_mean - t_air
    if dt <= 0:
        return 0.0
    return q_n50 * (dt / EN442_BASE_DT) ** n


def kq_from_en442(q_n50: float, n: float) -> float:
    """EN 442 -> EN 834 rating conversion: K_Q = q_N,60 = q_N,50 * 1.2**n."""
    if q_n50 <= 0:
        raise ValueError("q_n50 must be > 0")
    return q_n50 * (HCA_BASE_DT / EN442_BASE_DT) ** n


def _interp(t0, v0, t1, v1, t):
    if t1 == t0:
        return v0
    w = (t - t0) / (t1 - t0)
    return v0 + w * (v1 - v0)


def clip_to_period(times, values, period: IntegrationPeriod):
    """Restrict a piecewise-linear series to [period.start, period.end].

    Boundary values come from linear interpolation using the nearest
    sample outside the period; a period with no bracketing samples is not
    covered and raises PeriodNotCoveredError.
    """
    if len(times) != len(values):
        raise ValueError("times and values must have equal length")
    if not times:
        raise PeriodNotCoveredError("empty series")
    start, end = period.start, period.end
    if times[0] > start or times[-1] < end:
        raise PeriodNotCoveredError(
            f"series [{times[0]}, {times[-1]}] does not cover period "
            f"[{start}, {end}]")
    lo = bisect.bisect_left(times, start)
    hi = bisect.bisect_right(times, end)
    out_t = [float(t) for t in times[lo:hi]]
    out_v = list(values[lo:hi])
    if not out_t or out_t[0] > start:
        out_t.insert(0, float(start))
        out_v.insert(0, _interp(times[lo - 1], values[lo - 1],
                                times[lo], values[lo], start))
    if out_t[-1] < end:
        out_t.append(float(end))
        out_v.append(_interp(times[hi - 1], values[hi - 1],
                             times[hi], values[hi], end))
    return out_t, out_v


def _with_zero_crossings(times, values):
    """Insert breakpoints where a piecewise-linear trace crosses zero,
    so that clamping preserves trapezoidal exactness for n = 1."""
    out_t = [times[0]]
    out_v = [values[0]]
    for t0, v0, t1, v1 in zip(times, values, times[1:], values[1:]):
        if (v0 < 0 < v1) or (v1 < 0 < v0):
            tc = t0 + (t1 - t0) * (-v0) / (v1 - v0)
            out_t.append(tc)
            out_v.append(0.0)
        out_t.append(t1)
        out_v.append(v1)
    return out_t, out_v


def normalized_integral(times, delta_t, n: float, base: float,
                        period: IntegrationPeriod) -> float:
    """Trapezoidal integral of (max(dT, 0)/base)**n over the period, hours."""
    ts, vs = clip_to_period(times, delta_t, period)
    ts, vs = _with_zero_crossings(ts, vs)
    fs = [(max(v, 0.0) / base) ** n for v in vs]
    total = 0.0
    for t0, f0, t1, f1 in zip(ts, fs, ts[1:], fs[1:]):
        total += 0.5 * (f0 + f1) * (t1 - t0)
    return total / 3600.0


def hca_allocation_units(times, surface_temps, air_temps, n: float,
                         rating: tuple, period: IntegrationPeriod) -> float:
    """Allocation units totalized over a period (real-valued, unquantized).

    ``rating`` is the (K_Q, K_C, K_T) triple; the integrand is
    ((T_s - T_ar)/60)**n with negative differences contributing zero.
    """
    kq, kc, kt = rating
    dts = [s - a for s, a in zip(surface_temps, air_temps)]
    return kq * kc * kt * normalized_integral(times, dts, n, HCA_BASE_DT, period)


def hca_energy_term(units_in_period: float, theta_j: float) -> float:
    """Radiator energy, kWh, from ratings-1 allocation units and theta in W."""
    return theta_j * units_in_period / 1000.0


def stv_energy_term(times, inlet_temps, room_temps, n: float, theta_j: float,
                    period: IntegrationPeriod) -> float:
    """Radiator energy, kWh, from the STV inlet/room temperature model."""
    dts = [i - r for i, r in zip(inlet_temps, room_temps)]
    integral = normalized_integral(times, dts, n, EN442_BASE_DT, period)
    return theta_j * integral / 1000.0


def extract_method_series(dataset: Dataset, method: str, radiator_id: str):
    """Pull out the per-radiator arrays a matrix column is built from, so
    callers iterating many periods extract them once."""
    if method == HCA:
        series = dataset.series_for(radiator_id, HCA)
        return (series.timestamps(), series.column(0), series.count_scale)
    if method == STV:
        series = dataset.series_for(radiator_id, STV)
        n = dataset.radiator_by_id(radiator_id).exponent_n
        dts = [t_in - t_av for t_in, t_av in
               zip(series.column(0), series.column(1))]
        return (series.timestamps(), dts, n)
    raise ValueError(f"unknown method {method!r}")


def column_entry(method: str, extracted, period: IntegrationPeriod) -> float:
    """Matrix entry from pre-extracted arrays (see extract_method_series)."""
    if method == HCA:
        ts, counts, scale = extracted
        _, clipped = clip_to_period(ts, counts, period)
        return (clipped[-1] - clipped[0]) / scale
    ts, dts, n = extracted
    return normalized_integral(ts, dts, n, EN442_BASE_DT, period)


def integral_column(dataset: Dataset, method: str, radiator_id: str,
                    period: IntegrationPeriod) -> NormalizedTempIntegral:
    """The calibration-matrix entry for one (period, radiator) cell.

    HCA: the ratings-1 allocation-unit count over the period (cumulative
    counts interpolated at the boundaries, divided by the device count
    scale). STV: the normalized inlet/room temperature integral.
    """
    extracted = extract_method_series(dataset, method, radiator_id)
    value = column_entry(method, extracted, period)
    return NormalizedTempIntegral(radiator_id=radiator_id,
                                  period_index=period.index, value=value)
