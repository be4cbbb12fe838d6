"""Core data types for radiator calibration datasets.

All timestamps are integer seconds since the Unix epoch (UTC). Types are
frozen dataclasses: safe to share between threads, and every operation on
them is a pure function.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

HCA = "HCA"
STV = "STV"
DHM = "DHM"

DEVICE_KINDS = (HCA, STV, DHM)

# Nominal device cadences, seconds (STV reports every 5 min, HCA reads at
# most every 3 h). A period counts as covered if no inter-sample gap
# exceeds 3x the cadence.
NOMINAL_CADENCE_S = {HCA: 3 * 3600, STV: 5 * 60, DHM: 15}
GAP_TOLERANCE_FACTOR = 3.0


@dataclass(frozen=True)
class RadiatorSpec:
    """Static description of one heating body."""

    id: str
    q_n50: float  # nominal thermal power at 50 K difference, W
    exponent_n: float = 1.3
    rating_kq: float = 1.0
    rating_kc: float = 1.0
    rating_kt: float = 1.0
    # prior parameter theta0_j, W; None means "derive from ratings (HCA
    # method) or from q_n50 (STV method)"
    theta_prior: Optional[float] = None
    subset_id: str = ""

    def __post_init__(self):
        if not self.q_n50 > 0:
            raise ValueError(f"radiator {self.id}: q_n50 must be > 0")
        if not 1.0 <= self.exponent_n <= 2.0:
            raise ValueError(f"radiator {self.id}: exponent_n must be in [1, 2]")
        for name in ("rating_kq", "rating_kc", "rating_kt"):
            if not getattr(self, name) > 0:
                raise ValueError(f"radiator {self.id}: {name} must be > 0")
        if self.theta_prior is not None and not self.theta_prior > 0:
            raise ValueError(f"radiator {self.id}: theta_prior must be > 0")

    @property
    def rating_product(self) -> float:
        return self.rating_kq * self.rating_kc * self.rating_kt


@dataclass(frozen=True)
class DeviceTimeSeries:
    """Timestamped readings from one device.

    Payload tuples by kind:
      HCA: (count,)                       cumulative allocation-unit count
      STV: (t_inlet, t_ambient, valve_pct)
      DHM: (flow_l_h, t_in, t_out, cum_energy_kwh)
    """

    device_id: str
    kind: str
    samples: tuple  # tuple of (timestamp_s, payload tuple)
    radiator_id: Optional[str] = None
    # HCA only: raw counts per ratings-1 allocation unit (devices can be
    # configured at a high internal count rate to boost resolution);
    # matrix entries divide the counter by this scale.
    count_scale: float = 1.0

    def __post_init__(self):
        if self.kind not in DEVICE_KINDS:
            raise ValueError(f"device {self.device_id}: unknown kind {self.kind!r}")

    def timestamps(self):
        return [t for t, _ in self.samples]

    def column(self, idx: int):
        return [p[idx] for _, p in self.samples]


@dataclass(frozen=True)
class IntegrationPeriod:
    """One energy sampling interval [start, end)."""

    index: int
    start: int
    end: int

    def __post_init__(self):
        if not self.end > self.start:
            raise ValueError(f"period {self.index}: end must exceed start")

    @property
    def duration_s(self) -> int:
        return self.end - self.start

    @property
    def duration_h(self) -> float:
        return (self.end - self.start) / 3600.0


@dataclass(frozen=True)
class Dataset:
    """A whole season of readings plus the period grid and total energies."""

    radiators: tuple  # tuple[RadiatorSpec, ...]
    series: tuple  # tuple[DeviceTimeSeries, ...]
    periods: tuple  # tuple[IntegrationPeriod, ...]
    total_energy_per_period: tuple  # kWh, one entry per period

    def radiator_by_id(self, radiator_id: str) -> RadiatorSpec:
        for r in self.radiators:
            if r.id == radiator_id:
                return r
        raise KeyError(radiator_id)

    def series_for(self, radiator_id: str, kind: str) -> DeviceTimeSeries:
        for s in self.series:
            if s.radiator_id == radiator_id and s.kind == kind:
                return s
        raise KeyError((radiator_id, kind))

    def has_series(self, radiator_id: str, kind: str) -> bool:
        try:
            self.series_for(radiator_id, kind)
            return True
        except KeyError:
            return False


@dataclass(frozen=True)
class Violation:
    """One dataset-validation failure; collected, never raised."""

    code: str
    message: str
    device_id: Optional[str] = None
    timestamp: Optional[int] = None

    def __str__(self):
        loc = ""
        if self.device_id is not None:
            loc += f" device={self.device_id}"
        if self.timestamp is not None:
            loc += f" t={self.timestamp}"
        return f"[{self.code}]{loc} {self.message}"


def _check_series(s: DeviceTimeSeries) -> list:
    out = []
    prev_t = None
    prev_cum = None
    for t, payload in s.samples:
        if prev_t is not None and t <= prev_t:
            out.append(Violation("timestamps_not_increasing",
                                 "timestamps must be strictly increasing",
                                 s.device_id, t))
        prev_t = t
        if s.kind == HCA:
            (count,) = payload
            if count < 0:
                out.append(Violation("negative_count", f"count {count} < 0",
                                     s.device_id, t))
            if prev_cum is not None and count < prev_cum:
                out.append(Violation("count_decrease",
                                     f"cumulative count fell from {prev_cum} to {count}",
                                     s.device_id, t))
            prev_cum = count
        elif s.kind == STV:
            t_in, t_av, pos = payload
            for name, val in (("inlet", t_in), ("ambient", t_av)):
                if not -20.0 <= val <= 120.0:
                    out.append(Violation("temperature_range",
                                         f"{name} temperature {val} outside [-20, 120] C",
                                         s.device_id, t))
            if not 0.0 <= pos <= 100.0:
                out.append(Violation("valve_position_range",
                                     f"valve position {pos} outside [0, 100]",
                                     s.device_id, t))
        elif s.kind == DHM:
            flow, t_in, t_out, cum = payload
            if flow < 0:
                out.append(Violation("negative_flow", f"flow {flow} < 0",
                                     s.device_id, t))
            for name, val in (("inlet", t_in), ("outlet", t_out)):
                if not -20.0 <= val <= 120.0:
                    out.append(Violation("temperature_range",
                                         f"{name} temperature {val} outside [-20, 120] C",
                                         s.device_id, t))
            if prev_cum is not None and cum < prev_cum:
                out.append(Violation("energy_decrease",
                                     f"cumulative energy fell from {prev_cum} to {cum}",
                                     s.device_id, t))
            prev_cum = cum
    return out


def _check_coverage(s: DeviceTimeSeries, periods) -> list:
    out = []
    if not periods:
        return out
    max_gap = GAP_TOLERANCE_FACTOR * NOMINAL_CADENCE_S[s.kind]
    ts = s.timestamps()
    if not ts:
        out.append(Violation("empty_series", "series has no samples", s.device_id))
        return out
    span_start = periods[0].start
    span_end = periods[-1].end
    if ts[0] > span_start + max_gap or ts[-1] < span_end - max_gap:
        out.append(Violation("coverage_gap",
                             "samples do not cover the period span",
                             s.device_id))
        return out
    for a, b in zip(ts, ts[1:]):
        if b - a > max_gap and a < span_end and b > span_start:
            out.append(Violation("coverage_gap",
                                 f"gap of {b - a} s exceeds tolerance {max_gap:.0f} s",
                                 s.device_id, a))
    return out


def validate_dataset(d: Dataset) -> list:
    """Return every invariant violation found in ``d`` (empty list if clean).

    Pure and idempotent: repeated calls return identical lists.
    """
    out = []
    radiator_ids = {r.id for r in d.radiators}
    seen = set()
    for s in d.series:
        if s.radiator_id is not None and s.radiator_id not in radiator_ids:
            out.append(Violation("dangling_radiator",
                                 f"series references unknown radiator {s.radiator_id!r}",
                                 s.device_id))
        if s.radiator_id is not None:
            key = (s.radiator_id, s.kind)
            if key in seen:
                out.append(Violation("duplicate_series",
                                     f"multiple {s.kind} series for radiator {s.radiator_id!r}",
                                     s.device_id))
            seen.add(key)
        out.extend(_check_series(s))
        out.extend(_check_coverage(s, d.periods))
    for prev, cur in zip(d.periods, d.periods[1:]):
        if cur.start != prev.end:
            out.append(Violation("periods_not_contiguous",
                                 f"period {cur.index} starts at {cur.start}, "
                                 f"previous ends at {prev.end}"))
    if len(d.total_energy_per_period) != len(d.periods):
        out.append(Violation("energy_length_mismatch",
                             f"{len(d.total_energy_per_period)} energies for "
                             f"{len(d.periods)} periods"))
    for i, q in enumerate(d.total_energy_per_period):
        if q < 0:
            out.append(Violation("negative_energy",
                                 f"total energy {q} kWh < 0 in period {i}"))
    return out


def partition_periods(span: tuple, frequency_per_h: float) -> list:
    """Split ``span = (start, end)`` into contiguous equal periods.

    ``frequency_per_h`` is the number of energy samplings per hour; each
    period lasts 1/frequency hours, the last one truncated at the span end.
    """
    start, end = span
    if end <= start:
        raise ValueError("span must have positive duration")
    if frequency_per_h <= 0:
        raise ValueError("frequency must be > 0")
    span_h = (end - start) / 3600.0
    count = math.ceil(span_h * frequency_per_h - 1e-12)
    period_s = 3600.0 / frequency_per_h
    periods = []
    for i in range(count):
        p_start = start + round(i * period_s)
        p_end = min(start + round((i + 1) * period_s), end)
        if i == count - 1:
            p_end = end
        periods.append(IntegrationPeriod(index=i, start=p_start, end=p_end))
    return periods
