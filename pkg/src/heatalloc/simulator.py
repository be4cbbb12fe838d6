"""Deterministic synthetic generator of a heating season.

Produces a full building dataset (STV and HCA device series plus
per-period total energies) together with the ground truth every test
compares against. The generating energy balance is exact by
construction: per period, the configured device model applied to the
noiseless traces times the true parameters, inflated by the pipework
heat-loss fraction, equals the central-meter total.

A fixed seed gives byte-identical output.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .domain import (HCA, STV, Dataset, DeviceTimeSeries, RadiatorSpec,
                     partition_periods)
from .estimator import assemble
from .thermal import kq_from_en442

STEP_S = 300                      # simulation and STV cadence, 5 min
HCA_READ_S = 3 * 3600             # HCA read cadence
DEFAULT_START_EPOCH = 1704067200  # 2024-01-01T00:00:00Z

CLIMATIC_MIN_C = 40.0
CLIMATIC_MAX_C = 70.0

Q_N50_CYCLE = (500.0, 800.0, 1000.0, 1200.0, 1500.0, 2000.0)


def climatic_supply_temp(t_out: float):
    """Heater forward temperature from the linear climatic curve:
    70 degC at 0 degC outdoors down to 40 degC at 20 degC, clamped."""
    return np.clip(CLIMATIC_MAX_C - 1.5 * np.asarray(t_out, dtype=float),
                   CLIMATIC_MIN_C, CLIMATIC_MAX_C)


@dataclass(frozen=True)
class ScenarioConfig:
    n_radiators: int = 20
    duration_days: float = 30.0
    seed: int = 0
    heater_mode: str = "climatic"        # "constant" | "climatic"
    constant_supply_c: float = 55.0
    valve_mode: str = "mixed"            # "rsp" | "psp" | "mixed"
    balance_method: str = HCA            # device model generating the truth
    sampling_frequency_per_h: float = 0.33
    heat_loss_fraction: float = 0.0
    deviation_range: tuple = (1.0, 1.0)  # theta_true / theta_prior factors
    stv_temp_sigma_c: float = 0.0
    flow_sigma_rel: float = 0.0          # on the central-meter totals
    hca_display_bound: float = 0.0       # rectangular half-width, relative
    hca_count_scale: float = 1000.0
    inertia_time_constant_s: float = 1800.0
    indoor_setpoint_c: float = 21.5
    floor_stratification_k: float = 0.5
    n_floors: int = 4
    n_subsets: int = 0                   # 0: one subset per radiator
    outdoor_mean_c: float = 5.0
    outdoor_amplitude_c: float = 5.0
    outdoor_noise_c: float = 0.5
    start_epoch: int = DEFAULT_START_EPOCH

    def validate(self):
        if self.n_radiators < 2:
            raise ValueError("need at least 2 radiators")
        if self.duration_days < 1:
            raise ValueError("duration must be at least 1 day")
        if not 0.0 <= self.heat_loss_fraction <= 0.5:
            raise ValueError("heat-loss fraction must be in [0, 0.5]")
        if self.heater_mode not in ("constant", "climatic"):
            raise ValueError(f"unknown heater mode {self.heater_mode!r}")
        if self.valve_mode not in ("rsp", "psp", "mixed"):
            raise ValueError(f"unknown valve mode {self.valve_mode!r}")
        if self.balance_method not in (HCA, STV):
            raise ValueError(f"unknown balance method {self.balance_method!r}")
        if self.sampling_frequency_per_h <= 0:
            raise ValueError("sampling frequency must be > 0")
        lo, hi = self.deviation_range
        if not 0 < lo <= hi:
            raise ValueError("invalid deviation range")
        if self.n_subsets < 0 or self.n_subsets > self.n_radiators:
            raise ValueError("invalid subset count")


@dataclass(frozen=True)
class GroundTruth:
    radiator_ids: tuple
    theta_true_w: np.ndarray        # K, for the configured balance method
    energies_kwh: np.ndarray        # M x K true radiator energies
    totals_kwh: np.ndarray          # M, includes the heat-loss inflation
    heat_loss_fraction: float
    balance_method: str
    true_traces: dict = field(default_factory=dict, repr=False)

    def season_energy_per_radiator(self) -> np.ndarray:
        return self.energies_kwh.sum(axis=0)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "balance_method": self.balance_method,
            "heat_loss_fraction": self.heat_loss_fraction,
            "radiator_ids": list(self.radiator_ids),
            "theta_true_w": [float(x) for x in self.theta_true_w],
            "energies_kwh": [[float(x) for x in row]
                             for row in self.energies_kwh],
            "totals_kwh": [float(x) for x in self.totals_kwh],
        }


def _first_order_lag(target: np.ndarray, tau_s: float, dt_s: float,
                     initial: float) -> np.ndarray:
    """Discrete y[i] = y[i-1] + a (x[i] - y[i-1]) with a = dt/tau."""
    if tau_s <= 0:
        return target.copy()
    a = min(dt_s / tau_s, 1.0)
    y = lfilter([a], [1.0, -(1.0 - a)], target - initial) + initial
    return y


def _valve_trace(mode: str, j: int, t_s: np.ndarray, room: np.ndarray,
                 setpoint: float) -> np.ndarray:
    """Opening fraction in [0, 1] for radiator j."""
    if mode == "rsp":
        # proportional on (set-point - room) with a 0.2 K dead band
        err = setpoint - room
        s = np.clip(2.0 * (err - 0.2), 0.0, 1.0)
        return np.where(err > 0.2, s, 0.0)
    # psp: programmed daily pattern, staggered per radiator
    hours = (t_s / 3600.0) % 24.0
    on_start = 5.0 + (j * 3) % 7
    on_end = 20.0 + (j * 2) % 4
    level = 0.4 + 0.6 * ((j * 37) % 100) / 100.0
    return np.where((hours >= on_start) & (hours < on_end), level, 0.0)


def _cumulative_trapezoid_hours(values: np.ndarray, dt_s: float) -> np.ndarray:
    inc = 0.5 * (values[1:] + values[:-1]) * dt_s / 3600.0
    return np.concatenate([[0.0], np.cumsum(inc)])


def simulate_season(cfg: ScenarioConfig):
    """Generate a season; returns ``(dataset, ground_truth)``."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)

    n_steps = int(round(cfg.duration_days * 86400 / STEP_S))
    t_rel = np.arange(n_steps + 1, dtype=float) * STEP_S
    times = [cfg.start_epoch + int(t) for t in t_rel]
    end_epoch = times[-1]

    # static per-radiator draws, fixed order for determinism
    k = cfg.n_radiators
    q_n50 = np.array([Q_N50_CYCLE[j % len(Q_N50_CYCLE)] for j in range(k)])
    dev = rng.uniform(cfg.deviation_range[0], cfg.deviation_range[1], k)
    kc_true = rng.uniform(0.7, 1.0, k)
    phases = rng.uniform(0.0, 2.0 * math.pi, k)
    display_factor = (rng.uniform(-cfg.hca_display_bound,
                                  cfg.hca_display_bound, k)
                      if cfg.hca_display_bound > 0 else np.zeros(k))
    # independent day-by-day occupancy modulation per radiator; this is
    # what makes the calibration columns linearly independent
    n_days = int(math.ceil(cfg.duration_days)) + 1
    daily_mod = rng.uniform(0.25, 1.0, (k, n_days))

    # building-level traces
    day_phase = 2.0 * math.pi * t_rel / 86400.0
    outdoor = (cfg.outdoor_mean_c
               + cfg.outdoor_amplitude_c * np.sin(day_phase - math.pi / 2))
    if cfg.outdoor_noise_c > 0:
        outdoor = outdoor + cfg.outdoor_noise_c * rng.standard_normal(
            n_steps + 1)
    if cfg.heater_mode == "constant":
        supply = np.full(n_steps + 1, cfg.constant_supply_c)
    else:
        supply = climatic_supply_temp(outdoor)

    radiators = []
    stv_true = []
    hca_cum_units = []
    true_traces = {}
    for j in range(k):
        floor = j % cfg.n_floors
        setpoint = cfg.indoor_setpoint_c + cfg.floor_stratification_k * floor
        room = setpoint + 0.7 * np.sin(day_phase + phases[j])
        mode = cfg.valve_mode
        if mode == "mixed":
            mode = "rsp" if j % 2 == 0 else "psp"
        s = _valve_trace(mode, j, t_rel, room, setpoint)
        day_idx = (t_rel // 86400).astype(int)
        s = s * daily_mod[j, day_idx]
        target = room + s * (supply - room)
        t_mean = _first_order_lag(target, cfg.inertia_time_constant_s, STEP_S,
                                  initial=room[0])
        t_in = t_mean
        t_surface = room + kc_true[j] * (t_mean - room)

        rid = f"R{j + 1:03d}"
        n_sub = cfg.n_subsets if cfg.n_subsets else k
        subset = f"A{(j * n_sub) // k + 1}"
        radiators.append(RadiatorSpec(
            id=rid, q_n50=q_n50[j], exponent_n=1.3,
            rating_kq=kq_from_en442(q_n50[j], 1.3),
            rating_kc=0.95, rating_kt=1.0, subset_id=subset))

        stv_true.append((t_in, room, s))
        ratio = np.clip(t_surface - room, 0.0, None) / 60.0
        hca_cum_units.append(_cumulative_trapezoid_hours(ratio ** 1.3, STEP_S))
        true_traces[rid] = {"times": times, "t_inlet": t_in, "t_room": room,
                            "t_surface": t_surface}

    periods = partition_periods((cfg.start_epoch, end_epoch),
                                cfg.sampling_frequency_per_h)

    hca_read_idx = np.arange(0, n_steps + 1, HCA_READ_S // STEP_S)
    if hca_read_idx[-1] != n_steps:
        hca_read_idx = np.append(hca_read_idx, n_steps)
    hca_times = [times[i] for i in hca_read_idx]

    def hca_series(j, factor, tag):
        cum = hca_cum_units[j][hca_read_idx]
        counts = np.floor(cfg.hca_count_scale * cum * (1.0 + factor))
        return DeviceTimeSeries(
            device_id=f"hca-{tag}{j + 1:03d}", kind=HCA,
            radiator_id=radiators[j].id,
            samples=tuple((t, (float(c),)) for t, c in zip(hca_times, counts)),
            count_scale=cfg.hca_count_scale)

    def stv_series(j, noisy, tag):
        t_in, room, s = stv_true[j]
        if noisy and cfg.stv_temp_sigma_c > 0:
            t_in = t_in + cfg.stv_temp_sigma_c * rng.standard_normal(len(t_in))
            room = room + cfg.stv_temp_sigma_c * rng.standard_normal(len(room))
        return DeviceTimeSeries(
            device_id=f"stv-{tag}{j + 1:03d}", kind=STV,
            radiator_id=radiators[j].id,
            samples=tuple(
                (t, (float(a), float(b), float(100.0 * c)))
                for t, a, b, c in zip(times, t_in, room, s)))

    # noiseless internal dataset defines the generating energy balance
    internal_series = [hca_series(j, 0.0, "t") for j in range(k)] + \
        [stv_series(j, False, "t") for j in range(k)]
    internal_ds = Dataset(radiators=tuple(radiators),
                          series=tuple(internal_series),
                          periods=tuple(periods),
                          total_energy_per_period=tuple([0.0] * len(periods)))
    a_true = assemble(internal_ds, cfg.balance_method).A

    theta0 = np.array([r.rating_product if cfg.balance_method == HCA
                       else r.q_n50 for r in radiators])
    theta_true = dev * theta0
    energies = a_true * (theta_true / 1000.0)  # kWh, M x K
    totals = (1.0 + cfg.heat_loss_fraction) * energies.sum(axis=1)
    if cfg.flow_sigma_rel > 0:
        measured_totals = totals * (
            1.0 + cfg.flow_sigma_rel * rng.standard_normal(len(totals)))
    else:
        measured_totals = totals.copy()

    public_series = [hca_series(j, display_factor[j], "") for j in range(k)] \
        + [stv_series(j, True, "") for j in range(k)]
    dataset = Dataset(radiators=tuple(radiators),
                      series=tuple(public_series),
                      periods=tuple(periods),
                      total_energy_per_period=tuple(float(x)
                                                    for x in measured_totals))
    truth = GroundTruth(
        radiator_ids=tuple(r.id for r in radiators),
        theta_true_w=theta_true,
        energies_kwh=energies,
        totals_kwh=totals,
        heat_loss_fraction=cfg.heat_loss_fraction,
        balance_method=cfg.balance_method,
        true_traces=true_traces)
    return dataset, truth


def prior_vector(dataset: Dataset, method: str) -> np.ndarray:
    """Prior parameters, W: the explicit per-radiator prior when set, else
    the nominal rating product (HCA) or the EN 442 nominal power (STV)."""
    out = []
    for r in dataset.radiators:
        if r.theta_prior is not None:
            out.append(r.theta_prior)
        elif method == HCA:
            out.append(r.rating_product)
        else:
            out.append(r.q_n50)
    return np.array(out)
