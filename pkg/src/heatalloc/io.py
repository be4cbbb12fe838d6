"""Dataset and report serialization.

On-disk layout of a dataset directory:

  radiators.json   registry keyed by radiator id
  devices.json     device index: file, kind, radiator id, count scale
  periods.json     integration periods plus per-period total energy
  <device_id>.csv  one time-series file per device
  ground_truth.json  (simulator output only)

Timestamps are ISO-8601 UTC; numbers are written with 12 significant
digits so a round-trip preserves values to that precision.
"""
from __future__ import annotations

import csv
import json
import os
from datetime import datetime, timezone

from .domain import (DHM, HCA, STV, Dataset, DeviceTimeSeries,
                     IntegrationPeriod, RadiatorSpec)

CSV_COLUMNS = {
    HCA: ("count",),
    STV: ("inlet_temp_c", "ambient_temp_c", "valve_position_pct"),
    DHM: ("flow_l_per_h", "inlet_temp_c", "outlet_temp_c",
          "cumulative_energy_kwh"),
}


def fmt(x: float) -> str:
    return f"{float(x):.12g}"


def iso_utc(epoch_s: int) -> str:
    return datetime.fromtimestamp(epoch_s, tz=timezone.utc).strftime(
        "%Y-%m-%dT%H:%M:%SZ")


def parse_iso_utc(text: str) -> int:
    dt = datetime.strptime(text, "%Y-%m-%dT%H:%M:%SZ").replace(
        tzinfo=timezone.utc)
    return int(dt.timestamp())


def write_json(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def read_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def write_dataset(dataset: Dataset, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    registry = {
        r.id: {
            "q_n50_w": float(r.q_n50),
            "exponent_n": float(r.exponent_n),
            "rating_kq": float(r.rating_kq),
            "rating_kc": float(r.rating_kc),
            "rating_kt": float(r.rating_kt),
            "theta_prior_w": (None if r.theta_prior is None
                              else float(r.theta_prior)),
            "subset_id": r.subset_id,
        }
        for r in dataset.radiators
    }
    write_json(os.path.join(out_dir, "radiators.json"), registry)

    devices = []
    for s in dataset.series:
        devices.append({
            "device_id": s.device_id,
            "file": f"{s.device_id}.csv",
            "kind": s.kind,
            "radiator_id": s.radiator_id,
            "count_scale": float(s.count_scale),
        })
        with open(os.path.join(out_dir, f"{s.device_id}.csv"), "w",
                  newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("timestamp",) + CSV_COLUMNS[s.kind])
            for t, payload in s.samples:
                writer.writerow([iso_utc(t)] + [fmt(v) for v in payload])
    write_json(os.path.join(out_dir, "devices.json"), {"devices": devices})

    write_json(os.path.join(out_dir, "periods.json"), {
        "periods": [
            {"index": p.index, "start": iso_utc(p.start),
             "end": iso_utc(p.end), "total_energy_kwh": float(q)}
            for p, q in zip(dataset.periods, dataset.total_energy_per_period)
        ]
    })


def read_dataset(in_dir: str) -> Dataset:
    registry = read_json(os.path.join(in_dir, "radiators.json"))
    radiators = tuple(
        RadiatorSpec(
            id=rid, q_n50=spec["q_n50_w"], exponent_n=spec["exponent_n"],
            rating_kq=spec["rating_kq"], rating_kc=spec["rating_kc"],
            rating_kt=spec["rating_kt"],
            theta_prior=spec.get("theta_prior_w"),
            subset_id=spec.get("subset_id", ""))
        for rid, spec in registry.items())

    series = []
    for dev in read_json(os.path.join(in_dir, "devices.json"))["devices"]:
        samples = []
        with open(os.path.join(in_dir, dev["file"]), newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            expected = ("timestamp",) + CSV_COLUMNS[dev["kind"]]
            if tuple(header) != expected:
                raise ValueError(
                    f"{dev['file']}: header {header} != {list(expected)}")
            for row in reader:
                samples.append((parse_iso_utc(row[0]),
                                tuple(float(v) for v in row[1:])))
        series.append(DeviceTimeSeries(
            device_id=dev["device_id"], kind=dev["kind"],
            radiator_id=dev.get("radiator_id"),
            samples=tuple(samples),
            count_scale=dev.get("count_scale", 1.0)))

    periods = []
    totals = []
    for entry in read_json(os.path.join(in_dir, "periods.json"))["periods"]:
        periods.append(IntegrationPeriod(index=entry["index"],
                                         start=parse_iso_utc(entry["start"]),
                                         end=parse_iso_utc(entry["end"])))
        totals.append(entry["total_energy_kwh"])
    return Dataset(radiators=radiators, series=tuple(series),
                   periods=tuple(periods),
                   total_energy_per_period=tuple(totals))


def write_report_csv(report, path: str) -> None:
    """Flat CSV: one row per subset, then a globals row."""
    ind = report.indicators
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "subset_id", "fraction_pct",
                         "fraction_ref_pct", "error_pp", "u_error_pp"])
        u_errors = report.u_errors or (None,) * len(report.subset_ids)
        for sid, f, fr, e, u in zip(report.subset_ids, report.fractions,
                                    report.fractions_ref, report.errors,
                                    u_errors):
            writer.writerow(["subset", sid, fmt(f), fmt(fr), fmt(e),
                             "" if u is None else fmt(u)])
        writer.writerow(["globals", "", fmt(ind.sigma_e), fmt(ind.max_e),
                         fmt(ind.min_e), fmt(ind.mape)])


def write_lcurve_csv(points, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda", "residual_norm_kwh",
                         "prior_deviation_norm_w", "curvature"])
        for p in points:
            writer.writerow([fmt(p.lam), fmt(p.residual_norm),
                             fmt(p.prior_deviation_norm), fmt(p.curvature)])
