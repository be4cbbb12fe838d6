import dataclasses

import pytest

from heatalloc.domain import (HCA, STV, Dataset, DeviceTimeSeries,
                              IntegrationPeriod, RadiatorSpec,
                              partition_periods, validate_dataset)


class TestRadiatorSpec:
    def test_valid(self):
        r = RadiatorSpec(id="r1", q_n50=1000.0, rating_kq=1267.0,
                         rating_kc=0.95)
        assert r.rating_product == pytest.approx(1267.0 * 0.95)

    @pytest.mark.parametrize("kwargs", [
        {"q_n50": 0.0},
        {"q_n50": -5.0},
        {"q_n50": 1000.0, "exponent_n": 0.9},
        {"q_n50": 1000.0, "exponent_n": 2.1},
        {"q_n50": 1000.0, "rating_kq": 0.0},
        {"q_n50": 1000.0, "rating_kc": -1.0},
        {"q_n50": 1000.0, "theta_prior": 0.0},
    ])
    def test_rejects_bad_fields(self, kwargs):
        with pytest.raises(ValueError):
            RadiatorSpec(id="bad", **kwargs)

    def test_prior_defaults_to_none(self):
        assert RadiatorSpec(id="r1", q_n50=500.0).theta_prior is None


class TestIntegrationPeriod:
    def test_duration(self):
        p = IntegrationPeriod(index=0, start=0, end=7200)
        assert p.duration_s == 7200
        assert p.duration_h == 2.0

    def test_end_must_exceed_start(self):
        with pytest.raises(ValueError):
            IntegrationPeriod(index=0, start=100, end=100)


class TestPartitionPeriods:
    def test_69_hours_at_one_third_per_hour(self):
        periods = partition_periods((0, 69 * 3600), 0.33)
        assert len(periods) == 23
        # interior periods last 1/0.33 h, about 3.03 h
        assert periods[0].duration_h == pytest.approx(1 / 0.33, rel=1e-4)
        assert periods[-1].end == 69 * 3600
        for prev, cur in zip(periods, periods[1:]):
            assert cur.start == prev.end

    def test_one_hour_at_one_per_hour(self):
        periods = partition_periods((0, 3600), 1.0)
        assert len(periods) == 1
        assert periods[0].start == 0 and periods[0].end == 3600

    def test_rejects_bad_span_and_frequency(self):
        with pytest.raises(ValueError):
            partition_periods((10, 10), 1.0)
        with pytest.raises(ValueError):
            partition_periods((0, 3600), 0.0)


def _hca(samples, device_id="hca-1", radiator_id="r1"):
    return DeviceTimeSeries(device_id=device_id, kind=HCA,
                            radiator_id=radiator_id, samples=tuple(samples))


class TestValidateDataset:
    def test_clean_simulated_dataset(self, small_dataset):
        assert validate_dataset(small_dataset) == []

    def test_idempotent(self, small_dataset):
        assert validate_dataset(small_dataset) == validate_dataset(
            small_dataset)

    def test_decreasing_hca_count_is_flagged(self, small_dataset):
        target = next(s for s in small_dataset.series if s.kind == HCA)
        samples = list(target.samples)
        t, (c,) = samples[3]
        samples[3] = (t, (samples[2][1][0] - 50.0,))
        corrupted = dataclasses.replace(target, samples=tuple(samples))
        series = tuple(corrupted if s is target else s
                       for s in small_dataset.series)
        expect_dev, expect_t = target.device_id, t
        ds = dataclasses.replace(small_dataset, series=series)
        violations = validate_dataset(ds)
        codes = [v.code for v in violations]
        assert "count_decrease" in codes
        hit = violations[codes.index("count_decrease")]
        assert hit.device_id == expect_dev
        assert hit.timestamp == expect_t

    def test_dangling_radiator_reference(self, small_dataset):
        extra = _hca([(t, p) for t, p in small_dataset.series[0].samples],
                     device_id="hca-x", radiator_id="nope")
        ds = dataclasses.replace(small_dataset,
                                 series=small_dataset.series + (extra,))
        codes = [v.code for v in validate_dataset(ds)]
        assert "dangling_radiator" in codes

    def test_duplicate_series_flagged(self, small_dataset):
        dup = dataclasses.replace(small_dataset.series[0],
                                  device_id="hca-dup")
        ds = dataclasses.replace(small_dataset,
                                 series=small_dataset.series + (dup,))
        codes = [v.code for v in validate_dataset(ds)]
        assert "duplicate_series" in codes

    def test_non_monotone_timestamps(self):
        s = _hca([(0, (0.0,)), (3600, (1.0,)), (3600, (2.0,))])
        ds = Dataset(radiators=(RadiatorSpec(id="r1", q_n50=500.0),),
                     series=(s,), periods=(), total_energy_per_period=())
        codes = [v.code for v in validate_dataset(ds)]
        assert "timestamps_not_increasing" in codes

    def test_temperature_and_valve_ranges(self):
        s = DeviceTimeSeries(
            device_id="stv-1", kind=STV, radiator_id="r1",
            samples=((0, (150.0, 20.0, 50.0)), (300, (45.0, 20.0, 130.0))))
        ds = Dataset(radiators=(RadiatorSpec(id="r1", q_n50=500.0),),
                     series=(s,), periods=(), total_energy_per_period=())
        codes = [v.code for v in validate_dataset(ds)]
        assert "temperature_range" in codes
        assert "valve_position_range" in codes

    def test_coverage_gap(self, small_dataset):
        target = next(s for s in small_dataset.series if s.kind == STV)
        samples = target.samples[:10] + target.samples[30:]
        gapped = dataclasses.replace(target, samples=samples)
        series = tuple(gapped if s is target else s
                       for s in small_dataset.series)
        ds = dataclasses.replace(small_dataset, series=series)
        codes = [v.code for v in validate_dataset(ds)]
        assert "coverage_gap" in codes

    def test_energy_length_mismatch_and_sign(self, small_dataset):
        ds = dataclasses.replace(
            small_dataset,
            total_energy_per_period=small_dataset.total_energy_per_period[:-1])
        codes = [v.code for v in validate_dataset(ds)]
        assert "energy_length_mismatch" in codes

        totals = (-1.0,) + small_dataset.total_energy_per_period[1:]
        ds = dataclasses.replace(small_dataset,
                                 total_energy_per_period=totals)
        codes = [v.code for v in validate_dataset(ds)]
        assert "negative_energy" in codes


class TestDatasetLookups:
    def test_series_for_and_has_series(self, small_dataset):
        rid = small_dataset.radiators[0].id
        assert small_dataset.series_for(rid, HCA).radiator_id == rid
        assert small_dataset.has_series(rid, STV)
        assert not small_dataset.has_series("ghost", HCA)
        with pytest.raises(KeyError):
            small_dataset.series_for("ghost", HCA)

    def test_radiator_by_id(self, small_dataset):
        rid = small_dataset.radiators[2].id
        assert small_dataset.radiator_by_id(rid).id == rid
        with pytest.raises(KeyError):
            small_dataset.radiator_by_id("ghost")
