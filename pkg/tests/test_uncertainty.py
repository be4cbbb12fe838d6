import math

import numpy as np
import pytest

from heatalloc.uncertainty import (AllocationErrorCase, EstimatedEnergyCase,
                                   FractionCase, HcaUnitsCase,
                                   ReferenceEnergyCase, SQRT3,
                                   UncertaintyBudget, monte_carlo_check,
                                   subset_u_x, u_allocation_error, u_cutoff,
                                   u_display, u_estimated_energy, u_fraction,
                                   u_hca_units, u_reference_energy)


class TestUDisplay:
    def test_in_band(self):
        assert u_display(25.0) == pytest.approx(0.05 / SQRT3)

    def test_out_of_band_warns(self):
        with pytest.warns(UserWarning, match="15-40 K"):
            value = u_display(10.0)
        assert value == pytest.approx(0.08 / SQRT3)


class TestUCutoff:
    def test_rectangular_width(self):
        assert u_cutoff(3.0) == pytest.approx(3.0 / SQRT3)
        assert u_cutoff(3.0) == pytest.approx(1.7321, abs=5e-4)
        assert u_cutoff(0.0) == 0.0

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            u_cutoff(-0.1)


class TestUReferenceEnergy:
    def test_default_contribution_set(self):
        u = u_reference_energy(100.0, 0.0015, 0.004, 0.0005, 0.0075, 0.0)
        expected = 100.0 * math.sqrt(
            0.0015 ** 2 + 0.004 ** 2 + 0.0005 ** 2 + 0.0075 ** 2)
        assert expected == pytest.approx(0.8646, abs=5e-4)
        assert u == pytest.approx(expected)

    def test_correction_only(self):
        u = u_reference_energy(100.0, 0.0, 0.0, 0.0, 0.0, u_cutoff(3.0))
        assert u == pytest.approx(3.0 / SQRT3)

    def test_all_zero(self):
        assert u_reference_energy(0.0, 0.0, 0.0, 0.0, 0.0, 0.0) == 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            u_reference_energy(100.0, -0.1, 0.0, 0.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            u_reference_energy(0.0, 0.0, 0.0, 0.0, 0.0, 1.0)


class TestUHcaUnits:
    def test_with_display_deviation(self):
        u = u_hca_units(100, 0.05 / SQRT3)
        assert u == pytest.approx(2.9155, abs=5e-4)

    def test_resolution_only(self):
        # two half-count rectangular reads: 100 * sqrt(2) / (200 sqrt(3))
        u = u_hca_units(100, 0.0)
        assert u == pytest.approx(100.0 * math.sqrt(2.0) / (200.0 * SQRT3))
        assert u == pytest.approx(0.40825, abs=5e-5)

    def test_relative_uncertainty_vanishes_for_large_counts(self):
        rel = [u_hca_units(r, 0.0) / r for r in (10, 1000, 100000)]
        assert rel[0] > rel[1] > rel[2]
        assert rel[2] < 1e-5

    def test_validation(self):
        with pytest.raises(ValueError):
            u_hca_units(0, 0.01)
        with pytest.raises(ValueError):
            u_hca_units(10, -0.1)


class TestUEstimatedEnergy:
    def test_worked_example(self):
        u = u_estimated_energy(100.0, 0.01, 0.02 / SQRT3, 0.005)
        assert u == pytest.approx(1.6073, abs=5e-4)

    def test_all_zero(self):
        assert u_estimated_energy(0.0, 0.0, 0.0, 0.0) == 0.0

    def test_out_of_band_parameter_term_warns(self):
        with pytest.warns(UserWarning, match="expected band"):
            u_estimated_energy(100.0, 0.01, 0.0, 0.2)


class TestUFraction:
    def test_two_equal_subsets(self):
        u = u_fraction([50.0, 50.0], [1.0, 1.0])
        assert u[0] == pytest.approx(0.7071, abs=5e-4)
        assert u[0] == pytest.approx(u[1])

    def test_zero_uncertainty(self):
        assert u_fraction([50.0, 50.0], [0.0, 0.0]) == [0.0, 0.0]

    def test_zero_consumption_subset(self):
        u = u_fraction([100.0, 0.0], [1.0, 0.0])
        assert u[1] == 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            u_fraction([50.0], [1.0, 1.0])
        with pytest.raises(ValueError):
            u_fraction([0.0, 0.0], [0.0, 0.0])
        with pytest.raises(ValueError):
            u_fraction([100.0, 0.0], [1.0, 0.5])


class TestUAllocationError:
    def test_three_four_five(self):
        assert u_allocation_error(0.3, 0.4) == pytest.approx(0.5)

    def test_zero_cases(self):
        assert u_allocation_error(0.0, 0.0) == 0.0
        assert u_allocation_error(0.6, 0.0) == pytest.approx(0.6)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            u_allocation_error(-0.1, 0.4)


class TestSubsetAggregation:
    def test_root_sum_square(self):
        assert subset_u_x([3.0, 4.0]) == pytest.approx(5.0)
        assert subset_u_x([]) == 0.0

    def test_budget_serialization(self):
        budget = UncertaintyBudget(
            radiator_ids=("R001",), u_q_rad=(1.5,), subset_ids=("A1",),
            u_x=(1.5,), u_f_x=(0.2,), u_f_ref=(0.1,), u_e=(0.224,))
        d = budget.to_dict()
        assert d["radiators"][0]["u_q_rad_kwh"] == 1.5
        assert d["subsets"][0]["u_e_pp"] == 0.224


class TestMonteCarloChecks:
    def test_reference_energy_case(self):
        case = ReferenceEnergyCase(q_ref=100.0, rel_flow=0.0015,
                                   rel_dt=0.004, rel_rho=0.0005,
                                   rel_cp=0.0075, correction_integral=1.0)
        check = monte_carlo_check(case, seed=1)
        assert check.z_score <= 3.0

    def test_hca_units_case(self):
        check = monte_carlo_check(HcaUnitsCase(100, 0.05 / SQRT3), seed=2)
        assert check.z_score <= 3.0

    def test_estimated_energy_case(self):
        case = EstimatedEnergyCase(100.0, 0.01, 0.02 / SQRT3, 0.005)
        check = monte_carlo_check(case, seed=3)
        assert check.z_score <= 3.0

    def test_fraction_case_balanced(self):
        case = FractionCase([50.0, 50.0], [1.0, 1.0], index=0)
        check = monte_carlo_check(case, seed=4)
        assert check.z_score <= 3.0

    def test_fraction_case_skewed_shares(self):
        # the linearization degrades for a dominant subset: allow a wider
        # band, as for the first-order approximation it cross-checks
        case = FractionCase([97.0, 2.0, 1.0], [2.0, 0.3, 0.2], index=0)
        check = monte_carlo_check(case, seed=5)
        assert check.z_score <= 5.0

    def test_allocation_error_case(self):
        check = monte_carlo_check(AllocationErrorCase(0.3, 0.4), seed=6)
        assert check.z_score <= 3.0

    def test_zero_uncertainty_inputs(self):
        case = EstimatedEnergyCase(100.0, 0.0, 0.0, 0.0)
        check = monte_carlo_check(case, seed=7)
        assert check.empirical == 0.0
        assert check.z_score == 0.0

    def test_deterministic_replication(self):
        case = HcaUnitsCase(100, 0.01)
        a = monte_carlo_check(case, seed=11)
        b = monte_carlo_check(case, seed=11)
        assert a.empirical == b.empirical

    def test_minimum_draws(self):
        with pytest.raises(ValueError):
            monte_carlo_check(HcaUnitsCase(100, 0.01), n_draws=100)


class TestFractionMonteCarloAgainstBruteForce:
    def test_dominant_subset_limit(self):
        # analytic propagation must track the brute-force spread even when
        # one subset carries almost the whole total
        x = [100.0, 1e-3]
        u = [1.0, 1e-4]
        case = FractionCase(x, u, index=0)
        check = monte_carlo_check(case, n_draws=200_000, seed=8)
        assert check.z_score <= 5.0

    def test_empirical_matches_numpy_std(self):
        case = FractionCase([60.0, 40.0], [0.6, 0.4], index=1)
        check = monte_carlo_check(case, seed=9)
        rng = np.random.Generator(np.random.Philox(key=9))
        draws = case.sample(rng, check.n_draws)
        assert check.empirical == pytest.approx(
            float(np.std(draws, ddof=1)))
