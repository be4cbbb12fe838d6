"""Calibration of radiator thermal parameters from networked indirect
heat-accounting devices, with allocation metrics and uncertainty budgets."""

from .domain import (DHM, HCA, STV, Dataset, DeviceTimeSeries,
                     IntegrationPeriod, RadiatorSpec, partition_periods,
                     validate_dataset)
from .estimator import (DegenerateLCurveError, EstimationResult, LCurvePoint,
                        RlsCalibrator, SamplingMatrix, SingularSystemError,
                        assemble, lcurve_select, recalibrate, solve_rls)
from .metrics import (AllocationReport, GlobalIndicators, SubsetConsumption,
                      allocation_errors, fractions, global_indicators,
                      global_uncertainty)
from .reference import WaterProperties, reference_energy
from .simulator import (GroundTruth, ScenarioConfig, climatic_supply_temp,
                        simulate_season)
from .thermal import (NormalizedTempIntegral, en442_power,
                      hca_allocation_units, hca_energy_term, integral_column,
                      kq_from_en442, stv_energy_term)

__version__ = "0.1.0"

__all__ = [
    "DHM", "HCA", "STV", "Dataset", "DeviceTimeSeries", "IntegrationPeriod",
    "RadiatorSpec", "partition_periods", "validate_dataset",
    "DegenerateLCurveError", "EstimationResult", "LCurvePoint",
    "RlsCalibrator", "SamplingMatrix", "SingularSystemError", "assemble",
    "lcurve_select", "recalibrate", "solve_rls",
    "AllocationReport", "GlobalIndicators", "SubsetConsumption",
    "allocation_errors", "fractions", "global_indicators",
    "global_uncertainty",
    "WaterProperties", "reference_energy",
    "GroundTruth", "ScenarioConfig", "climatic_supply_temp",
    "simulate_season",
    "NormalizedTempIntegral", "en442_power", "hca_allocation_units",
    "hca_energy_term", "integral_column", "kq_from_en442", "stv_energy_term",
]
