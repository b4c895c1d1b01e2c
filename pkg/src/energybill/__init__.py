"""Coupled models of IoT device energy consumption and cloud autoscaling billing."""
from .admission import (ActivityZone, AdmissionPlan, AggregatorScenario, check_feasibility,
                        plan_devices, unit_min_cost)
from .billing import BillingParams, expected_billing, min_billing, optimal_quota
from .distributions import Family, QueryVolumeDistribution
from .energy import (DeviceProfile, EnergyConstraints, EnergyParams, energy_variation,
                     expected_energy, solve_dual, solve_primary)
from .simulator import SimConfig, SweepSeries, simulate_billing, simulate_device_energy, sweep

__version__ = "0.1.0"
