"""EV ridepooling fleet simulator: road networks, battery model, demand
synthesis, charge scheduling and a whole-day batch simulator."""

from ._evfleet import *  # noqa: F401,F403
from ._evfleet import __doc__ as _core_doc  # noqa: F401

__all__ = [
    "Arc",
    "AvailabilityRequirement",
    "BatteryModel",
    "ChargeSample",
    "ConfigError",
    "Event",
    "EventKind",
    "EventLog",
    "InitialCharge",
    "InvalidArgument",
    "Method",
    "Metrics",
    "NodePoint",
    "QosPolicy",
    "Request",
    "RoadNetwork",
    "ScenarioConfig",
    "SimResult",
    "Station",
    "UnknownNode",
    "availability_requirement",
    "avg_cost",
    "calibrate_lambda",
    "charge_curve",
    "charge_time_from_empty",
    "demand_profile",
    "discharge",
    "load_requests",
    "optimal_charge_to",
    "place_stations_greedy",
    "place_stations_kmeans",
    "run",
    "save_events",
    "save_metrics",
    "save_requests",
    "solve_beta",
    "synth_requests",
]
