"""Emergency braking and evasive steering: safety distances, lateral planning and simulation."""

from ._evade import (
    BrakingParams,
    SafetyTriple,
    Scenario,
    ScenarioError,
    SimResult,
    braking_distance,
    collision_hazard_time,
    decel_bounds,
    lateral_clearance,
    plan_evasion,
    run,
    safety_triple,
    standstill_margin,
    ttc_inverse,
)

__all__ = [
    "BrakingParams",
    "SafetyTriple",
    "Scenario",
    "ScenarioError",
    "SimResult",
    "braking_distance",
    "collision_hazard_time",
    "decel_bounds",
    "lateral_clearance",
    "plan_evasion",
    "run",
    "safety_triple",
    "standstill_margin",
    "ttc_inverse",
]
