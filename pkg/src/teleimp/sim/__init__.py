from .world import (
    ContactGeometry,
    ContactParams,
    Effector,
    RigidBody,
    Simulation,
    SimulationFault,
    StepDiagnostics,
    WorldState,
    contact_forces,
    default_world,
    effector_home_pose,
    squeeze_hold_check,
    squeeze_normal_force,
    step,
)

__all__ = [
    "ContactGeometry", "ContactParams", "Effector", "RigidBody", "Simulation",
    "SimulationFault", "StepDiagnostics", "WorldState", "contact_forces",
    "default_world", "effector_home_pose", "squeeze_hold_check",
    "squeeze_normal_force", "step",
]
