//! Kinematics, rigid-body dynamics, passive-joint friction, collision checks
//! and fixed-step integration for the six-joint chain.

mod collision;
mod friction;
mod integrate;
mod kinematics;
mod rigid_body;
mod step;

pub use collision::{
    check_collision, point_cylinder_distance, segment_cylinder_distance, segment_segment_distance, world_capsules,
    CollisionFlags, WorldCapsule,
};
pub use friction::{friction_accel, step_friction_accel, FrictionParams};
pub use integrate::{integrate_step, MachineState, SIM_DT};
pub use kinematics::{forward_kinematics, gripper_jacobian, gripper_velocity, ChainFrames, GripperPose};
pub use rigid_body::{
    forward_dynamics, gravity_torques, hybrid_dynamics, inverse_dynamics, kinetic_energy, mass_matrix,
    mechanical_energy, potential_energy, DynamicsTerms, HybridSolution, MassMatrix,
};
pub use step::{passive_swing_step, simulate_step, ActuatedInput, PassiveFriction, StepResult};
