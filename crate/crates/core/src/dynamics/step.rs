use nalgebra::{Vector2, Vector4};

use super::friction::{step_friction_accel, FrictionParams};
use super::integrate::{integrate_step, MachineState};
use super::rigid_body::DynamicsTerms;
use crate::error::{Error, Result};
use crate::model::{JointVector, MachineModel, NUM_ACTUATED, NUM_PASSIVE};

/// Friction parameters of the pitch and roll joints.
pub type PassiveFriction = [FrictionParams; NUM_PASSIVE];

/// What drives the actuated joints for one simulation step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ActuatedInput {
    /// Prescribed accelerations (inverse-dynamics control).
    Acceleration(Vector4<f64>),
    /// Prescribed torques (forces for the telescope).
    Torque(Vector4<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepResult {
    pub state: MachineState,
    /// Generalized forces applied during the step, friction included.
    pub tau: JointVector,
    pub ddq: JointVector,
}

/// Advance the machine by one step of length `dt`.
///
/// Friction on the passive joints is a joint acceleration. Its generalized
/// force is `M_pp * a_f`, which for prescribed actuated accelerations adds
/// exactly `a_f` to the passive accelerations.
pub fn simulate_step(
    model: &MachineModel,
    state: &MachineState,
    input: &ActuatedInput,
    friction: &PassiveFriction,
    dt: f64,
) -> Result<StepResult> {
    let terms = DynamicsTerms::new(model, &state.q, &state.dq);
    let (mut tau, mut ddq) = match input {
        ActuatedInput::Acceleration(acc) => {
            let sol = terms.hybrid(acc, &Vector2::zeros())?;
            let mut ddq = JointVector::zeros();
            ddq.fixed_rows_mut::<NUM_ACTUATED>(0).copy_from(acc);
            ddq.fixed_rows_mut::<NUM_PASSIVE>(NUM_ACTUATED).copy_from(&sol.ddq_passive);
            let mut tau = JointVector::zeros();
            tau.fixed_rows_mut::<NUM_ACTUATED>(0).copy_from(&sol.tau_actuated);
            (tau, ddq)
        }
        ActuatedInput::Torque(t) => {
            let mut tau = JointVector::zeros();
            tau.fixed_rows_mut::<NUM_ACTUATED>(0).copy_from(t);
            (tau, terms.forward(&tau)?)
        }
    };

    let mut a_f = Vector2::zeros();
    for k in 0..NUM_PASSIVE {
        let i = NUM_ACTUATED + k;
        let predicted = state.dq[i] + ddq[i] * dt;
        a_f[k] = step_friction_accel(&friction[k], state.dq[i], predicted, dt);
    }
    if a_f != Vector2::zeros() {
        let m_pp = terms.mass.fixed_view::<NUM_PASSIVE, NUM_PASSIVE>(NUM_ACTUATED, NUM_ACTUATED);
        let tau_p = m_pp * a_f;
        match input {
            ActuatedInput::Acceleration(_) => {
                let m_ap = terms.mass.fixed_view::<NUM_ACTUATED, NUM_PASSIVE>(0, NUM_ACTUATED);
                let mut top = tau.fixed_rows_mut::<NUM_ACTUATED>(0);
                top += m_ap * a_f;
                for k in 0..NUM_PASSIVE {
                    ddq[NUM_ACTUATED + k] += a_f[k];
                }
            }
            ActuatedInput::Torque(_) => {
                let mut extra = JointVector::zeros();
                extra.fixed_rows_mut::<NUM_PASSIVE>(NUM_ACTUATED).copy_from(&tau_p);
                let chol = terms.mass.cholesky().ok_or(Error::SingularInertia)?;
                ddq += chol.solve(&extra);
            }
        }
        tau.fixed_rows_mut::<NUM_PASSIVE>(NUM_ACTUATED).copy_from(&tau_p);
    }

    let next = integrate_step(model, state, &ddq, dt);
    if !next.is_finite() {
        return Err(Error::Divergence(format!("non-finite state at t = {:.3} s", state.time)));
    }
    Ok(StepResult { state: next, tau, ddq })
}

/// Holds the actuated joints still and lets the gripper swing.
pub fn passive_swing_step(
    model: &MachineModel,
    state: &MachineState,
    friction: &PassiveFriction,
    dt: f64,
) -> Result<MachineState> {
    let mut held = *state;
    held.dq.fixed_rows_mut::<NUM_ACTUATED>(0).fill(0.0);
    simulate_step(model, &held, &ActuatedInput::Acceleration(Vector4::zeros()), friction, dt).map(|r| r.state)
}
