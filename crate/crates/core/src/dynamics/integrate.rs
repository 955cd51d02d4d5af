use crate::model::{JointVector, MachineModel, NUM_JOINTS};

/// Simulation time step of the physics loop (100 Hz).
pub const SIM_DT: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MachineState {
    pub q: JointVector,
    pub dq: JointVector,
    pub time: f64,
}

impl MachineState {
    pub fn at_rest(q: JointVector) -> Self {
        MachineState {
            q,
            dq: JointVector::zeros(),
            time: 0.0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.dq.iter()).all(|v| v.is_finite()) && self.time.is_finite()
    }

    /// Joints sitting on one of their position limits.
    pub fn limit_contacts(&self, model: &MachineModel) -> [bool; NUM_JOINTS] {
        std::array::from_fn(|i| {
            let j = model.joint(i);
            self.q[i] <= j.lower || self.q[i] >= j.upper
        })
    }
}

/// Semi-implicit Euler step: velocities first, then positions with the new
/// velocities. Positions are clamped to the joint limits and the velocity of
/// a clamped joint is zeroed.
pub fn integrate_step(model: &MachineModel, state: &MachineState, ddq: &JointVector, dt: f64) -> MachineState {
    let mut dq = state.dq + ddq * dt;
    let mut q = state.q + dq * dt;
    for (i, joint) in model.joints().iter().enumerate() {
        if q[i] < joint.lower {
            q[i] = joint.lower;
            dq[i] = 0.0;
        } else if q[i] > joint.upper {
            q[i] = joint.upper;
            dq[i] = 0.0;
        }
    }
    MachineState {
        q,
        dq,
        time: state.time + dt,
    }
}
