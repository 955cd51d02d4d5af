use nalgebra::Vector4;
use serde::{Deserialize, Serialize};

use super::command::VelocityCommand;
use crate::dynamics::{
    gravity_torques, mass_matrix, simulate_step, ActuatedInput, MachineState, PassiveFriction, StepResult,
};
use crate::error::{Error, Result};
use crate::model::{JointVector, MachineModel, NUM_ACTUATED};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerKind {
    Id,
    Pid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    pub kind: ControllerKind,
    /// Velocity-error gain of the inverse-dynamics controller (1/s).
    pub k_v: f64,
    /// Torque bound as a multiple of the largest static gravity torque.
    pub torque_scale: f64,
    pub pid: PidTuning,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            kind: ControllerKind::Id,
            k_v: 20.0,
            torque_scale: 3.0,
            pid: PidTuning::default(),
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_v > 0.0 && self.k_v.is_finite()) {
            return Err(Error::config("controller.k_v", "must be positive"));
        }
        if !(self.torque_scale > 0.0 && self.torque_scale.is_finite()) {
            return Err(Error::config("controller.torque_scale", "must be positive"));
        }
        self.pid.validate()
    }

    pub fn build(&self, model: &MachineModel) -> LowLevelController {
        let limits = TorqueLimits::default_for(model, self.k_v, self.torque_scale);
        let inner = match self.kind {
            ControllerKind::Id => Inner::Id(IdController { k_v: self.k_v }),
            ControllerKind::Pid => Inner::Pid(PidController::new(PidGains::tuned(model, &self.pid))),
        };
        LowLevelController { inner, limits }
    }
}

/// Tuning rule for the PID controller. Each joint is treated as an isolated
/// inertia `M_ii` (mid-workspace pose) and given a first-order velocity
/// response with time constant `settle_time / 4`; the integral only removes
/// what the gravity feed-forward misses. Explicit gains override the rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PidTuning {
    pub settle_time: f64,
    /// Integral time `kp / ki` (s).
    pub integral_time: f64,
    /// Derivative gain as a fraction of the joint inertia (s).
    pub kd_ratio: f64,
    pub integral_clamp: f64,
    pub feedforward: bool,
    pub kp: Option<[f64; NUM_ACTUATED]>,
    pub ki: Option<[f64; NUM_ACTUATED]>,
    pub kd: Option<[f64; NUM_ACTUATED]>,
}

impl Default for PidTuning {
    fn default() -> Self {
        PidTuning {
            settle_time: 0.4,
            integral_time: 3.0,
            kd_ratio: 0.01,
            integral_clamp: 0.1,
            feedforward: true,
            kp: None,
            ki: None,
            kd: None,
        }
    }
}

impl PidTuning {
    pub fn validate(&self) -> Result<()> {
        if !(self.settle_time > 0.0) {
            return Err(Error::config("controller.pid.settle_time", "must be positive"));
        }
        if !(self.integral_time > 0.0) {
            return Err(Error::config("controller.pid.integral_time", "must be positive"));
        }
        if !(self.kd_ratio >= 0.0) {
            return Err(Error::config("controller.pid.kd_ratio", "must be non-negative"));
        }
        if !(self.integral_clamp >= 0.0) {
            return Err(Error::config("controller.pid.integral_clamp", "must be non-negative"));
        }
        for (key, g) in [("kp", &self.kp), ("ki", &self.ki), ("kd", &self.kd)] {
            if let Some(g) = g {
                if g.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return Err(Error::config(format!("controller.pid.{key}"), "gains must be finite and >= 0"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PidGains {
    pub kp: Vector4<f64>,
    pub ki: Vector4<f64>,
    pub kd: Vector4<f64>,
    pub integral_clamp: f64,
    pub feedforward: bool,
}

/// Mid-workspace pose with a hanging gripper.
fn reference_pose() -> JointVector {
    let mut q = JointVector::zeros();
    q[1] = 0.3;
    q[2] = -0.6;
    q[3] = 0.4;
    q[4] = -std::f64::consts::FRAC_PI_2 - (q[1] + q[2]);
    q
}

impl PidGains {
    pub fn tuned(model: &MachineModel, t: &PidTuning) -> Self {
        let m = mass_matrix(model, &model.clamp_to_limits(&reference_pose()));
        let inertia = Vector4::from_fn(|i, _| m[(i, i)]);
        let kp = inertia / (t.settle_time / 4.0);
        let pick = |over: &Option<[f64; NUM_ACTUATED]>, rule: Vector4<f64>| over.map(Vector4::from).unwrap_or(rule);
        PidGains {
            kp: pick(&t.kp, kp),
            ki: pick(&t.ki, kp / t.integral_time),
            kd: pick(&t.kd, inertia * t.kd_ratio),
            integral_clamp: t.integral_clamp,
            feedforward: t.feedforward,
        }
    }
}

/// Per-joint torque bounds for the actuated joints.
#[derive(Clone, Debug, PartialEq)]
pub struct TorqueLimits {
    pub max: Vector4<f64>,
}

impl TorqueLimits {
    /// `scale` times the largest static gravity torque over a grid of
    /// configurations, floored at the torque needed to follow the velocity
    /// loop at full speed error with the largest joint inertia. The floor
    /// matters for the cabin turn, which carries no gravity load.
    pub fn default_for(model: &MachineModel, k_v: f64, scale: f64) -> Self {
        let lo = model.lower_limits();
        let hi = model.upper_limits();
        let n = 7;
        let at = |i: usize, k: usize| lo[i] + (hi[i] - lo[i]) * k as f64 / (n - 1) as f64;
        let mut grav = Vector4::<f64>::zeros();
        let mut inertia = Vector4::<f64>::zeros();
        let mut q = JointVector::zeros();
        for a in 0..n {
            q[1] = at(1, a);
            for b in 0..n {
                q[2] = at(2, b);
                for c in 0..n {
                    q[3] = at(3, c);
                    for d in 0..n {
                        q[4] = at(4, d);
                        let g = gravity_torques(model, &q);
                        let m = mass_matrix(model, &q);
                        for i in 0..NUM_ACTUATED {
                            grav[i] = grav[i].max(g[i].abs());
                            inertia[i] = inertia[i].max(m[(i, i)]);
                        }
                    }
                }
            }
        }
        let max = Vector4::from_fn(|i, _| (scale * grav[i]).max(inertia[i] * k_v * model.joint(i).velocity_limit));
        TorqueLimits { max }
    }

    pub fn unbounded() -> Self {
        TorqueLimits {
            max: Vector4::repeat(f64::INFINITY),
        }
    }

    pub fn saturate(&self, tau: &Vector4<f64>) -> Vector4<f64> {
        Vector4::from_fn(|i, _| {
            let t = tau[i];
            if t.is_nan() {
                0.0
            } else {
                t.clamp(-self.max[i], self.max[i])
            }
        })
    }

    pub fn exceeded(&self, tau: &Vector4<f64>) -> bool {
        (0..NUM_ACTUATED).any(|i| !(tau[i].abs() <= self.max[i]))
    }
}

fn actuated(v: &JointVector) -> Vector4<f64> {
    v.fixed_rows::<NUM_ACTUATED>(0).into_owned()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdController {
    pub k_v: f64,
}

impl IdController {
    pub fn desired_acceleration(&self, state: &MachineState, cmd: &VelocityCommand) -> Vector4<f64> {
        (cmd.dq_ref - actuated(&state.dq)) * self.k_v
    }
}

/// Torques of the inverse-dynamics velocity controller. The passive joints
/// receive only their friction torque.
pub fn id_velocity_control(
    model: &MachineModel,
    state: &MachineState,
    cmd: &VelocityCommand,
    friction: &PassiveFriction,
    k_v: f64,
    dt: f64,
) -> Result<Vector4<f64>> {
    let ddq = IdController { k_v }.desired_acceleration(state, cmd);
    let r = simulate_step(model, state, &ActuatedInput::Acceleration(ddq), friction, dt)?;
    Ok(actuated(&r.tau))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PidController {
    pub gains: PidGains,
    pub integral: Vector4<f64>,
    pub prev_error: Option<Vector4<f64>>,
}

impl PidController {
    pub fn new(gains: PidGains) -> Self {
        PidController {
            gains,
            integral: Vector4::zeros(),
            prev_error: None,
        }
    }

    pub fn reset(&mut self) {
        self.integral = Vector4::zeros();
        self.prev_error = None;
    }
}

/// PID on the velocity error plus static gravity feed-forward. The integral
/// is clamped to `integral_clamp` per joint; the derivative is zero on the
/// first call after a reset.
pub fn pid_velocity_control(
    model: &MachineModel,
    ctrl: &mut PidController,
    state: &MachineState,
    cmd: &VelocityCommand,
    dt: f64,
) -> Vector4<f64> {
    let g = &ctrl.gains;
    let e = cmd.dq_ref - actuated(&state.dq);
    let clamp = g.integral_clamp;
    ctrl.integral = (ctrl.integral + e * dt).map(|v| v.clamp(-clamp, clamp));
    let de = match ctrl.prev_error {
        Some(prev) if dt > 0.0 => (e - prev) / dt,
        _ => Vector4::zeros(),
    };
    ctrl.prev_error = Some(e);
    let mut tau = g.kp.component_mul(&e) + g.ki.component_mul(&ctrl.integral) + g.kd.component_mul(&de);
    if g.feedforward {
        tau += actuated(&gravity_torques(model, &state.q));
    }
    tau
}

#[derive(Clone, Debug, PartialEq)]
enum Inner {
    Id(IdController),
    Pid(PidController),
}

/// A controller instance owned by one environment.
#[derive(Clone, Debug, PartialEq)]
pub struct LowLevelController {
    inner: Inner,
    pub limits: TorqueLimits,
}

impl LowLevelController {
    pub fn id(k_v: f64, limits: TorqueLimits) -> Self {
        LowLevelController {
            inner: Inner::Id(IdController { k_v }),
            limits,
        }
    }

    pub fn pid(gains: PidGains, limits: TorqueLimits) -> Self {
        LowLevelController {
            inner: Inner::Pid(PidController::new(gains)),
            limits,
        }
    }

    pub fn kind(&self) -> ControllerKind {
        match self.inner {
            Inner::Id(_) => ControllerKind::Id,
            Inner::Pid(_) => ControllerKind::Pid,
        }
    }

    pub fn reset(&mut self) {
        if let Inner::Pid(p) = &mut self.inner {
            p.reset();
        }
    }

    /// One simulation step under this controller, torque saturation included.
    pub fn step(
        &mut self,
        model: &MachineModel,
        state: &MachineState,
        cmd: &VelocityCommand,
        friction: &PassiveFriction,
        dt: f64,
    ) -> Result<StepResult> {
        match &mut self.inner {
            Inner::Id(id) => {
                let ddq = id.desired_acceleration(state, cmd);
                let r = simulate_step(model, state, &ActuatedInput::Acceleration(ddq), friction, dt)?;
                let tau = actuated(&r.tau);
                if self.limits.exceeded(&tau) {
                    let sat = self.limits.saturate(&tau);
                    simulate_step(model, state, &ActuatedInput::Torque(sat), friction, dt)
                } else {
                    Ok(r)
                }
            }
            Inner::Pid(pid) => {
                let tau = pid_velocity_control(model, pid, state, cmd, dt);
                let sat = self.limits.saturate(&tau);
                simulate_step(model, state, &ActuatedInput::Torque(sat), friction, dt)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{forward_dynamics, FrictionParams, SIM_DT};

    fn friction() -> PassiveFriction {
        [FrictionParams::default(); 2]
    }

    #[test]
    fn matched_reference_gives_compensation_torque() {
        let m = MachineModel::nominal();
        let mut s = MachineState::at_rest(reference_pose());
        s.dq[1] = 0.2;
        s.dq[3] = -0.1;
        let cmd = VelocityCommand::new(actuated(&s.dq), 0.0);
        let tau = id_velocity_control(&m, &s, &cmd, &[FrictionParams::FRICTIONLESS; 2], 20.0, SIM_DT).unwrap();
        let sol =
            crate::dynamics::hybrid_dynamics(&m, &s.q, &s.dq, &Vector4::zeros(), &nalgebra::Vector2::zeros()).unwrap();
        assert!((tau - sol.tau_actuated).abs().max() < 1e-9);
    }

    #[test]
    fn id_torques_realize_desired_acceleration() {
        let m = MachineModel::nominal();
        let mut s = MachineState::at_rest(reference_pose());
        s.dq[4] = 0.8;
        s.dq[0] = 0.1;
        let cmd = VelocityCommand::new(Vector4::new(0.3, -0.2, 0.4, 0.1), 0.0);
        let k_v = 20.0;
        let r = simulate_step(
            &m,
            &s,
            &ActuatedInput::Acceleration((cmd.dq_ref - actuated(&s.dq)) * k_v),
            &friction(),
            SIM_DT,
        )
        .unwrap();
        let ddq = forward_dynamics(&m, &s.q, &s.dq, &r.tau).unwrap();
        assert!((actuated(&ddq) - (cmd.dq_ref - actuated(&s.dq)) * k_v).abs().max() < 1e-6);
    }

    #[test]
    fn pid_zero_error_is_feedforward() {
        let m = MachineModel::nominal();
        let s = MachineState::at_rest(reference_pose());
        let mut pid = PidController::new(PidGains::tuned(&m, &PidTuning::default()));
        let tau = pid_velocity_control(&m, &mut pid, &s, &VelocityCommand::zero(0.0), SIM_DT);
        assert!((tau - actuated(&gravity_torques(&m, &s.q))).abs().max() < 1e-9);
    }

    #[test]
    fn integral_saturates_at_clamp() {
        let m = MachineModel::nominal();
        let s = MachineState::at_rest(reference_pose());
        let tuning = PidTuning {
            ki: Some([1e-3; 4]),
            integral_clamp: 0.05,
            ..PidTuning::default()
        };
        let mut pid = PidController::new(PidGains::tuned(&m, &tuning));
        let cmd = VelocityCommand::new(Vector4::new(0.3, -0.3, 0.3, 0.3), 0.0);
        for _ in 0..200 {
            pid_velocity_control(&m, &mut pid, &s, &cmd, SIM_DT);
        }
        assert_eq!(pid.integral, Vector4::new(0.05, -0.05, 0.05, 0.05));
    }

    #[test]
    fn saturation_is_finite() {
        let lim = TorqueLimits {
            max: Vector4::new(1.0, 2.0, 3.0, 4.0),
        };
        let out = lim.saturate(&Vector4::new(f64::NAN, f64::INFINITY, f64::NEG_INFINITY, 0.5));
        assert_eq!(out, Vector4::new(0.0, 2.0, -3.0, 0.5));
    }

    #[test]
    fn yaw_limit_is_not_zero() {
        let m = MachineModel::nominal();
        let lim = TorqueLimits::default_for(&m, 20.0, 3.0);
        assert!(lim.max.iter().all(|v| *v > 0.0));
    }
}
