//! Per-simulation-step rollout trace.

use std::io::Write;
use std::path::Path;

use super::reward::RewardTerms;
use super::throw_env::ThrowEnv;
use crate::actuation::VelocityCommand;
use crate::dynamics::forward_kinematics;
use crate::error::Result;
use crate::model::{JointVector, NUM_ACTUATED, NUM_JOINTS};

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub time: f64,
    pub q: JointVector,
    pub dq: JointVector,
    pub dq_ref: [f64; NUM_ACTUATED],
    pub gripper: [f64; 3],
    pub ball: [f64; 3],
    pub ball_velocity: [f64; 3],
    pub released: bool,
    pub impacted: bool,
    /// `;`-separated events of this step (`release_command`, `release`, `impact`).
    pub event: String,
    /// Reward of the control step this row belongs to.
    pub reward: Option<RewardTerms>,
}

impl TraceRow {
    pub fn sample(env: &ThrowEnv, command: Option<&VelocityCommand>, event: String) -> Self {
        let s = &env.state;
        let g = forward_kinematics(env.model(), &s.q).position;
        let b = &env.ball;
        TraceRow {
            time: env.sim_step() as f64 * env.config().dt,
            q: s.q,
            dq: s.dq,
            dq_ref: command.map_or([0.0; NUM_ACTUATED], |c| c.dq_ref.into()),
            gripper: g.into(),
            ball: if b.released { b.position.into() } else { g.into() },
            ball_velocity: b.velocity.into(),
            released: b.released,
            impacted: b.impacted,
            event,
            reward: None,
        }
    }
}

fn header() -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=NUM_JOINTS).map(|i| format!("q{i}")));
    h.extend((1..=NUM_JOINTS).map(|i| format!("dq{i}")));
    h.extend((1..=NUM_ACTUATED).map(|i| format!("dq_ref{i}")));
    for p in ["gripper", "ball"] {
        h.extend(["x", "y", "z"].iter().map(|a| format!("{p}_{a}")));
    }
    h.extend(["ball_vx", "ball_vy", "ball_vz", "released", "impacted", "event"].map(String::from));
    h.extend(["r_total", "r_delta_err", "r_err_3d", "r_act_diff", "r_act", "r_term"].map(String::from));
    h
}

pub fn write_trace<W: Write>(rows: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header())?;
    for r in rows {
        let mut rec: Vec<String> = vec![format!("{:.2}", r.time)];
        rec.extend(r.q.iter().chain(r.dq.iter()).map(|v| v.to_string()));
        rec.extend(r.dq_ref.iter().chain(&r.gripper).chain(&r.ball).chain(&r.ball_velocity).map(|v| v.to_string()));
        rec.push(u8::from(r.released).to_string());
        rec.push(u8::from(r.impacted).to_string());
        rec.push(r.event.clone());
        match &r.reward {
            Some(t) => rec.extend([t.total, t.delta_err, t.err_3d, t.act_diff, t.act, t.termination].map(|v| v.to_string())),
            None => rec.extend(std::iter::repeat_n(String::new(), 6)),
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_trace(rows: &[TraceRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = std::fs::File::create(path).map_err(|e| crate::Error::io(path, e))?;
    write_trace(rows, std::io::BufWriter::new(f))
}
