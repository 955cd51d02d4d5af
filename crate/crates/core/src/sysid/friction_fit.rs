use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use super::logs::OscillationLog;
use crate::dynamics::{friction_accel, FrictionParams};
use crate::error::{Error, Result};
use crate::model::MachineModel;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub upsilon_range: [f64; 2],
    pub eta_range: [f64; 2],
    /// Grid points per axis at every level.
    pub grid: usize,
    /// Refinement levels after the coarse grid.
    pub levels: usize,
    /// Nelder-Mead iterations after the grids. The polish also refines the
    /// initial angle and rate.
    pub polish_iterations: usize,
    /// Fits with a larger RMS angle error are rejected (rad).
    pub max_rms: f64,
    pub gravity: f64,
    /// Largest RK4 step of the shooting simulation (s).
    pub max_step: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            upsilon_range: [0.0, 0.2],
            eta_range: [0.0, 0.5],
            grid: 21,
            levels: 2,
            polish_iterations: 400,
            max_rms: 0.05,
            gravity: 9.81,
            max_step: 1e-3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrictionFit {
    pub params: FrictionParams,
    /// RMS angle error of the best simulation (rad).
    pub rms: f64,
    pub evaluations: usize,
    /// Fitted initial angle (rad) and rate (rad/s) at the first sample.
    pub initial_angle: f64,
    pub initial_rate: f64,
}

/// Length of the simple pendulum equivalent to the passive pitch joint with
/// the roll link hanging below it.
pub fn pitch_pendulum_length(model: &MachineModel) -> f64 {
    let l5 = &model.joint(4).link;
    let l6 = &model.joint(5).link;
    let c5 = l5.com.x;
    let c6 = model.joint(5).origin.x + l6.com.x;
    let inertia = l5.inertia[(1, 1)] + l5.mass * c5 * c5 + l6.inertia[(1, 1)] + l6.mass * c6 * c6;
    inertia / (l5.mass * c5 + l6.mass * c6)
}

/// Damped pendulum `theta'' = -(g / L) sin(theta) + a_f(theta')`, RK4 from
/// `(theta0, omega0)` at `times[0]`; returns the angle at every time.
pub fn simulate_pendulum(
    length: f64,
    gravity: f64,
    params: &FrictionParams,
    theta0: f64,
    omega0: f64,
    times: &[f64],
    max_step: f64,
) -> Vec<f64> {
    let k = gravity / length;
    let acc = |th: f64, w: f64| -k * th.sin() + friction_accel(params, w);
    let (mut th, mut w) = (theta0, omega0);
    let mut out = Vec::with_capacity(times.len());
    if times.is_empty() {
        return out;
    }
    out.push(th);
    for win in times.windows(2) {
        let span = win[1] - win[0];
        let n = (span / max_step).ceil().max(1.0) as usize;
        let h = span / n as f64;
        for _ in 0..n {
            let k1 = (w, acc(th, w));
            let k2 = (w + 0.5 * h * k1.1, acc(th + 0.5 * h * k1.0, w + 0.5 * h * k1.1));
            let k3 = (w + 0.5 * h * k2.1, acc(th + 0.5 * h * k2.0, w + 0.5 * h * k2.1));
            let k4 = (w + h * k3.1, acc(th + h * k3.0, w + h * k3.1));
            th += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            w += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        }
        out.push(th);
    }
    out
}

/// Value and slope at the first sample of a least-squares cubic through the
/// first `window` seconds of the log (at least five samples).
fn initial_state(t: &[f64], x: &[f64], window: f64) -> (f64, f64) {
    let n = t.iter().take_while(|&&s| s - t[0] <= window).count().max(5).min(t.len());
    if n < 4 {
        return (x.first().copied().unwrap_or(0.0), 0.0);
    }
    let mut a = Matrix4::zeros();
    let mut b = Vector4::zeros();
    for i in 0..n {
        let s = t[i] - t[0];
        let row = Vector4::new(1.0, s, s * s, s * s * s);
        a += row * row.transpose();
        b += row * x[i];
    }
    a.lu().solve(&b).map_or((x[0], 0.0), |c| (c[0], c[1]))
}

struct Objective<'a> {
    log: &'a OscillationLog,
    times: Vec<f64>,
    length: f64,
    cfg: &'a FitConfig,
    evaluations: usize,
    /// (rms, [upsilon, eta, theta0, omega0])
    best: (f64, [f64; 4]),
}

impl Objective<'_> {
    fn rms(&mut self, x: [f64; 4]) -> f64 {
        let p = FrictionParams { upsilon: x[0], eta: x[1] };
        let sim = simulate_pendulum(self.length, self.cfg.gravity, &p, x[2], x[3], &self.times, self.cfg.max_step);
        let mse = sim.iter().zip(&self.log.angle).map(|(s, a)| (s - a) * (s - a)).sum::<f64>() / sim.len() as f64;
        let rms = if mse.is_finite() { mse.sqrt() } else { f64::INFINITY };
        self.evaluations += 1;
        if rms < self.best.0 {
            self.best = (rms, x);
        }
        rms
    }

    fn grid(&mut self, u: [f64; 2], e: [f64; 2], init: [f64; 2]) {
        let g = self.cfg.grid.max(2);
        for i in 0..g {
            for j in 0..g {
                let ui = u[0] + (u[1] - u[0]) * i as f64 / (g - 1) as f64;
                let ej = e[0] + (e[1] - e[0]) * j as f64 / (g - 1) as f64;
                self.rms([ui, ej, init[0], init[1]]);
            }
        }
    }

    /// Nelder-Mead from the current best with initial steps `scale`. Friction
    /// coordinates are clamped to the search box.
    fn polish(&mut self, scale: [f64; 4], lo: [f64; 4], hi: [f64; 4], iterations: usize) {
        let clamp = |mut x: [f64; 4]| {
            for k in 0..4 {
                x[k] = x[k].clamp(lo[k], hi[k]);
            }
            x
        };
        let comb = |a: &[f64; 4], b: &[f64; 4], t: f64| -> [f64; 4] { std::array::from_fn(|k| a[k] + t * (b[k] - a[k])) };
        let x0 = self.best.1;
        let mut simplex: Vec<([f64; 4], f64)> = vec![(x0, self.best.0)];
        for k in 0..4 {
            let mut x = x0;
            x[k] += if x[k] + scale[k] <= hi[k] { scale[k] } else { -scale[k] };
            let x = clamp(x);
            simplex.push((x, self.rms(x)));
        }
        for _ in 0..iterations {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let spread = simplex[4].1 - simplex[0].1;
            if spread <= 1e-13 * simplex[0].1.max(1e-300) {
                break;
            }
            let mut c = [0.0; 4];
            for (x, _) in &simplex[..4] {
                for k in 0..4 {
                    c[k] += x[k] / 4.0;
                }
            }
            let worst = simplex[4];
            let xr = clamp(comb(&c, &worst.0, -1.0));
            let fr = self.rms(xr);
            if fr < simplex[0].1 {
                let xe = clamp(comb(&c, &worst.0, -2.0));
                let fe = self.rms(xe);
                simplex[4] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[3].1 {
                simplex[4] = (xr, fr);
            } else {
                let xc = if fr < worst.1 { comb(&c, &xr, 0.5) } else { comb(&c, &worst.0, 0.5) };
                let fc = self.rms(xc);
                if fc < worst.1.min(fr) {
                    simplex[4] = (xc, fc);
                } else {
                    let best = simplex[0].0;
                    for v in simplex.iter_mut().skip(1) {
                        v.0 = comb(&best, &v.0, 0.5);
                        v.1 = self.rms(v.0);
                    }
                }
            }
        }
    }
}

/// Fit viscous and constant friction to a free-swing log by trajectory
/// shooting: coarse grid, refined grids around the best point, then
/// coordinate descent.
pub fn fit_friction(log: &OscillationLog, length: f64, cfg: &FitConfig) -> Result<FrictionFit> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::config("length", "pendulum length must be positive"));
    }
    let [u_lo, u_hi] = cfg.upsilon_range;
    let [e_lo, e_hi] = cfg.eta_range;
    if !(0.0 <= u_lo && u_lo < u_hi && 0.0 <= e_lo && e_lo < e_hi) {
        return Err(Error::config("sysid.range", "search ranges must be non-negative and non-empty"));
    }
    if log.len() < 10 {
        return Err(Error::InsufficientData(format!("{} samples, need at least 10", log.len())));
    }
    if log.zero_crossings() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} zero crossings, need two full oscillation periods",
            log.zero_crossings()
        )));
    }
    let t0 = log.t[0];
    let times: Vec<f64> = log.t.iter().map(|t| t - t0).collect();
    let period = 2.0 * std::f64::consts::PI * (length / cfg.gravity).sqrt();
    let (theta0, omega0) = initial_state(&times, &log.angle, 0.1 * period);
    let mut obj = Objective {
        log,
        times,
        length,
        cfg,
        evaluations: 0,
        best: (f64::INFINITY, [0.0, 0.0, theta0, omega0]),
    };

    let g = cfg.grid.max(2) as f64 - 1.0;
    let (mut du, mut de) = ((u_hi - u_lo) / g, (e_hi - e_lo) / g);
    obj.grid([u_lo, u_hi], [e_lo, e_hi], [theta0, omega0]);
    for _ in 0..cfg.levels {
        let c = obj.best.1;
        let u = [(c[0] - du).max(u_lo), (c[0] + du).min(u_hi)];
        let e = [(c[1] - de).max(e_lo), (c[1] + de).min(e_hi)];
        obj.grid(u, e, [theta0, omega0]);
        du = (u[1] - u[0]) / g;
        de = (e[1] - e[0]) / g;
    }
    if cfg.polish_iterations > 0 {
        let amp = log.angle.iter().fold(0.0f64, |m, a| m.max(a.abs())).max(1e-3);
        let rate = amp * (cfg.gravity / length).sqrt();
        // Restart from the best vertex until a restart stops paying off.
        for _ in 0..4 {
            let before = obj.best.0;
            obj.polish(
                [du.max(1e-4), de.max(1e-4), 0.01 * amp, 0.01 * rate],
                [u_lo, e_lo, f64::NEG_INFINITY, f64::NEG_INFINITY],
                [u_hi, e_hi, f64::INFINITY, f64::INFINITY],
                cfg.polish_iterations,
            );
            if obj.best.0 > 0.99 * before {
                break;
            }
        }
    }

    let (rms, x) = obj.best;
    let params = FrictionParams { upsilon: x[0], eta: x[1] };
    if !(rms <= cfg.max_rms) {
        return Err(Error::NonConvergent {
            residual: rms,
            threshold: cfg.max_rms,
        });
    }
    Ok(FrictionFit {
        params,
        rms,
        evaluations: obj.evaluations,
        initial_angle: x[2],
        initial_rate: x[3],
    })
}
