use std::path::{Path, PathBuf};
use std::sync::Arc;

use throw_core::config::RunConfig;
use throw_core::env::{save_trace, ThrowEnv, ThrowTarget, TraceRow, VecEnv};
use throw_core::eval::{export_report, impact_statistics, outcome_counts, run_episode, run_target_sweep};
use throw_core::learner::{train, Checkpoint, TrainLogWriter};
use throw_core::sysid::{estimate_release_delay, fit_friction, pitch_pendulum_length, OscillationLog, ReleaseEventLog};
use throw_core::{Error, Result};

use crate::{Cli, Command, IdentifyKind};

pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const TRAIN_LOG_FILE: &str = "train_log.csv";

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Error::config("--workers", "must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::config("--workers", e.to_string()))?;
    }
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    match cli.command {
        Command::Train => cmd_train(&cfg),
        Command::Eval { checkpoint } => cmd_eval(&cfg, &checkpoint),
        Command::Identify { kind, log } => cmd_identify(&cfg, kind, &log),
        Command::Rollout { checkpoint, trace } => {
            let trace = trace.unwrap_or_else(|| cfg.out.join("trace.csv"));
            cmd_rollout(&cfg, &checkpoint, &trace)
        }
    }
}

fn load_checkpoint(cfg: &RunConfig, path: &Path) -> Result<Checkpoint> {
    let ckpt = Checkpoint::load(path)?;
    if ckpt.variant != cfg.env.variant {
        return Err(Error::config(
            "env.variant",
            format!("checkpoint {} is a {} policy, the configuration asks for {}", path.display(), ckpt.variant, cfg.env.variant),
        ));
    }
    Ok(ckpt)
}

fn cmd_train(cfg: &RunConfig) -> Result<()> {
    let model = Arc::new(cfg.load_model()?);
    let env = VecEnv::new(model, cfg.env.clone(), cfg.train.num_envs, cfg.seed)?;
    cfg.write_snapshot(&cfg.out)?;
    let hash = cfg.hash()?;
    let mut log = TrainLogWriter::create(cfg.out.join(TRAIN_LOG_FILE))?;
    let ckpt_path = cfg.out.join(CHECKPOINT_FILE);
    let variant = cfg.env.variant;
    let every = cfg.train.checkpoint_every;
    let snapshot = |t: &throw_core::learner::Trainer| Checkpoint {
        variant,
        iteration: t.iterations_done() as u64,
        config_hash: hash,
        policy: t.policy.clone(),
        normalizer: t.normalizer.clone(),
    };
    let (trainer, _) = train(env, cfg.train.clone(), cfg.seed, |t, row| {
        log.write(row)?;
        eprintln!(
            "iter {:>5}  return {:>8.2}  landed {:.2}  impact error {:.2} m  failures {:.2}",
            row.iteration, row.mean_return, row.landed_rate, row.mean_impact_error, row.failure_rate
        );
        if every > 0 && row.iteration % every == 0 {
            snapshot(t).save(&ckpt_path)?;
        }
        Ok(())
    })?;
    snapshot(&trainer).save(&ckpt_path)?;
    println!("checkpoint: {}", ckpt_path.display());
    Ok(())
}

fn cmd_eval(cfg: &RunConfig, checkpoint: &Path) -> Result<()> {
    let ckpt = load_checkpoint(cfg, checkpoint)?;
    let model = cfg.load_model()?;
    let sweep = cfg.sweep_config();
    let records = run_target_sweep(&ckpt, &model, &sweep)?;
    let stats = impact_statistics(&records);
    cfg.write_snapshot(&cfg.out)?;
    let files = export_report(&stats, &records, &cfg.out)?;
    let [landed, no_release, collided, timeout] = outcome_counts(&records);
    println!(
        "{} episodes: {landed} landed, {no_release} no release, {collided} collided, {timeout} timeout",
        records.len()
    );
    println!("distance  landing  mean_down  mean_cross  std_down  std_cross");
    let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
    for s in &stats {
        println!(
            "{:>8.2}  {:>7.2}  {:>9}  {:>10}  {:>8}  {:>9}",
            s.distance,
            s.landing_rate,
            f(s.mean_downrange_error),
            f(s.mean_crossrange_error),
            f(s.std_downrange),
            f(s.std_crossrange)
        );
    }
    println!("report: {}", files.summary.parent().unwrap_or(Path::new(".")).display());
    Ok(())
}

fn write_report(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn cmd_identify(cfg: &RunConfig, kind: IdentifyKind, log: &Path) -> Result<()> {
    let text = match kind {
        IdentifyKind::Friction => {
            let osc = OscillationLog::load(log, "pitch")?;
            let length = match cfg.identify.pendulum_length {
                Some(l) => l,
                None => pitch_pendulum_length(&cfg.load_model()?),
            };
            let fit = fit_friction(&osc, length, &cfg.identify.friction)?;
            format!(
                "upsilon = {}\neta = {}\nrms = {}\nevaluations = {}\npendulum_length = {}\n",
                fit.params.upsilon, fit.params.eta, fit.rms, fit.evaluations, length
            )
        }
        IdentifyKind::Delay => {
            let est = estimate_release_delay(&ReleaseEventLog::load(log)?)?;
            format!("mean = {}\nstd = {}\ntrials = {}\n", est.mean, est.std, est.n)
        }
    };
    cfg.write_snapshot(&cfg.out)?;
    let name = match kind {
        IdentifyKind::Friction => "friction.toml",
        IdentifyKind::Delay => "delay.toml",
    };
    let path = write_report(&cfg.out, name, &text)?;
    print!("{text}");
    println!("report: {}", path.display());
    Ok(())
}

fn cmd_rollout(cfg: &RunConfig, checkpoint: &Path, trace_path: &Path) -> Result<()> {
    let ckpt = load_checkpoint(cfg, checkpoint)?;
    let model = Arc::new(cfg.load_model()?);
    let controller = cfg.env.controller.build(&model);
    let mut env = ThrowEnv::new(model, Arc::new(cfg.env.clone()), controller, cfg.seed, cfg.rollout.stream);
    let target = cfg.rollout.distance.map(|d| ThrowTarget::at(d, cfg.rollout.heading));
    let mut rows: Vec<TraceRow> = Vec::new();
    let summary = run_episode(&mut env, &ckpt, target, None, Some(&mut rows))?;
    cfg.write_snapshot(&cfg.out)?;
    if let Some(dir) = trace_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    save_trace(&rows, trace_path)?;
    let t = summary.target.position;
    println!("target: ({:.3}, {:.3}) m", t.x, t.y);
    println!("termination: {}", summary.termination.name());
    println!("return: {:.4}", summary.episode_return);
    if let Some(p) = summary.impact {
        println!("impact: ({:.3}, {:.3}) m, error {:.3} m", p.x, p.y, (p - t).norm());
    }
    println!("trace: {}", trace_path.display());
    Ok(())
}
