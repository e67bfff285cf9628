//! `evolve`: TEBD run emitting densities, contributions, OWE and truncation
//! records every `stride` steps, with optional checkpoints.

use std::path::Path;

use anyhow::{bail, Context, Result};
use log::info;

use opweight::analysis::{densities, direct_contributions, owe_point};
use opweight::checkpoint;
use opweight::evolution::Evolver;
use opweight::mps::OperatorMps;
use opweight::pauli::{product_state_mps, ParallelBasis};

use crate::config::RunConfig;
use crate::output::{comment_line, num, time, Csv};

pub const CHECKPOINT: &str = "checkpoint.opms";

#[derive(Debug, Default, Clone, Copy)]
pub struct EvolveOptions {
    pub resume: bool,
    /// Stop (with a checkpoint) once this many steps have been taken.
    pub stop_after: Option<u64>,
}

struct Outputs {
    densities: Csv,
    contributions: Csv,
    owe: Csv,
    truncation: Csv,
}

fn owe_header(cfg: &RunConfig) -> String {
    let widest = cfg.analysis.omega_star.iter().copied().max().unwrap_or(0);
    let mut h = String::from("t,omega_star,owe");
    for w in 1..=widest {
        h.push_str(&format!(",p{w}"));
    }
    h
}

const HEADERS: [(&str, &str); 3] = [
    ("densities.csv", "t,kind,omega,value"),
    ("contributions.csv", "t,omega,value"),
    ("truncation.csv", "t,epsilon,max_bond"),
];

impl Outputs {
    fn open(cfg: &RunConfig, dir: &Path, resume_at: Option<f64>) -> Result<Self> {
        let comment = comment_line(cfg);
        let open = |name: &str, header: &str| match resume_at {
            Some(t) => Csv::resume(&dir.join(name), &comment, header, t),
            None => Csv::create(&dir.join(name), &comment, header),
        };
        Ok(Self {
            densities: open(HEADERS[0].0, HEADERS[0].1)?,
            contributions: open(HEADERS[1].0, HEADERS[1].1)?,
            truncation: open(HEADERS[2].0, HEADERS[2].1)?,
            owe: open("owe.csv", &owe_header(cfg))?,
        })
    }

    fn flush(&mut self) -> Result<()> {
        self.densities.flush()?;
        self.contributions.flush()?;
        self.owe.flush()?;
        self.truncation.flush()
    }
}

fn record(cfg: &RunConfig, state: &OperatorMps, rho: &OperatorMps, basis: &ParallelBasis, out: &mut Outputs) -> Result<()> {
    let a = &cfg.analysis;
    let t = time(state.time());
    let d = densities(state, basis, a.omega_max)?;
    for (kind, vals) in [("c", &d.contributing), ("nc", &d.noncontributing)] {
        for (w, v) in vals.iter().enumerate() {
            out.densities.row(&[t.clone(), kind.into(), w.to_string(), num(*v)])?;
        }
    }
    let c = direct_contributions(state, rho, a.omega_max)?;
    for (w, v) in c.values.iter().enumerate() {
        out.contributions.row(&[t.clone(), w.to_string(), num(*v)])?;
    }
    let widest = a.omega_star.iter().copied().max().unwrap_or(0);
    for &star in &a.omega_star {
        let p = owe_point(state.time(), &c.values, c.total, star)?;
        let mut row = vec![t.clone(), star.to_string(), num(p.owe)];
        row.extend(p.probabilities.iter().map(|x| num(*x)));
        row.resize(3 + widest, String::new());
        out.owe.row(&row)?;
    }
    out.truncation.row(&[t, num(state.ledger().epsilon), state.max_bond().to_string()])?;
    Ok(())
}

pub fn run(cfg: &RunConfig, opts: EvolveOptions) -> Result<()> {
    let dir = &cfg.out_dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let hash = cfg.hash();
    let angles = cfg.angles();
    let basis = ParallelBasis::new(angles);
    let rho = product_state_mps(&angles, cfg.model.length)?;
    let mut ev = Evolver::from_params(&cfg.model, &cfg.evolution)?;
    let n_steps = cfg.evolution.n_steps() as u64;
    let ckpt = dir.join(CHECKPOINT);

    let (mut state, mut out) = if opts.resume {
        let (state, meta) = checkpoint::load(&ckpt).with_context(|| format!("loading {}", ckpt.display()))?;
        if meta.extra.get("config_hash").and_then(|v| v.as_str()) != Some(hash.as_str()) {
            bail!(crate::config::ConfigError(format!("{} belongs to a different configuration", ckpt.display())));
        }
        ev.set_steps(meta.step);
        info!("resuming at step {} (t={})", meta.step, meta.time);
        let out = Outputs::open(cfg, dir, Some(meta.time))?;
        (state, out)
    } else {
        let state = OperatorMps::local_operator(cfg.initial.operator, cfg.initial.site, cfg.model.length)?;
        let mut out = Outputs::open(cfg, dir, None)?;
        record(cfg, &state, &rho, &basis, &mut out)?;
        (state, out)
    };

    let save = |state: &OperatorMps, steps: u64| -> Result<()> {
        checkpoint::save(&ckpt, state, steps, serde_json::json!({ "config_hash": hash }))?;
        Ok(())
    };

    let stride = cfg.analysis.stride as u64;
    while ev.steps() < n_steps {
        let k = stride.min(n_steps - ev.steps());
        let result = ev.advance(&mut state, k as usize);
        if let Err(e) = result {
            out.flush()?;
            return Err(e.into());
        }
        record(cfg, &state, &rho, &basis, &mut out)?;
        let steps = ev.steps();
        let stop = opts.stop_after.is_some_and(|s| steps >= s);
        if stop || (cfg.checkpoint_every > 0 && steps % cfg.checkpoint_every as u64 == 0) {
            out.flush()?;
            save(&state, steps)?;
        }
        if stop {
            info!("stopped after step {steps} (t={})", ev.time());
            return Ok(());
        }
    }
    out.flush()?;
    if cfg.checkpoint_every > 0 {
        save(&state, ev.steps())?;
    }
    info!(
        "finished t={} with max bond {} and discarded weight {:.3e}",
        ev.time(),
        state.max_bond(),
        state.ledger().epsilon
    );
    Ok(())
}
