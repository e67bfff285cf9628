//! `backflow`: orthogonal-sector backflow for each configured `ω⊥`.

use anyhow::{Context, Result};
use log::warn;
use rayon::prelude::*;

use opweight::analysis::{backflow, BackflowRecord};
use opweight::mps::OperatorMps;
use opweight::pauli::ParallelBasis;
use opweight::Error;

use crate::config::RunConfig;
use crate::output::{comment_line, num, time, Csv};

pub const HEADER: &str = "omega_perp,t0,t,overlap_abs,osee";

pub fn run(cfg: &RunConfig) -> Result<()> {
    let basis = ParallelBasis::new(cfg.angles());
    let start = OperatorMps::local_operator(cfg.initial.operator, cfg.initial.site, cfg.model.length)?;
    let results: Vec<(usize, Result<BackflowRecord, Error>)> = cfg
        .analysis
        .omega_perp
        .par_iter()
        .map(|&w| (w, backflow(&start, &basis, &cfg.model, &cfg.evolution, w)))
        .collect();

    std::fs::create_dir_all(&cfg.out_dir).with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let mut csv = Csv::create(&cfg.out_dir.join("backflow.csv"), &comment_line(cfg), HEADER)?;
    let stride = cfg.analysis.stride;
    for (w, res) in results {
        match res {
            Ok(rec) => {
                let t0 = time(rec.t0);
                for k in (0..rec.times.len()).step_by(stride) {
                    csv.row(&[w.to_string(), t0.clone(), time(rec.times[k]), num(rec.overlaps[k]), num(rec.osee[k])])?;
                }
            }
            Err(Error::ProtocolIncomplete { t_max, .. }) => {
                warn!("omega_perp={w}: no density peak up to t={t_max}; protocol incomplete");
                csv.row(&[w.to_string(), String::new(), String::new(), String::new(), String::new()])?;
            }
            Err(e) => return Err(e.into()),
        }
    }
    csv.flush()
}
