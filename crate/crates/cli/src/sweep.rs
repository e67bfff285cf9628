//! `sweep`: maximum OWE over a grid of initial states and operators.

use anyhow::{Context, Result};
use log::{info, warn};
use rayon::prelude::*;

use opweight::analysis::{direct_contributions, max_owe, owe};
use opweight::evolution::{Evolver, QuenchParams};
use opweight::mps::OperatorMps;
use opweight::pauli::{product_state_mps, BlochAngles, Pauli};
use opweight::thermo::{solve_beta, Spectrum};

use crate::config::RunConfig;
use crate::output::{comment_line, deg, num, time, Csv};

pub const HEADER: &str = "theta_deg,phi_deg,operator,omega_star,beta_J,max_owe,t_of_max";

#[derive(Debug, Clone, Copy)]
struct Point {
    theta_deg: f64,
    phi_deg: f64,
    operator: Pauli,
}

/// Grid points in cut-major order; the poles are kept on the first cut only.
fn points(cfg: &RunConfig) -> Vec<Point> {
    let mut out = Vec::new();
    for &operator in &cfg.sweep.operators {
        for (c, &phi_deg) in cfg.sweep.phi_cuts_deg.iter().enumerate() {
            for &theta_deg in &cfg.sweep.thetas_deg {
                let pole = theta_deg == 0.0 || theta_deg == 180.0;
                if c > 0 && pole {
                    continue;
                }
                out.push(Point { theta_deg, phi_deg, operator });
            }
        }
    }
    out
}

/// `(max OWE, time)` per configured `ω*`.
fn max_owe_per_star(cfg: &RunConfig, p: &Point) -> opweight::Result<Vec<(f64, f64)>> {
    let l = cfg.model.length;
    let angles = BlochAngles::from_degrees(p.theta_deg, p.phi_deg)?;
    let rho = product_state_mps(&angles, l)?;
    let mut ev = Evolver::from_params(&cfg.model, &cfg.evolution)?;
    let mut s = OperatorMps::local_operator(p.operator, cfg.initial.site, l)?;
    let omega_max = cfg.analysis.omega_max;
    let n_steps = cfg.evolution.n_steps() as u64;
    let stride = cfg.analysis.stride as u64;
    let mut series = vec![direct_contributions(&s, &rho, omega_max)?];
    while ev.steps() < n_steps {
        ev.advance(&mut s, stride.min(n_steps - ev.steps()) as usize)?;
        series.push(direct_contributions(&s, &rho, omega_max)?);
    }
    cfg.analysis
        .omega_star
        .iter()
        .map(|&w| max_owe(&owe(&series, w)?, cfg.evolution.t_max))
        .collect()
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    let a = &cfg.analysis;
    let spectrum = Spectrum::compute(&QuenchParams { length: a.thermo_length, ..cfg.model }, a.boundary)?;
    let grid = points(cfg);
    info!("sweep over {} evolutions", grid.len());
    let results: Vec<_> = grid
        .par_iter()
        .map(|p| {
            let beta = BlochAngles::from_degrees(p.theta_deg, p.phi_deg)
                .and_then(|ang| solve_beta(&ang, &spectrum))
                .map(|t| t.beta);
            (beta, max_owe_per_star(cfg, p))
        })
        .collect();

    std::fs::create_dir_all(&cfg.out_dir).with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let mut csv = Csv::create(&cfg.out_dir.join("sweep.csv"), &comment_line(cfg), HEADER)?;
    let mut failures = 0;
    for (p, (beta, res)) in grid.iter().zip(results) {
        let beta = beta.map(num).unwrap_or_default();
        let head = [deg(p.theta_deg), deg(p.phi_deg), p.operator.to_string()];
        match res {
            Ok(vals) => {
                for (&w, (m, t)) in a.omega_star.iter().zip(vals) {
                    let mut row = head.to_vec();
                    row.extend([w.to_string(), beta.clone(), num(m), time(t)]);
                    csv.row(&row)?;
                }
            }
            Err(e) => {
                failures += 1;
                warn!("theta={} phi={} {}: {e}", p.theta_deg, p.phi_deg, p.operator);
                for &w in &a.omega_star {
                    let mut row = head.to_vec();
                    row.extend([w.to_string(), beta.clone(), String::new(), String::new()]);
                    csv.row(&row)?;
                }
            }
        }
    }
    csv.flush()?;
    if failures > 0 {
        warn!("{failures} of {} evolutions failed; see empty rows", grid.len());
    }
    Ok(())
}
