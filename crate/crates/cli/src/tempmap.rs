//! `tempmap`: equilibration temperature over the Bloch sphere.

use anyhow::{Context, Result};
use log::info;
use rayon::prelude::*;

use opweight::evolution::QuenchParams;
use opweight::thermo::{bloch_grid, map_extrema, solve_beta, Spectrum};

use crate::config::RunConfig;
use crate::output::{comment_line, deg, num, Csv};

pub const HEADER: &str = "theta_deg,phi_deg,beta_J,T_J,energy_per_site";

pub fn run(cfg: &RunConfig) -> Result<()> {
    let a = &cfg.analysis;
    let params = QuenchParams { length: a.thermo_length, ..cfg.model };
    let spectrum = Spectrum::compute(&params, a.boundary)?;
    let grid = bloch_grid(a.dtheta_deg, a.dphi_deg)?;
    let points = grid.par_iter().map(|g| solve_beta(g, &spectrum)).collect::<Result<Vec<_>, _>>()?;

    std::fs::create_dir_all(&cfg.out_dir).with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let mut csv = Csv::create(&cfg.out_dir.join("tempmap.csv"), &comment_line(cfg), HEADER)?;
    for p in &points {
        csv.row(&[
            deg(p.angles.theta_deg()),
            deg(p.angles.phi_deg()),
            num(p.beta),
            num(p.temperature),
            num(p.energy_density),
        ])?;
    }
    csv.flush()?;

    let ext = map_extrema(&points, a.dtheta_deg, a.dphi_deg, &spectrum)?;
    for (label, p) in [("max", ext.max_beta), ("min", ext.min_beta)] {
        info!(
            "{label} beta_J = {:.4} at theta={:.2} phi={:.2} (refined)",
            p.beta,
            p.angles.theta_deg(),
            p.angles.phi_deg()
        );
    }
    Ok(())
}
