//! `verify`: tensor-network pipeline against the dense reference on small
//! chains, one line per check.

use anyhow::{bail, Result};

use opweight::analysis::{backflow, densities, direct_contributions};
use opweight::evolution::{EvolutionConfig, Evolver, QuenchParams};
use opweight::mps::OperatorMps;
use opweight::oracle::{
    dense_backflow, dense_contributions, dense_densities, heisenberg_series, DenseOperatorVector, Propagation,
};
use opweight::pauli::{product_state_mps, BlochAngles, ParallelBasis, Pauli};

const TOL: f64 = 1e-9;

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Worst deviation of states, densities and contributions over a Trotter
/// trajectory of `σ` at the centre.
fn trajectory(l: usize, op: Pauli, angles: BlochAngles) -> opweight::Result<f64> {
    let dt = 0.02;
    let p = QuenchParams::model_point(l);
    let cfg = EvolutionConfig { dt, chi_max: 4096, lambda2_cutoff: 0.0, t_max: 1.0 };
    let basis = ParallelBasis::new(angles);
    let rho = product_state_mps(&angles, l)?;
    let site = l / 2;
    let dense = heisenberg_series(&DenseOperatorVector::local(op, site, l)?, &p, 0.2, 5, Propagation::Trotter { dt })?;
    let mut ev = Evolver::from_params(&p, &cfg)?;
    let mut s = OperatorMps::local_operator(op, site, l)?;
    let mut worst = 0.0f64;
    for (k, o) in dense.iter().enumerate() {
        if k > 0 {
            ev.advance(&mut s, 10)?;
        }
        let t = s.time();
        worst = worst.max(max_diff(&s.to_dense()?, &o.coeffs));
        let (d, dd) = (densities(&s, &basis, l)?, dense_densities(o, &basis, l, t));
        worst = worst.max(max_diff(&d.contributing, &dd.contributing));
        worst = worst.max(max_diff(&d.noncontributing, &dd.noncontributing));
        let (c, dc) = (direct_contributions(&s, &rho, l)?, dense_contributions(o, &angles, l, t));
        worst = worst.max(max_diff(&c.values, &dc.values)).max((c.total - dc.total).abs());
    }
    Ok(worst)
}

fn backflow_check(l: usize, omega_perp: usize) -> opweight::Result<f64> {
    let dt = 0.02;
    let p = QuenchParams::model_point(l);
    let cfg = EvolutionConfig { dt, chi_max: 4096, lambda2_cutoff: 0.0, t_max: 2.0 };
    let basis = ParallelBasis::new(BlochAngles::from_degrees(45.0, 180.0)?);
    let site = l / 2;
    let rec = backflow(&OperatorMps::local_operator(Pauli::X, site, l)?, &basis, &p, &cfg, omega_perp)?;
    let dense = dense_backflow(
        &DenseOperatorVector::local(Pauli::X, site, l)?,
        &basis,
        &p,
        dt,
        cfg.t_max,
        omega_perp,
        Propagation::Trotter { dt },
    )?;
    if rec.t0 != dense.t0 || rec.overlaps[0] != 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(max_diff(&rec.overlaps, &dense.overlaps))
}

pub fn run() -> Result<()> {
    let mut failed = 0;
    let mut report = |name: String, res: opweight::Result<f64>| {
        let (ok, detail) = match res {
            Ok(d) => (d <= TOL, format!("max deviation {d:.2e}")),
            Err(e) => (false, e.to_string()),
        };
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed += 1;
        }
    };
    for l in [4, 5, 6] {
        for (op, th, ph) in [(Pauli::X, 45.0, 180.0), (Pauli::Z, 0.0, 0.0), (Pauli::Y, 120.0, 30.0)] {
            let angles = BlochAngles::from_degrees(th, ph)?;
            report(format!("trajectory L={l} sigma^{op} state=({th},{ph})"), trajectory(l, op, angles));
        }
        report(format!("backflow L={l} omega_perp=2"), backflow_check(l, 2));
    }
    if failed > 0 {
        bail!(opweight::Error::NumericalFailure(format!("{failed} verification checks failed")));
    }
    Ok(())
}
