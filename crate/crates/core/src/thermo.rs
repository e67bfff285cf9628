//! Equilibration temperatures of product states.
//!
//! `β(θ, φ)` solves `Tr(H e^{−βH}) / Tr(e^{−βH}) = Tr(H ρ(θ, φ))` using the
//! full exact-diagonalisation spectrum.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::evolution::{dense_hamiltonian_real, Boundary, QuenchParams};
use crate::linalg::eigvalsh;
use std::f64::consts::PI;

use crate::pauli::BlochAngles;

/// Initial bisection bracket for `βJ`.
const BETA_BRACKET: f64 = 20.0;
/// Residual target, per site.
const ENERGY_TOL_PER_SITE: f64 = 1e-9;
const MAX_BRACKET: f64 = 1e4;

/// `Tr(H ρ)` for the homogeneous product state; bonds `L − 1` (open) or `L`
/// (periodic).
pub fn product_state_energy(angles: &BlochAngles, p: &QuenchParams, boundary: Boundary) -> f64 {
    let l = p.length as f64;
    let bonds = match boundary {
        Boundary::Open => l - 1.0,
        Boundary::Periodic => l,
    };
    let n = angles.bloch_vector();
    -p.coupling * bonds * n[2] * n[2] - p.transverse_field * l * n[0] - p.longitudinal_field * l * n[2]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub params: QuenchParams,
    pub boundary: Boundary,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
}

impl Spectrum {
    pub fn compute(p: &QuenchParams, boundary: Boundary) -> Result<Self> {
        let h = dense_hamiltonian_real(p, boundary)?;
        Ok(Self { params: *p, boundary, eigenvalues: eigvalsh(h.as_ref())? })
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_energy(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// Canonical energy at inverse temperature `beta`, with the Boltzmann
    /// weights shifted by the dominant extreme eigenvalue.
    pub fn thermal_energy(&self, beta: f64) -> f64 {
        let shift = if beta >= 0.0 { self.ground_energy() } else { self.max_energy() };
        let (mut z, mut e) = (0.0, 0.0);
        for &ev in &self.eigenvalues {
            let w = (-beta * (ev - shift)).exp();
            z += w;
            e += w * ev;
        }
        e / z
    }
}

/// Canonical energy of the chain at `beta` (full diagonalisation).
pub fn thermal_energy(beta: f64, p: &QuenchParams, boundary: Boundary) -> Result<f64> {
    Ok(Spectrum::compute(p, boundary)?.thermal_energy(beta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperaturePoint {
    pub angles: BlochAngles,
    /// `βJ`.
    pub beta: f64,
    /// `T/J = 1/β`, infinite at `β = 0`.
    pub temperature: f64,
    /// `E_PS / L`.
    pub energy_density: f64,
}

/// Bisection for `E(β) = E_PS`. `E(β)` decreases strictly, so the root is
/// unique; the bracket is widened if needed.
pub fn solve_beta(angles: &BlochAngles, spectrum: &Spectrum) -> Result<TemperaturePoint> {
    let p = &spectrum.params;
    let target = product_state_energy(angles, p, spectrum.boundary);
    let (emin, emax) = (spectrum.ground_energy(), spectrum.max_energy());
    if !(target > emin && target < emax) {
        return Err(Error::NoSolution { target, min: emin, max: emax });
    }
    let tol = ENERGY_TOL_PER_SITE * p.length as f64;
    let f = |b: f64| spectrum.thermal_energy(b) - target;
    let (mut lo, mut hi) = (-BETA_BRACKET, BETA_BRACKET);
    while f(lo) < 0.0 || f(hi) > 0.0 {
        if hi >= MAX_BRACKET {
            return Err(Error::NoSolution { target, min: emin, max: emax });
        }
        lo *= 2.0;
        hi *= 2.0;
    }
    let beta = loop {
        let mid = 0.5 * (lo + hi);
        let r = f(mid);
        if r.abs() < tol || hi - lo < 1e-15 {
            break mid;
        }
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    };
    Ok(TemperaturePoint { angles: *angles, beta, temperature: 1.0 / beta, energy_density: target / p.length as f64 })
}

/// Grid points `θ = 0, dθ, …, 180°`, `φ = 0, dφ, …, < 360°` (degrees),
/// θ-major.
pub fn bloch_grid(dtheta_deg: f64, dphi_deg: f64) -> Result<Vec<BlochAngles>> {
    let nt = grid_count(180.0, dtheta_deg)? + 1;
    let np = grid_count(360.0, dphi_deg)?;
    let mut out = Vec::with_capacity(nt * np);
    for i in 0..nt {
        for j in 0..np {
            out.push(BlochAngles::from_degrees(i as f64 * dtheta_deg, j as f64 * dphi_deg)?);
        }
    }
    Ok(out)
}

/// `β` over [`bloch_grid`].
pub fn bloch_map(dtheta_deg: f64, dphi_deg: f64, spectrum: &Spectrum) -> Result<Vec<TemperaturePoint>> {
    bloch_grid(dtheta_deg, dphi_deg)?.iter().map(|a| solve_beta(a, spectrum)).collect()
}

/// Grid extremes of a map, each refined by alternating golden-section
/// searches in θ and φ within one grid step of the grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapExtrema {
    pub max_beta: TemperaturePoint,
    pub min_beta: TemperaturePoint,
}

pub fn map_extrema(
    map: &[TemperaturePoint],
    dtheta_deg: f64,
    dphi_deg: f64,
    spectrum: &Spectrum,
) -> Result<MapExtrema> {
    let first = map.first().ok_or_else(|| invalid("empty temperature map"))?;
    let (mut hi, mut lo) = (first, first);
    for p in map {
        if p.beta > hi.beta {
            hi = p;
        }
        if p.beta < lo.beta {
            lo = p;
        }
    }
    let (dt, dp) = (dtheta_deg.to_radians(), dphi_deg.to_radians());
    Ok(MapExtrema {
        max_beta: refine_extremum(hi, dt, dp, 1.0, spectrum)?,
        min_beta: refine_extremum(lo, dt, dp, -1.0, spectrum)?,
    })
}

const REFINE_ROUNDS: usize = 6;
const REFINE_TOL: f64 = 1e-9;

fn refine_extremum(
    start: &TemperaturePoint,
    dtheta: f64,
    dphi: f64,
    sign: f64,
    spectrum: &Spectrum,
) -> Result<TemperaturePoint> {
    let score = |t: f64, p: f64| -> Result<f64> {
        Ok(sign * solve_beta(&BlochAngles::new(t.clamp(0.0, PI), p.rem_euclid(2.0 * PI))?, spectrum)?.beta)
    };
    let (mut t, mut p) = (start.angles.theta, start.angles.phi);
    for _ in 0..REFINE_ROUNDS {
        t = golden_max(|x| score(x, p), (t - dtheta).max(0.0), (t + dtheta).min(PI))?;
        p = golden_max(|x| score(t, x), p - dphi, p + dphi)?;
    }
    let best = solve_beta(&BlochAngles::new(t, p.rem_euclid(2.0 * PI))?, spectrum)?;
    Ok(if sign * best.beta >= sign * start.beta { best } else { *start })
}

fn golden_max(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<f64> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while b - a > REFINE_TOL {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

fn grid_count(range: f64, step: f64) -> Result<usize> {
    if !(step > 0.0) {
        return Err(invalid("grid step must be positive"));
    }
    let n = (range / step).round();
    if ((n * step) - range).abs() > 1e-9 {
        return Err(invalid(format!("step {step} does not divide {range}")));
    }
    Ok(n as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn spec(l: usize, b: Boundary) -> Spectrum {
        Spectrum::compute(&QuenchParams::model_point(l), b).unwrap()
    }

    #[test]
    fn product_energy_closed_forms() {
        let p = QuenchParams::model_point(10);
        let north = BlochAngles::new(0.0, 0.0).unwrap();
        assert!((product_state_energy(&north, &p, Boundary::Open) + 14.0).abs() < 1e-12);
        assert!((product_state_energy(&north, &p, Boundary::Periodic) + 15.0).abs() < 1e-12);
        let y = BlochAngles::new(FRAC_PI_2, FRAC_PI_2).unwrap();
        assert!(product_state_energy(&y, &p, Boundary::Open).abs() < 1e-12);
    }

    #[test]
    fn thermal_energy_limits_and_monotonicity() {
        let s = spec(8, Boundary::Open);
        assert!(s.thermal_energy(0.0).abs() < 1e-12);
        assert!((s.thermal_energy(50.0) - s.ground_energy()).abs() < 1e-6);
        let mut prev = f64::INFINITY;
        for k in -40..=40 {
            let e = s.thermal_energy(k as f64 * 0.25);
            assert!(e < prev);
            prev = e;
        }
    }

    #[test]
    fn y_plus_state_has_infinite_temperature() {
        let s = spec(8, Boundary::Periodic);
        let pt = solve_beta(&BlochAngles::new(FRAC_PI_2, FRAC_PI_2).unwrap(), &s).unwrap();
        assert_eq!(pt.beta, 0.0);
        assert!(pt.temperature.is_infinite());
    }

    #[test]
    fn residual_within_tolerance() {
        let s = spec(8, Boundary::Periodic);
        for (t, ph) in [(0.0, 0.0), (0.4, 1.0), (2.0, PI), (2.8, 0.1)] {
            let a = BlochAngles::new(t, ph).unwrap();
            let pt = solve_beta(&a, &s).unwrap();
            let target = product_state_energy(&a, &s.params, s.boundary);
            assert!((s.thermal_energy(pt.beta) - target).abs() < 1e-9 * 8.0);
            assert!((pt.beta * pt.temperature - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn map_grid_and_symmetry() {
        let s = spec(6, Boundary::Periodic);
        let m = bloch_map(30.0, 60.0, &s).unwrap();
        assert_eq!(m.len(), 7 * 6);
        for j in 1..6 {
            assert_eq!(m[j].beta, m[0].beta);
        }
        // φ → 2π − φ
        for i in 0..7 {
            let row = &m[i * 6..(i + 1) * 6];
            for j in 1..6 {
                assert!((row[j].beta - row[6 - j].beta).abs() < 1e-9);
            }
        }
        assert!(bloch_map(7.0, 10.0, &s).is_err());
    }

    #[test]
    fn refined_extrema_improve_on_grid() {
        let s = spec(6, Boundary::Periodic);
        let m = bloch_map(15.0, 30.0, &s).unwrap();
        let e = map_extrema(&m, 15.0, 30.0, &s).unwrap();
        assert!(m.iter().all(|p| p.beta <= e.max_beta.beta + 1e-12 && p.beta >= e.min_beta.beta - 1e-12));
        // stationary: nearby points are not better
        for (dt, dp) in [(1e-3, 0.0), (-1e-3, 0.0), (0.0, 1e-3), (0.0, -1e-3)] {
            let a = e.max_beta.angles;
            let q = BlochAngles::new((a.theta + dt).clamp(0.0, PI), (a.phi + dp).rem_euclid(2.0 * PI)).unwrap();
            assert!(solve_beta(&q, &s).unwrap().beta <= e.max_beta.beta + 1e-9);
        }
    }
}
