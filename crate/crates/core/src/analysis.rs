//! Weight-resolved diagnostics of an evolving operator: contributing and
//! non-contributing densities, direct contributions, the operator weight
//! entropy (OWE) and the backflow protocol.

use std::collections::BTreeMap;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::evolution::{EvolutionConfig, Evolver, QuenchParams};
use crate::mpo::{apply_mpo_exact, sandwich};
use crate::mps::{expectation, OperatorMps};
use crate::pauli::{product_state_mps, Frame, ParallelBasis};
use crate::projectors::{backflow_projector, split_weight_counter, weight_counter};

/// Below this normalisation the accumulated sum is treated as converged and
/// the OWE is set to zero.
pub const OWE_NORM_FLOOR: f64 = 1e-13;

/// Relative and absolute tolerances of the peak detector.
const PEAK_REL_TOL: f64 = 1e-13;
const PEAK_ABS_TOL: f64 = 1e-14;

/// `ρ^c_ω` and `ρ^nc_ω` for `ω = 0..=omega_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Densities {
    pub time: f64,
    pub contributing: Vec<f64>,
    pub noncontributing: Vec<f64>,
}

impl Densities {
    pub fn total(&self) -> f64 {
        self.contributing.iter().chain(&self.noncontributing).sum()
    }
}

/// `O_ω(t)` for `ω = 0..=omega_max` together with the full expectation
/// `⟨ρ|O(t)⟩` (both in expectation units, `Tr(ρ ·)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contributions {
    pub time: f64,
    pub values: Vec<f64>,
    pub total: f64,
}

fn in_frame(state: &OperatorMps, frame: Frame) -> std::borrow::Cow<'_, OperatorMps> {
    if state.frame() == frame {
        std::borrow::Cow::Borrowed(state)
    } else {
        std::borrow::Cow::Owned(state.to_frame(frame))
    }
}

/// `ρ^c_ω = ⟨O|P^c P_ω|O⟩`, `ρ^nc_ω = ⟨O|P^nc P_ω|O⟩` in one contraction.
pub fn densities(state: &OperatorMps, basis: &ParallelBasis, omega_max: usize) -> Result<Densities> {
    let n = state.len();
    if omega_max > n {
        return Err(invalid(format!("omega_max {omega_max} exceeds chain length {n}")));
    }
    let s = in_frame(state, basis.frame());
    let counter = split_weight_counter(basis, omega_max, n)?;
    let vals = sandwich(&s, &counter, &s)?;
    let k = omega_max + 1;
    Ok(Densities {
        time: state.time(),
        contributing: vals[..k].to_vec(),
        noncontributing: vals[k..].to_vec(),
    })
}

/// `O_ω(t) = Tr(ρ P_ω P^c O(t))`. Because `P^c ρ = ρ` this is the weight-`ω`
/// part of the overlap with `ρ`, read out for all `ω` at once.
pub fn direct_contributions(state: &OperatorMps, rho: &OperatorMps, omega_max: usize) -> Result<Contributions> {
    let n = state.len();
    if omega_max > n {
        return Err(invalid(format!("omega_max {omega_max} exceeds chain length {n}")));
    }
    let r = in_frame(rho, state.frame());
    let scale = 2f64.powi(n as i32);
    let counter = weight_counter(omega_max, n)?;
    let values = sandwich(&r, &counter, state)?.into_iter().map(|v| v * scale).collect();
    Ok(Contributions { time: state.time(), values, total: expectation(&r, state)? })
}

/// Distribution and entropy at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OwePoint {
    pub time: f64,
    pub owe: f64,
    /// `p_ω` for `ω = 1..=ω*`.
    pub probabilities: Vec<f64>,
    /// `N_ω* = Σ_{ω=1}^{ω*} d_ω`.
    pub normalization: f64,
    /// The accumulated sum already reproduces the exact value.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OweSeries {
    pub omega_star: usize,
    pub points: Vec<OwePoint>,
}

impl OweSeries {
    pub fn times(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.time).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.owe).collect()
    }
}

/// Deviations `d_ω = |O − Σ_{n≤ω} O_n|` for `ω = 1..=omega_star`, with
/// `contributions[ω]` indexed from `ω = 0`.
pub fn deviations(contributions: &[f64], exact: f64, omega_star: usize) -> Result<Vec<f64>> {
    if omega_star == 0 || contributions.len() < omega_star + 1 {
        return Err(invalid(format!(
            "need contributions for omega = 0..={omega_star}, have {}",
            contributions.len()
        )));
    }
    let mut acc = contributions[0];
    Ok((1..=omega_star)
        .map(|w| {
            acc += contributions[w];
            (exact - acc).abs()
        })
        .collect())
}

/// OWE of one deviation profile (base-2 entropy of `p = d / N`).
pub fn owe_point(time: f64, contributions: &[f64], exact: f64, omega_star: usize) -> Result<OwePoint> {
    let d = deviations(contributions, exact, omega_star)?;
    let norm: f64 = d.iter().sum();
    if !norm.is_finite() {
        return Err(Error::NumericalFailure(format!("non-finite OWE normalisation at t={time}")));
    }
    if norm <= OWE_NORM_FLOOR {
        return Ok(OwePoint { time, owe: 0.0, probabilities: vec![0.0; omega_star], normalization: norm, converged: true });
    }
    let probabilities: Vec<f64> = d.iter().map(|x| x / norm).collect();
    let owe = probabilities.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum();
    Ok(OwePoint { time, owe, probabilities, normalization: norm, converged: false })
}

pub fn owe(series: &[Contributions], omega_star: usize) -> Result<OweSeries> {
    let points = series
        .iter()
        .map(|c| owe_point(c.time, &c.values, c.total, omega_star))
        .collect::<Result<Vec<_>>>()?;
    Ok(OweSeries { omega_star, points })
}

/// Largest OWE with `t ≤ t_max`, and the first time it occurs.
pub fn max_owe(series: &OweSeries, t_max: f64) -> Result<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for p in series.points.iter().filter(|p| p.time <= t_max + 1e-12) {
        if best.is_none_or(|(v, _)| p.owe > v) {
            best = Some((p.owe, p.time));
        }
    }
    best.ok_or(Error::EmptyWindow)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    DensityC,
    DensityNc,
    Contribution,
    Deviation,
    Probability,
}

/// Time-indexed weight channels sharing one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSeries {
    pub kind: ChannelKind,
    pub times: Vec<f64>,
    pub channels: BTreeMap<usize, Vec<f64>>,
}

impl WeightSeries {
    pub fn new(kind: ChannelKind) -> Self {
        Self { kind, times: Vec::new(), channels: BTreeMap::new() }
    }

    /// Appends one time slice; `values[k]` belongs to weight `first + k`.
    pub fn push(&mut self, time: f64, first: usize, values: &[f64]) -> Result<()> {
        if !self.channels.is_empty() && self.channels.len() != values.len() {
            return Err(invalid("all time slices must carry the same weights"));
        }
        self.times.push(time);
        for (k, v) in values.iter().enumerate() {
            self.channels.entry(first + k).or_default().push(*v);
        }
        Ok(())
    }

    pub fn from_densities(list: &[Densities], noncontributing: bool) -> Result<Self> {
        let kind = if noncontributing { ChannelKind::DensityNc } else { ChannelKind::DensityC };
        let mut s = Self::new(kind);
        for d in list {
            let v = if noncontributing { &d.noncontributing } else { &d.contributing };
            s.push(d.time, 0, v)?;
        }
        Ok(s)
    }

    pub fn from_contributions(list: &[Contributions]) -> Result<Self> {
        let mut s = Self::new(ChannelKind::Contribution);
        for c in list {
            s.push(c.time, 0, &c.values)?;
        }
        Ok(s)
    }

    pub fn from_owe(series: &OweSeries) -> Result<Self> {
        let mut s = Self::new(ChannelKind::Probability);
        for p in &series.points {
            s.push(p.time, 1, &p.probabilities)?;
        }
        Ok(s)
    }
}

/// A detected density maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub index: usize,
    /// Time refined by a three-point parabola through the grid maximum.
    pub refined_time: f64,
}

/// First index where the forward difference turns from positive to
/// negative. Differences within tolerance count as flat; a flat stretch
/// after a rise followed by a fall places the peak at the start of the
/// plateau.
pub fn find_peak(times: &[f64], values: &[f64]) -> Option<Peak> {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = PEAK_REL_TOL * scale + PEAK_ABS_TOL;
    let mut top: Option<usize> = None;
    for k in 0..values.len().saturating_sub(1) {
        let diff = values[k + 1] - values[k];
        if diff > tol {
            top = Some(k + 1);
        } else if diff < -tol {
            if let Some(j) = top {
                return Some(Peak { index: j, refined_time: refine(times, values, j) });
            }
        }
    }
    None
}

fn refine(times: &[f64], values: &[f64], j: usize) -> f64 {
    if j == 0 || j + 1 >= values.len() {
        return times[j];
    }
    let (a, b, c) = (values[j - 1], values[j], values[j + 1]);
    let curvature = a - 2.0 * b + c;
    if curvature >= 0.0 {
        return times[j];
    }
    let h = times[j + 1] - times[j];
    times[j] + 0.5 * h * (a - c) / curvature
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackflowRecord {
    pub omega_perp: usize,
    /// Grid time of the density maximum, where the projection is applied.
    pub t0: f64,
    pub t0_refined: f64,
    pub peak_density: f64,
    /// Times from `t0` on.
    pub times: Vec<f64>,
    /// `|Tr(ρ v(t))|` of the projected, re-evolved vector.
    pub overlaps: Vec<f64>,
    /// OSEE of the projected vector at the central cut.
    pub osee: Vec<f64>,
    /// Monitored `(t, ρ^nc_{ω⊥})` up to the detection of the peak.
    pub monitor: Vec<(f64, f64)>,
}

/// Evolves `initial`, watching the non-contributing density at total weight
/// `omega_perp`. At its first maximum the operator is projected onto that
/// sector and the projected vector is evolved on to `cfg.t_max`.
pub fn backflow(
    initial: &OperatorMps,
    basis: &ParallelBasis,
    params: &QuenchParams,
    cfg: &EvolutionConfig,
    omega_perp: usize,
) -> Result<BackflowRecord> {
    let n = initial.len();
    if n != params.length {
        return Err(invalid("operator length does not match the chain"));
    }
    let frame = basis.frame();
    let proj = backflow_projector(omega_perp, basis, n)?;
    // ρ is exactly (𝟙 + σ∥)/2 per site in its own frame
    let rho_par = OperatorMps::product(&vec![[0.5, 0.5, 0.0, 0.0]; n], frame);
    let mut ev = Evolver::from_params(params, cfg)?;
    let n_steps = cfg.n_steps();

    let density = |op: &OperatorMps| -> Result<f64> {
        let s = op.to_frame(frame);
        Ok(sandwich(&s, &proj.mpo, &s)?[0])
    };

    let mut state = initial.to_frame(crate::pauli::Frame::Pauli);
    let mut times = vec![ev.time()];
    let mut values = vec![density(&state)?];
    let mut previous = state.clone();
    let mut peak = None;
    for _ in 0..n_steps {
        previous.clone_from(&state);
        ev.advance(&mut state, 1)?;
        times.push(ev.time());
        values.push(density(&state)?);
        if let Some(p) = find_peak(&times, &values) {
            peak = Some(p);
            break;
        }
    }
    let monitor: Vec<(f64, f64)> = times.iter().copied().zip(values.iter().copied()).collect();
    let Some(peak) = peak else {
        return Err(Error::ProtocolIncomplete { omega_perp, t_max: cfg.t_max, trace: monitor });
    };
    // the detector needs one value past the peak; rewind to the grid maximum
    debug_assert_eq!(peak.index + 1, times.len() - 1);
    let t0 = times[peak.index];
    ev.set_steps(ev.steps() - 1);
    let peak_state = previous;
    info!("omega_perp={omega_perp}: density peak {:.6e} at t0={t0}", values[peak.index]);

    let mut projected = apply_mpo_exact(&proj.mpo, &peak_state.to_frame(frame))?;
    let overlap_t0 = expectation(&rho_par, &projected)?.abs();
    projected.compress(ev.truncation())?;
    let mut v = projected.to_frame(crate::pauli::Frame::Pauli);
    let rho = product_state_mps(&basis.angles, n)?;
    let cut = n / 2;

    let mut rec = BackflowRecord {
        omega_perp,
        t0,
        t0_refined: peak.refined_time,
        peak_density: values[peak.index],
        times: vec![t0],
        overlaps: vec![overlap_t0],
        osee: vec![v.osee(cut)?],
        monitor,
    };
    let remaining = n_steps.saturating_sub(ev.steps() as usize);
    for _ in 0..remaining {
        ev.advance(&mut v, 1)?;
        rec.times.push(ev.time());
        rec.overlaps.push(expectation(&rho, &v)?.abs());
        rec.osee.push(v.osee(cut)?);
    }
    debug!("backflow omega_perp={omega_perp}: {} samples after t0", rec.times.len());
    Ok(rec)
}
