//! Run configuration: TOML file sections `model`, `evolution`, `initial`,
//! `analysis`, `output`, with command-line flags taking precedence.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use opweight::evolution::{Boundary, EvolutionConfig, QuenchParams};
use opweight::pauli::{BlochAngles, Pauli};

/// Invalid or inconsistent configuration (exit code 2).
#[derive(Debug, thiserror::Error)]
#[error("config error: {0}")]
pub struct ConfigError(pub String);

fn cfg_err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub evolution: EvolutionSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub length: Option<usize>,
    pub coupling: Option<f64>,
    pub transverse_field: Option<f64>,
    pub longitudinal_field: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSection {
    pub dt: Option<f64>,
    pub chi_max: Option<usize>,
    pub lambda2_cutoff: Option<f64>,
    pub t_max: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub theta_deg: Option<f64>,
    pub phi_deg: Option<f64>,
    pub operator: Option<String>,
    pub site: Option<usize>,
    /// Sweep grid: explicit θ values, or a step over `[0, 180]`.
    pub thetas_deg: Option<Vec<f64>>,
    pub theta_step_deg: Option<f64>,
    pub phi_cuts_deg: Option<Vec<f64>>,
    pub operators: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    pub omega_max: Option<usize>,
    pub omega_star: Option<Vec<usize>>,
    pub stride: Option<usize>,
    pub omega_perp: Option<Vec<usize>>,
    pub dtheta_deg: Option<f64>,
    pub dphi_deg: Option<f64>,
    pub thermo_length: Option<usize>,
    pub boundary: Option<Boundary>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub checkpoint_every: Option<usize>,
}

/// Values given on the command line.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub length: Option<usize>,
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    pub operator: Option<String>,
    pub site: Option<usize>,
    pub chi: Option<usize>,
    pub dt: Option<f64>,
    pub tmax: Option<f64>,
    pub omega_max: Option<usize>,
    pub omega_star: Vec<usize>,
    pub omega_perp: Vec<usize>,
    pub dtheta: Option<f64>,
    pub dphi: Option<f64>,
    pub stride: Option<usize>,
    pub checkpoint_every: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Initial {
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub operator: Pauli,
    pub site: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid {
    pub thetas_deg: Vec<f64>,
    pub phi_cuts_deg: Vec<f64>,
    pub operators: Vec<Pauli>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Analysis {
    pub omega_max: usize,
    pub omega_star: Vec<usize>,
    pub stride: usize,
    pub omega_perp: Vec<usize>,
    pub dtheta_deg: f64,
    pub dphi_deg: f64,
    pub thermo_length: usize,
    pub boundary: Boundary,
}

/// Fully resolved configuration. Everything except the output location and
/// checkpoint cadence enters the config hash.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub model: QuenchParams,
    pub evolution: EvolutionConfig,
    pub initial: Initial,
    pub sweep: SweepGrid,
    pub analysis: Analysis,
    #[serde(skip)]
    pub out_dir: PathBuf,
    #[serde(skip)]
    pub checkpoint_every: usize,
}

const DEFAULT_OMEGA_STAR: [usize; 3] = [10, 11, 12];
const DEFAULT_OMEGA_PERP: [usize; 3] = [4, 6, 8];
const DEFAULT_PHI_CUTS: [f64; 5] = [0.0, 45.0, 90.0, 135.0, 180.0];
const DEFAULT_THETA_STEP: f64 = 9.0;

fn parse_pauli(s: &str) -> Result<Pauli, ConfigError> {
    match s.parse::<Pauli>() {
        Ok(Pauli::I) | Err(_) => Err(cfg_err(format!("operator must be one of x, y, z, got {s:?}"))),
        Ok(p) => Ok(p),
    }
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| cfg_err(format!("{}: {e}", path.display())))
    }
}

impl RunConfig {
    pub fn resolve(file: FileConfig, o: &Overrides) -> Result<Self, ConfigError> {
        let m = &file.model;
        let length = o.length.or(m.length).unwrap_or(30);
        let model = QuenchParams {
            coupling: m.coupling.unwrap_or(1.0),
            transverse_field: m.transverse_field.unwrap_or(1.0),
            longitudinal_field: m.longitudinal_field.unwrap_or(0.5),
            length,
        };
        model.validate().map_err(|e| cfg_err(e.to_string()))?;

        let e = &file.evolution;
        let evolution = EvolutionConfig {
            dt: o.dt.or(e.dt).unwrap_or(0.01),
            chi_max: o.chi.or(e.chi_max).unwrap_or(256),
            lambda2_cutoff: e.lambda2_cutoff.unwrap_or(1e-10),
            t_max: o.tmax.or(e.t_max).unwrap_or(5.0),
        };
        evolution.validate().map_err(|e| cfg_err(e.to_string()))?;

        let i = &file.initial;
        let theta_deg = o.theta.or(i.theta_deg).unwrap_or(0.0);
        let phi_deg = o.phi.or(i.phi_deg).unwrap_or(0.0);
        BlochAngles::from_degrees(theta_deg, phi_deg).map_err(|e| cfg_err(e.to_string()))?;
        let operator = parse_pauli(o.operator.as_deref().or(i.operator.as_deref()).unwrap_or("x"))?;
        let site = o.site.or(i.site).unwrap_or(length / 2);
        if site >= length {
            return Err(cfg_err(format!("site {site} outside the chain 0..{length}")));
        }
        let initial = Initial { theta_deg, phi_deg, operator, site };

        let thetas_deg = match (o.theta, &i.thetas_deg, i.theta_step_deg) {
            (Some(t), _, _) => vec![t],
            (None, Some(list), _) => list.clone(),
            (None, None, step) => {
                let step = step.unwrap_or(DEFAULT_THETA_STEP);
                let n = (180.0 / step).round();
                if !(step > 0.0) || (n * step - 180.0).abs() > 1e-9 {
                    return Err(cfg_err(format!("theta_step_deg {step} must divide 180")));
                }
                (0..=n as usize).map(|k| k as f64 * step).collect()
            }
        };
        let phi_cuts_deg = match o.phi {
            Some(p) => vec![p],
            None => i.phi_cuts_deg.clone().unwrap_or_else(|| DEFAULT_PHI_CUTS.to_vec()),
        };
        for &t in &thetas_deg {
            for &p in &phi_cuts_deg {
                BlochAngles::from_degrees(t, p).map_err(|e| cfg_err(e.to_string()))?;
            }
        }
        let operators = match (&o.operator, &i.operators) {
            (Some(op), _) => vec![parse_pauli(op)?],
            (None, Some(list)) => list.iter().map(|s| parse_pauli(s)).collect::<Result<_, _>>()?,
            (None, None) => vec![Pauli::X, Pauli::Y, Pauli::Z],
        };
        let sweep = SweepGrid { thetas_deg, phi_cuts_deg, operators };

        let a = &file.analysis;
        let omega_max = o.omega_max.or(a.omega_max).unwrap_or(length.min(12));
        if omega_max > length {
            return Err(cfg_err(format!("omega_max {omega_max} exceeds chain length {length}")));
        }
        let omega_star = if !o.omega_star.is_empty() {
            o.omega_star.clone()
        } else if let Some(list) = &a.omega_star {
            list.clone()
        } else {
            let d: Vec<usize> = DEFAULT_OMEGA_STAR.into_iter().filter(|&w| w <= omega_max).collect();
            if d.is_empty() {
                vec![omega_max.max(1)]
            } else {
                d
            }
        };
        if let Some(&bad) = omega_star.iter().find(|&&w| w == 0 || w > omega_max) {
            return Err(cfg_err(format!("omega_star {bad} must lie in 1..={omega_max} (omega_max)")));
        }
        let omega_perp = if !o.omega_perp.is_empty() {
            o.omega_perp.clone()
        } else {
            a.omega_perp
                .clone()
                .unwrap_or_else(|| DEFAULT_OMEGA_PERP.into_iter().filter(|&w| w <= length).collect())
        };
        if let Some(&bad) = omega_perp.iter().find(|&&w| w == 0 || w > length) {
            return Err(cfg_err(format!("omega_perp {bad} must lie in 1..={length}")));
        }
        let stride = o.stride.or(a.stride).unwrap_or(5);
        if stride == 0 {
            return Err(cfg_err("stride must be positive"));
        }
        let analysis = Analysis {
            omega_max,
            omega_star,
            stride,
            omega_perp,
            dtheta_deg: o.dtheta.or(a.dtheta_deg).unwrap_or(1.0),
            dphi_deg: o.dphi.or(a.dphi_deg).unwrap_or(1.0),
            thermo_length: a.thermo_length.unwrap_or(10),
            boundary: a.boundary.unwrap_or(Boundary::Periodic),
        };

        let checkpoint_every = o.checkpoint_every.or(file.output.checkpoint_every).unwrap_or(0);
        if checkpoint_every % stride != 0 {
            return Err(cfg_err(format!("checkpoint_every {checkpoint_every} must be a multiple of stride {stride}")));
        }
        let out_dir = o.out.clone().or(file.output.dir).unwrap_or_else(|| PathBuf::from("out"));

        Ok(Self { model, evolution, initial, sweep, analysis, out_dir, checkpoint_every })
    }

    pub fn angles(&self) -> BlochAngles {
        BlochAngles::from_degrees(self.initial.theta_deg, self.initial.phi_deg).expect("validated")
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serialises");
        hex::encode(&Sha256::digest(&json)[..8])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        RunConfig::resolve(toml::from_str(text).map_err(|e| cfg_err(e.to_string()))?, &Overrides::default())
    }

    #[test]
    fn defaults() {
        let c = parse("").unwrap();
        assert_eq!(c.model.length, 30);
        assert_eq!(c.initial.site, 15);
        assert_eq!(c.analysis.omega_star, vec![10, 11, 12]);
        assert_eq!(c.analysis.omega_perp, vec![4, 6, 8]);
        assert_eq!(c.analysis.stride, 5);
        assert_eq!(c.sweep.operators, vec![Pauli::X, Pauli::Y, Pauli::Z]);
        assert_eq!(c.sweep.phi_cuts_deg, vec![0.0, 45.0, 90.0, 135.0, 180.0]);
        assert_eq!(c.sweep.thetas_deg.len(), 21);
    }

    #[test]
    fn flags_override_file() {
        let file: FileConfig = toml::from_str("[evolution]\nchi_max = 64\ndt = 0.05\n[model]\nlength = 8").unwrap();
        let o = Overrides { chi: Some(16), omega_star: vec![3, 4], ..Default::default() };
        let c = RunConfig::resolve(file, &o).unwrap();
        assert_eq!(c.evolution.chi_max, 16);
        assert_eq!(c.evolution.dt, 0.05);
        assert_eq!(c.analysis.omega_star, vec![3, 4]);
        assert_eq!(c.analysis.omega_max, 8);
    }

    #[test]
    fn small_chain_default_omega_star() {
        let c = parse("[model]\nlength = 6").unwrap();
        assert_eq!(c.analysis.omega_max, 6);
        assert_eq!(c.analysis.omega_star, vec![6]);
        assert_eq!(c.analysis.omega_perp, vec![4, 6]);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(parse("[model]\nlenght = 6").is_err());
        assert!(parse("[initial]\noperator = \"w\"").is_err());
        assert!(parse("[initial]\noperator = \"i\"").is_err());
        assert!(parse("[model]\nlength = 6\n[analysis]\nomega_star = [7]").is_err());
        assert!(parse("[model]\nlength = 6\n[initial]\nsite = 6").is_err());
        assert!(parse("[analysis]\nstride = 4\n[output]\ncheckpoint_every = 10").is_err());
        assert!(parse("[initial]\ntheta_deg = 200").is_err());
    }

    #[test]
    fn hash_ignores_output_location() {
        let a = parse("[output]\ndir = \"a\"").unwrap();
        let b = parse("[output]\ndir = \"b\"\ncheckpoint_every = 10").unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = parse("[evolution]\nchi_max = 12").unwrap();
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 16);
    }
}
