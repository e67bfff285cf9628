//! Pauli algebra, Bloch-sphere product states and the parallel basis they
//! induce on single-site operator space.

use std::f64::consts::PI;
use std::fmt;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{c64, DenseMatrix, RealMatrix};
use crate::mps::OperatorMps;

/// Single-site Pauli operators; `index()` is the physical index used by all
/// tensors in the Pauli frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// 2×2 matrix in the computational basis `|0⟩, |1⟩`.
    pub fn matrix(self) -> DenseMatrix {
        let (o, l, i) = (c64::new(0.0, 0.0), c64::new(1.0, 0.0), c64::new(0.0, 1.0));
        let entries = match self {
            Pauli::I => [l, o, o, l],
            Pauli::X => [o, l, l, o],
            Pauli::Y => [o, -i, i, o],
            Pauli::Z => [l, o, o, -l],
        };
        Mat::from_fn(2, 2, |r, c| entries[2 * r + c])
    }

    /// Unit axis of a non-identity Pauli.
    pub fn axis(self) -> Option<[f64; 3]> {
        match self {
            Pauli::I => None,
            Pauli::X => Some([1.0, 0.0, 0.0]),
            Pauli::Y => Some([0.0, 1.0, 0.0]),
            Pauli::Z => Some([0.0, 0.0, 1.0]),
        }
    }
}

impl std::str::FromStr for Pauli {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "i" | "1" | "id" => Ok(Pauli::I),
            "x" => Ok(Pauli::X),
            "y" => Ok(Pauli::Y),
            "z" => Ok(Pauli::Z),
            other => Err(invalid(format!("unknown Pauli label {other:?}"))),
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Pauli::I => "i",
            Pauli::X => "x",
            Pauli::Y => "y",
            Pauli::Z => "z",
        };
        f.write_str(s)
    }
}

/// Polar and azimuthal angle of a pure single-spin state, in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochAngles {
    pub theta: f64,
    pub phi: f64,
}

impl BlochAngles {
    /// `theta ∈ [0, π]`, `phi ∈ [0, 2π)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) {
            return Err(invalid(format!("theta = {theta} outside [0, pi]")));
        }
        if !(0.0..2.0 * PI).contains(&phi) {
            return Err(invalid(format!("phi = {phi} outside [0, 2pi)")));
        }
        Ok(Self { theta, phi })
    }

    /// Degrees in, with `phi` wrapped into `[0, 360)`.
    pub fn from_degrees(theta_deg: f64, phi_deg: f64) -> Result<Self> {
        let phi = phi_deg.rem_euclid(360.0);
        Self::new(theta_deg.to_radians(), phi.to_radians())
    }

    pub fn theta_deg(&self) -> f64 {
        self.theta.to_degrees()
    }

    pub fn phi_deg(&self) -> f64 {
        self.phi.to_degrees()
    }

    /// Bloch vector `(sinθ cosφ, sinθ sinφ, cosθ)`.
    pub fn bloch_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }
}

/// Tag declaring which single-site basis the physical index of an operator
/// vector refers to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Frame {
    /// `{𝟙, σx, σy, σz}`.
    Pauli,
    /// `{𝟙, σ∥, σ⊥1, σ⊥2}` of the product state with these angles.
    Parallel(BlochAngles),
}

/// Initial-state adapted orthonormal triple. `parallel` is the Bloch vector,
/// `perp1` the ∂/∂θ direction and `perp2` the ∂/∂φ direction, which makes
/// `(parallel, perp1, perp2)` right-handed and smooth everywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParallelBasis {
    pub angles: BlochAngles,
    pub parallel: [f64; 3],
    pub perp1: [f64; 3],
    pub perp2: [f64; 3],
}

impl ParallelBasis {
    pub fn new(angles: BlochAngles) -> Self {
        let (st, ct) = angles.theta.sin_cos();
        let (sp, cp) = angles.phi.sin_cos();
        Self {
            angles,
            parallel: [st * cp, st * sp, ct],
            perp1: [ct * cp, ct * sp, -st],
            perp2: [-sp, cp, 0.0],
        }
    }

    pub fn frame(&self) -> Frame {
        Frame::Parallel(self.angles)
    }

    /// Rows of the 3×3 rotation taking `(x, y, z)` components to
    /// `(∥, ⊥1, ⊥2)` components.
    pub fn rows(&self) -> [[f64; 3]; 3] {
        [self.parallel, self.perp1, self.perp2]
    }
}

/// 4×4 orthogonal map from `{𝟙, x, y, z}` components of a single-site
/// operator to `{𝟙, ∥, ⊥1, ⊥2}` components; block diagonal `1 ⊕ R`.
pub fn frame_rotation(basis: &ParallelBasis) -> RealMatrix {
    let rows = basis.rows();
    Mat::from_fn(4, 4, |i, j| match (i, j) {
        (0, 0) => 1.0,
        (0, _) | (_, 0) => 0.0,
        _ => rows[i - 1][j - 1],
    })
}

/// Label of a single site of a [`PauliString`]: index 0 is the identity and
/// 1..=3 the non-identity operators of the string's frame.
pub type SiteLabel = u8;

#[derive(Debug, Clone, PartialEq)]
pub struct PauliString {
    pub labels: Vec<SiteLabel>,
    pub frame: Frame,
}

impl PauliString {
    pub fn new(labels: Vec<SiteLabel>, frame: Frame) -> Result<Self> {
        if let Some(bad) = labels.iter().find(|&&l| l > 3) {
            return Err(invalid(format!("site label {bad} is not in 0..=3")));
        }
        Ok(Self { labels, frame })
    }

    pub fn identity(len: usize, frame: Frame) -> Self {
        Self { labels: vec![0; len], frame }
    }

    /// Single insertion of `op` at `site`, identity elsewhere, in the Pauli frame.
    pub fn local(op: Pauli, site: usize, len: usize) -> Result<Self> {
        if site >= len {
            return Err(invalid(format!("site {site} out of range for length {len}")));
        }
        let mut labels = vec![0; len];
        labels[site] = op.index() as u8;
        Ok(Self { labels, frame: Frame::Pauli })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of non-identity insertions.
    pub fn weight(&self) -> usize {
        self.labels.iter().filter(|&&l| l != 0).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeightSplit {
    pub total: usize,
    pub parallel: usize,
    pub orthogonal: usize,
}

const ALIGN_TOL: f64 = 1e-12;

/// Splits the weight of `s` into parallel and orthogonal insertions relative
/// to `basis`. A Pauli-frame string is accepted when every insertion is
/// either aligned with or orthogonal to the Bloch vector; otherwise it is not
/// a single string of the parallel frame and the call fails.
pub fn weight_split(s: &PauliString, basis: &ParallelBasis) -> Result<WeightSplit> {
    let mut parallel = 0;
    let mut orthogonal = 0;
    match s.frame {
        Frame::Parallel(angles) => {
            if angles != basis.angles {
                return Err(invalid("string frame belongs to a different product state"));
            }
            for &l in &s.labels {
                match l {
                    0 => {}
                    1 => parallel += 1,
                    _ => orthogonal += 1,
                }
            }
        }
        Frame::Pauli => {
            for &l in &s.labels {
                let Some(axis) = Pauli::from_index(l as usize).and_then(Pauli::axis) else {
                    continue;
                };
                let overlap: f64 = axis.iter().zip(basis.parallel).map(|(a, b)| a * b).sum();
                if (overlap.abs() - 1.0).abs() < ALIGN_TOL {
                    parallel += 1;
                } else if overlap.abs() < ALIGN_TOL {
                    orthogonal += 1;
                } else {
                    return Err(invalid(format!(
                        "Pauli insertion {l} is neither parallel nor orthogonal to the basis (overlap {overlap})"
                    )));
                }
            }
        }
    }
    Ok(WeightSplit { total: parallel + orthogonal, parallel, orthogonal })
}

/// Site vector `(1, sinθcosφ, sinθsinφ, cosθ)/2` of the vectorised
/// single-spin density matrix in the Pauli frame.
pub fn product_state_site_vector(angles: &BlochAngles) -> [f64; 4] {
    let n = angles.bloch_vector();
    [0.5, 0.5 * n[0], 0.5 * n[1], 0.5 * n[2]]
}

/// Vectorised product state `ρ(θ, φ)` as a bond-dimension-1 MPS in the
/// Pauli frame.
pub fn product_state_mps(angles: &BlochAngles, len: usize) -> Result<OperatorMps> {
    if len < 2 {
        return Err(invalid(format!("chain length {len} < 2")));
    }
    let v = product_state_site_vector(angles);
    Ok(OperatorMps::product(&vec![v; len], Frame::Pauli))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn north_pole_parallel_is_sigma_z() {
        let b = ParallelBasis::new(BlochAngles::new(0.0, 0.0).unwrap());
        assert_eq!(b.parallel, [0.0, 0.0, 1.0]);
    }

    #[test]
    fn x_minus_parallel_is_minus_sigma_x() {
        let b = ParallelBasis::new(BlochAngles::new(FRAC_PI_2, PI).unwrap());
        assert!((b.parallel[0] + 1.0).abs() < 1e-15);
        assert!(b.parallel[1].abs() < 1e-15 && b.parallel[2].abs() < 1e-15);
    }

    #[test]
    fn basis_is_orthonormal_and_right_handed() {
        for t in 0..=18 {
            for p in 0..36 {
                let a = BlochAngles::from_degrees(10.0 * t as f64, 10.0 * p as f64).unwrap();
                let b = ParallelBasis::new(a);
                let v = b.rows();
                for i in 0..3 {
                    for j in 0..3 {
                        let expect = if i == j { 1.0 } else { 0.0 };
                        assert!((dot(v[i], v[j]) - expect).abs() < 1e-14);
                    }
                }
                let cross = [
                    v[0][1] * v[1][2] - v[0][2] * v[1][1],
                    v[0][2] * v[1][0] - v[0][0] * v[1][2],
                    v[0][0] * v[1][1] - v[0][1] * v[1][0],
                ];
                assert!((dot(cross, v[2]) - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn frame_rotation_is_orthogonal() {
        let b = ParallelBasis::new(BlochAngles::new(1.1, 4.0).unwrap());
        let r = frame_rotation(&b);
        let rrt = &r * r.transpose();
        assert!(crate::linalg::max_abs_diff(rrt.as_ref(), crate::linalg::identity::<f64>(4).as_ref()) < 1e-14);
    }

    #[test]
    fn north_pole_rotation_moves_z_to_parallel_slot() {
        let r = frame_rotation(&ParallelBasis::new(BlochAngles::new(0.0, 0.0).unwrap()));
        // (0,0,0,1) in {𝟙,x,y,z} → (0,1,0,0) in {𝟙,∥,⊥1,⊥2}
        assert_eq!(r[(1, 3)], 1.0);
        assert_eq!(r[(1, 1)], 0.0);
        assert_eq!(r[(0, 0)], 1.0);
        // σx lands on ⊥1, σy on ⊥2
        assert_eq!(r[(2, 1)], 1.0);
        assert_eq!(r[(3, 2)], 1.0);
    }

    #[test]
    fn weight_split_cases() {
        let id = PauliString::identity(4, Frame::Pauli);
        let b_x = ParallelBasis::new(BlochAngles::new(FRAC_PI_2, 0.0).unwrap());
        let b_z = ParallelBasis::new(BlochAngles::new(0.0, 0.0).unwrap());
        assert_eq!(
            weight_split(&id, &b_x).unwrap(),
            WeightSplit { total: 0, parallel: 0, orthogonal: 0 }
        );
        let sx = PauliString::local(Pauli::X, 1, 4).unwrap();
        assert_eq!(
            weight_split(&sx, &b_x).unwrap(),
            WeightSplit { total: 1, parallel: 1, orthogonal: 0 }
        );
        assert_eq!(
            weight_split(&sx, &b_z).unwrap(),
            WeightSplit { total: 1, parallel: 0, orthogonal: 1 }
        );
    }

    #[test]
    fn weight_split_rejects_mixed_alignment() {
        let sx = PauliString::local(Pauli::X, 0, 3).unwrap();
        let b = ParallelBasis::new(BlochAngles::new(FRAC_PI_4, 0.0).unwrap());
        assert!(weight_split(&sx, &b).is_err());
    }

    #[test]
    fn weight_split_in_parallel_frame() {
        let b = ParallelBasis::new(BlochAngles::new(0.3, 0.2).unwrap());
        let s = PauliString::new(vec![1, 0, 2, 3, 1], b.frame()).unwrap();
        assert_eq!(weight_split(&s, &b).unwrap(), WeightSplit { total: 4, parallel: 2, orthogonal: 2 });
        let other = ParallelBasis::new(BlochAngles::new(0.4, 0.2).unwrap());
        assert!(weight_split(&s, &other).is_err());
    }

    #[test]
    fn angles_validate_ranges() {
        assert!(BlochAngles::new(-0.1, 0.0).is_err());
        assert!(BlochAngles::new(0.0, 2.0 * PI).is_err());
        let a = BlochAngles::from_degrees(90.0, -90.0).unwrap();
        assert!((a.phi - 1.5 * PI).abs() < 1e-14);
    }

    #[test]
    fn pauli_labels_parse() {
        assert_eq!("X".parse::<Pauli>().unwrap(), Pauli::X);
        assert!("w".parse::<Pauli>().is_err());
        assert_eq!(Pauli::Z.to_string(), "z");
    }
}
