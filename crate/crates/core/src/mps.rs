//! Matrix product states of vectorised operators.
//!
//! Each site tensor has shape `left × 4 × right` with real amplitudes in the
//! frame declared by [`Frame`]. The inner product is the normalised
//! Hilbert–Schmidt product `⟨A|B⟩ = 2^{-L} Tr(A†B)`, under which the Pauli
//! strings (and the strings of any parallel frame) are orthonormal, so it is
//! the plain dot product of the coefficient vectors.

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{svd_truncated, RealMatrix};
use crate::pauli::{frame_rotation, Frame, ParallelBasis, Pauli};

/// Physical dimension of a vectorised spin-1/2 operator.
pub const PHYS: usize = 4;

/// Bond dimensions above this abort with [`Error::ResourceLimit`].
pub const MAX_BOND_DIM: usize = 4096;

/// Largest chain for which dense `4^L` conversions are allowed.
pub const MAX_DENSE_LEN: usize = 10;

/// One site tensor, stored row-major as `[left][phys][right]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteTensor {
    pub left: usize,
    pub right: usize,
    pub data: Vec<f64>,
}

impl SiteTensor {
    pub fn zeros(left: usize, right: usize) -> Self {
        Self { left, right, data: vec![0.0; left * PHYS * right] }
    }

    pub fn new(left: usize, right: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != left * PHYS * right {
            return Err(invalid(format!(
                "site tensor {left}x{PHYS}x{right} needs {} entries, got {}",
                left * PHYS * right,
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(invalid("site tensor has non-finite entries"));
        }
        Ok(Self { left, right, data })
    }

    /// Bond-dimension-1 tensor holding a single-site vector.
    pub fn from_vector(v: [f64; PHYS]) -> Self {
        Self { left: 1, right: 1, data: v.to_vec() }
    }

    #[inline]
    pub fn get(&self, l: usize, p: usize, r: usize) -> f64 {
        self.data[(l * PHYS + p) * self.right + r]
    }

    #[inline]
    pub fn set(&mut self, l: usize, p: usize, r: usize, x: f64) {
        self.data[(l * PHYS + p) * self.right + r] = x;
    }

    /// True when every non-identity physical component is exactly zero.
    pub fn is_identity_only(&self) -> bool {
        (0..self.left).all(|l| {
            (1..PHYS).all(|p| (0..self.right).all(|r| self.get(l, p, r) == 0.0))
        })
    }

    /// `(left·4) × right` view.
    fn left_matrix(&self) -> RealMatrix {
        mat_from_rows(&self.data, self.left * PHYS, self.right)
    }

    /// `left × (4·right)` view.
    fn right_matrix(&self) -> RealMatrix {
        mat_from_rows(&self.data, self.left, PHYS * self.right)
    }

    /// `left × right` slice at physical index `p`.
    pub(crate) fn slice(&self, p: usize) -> RealMatrix {
        Mat::from_fn(self.left, self.right, |l, r| self.get(l, p, r))
    }

    /// Apply a single-site linear map `v ↦ m v` to the physical index.
    fn transform_physical(&mut self, m: MatRef<'_, f64>) {
        let mut out = vec![0.0; self.data.len()];
        for l in 0..self.left {
            for q in 0..PHYS {
                for p in 0..PHYS {
                    let w = m[(q, p)];
                    if w == 0.0 {
                        continue;
                    }
                    for r in 0..self.right {
                        out[(l * PHYS + q) * self.right + r] += w * self.get(l, p, r);
                    }
                }
            }
        }
        self.data = out;
    }
}

pub(crate) fn mat_from_rows(data: &[f64], rows: usize, cols: usize) -> RealMatrix {
    debug_assert_eq!(data.len(), rows * cols);
    Mat::from_fn(rows, cols, |i, j| data[i * cols + j])
}

pub(crate) fn rows_from_mat(m: MatRef<'_, f64>) -> Vec<f64> {
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// One truncation event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscardRecord {
    pub time: f64,
    pub bond: usize,
    pub weight: f64,
}

/// Accumulated squared Schmidt weight discarded by truncations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TruncationLedger {
    pub epsilon: f64,
    pub per_step: Vec<DiscardRecord>,
}

impl TruncationLedger {
    fn record(&mut self, time: f64, bond: usize, weight: f64) {
        if weight > 0.0 {
            self.epsilon += weight;
            self.per_step.push(DiscardRecord { time, bond, weight });
        }
    }
}

/// Truncation knobs for SVD re-splitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    pub chi_max: usize,
    /// Relative `λ²` threshold: values with `λ² < cutoff · Σλ²` are dropped.
    pub lambda2_cutoff: f64,
}

impl Truncation {
    /// No truncation beyond numerical rank.
    pub fn exact() -> Self {
        Self { chi_max: MAX_BOND_DIM, lambda2_cutoff: 0.0 }
    }

    pub fn new(chi_max: usize, lambda2_cutoff: f64) -> Result<Self> {
        if chi_max == 0 {
            return Err(invalid("chi_max must be at least 1"));
        }
        if !(lambda2_cutoff >= 0.0) {
            return Err(invalid("lambda2 cutoff must be nonnegative"));
        }
        Ok(Self { chi_max: chi_max.min(MAX_BOND_DIM), lambda2_cutoff })
    }
}

/// Sweep direction of a two-site update: where the orthogonality center ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Right,
    Left,
}

/// A vectorised operator as a matrix product state.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMps {
    pub(crate) sites: Vec<SiteTensor>,
    pub(crate) frame: Frame,
    pub(crate) ledger: TruncationLedger,
    pub(crate) center: Option<usize>,
    /// Heisenberg time the tensors represent (stamps ledger entries).
    pub(crate) time: f64,
}

impl OperatorMps {
    /// Builds an MPS from explicit site tensors after validating bond shapes.
    pub fn from_sites(sites: Vec<SiteTensor>, frame: Frame) -> Result<Self> {
        if sites.is_empty() {
            return Err(invalid("an MPS needs at least one site"));
        }
        if sites[0].left != 1 || sites[sites.len() - 1].right != 1 {
            return Err(invalid("boundary bonds must have dimension 1"));
        }
        for (i, w) in sites.windows(2).enumerate() {
            if w[0].right != w[1].left {
                return Err(invalid(format!(
                    "bond {i}: right dim {} does not match left dim {}",
                    w[0].right, w[1].left
                )));
            }
        }
        for s in &sites {
            if s.data.len() != s.left * PHYS * s.right {
                return Err(invalid("site tensor payload has the wrong length"));
            }
        }
        Ok(Self { sites, frame, ledger: TruncationLedger::default(), center: None, time: 0.0 })
    }

    /// Product of single-site vectors (bond dimension 1).
    pub fn product(vectors: &[[f64; PHYS]], frame: Frame) -> Self {
        let sites = vectors.iter().map(|&v| SiteTensor::from_vector(v)).collect();
        Self { sites, frame, ledger: TruncationLedger::default(), center: None, time: 0.0 }
    }

    /// Unit-norm local operator: `op` at `site` (0-based), identity elsewhere.
    pub fn local_operator(op: Pauli, site: usize, len: usize) -> Result<Self> {
        if site >= len {
            return Err(invalid(format!("site {site} out of range for chain of length {len}")));
        }
        let mut vectors = vec![[1.0, 0.0, 0.0, 0.0]; len];
        vectors[site] = [0.0; PHYS];
        vectors[site][op.index()] = 1.0;
        let mut mps = Self::product(&vectors, Frame::Pauli);
        // every site vector has unit norm, so any site is a valid center
        mps.center = Some(site);
        Ok(mps)
    }

    /// Exact MPS of a dense coefficient vector (site 0 is the most
    /// significant base-4 digit).
    pub fn from_dense(coeffs: &[f64], len: usize, frame: Frame) -> Result<Self> {
        if len == 0 || len > MAX_DENSE_LEN {
            return Err(Error::ResourceLimit(format!("dense conversion limited to L <= {MAX_DENSE_LEN}")));
        }
        if coeffs.len() != PHYS.pow(len as u32) {
            return Err(invalid("coefficient vector length is not 4^L"));
        }
        let mut sites = Vec::with_capacity(len);
        let mut rest = coeffs.to_vec();
        let mut left = 1;
        for i in 0..len - 1 {
            let cols = rest.len() / (left * PHYS);
            let m = mat_from_rows(&rest, left * PHYS, cols);
            let svd = svd_truncated(m.as_ref(), MAX_BOND_DIM, 0.0)?;
            let k = svd.rank();
            sites.push(SiteTensor::new(left, k, rows_from_mat(svd.left.as_ref()))?);
            let sv = Mat::from_fn(k, cols, |a, c| svd.singular_values[a] * svd.right[(a, c)]);
            rest = rows_from_mat(sv.as_ref());
            left = k;
            let _ = i;
        }
        sites.push(SiteTensor::new(left, 1, rest)?);
        let mut mps = Self::from_sites(sites, frame)?;
        mps.center = Some(len - 1);
        Ok(mps)
    }

    /// Full `4^L` coefficient vector.
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        if self.len() > MAX_DENSE_LEN {
            return Err(Error::ResourceLimit(format!("dense conversion limited to L <= {MAX_DENSE_LEN}")));
        }
        // acc has rows = prefix strings, cols = current right bond
        let mut acc: RealMatrix = Mat::from_fn(1, 1, |_, _| 1.0);
        for s in &self.sites {
            let prefixes = acc.nrows();
            let next = &acc * s.right_matrix();
            // next: prefixes × (4·right) → (prefixes·4) × right
            acc = Mat::from_fn(prefixes * PHYS, s.right, |i, r| next[(i / PHYS, (i % PHYS) * s.right + r)]);
        }
        Ok((0..acc.nrows()).map(|i| acc[(i, 0)]).collect())
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn ledger(&self) -> &TruncationLedger {
        &self.ledger
    }

    pub fn ledger_mut(&mut self) -> &mut TruncationLedger {
        &mut self.ledger
    }

    pub fn site(&self, i: usize) -> &SiteTensor {
        &self.sites[i]
    }

    pub fn sites(&self) -> &[SiteTensor] {
        &self.sites
    }

    pub fn center(&self) -> Option<usize> {
        self.center
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    /// Dimensions of the `L − 1` internal bonds.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.len() - 1].iter().map(|s| s.right).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    pub fn scale(&mut self, factor: f64) {
        let target = self.center.unwrap_or(0);
        for x in &mut self.sites[target].data {
            *x *= factor;
        }
    }

    /// `⟨self|self⟩`.
    pub fn norm_sq(&self) -> f64 {
        inner_unchecked(self, self)
    }

    /// Re-expresses the physical index in another frame. Frame changes are
    /// orthogonal, so bond structure and canonical form are preserved.
    pub fn to_frame(&self, target: Frame) -> OperatorMps {
        if self.frame == target {
            return self.clone();
        }
        let to_pauli = match self.frame {
            Frame::Pauli => crate::linalg::identity::<f64>(PHYS),
            Frame::Parallel(a) => frame_rotation(&ParallelBasis::new(a)).transpose().to_owned(),
        };
        let m = match target {
            Frame::Pauli => to_pauli,
            Frame::Parallel(a) => frame_rotation(&ParallelBasis::new(a)) * to_pauli,
        };
        let mut out = self.clone();
        for s in &mut out.sites {
            s.transform_physical(m.as_ref());
        }
        out.frame = target;
        out
    }

    /// Brings the state into mixed-canonical form with center `k`.
    pub fn canonicalize(&mut self, k: usize) -> Result<()> {
        if k >= self.len() {
            return Err(invalid(format!("center {k} out of range")));
        }
        match self.center {
            Some(c) => self.move_center(c, k),
            None => {
                for i in 0..k {
                    self.left_normalize(i);
                }
                for i in (k + 1..self.len()).rev() {
                    self.right_normalize(i);
                }
                self.center = Some(k);
                Ok(())
            }
        }
    }

    fn move_center(&mut self, from: usize, to: usize) -> Result<()> {
        for i in from..to {
            self.left_normalize(i);
        }
        for i in (to + 1..=from).rev() {
            self.right_normalize(i);
        }
        self.center = Some(to);
        Ok(())
    }

    /// QR of site `i`; R is pushed into site `i + 1`.
    fn left_normalize(&mut self, i: usize) {
        let s = &self.sites[i];
        let (l, r) = (s.left, s.right);
        let qr = s.left_matrix().qr();
        let q = qr.compute_thin_Q();
        let rmat = qr.thin_R().to_owned();
        let k = q.ncols();
        self.sites[i] = SiteTensor { left: l, right: k, data: rows_from_mat(q.as_ref()) };
        let next = &self.sites[i + 1];
        let merged = &rmat * next.right_matrix();
        debug_assert_eq!(merged.nrows(), k);
        let right = next.right;
        self.sites[i + 1] = SiteTensor { left: k, right, data: rows_from_mat(merged.as_ref()) };
        let _ = r;
    }

    /// LQ of site `i` (via QR of the transpose); L is pushed into site `i − 1`.
    fn right_normalize(&mut self, i: usize) {
        let s = &self.sites[i];
        let r = s.right;
        let mt = s.right_matrix().transpose().to_owned();
        let qr = mt.qr();
        let q = qr.compute_thin_Q();
        let rmat = qr.thin_R().to_owned();
        let k = q.ncols();
        self.sites[i] = SiteTensor { left: k, right: r, data: rows_from_mat(q.transpose()) };
        let prev = &self.sites[i - 1];
        let merged = prev.left_matrix() * rmat.transpose();
        let left = prev.left;
        self.sites[i - 1] = SiteTensor { left, right: k, data: rows_from_mat(merged.as_ref()) };
    }

    /// Applies a 16×16 two-site map (row-major, pair index `4·p_left + p_right`)
    /// to sites `bond, bond + 1`, re-splits by truncated SVD and books the
    /// discarded weight. The orthogonality center ends on the side given by
    /// `dir`. A pair carrying only identity components is left untouched:
    /// unital maps fix `𝟙 ⊗ 𝟙` exactly.
    pub fn apply_two_site(
        &mut self,
        bond: usize,
        gate: &[f64; 256],
        trunc: &Truncation,
        dir: Direction,
    ) -> Result<f64> {
        if bond + 1 >= self.len() {
            return Err(invalid(format!("bond {bond} out of range")));
        }
        let target_center = match dir {
            Direction::Right => bond + 1,
            Direction::Left => bond,
        };
        if self.sites[bond].is_identity_only() && self.sites[bond + 1].is_identity_only() {
            self.canonicalize(target_center)?;
            return Ok(0.0);
        }
        match self.center {
            Some(c) if c == bond || c == bond + 1 => {}
            Some(c) if c < bond => self.move_center(c, bond)?,
            Some(c) => self.move_center(c, bond + 1)?,
            None => self.canonicalize(bond)?,
        }
        let a = &self.sites[bond];
        let b = &self.sites[bond + 1];
        let (l, r) = (a.left, b.right);
        let theta = a.left_matrix() * b.right_matrix(); // (l·4) × (4·r)

        let g = mat_from_rows(gate, 16, 16);
        let mut out = Mat::<f64>::zeros(l * PHYS, PHYS * r);
        for li in 0..l {
            let block = Mat::from_fn(16, r, |pq, c| theta[(li * PHYS + pq / PHYS, (pq % PHYS) * r + c)]);
            let moved = &g * &block;
            for pq in 0..16 {
                for c in 0..r {
                    out[(li * PHYS + pq / PHYS, (pq % PHYS) * r + c)] = moved[(pq, c)];
                }
            }
        }
        let svd = svd_truncated(out.as_ref(), trunc.chi_max, trunc.lambda2_cutoff)
            .map_err(|e| match e {
                Error::NumericalFailure(m) => Error::NumericalFailure(format!("bond {bond}: {m}")),
                other => other,
            })?;
        let k = svd.rank();
        if k > MAX_BOND_DIM {
            return Err(Error::ResourceLimit(format!("bond {bond} needs dimension {k} > {MAX_BOND_DIM}")));
        }
        let s = &svd.singular_values;
        let (left_data, right_data) = match dir {
            Direction::Right => {
                let sv = Mat::from_fn(k, PHYS * r, |i, j| s[i] * svd.right[(i, j)]);
                (rows_from_mat(svd.left.as_ref()), rows_from_mat(sv.as_ref()))
            }
            Direction::Left => {
                let us = Mat::from_fn(l * PHYS, k, |i, j| svd.left[(i, j)] * s[j]);
                (rows_from_mat(us.as_ref()), rows_from_mat(svd.right.as_ref()))
            }
        };
        self.sites[bond] = SiteTensor { left: l, right: k, data: left_data };
        self.sites[bond + 1] = SiteTensor { left: k, right: r, data: right_data };
        self.center = Some(target_center);
        self.ledger.record(self.time, bond, svd.discarded_weight);
        Ok(svd.discarded_weight)
    }

    /// Left-to-right QR sweep followed by a right-to-left truncating SVD
    /// sweep. Returns the discarded weight, which is also booked.
    pub fn compress(&mut self, trunc: &Truncation) -> Result<f64> {
        let n = self.len();
        if n == 1 {
            return Ok(0.0);
        }
        self.center = None;
        for i in 0..n - 1 {
            self.left_normalize(i);
        }
        let mut total = 0.0;
        for i in (1..n).rev() {
            let s = &self.sites[i];
            let (l, r) = (s.left, s.right);
            let svd = svd_truncated(s.right_matrix().as_ref(), trunc.chi_max, trunc.lambda2_cutoff)?;
            let k = svd.rank();
            if k > MAX_BOND_DIM {
                return Err(Error::ResourceLimit(format!("bond {} needs dimension {k}", i - 1)));
            }
            self.sites[i] = SiteTensor { left: k, right: r, data: rows_from_mat(svd.right.as_ref()) };
            let us = Mat::from_fn(l, k, |a, b| svd.left[(a, b)] * svd.singular_values[b]);
            let prev = &self.sites[i - 1];
            let merged = prev.left_matrix() * us;
            let pl = prev.left;
            self.sites[i - 1] = SiteTensor { left: pl, right: k, data: rows_from_mat(merged.as_ref()) };
            self.ledger.record(self.time, i - 1, svd.discarded_weight);
            total += svd.discarded_weight;
        }
        self.center = Some(0);
        Ok(total)
    }

    /// Schmidt values across the cut with `cut` sites on the left
    /// (`1 ≤ cut ≤ L − 1`). Moves the orthogonality center (a gauge change).
    pub fn schmidt_values(&mut self, cut: usize) -> Result<Vec<f64>> {
        if cut == 0 || cut >= self.len() {
            return Err(invalid(format!("cut {cut} out of range 1..{}", self.len())));
        }
        self.canonicalize(cut - 1)?;
        let m = self.sites[cut - 1].left_matrix();
        let svd = svd_truncated(m.as_ref(), MAX_BOND_DIM, 0.0)?;
        Ok(svd.singular_values)
    }

    /// Operator space entanglement entropy (natural log) across `cut`, with
    /// Schmidt weights normalised by their sum.
    pub fn osee(&mut self, cut: usize) -> Result<f64> {
        let lambdas = self.schmidt_values(cut)?;
        Ok(entropy_of_weights(lambdas.iter().map(|l| l * l)))
    }
}

/// `−Σ p ln p` of weights normalised to unit sum.
pub fn entropy_of_weights(weights: impl Iterator<Item = f64> + Clone) -> f64 {
    let total: f64 = weights.clone().sum();
    if total <= 0.0 {
        return 0.0;
    }
    weights
        .filter(|&w| w > 0.0)
        .map(|w| {
            let p = w / total;
            -p * p.ln()
        })
        .sum()
}

/// `⟨a|b⟩` (Hilbert–Schmidt, `2^{-L}` normalised).
pub fn inner(a: &OperatorMps, b: &OperatorMps) -> Result<f64> {
    if a.len() != b.len() {
        return Err(invalid(format!("length mismatch: {} vs {}", a.len(), b.len())));
    }
    if a.frame != b.frame {
        return Err(invalid(format!("frame mismatch: {:?} vs {:?}", a.frame, b.frame)));
    }
    Ok(inner_unchecked(a, b))
}

fn inner_unchecked(a: &OperatorMps, b: &OperatorMps) -> f64 {
    let mut env: RealMatrix = Mat::from_fn(1, 1, |_, _| 1.0);
    for (sa, sb) in a.sites.iter().zip(&b.sites) {
        let mut next = Mat::<f64>::zeros(sa.right, sb.right);
        for p in 0..PHYS {
            let ap = sa.slice(p);
            let bp = sb.slice(p);
            next += ap.transpose() * (&env * &bp);
        }
        env = next;
    }
    env[(0, 0)]
}

/// Expectation value `Tr(ρ O) = 2^L ⟨ρ|O⟩`.
pub fn expectation(state: &OperatorMps, op: &OperatorMps) -> Result<f64> {
    Ok(inner(state, op)? * 2f64.powi(state.len() as i32))
}
