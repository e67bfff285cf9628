//! Dense reference implementation for short chains.
//!
//! Operators are stored as all `4^L` string coefficients (site 0 is the most
//! significant base-4 digit). Evolution conjugates the full `2^L × 2^L`
//! matrix, either with the exact propagator or with the same second-order
//! Trotter splitting the tensor-network code uses, and projections are done
//! by enumerating strings.

use faer::Mat;

use crate::analysis::{find_peak, owe_point, Contributions, Densities, OweSeries};
use crate::error::{invalid, Error, Result};
use crate::evolution::{bond_hamiltonian, dense_hamiltonian, QuenchParams};
use crate::linalg::{c64, expm_hermitian, identity, kron, svd_truncated, DenseMatrix, RealMatrix};
use crate::mps::{entropy_of_weights, OperatorMps, MAX_BOND_DIM, PHYS};
use crate::pauli::{frame_rotation, BlochAngles, Frame, ParallelBasis, Pauli};

/// Largest chain the oracle accepts.
pub const ORACLE_LIMIT: usize = 7;

fn check_len(len: usize) -> Result<()> {
    if len == 0 || len > ORACLE_LIMIT {
        return Err(Error::ResourceLimit(format!("dense oracle limited to 1 <= L <= {ORACLE_LIMIT}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperatorVector {
    pub len: usize,
    pub coeffs: Vec<f64>,
    pub frame: Frame,
}

/// Applies the same linear map `m` (`k_out × k_in`) to every site index of a
/// row-major tensor with `len` site indices of dimension `k_in`.
fn map_sites<T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<Output = T>>(
    data: &[T],
    len: usize,
    k_in: usize,
    k_out: usize,
    m: &dyn Fn(usize, usize) -> T,
) -> Vec<T> {
    let mut cur = data.to_vec();
    let mut dims = vec![k_in; len];
    for j in 0..len {
        let outer: usize = dims[..j].iter().product();
        let inner: usize = dims[j + 1..].iter().product();
        let mut next = vec![T::default(); outer * k_out * inner];
        for a in 0..outer {
            for q in 0..k_out {
                for p in 0..k_in {
                    let w = m(q, p);
                    let src = (a * k_in + p) * inner;
                    let dst = (a * k_out + q) * inner;
                    for b in 0..inner {
                        next[dst + b] = next[dst + b] + w * cur[src + b];
                    }
                }
            }
        }
        dims[j] = k_out;
        cur = next;
    }
    cur
}

/// Reorders a `2^L × 2^L` matrix into `[(r_0 c_0) (r_1 c_1) …]` site pairs.
fn interleave(m: &DenseMatrix, len: usize) -> Vec<c64> {
    let dim = 1usize << len;
    let mut out = vec![c64::new(0.0, 0.0); dim * dim];
    for r in 0..dim {
        for c in 0..dim {
            let mut idx = 0;
            for j in 0..len {
                let rb = (r >> (len - 1 - j)) & 1;
                let cb = (c >> (len - 1 - j)) & 1;
                idx = idx * 4 + rb * 2 + cb;
            }
            out[idx] = m[(r, c)];
        }
    }
    out
}

fn deinterleave(v: &[c64], len: usize) -> DenseMatrix {
    let dim = 1usize << len;
    Mat::from_fn(dim, dim, |r, c| {
        let mut idx = 0;
        for j in 0..len {
            let rb = (r >> (len - 1 - j)) & 1;
            let cb = (c >> (len - 1 - j)) & 1;
            idx = idx * 4 + rb * 2 + cb;
        }
        v[idx]
    })
}

impl DenseOperatorVector {
    pub fn new(len: usize, coeffs: Vec<f64>, frame: Frame) -> Result<Self> {
        check_len(len)?;
        if coeffs.len() != PHYS.pow(len as u32) {
            return Err(invalid("coefficient vector length is not 4^L"));
        }
        Ok(Self { len, coeffs, frame })
    }

    pub fn local(op: Pauli, site: usize, len: usize) -> Result<Self> {
        check_len(len)?;
        if site >= len {
            return Err(invalid("site out of range"));
        }
        let mut coeffs = vec![0.0; PHYS.pow(len as u32)];
        coeffs[op.index() * PHYS.pow((len - 1 - site) as u32)] = 1.0;
        Self::new(len, coeffs, Frame::Pauli)
    }

    pub fn from_mps(m: &OperatorMps) -> Result<Self> {
        Self::new(m.len(), m.to_dense()?, m.frame())
    }

    pub fn to_mps(&self) -> Result<OperatorMps> {
        OperatorMps::from_dense(&self.coeffs, self.len, self.frame)
    }

    /// Pauli coefficients `2^{-L} Tr(P_s M)` of a Hermitian matrix, by
    /// single-site partial traces.
    pub fn from_matrix(m: &DenseMatrix, len: usize) -> Result<Self> {
        check_len(len)?;
        if m.nrows() != 1 << len || m.ncols() != 1 << len {
            return Err(invalid("matrix dimension is not 2^L"));
        }
        let paulis: Vec<DenseMatrix> = (0..4).map(|k| Pauli::from_index(k).unwrap().matrix()).collect();
        // coefficient of P at one site: ½ Σ_{rc} P[c][r] M[r][c]
        let f = |q: usize, p: usize| paulis[q][(p & 1, p >> 1)] * 0.5;
        let v = map_sites(&interleave(m, len), len, 4, 4, &f);
        let mut coeffs = Vec::with_capacity(v.len());
        for z in v {
            if z.im.abs() > 1e-10 {
                return Err(invalid("matrix is not Hermitian"));
            }
            coeffs.push(z.re);
        }
        Self::new(len, coeffs, Frame::Pauli)
    }

    pub fn to_matrix(&self) -> Result<DenseMatrix> {
        let v = self.to_frame(Frame::Pauli);
        let paulis: Vec<DenseMatrix> = (0..4).map(|k| Pauli::from_index(k).unwrap().matrix()).collect();
        let f = |rc: usize, p: usize| paulis[p][(rc >> 1, rc & 1)];
        let data: Vec<c64> = v.coeffs.iter().map(|&x| c64::new(x, 0.0)).collect();
        Ok(deinterleave(&map_sites(&data, self.len, 4, 4, &f), self.len))
    }

    pub fn to_frame(&self, target: Frame) -> DenseOperatorVector {
        if target == self.frame {
            return self.clone();
        }
        let to_pauli = match self.frame {
            Frame::Pauli => identity::<f64>(PHYS),
            Frame::Parallel(a) => frame_rotation(&ParallelBasis::new(a)).transpose().to_owned(),
        };
        let m: RealMatrix = match target {
            Frame::Pauli => to_pauli,
            Frame::Parallel(a) => frame_rotation(&ParallelBasis::new(a)) * to_pauli,
        };
        let f = |q: usize, p: usize| m[(q, p)];
        DenseOperatorVector { len: self.len, coeffs: map_sites(&self.coeffs, self.len, 4, 4, &f), frame: target }
    }

    pub fn dot(&self, other: &DenseOperatorVector) -> Result<f64> {
        if self.len != other.len || self.frame != other.frame {
            return Err(invalid("length or frame mismatch"));
        }
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum())
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|x| x * x).sum()
    }

    /// Site labels of string index `s`.
    pub fn labels(&self, s: usize) -> Vec<usize> {
        (0..self.len).map(|j| (s / PHYS.pow((self.len - 1 - j) as u32)) % PHYS).collect()
    }

    /// Keeps the coefficients whose labels satisfy `keep`.
    pub fn filter(&self, keep: impl Fn(&[usize]) -> bool) -> DenseOperatorVector {
        let coeffs = (0..self.coeffs.len())
            .map(|s| if keep(&self.labels(s)) { self.coeffs[s] } else { 0.0 })
            .collect();
        DenseOperatorVector { len: self.len, coeffs, frame: self.frame }
    }

    /// OSEE across `cut` from the dense Schmidt decomposition.
    pub fn osee(&self, cut: usize) -> Result<f64> {
        if cut == 0 || cut >= self.len {
            return Err(invalid("cut out of range"));
        }
        let cols = PHYS.pow((self.len - cut) as u32);
        let m = Mat::from_fn(self.coeffs.len() / cols, cols, |i, j| self.coeffs[i * cols + j]);
        let svd = svd_truncated(m.as_ref(), MAX_BOND_DIM, 0.0)?;
        Ok(entropy_of_weights(svd.singular_values.iter().map(|l| l * l)))
    }
}

/// Which weight a sector projection counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightKind {
    Total,
    Parallel(ParallelBasis),
    Orthogonal(ParallelBasis),
}

/// Keeps the strings of weight `omega` (of the requested kind). Sectors of a
/// basis are taken in that basis' frame, and the result is returned there.
pub fn exact_weight_sector(op: &DenseOperatorVector, omega: usize, kind: WeightKind) -> DenseOperatorVector {
    match kind {
        WeightKind::Total => op.filter(|l| l.iter().filter(|&&x| x != 0).count() == omega),
        WeightKind::Parallel(b) => op.to_frame(b.frame()).filter(|l| l.iter().filter(|&&x| x == 1).count() == omega),
        WeightKind::Orthogonal(b) => op.to_frame(b.frame()).filter(|l| l.iter().filter(|&&x| x >= 2).count() == omega),
    }
}

/// Contributing part: strings with no orthogonal insertion (basis frame).
pub fn exact_contributing(op: &DenseOperatorVector, basis: &ParallelBasis) -> DenseOperatorVector {
    exact_weight_sector(op, 0, WeightKind::Orthogonal(*basis))
}

pub fn exact_noncontributing(op: &DenseOperatorVector, basis: &ParallelBasis) -> DenseOperatorVector {
    op.to_frame(basis.frame()).filter(|l| l.iter().any(|&x| x >= 2))
}

/// How the oracle propagates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Propagation {
    Exact,
    /// Second-order splitting with the tensor-network bond decomposition;
    /// `t` must be a multiple of `dt`.
    Trotter { dt: f64 },
}

/// Schrödinger propagator over time `t`.
pub fn propagator(p: &QuenchParams, t: f64, prop: Propagation) -> Result<DenseMatrix> {
    check_len(p.length)?;
    match prop {
        Propagation::Exact => {
            let h = dense_hamiltonian(p)?;
            expm_hermitian(h.as_ref(), c64::new(0.0, -t))
        }
        Propagation::Trotter { dt } => {
            let n = (t / dt).round();
            if (n * dt - t).abs() > 1e-9 * dt.max(t) {
                return Err(invalid("t is not a multiple of dt"));
            }
            let step = trotter_step(p, dt)?;
            let mut u = identity::<c64>(1 << p.length);
            for _ in 0..n as usize {
                u = &u * &step;
            }
            Ok(u)
        }
    }
}

fn embed(p: &QuenchParams, bond: usize, tau: f64) -> Result<DenseMatrix> {
    let u = expm_hermitian(bond_hamiltonian(p, bond).as_ref(), c64::new(0.0, -tau))?;
    let left = identity::<c64>(1 << bond);
    let right = identity::<c64>(1 << (p.length - bond - 2));
    Ok(kron(kron(left.as_ref(), u.as_ref()).as_ref(), right.as_ref()))
}

/// `V = U_odd(dt/2) U_even(dt) U_odd(dt/2)`.
pub fn trotter_step(p: &QuenchParams, dt: f64) -> Result<DenseMatrix> {
    let dim = 1 << p.length;
    let mut odd = identity::<c64>(dim);
    let mut even = identity::<c64>(dim);
    for b in 0..p.length - 1 {
        if b % 2 == 0 {
            odd = &odd * embed(p, b, dt / 2.0)?;
        } else {
            even = &even * embed(p, b, dt)?;
        }
    }
    Ok(&odd * &even * &odd)
}

/// `V† O V`.
pub fn conjugate(op: &DenseOperatorVector, v: &DenseMatrix) -> Result<DenseOperatorVector> {
    let m = op.to_matrix()?;
    let out = v.adjoint() * &m * v;
    let res = DenseOperatorVector::from_matrix(&out, op.len)?;
    Ok(res.to_frame(op.frame))
}

/// `O(t) = e^{iHt} O e^{−iHt}` with the exact propagator.
pub fn exact_heisenberg(op: &DenseOperatorVector, p: &QuenchParams, t: f64) -> Result<DenseOperatorVector> {
    if op.len != p.length {
        return Err(invalid("operator length does not match the chain"));
    }
    conjugate(op, &propagator(p, t, Propagation::Exact)?)
}

/// Heisenberg evolution on a time grid `k · dt_grid`, `k = 0..n`.
pub fn heisenberg_series(
    op: &DenseOperatorVector,
    p: &QuenchParams,
    dt_grid: f64,
    n: usize,
    prop: Propagation,
) -> Result<Vec<DenseOperatorVector>> {
    let v = propagator(p, dt_grid, prop)?;
    let mut out = vec![op.clone()];
    let mut cur = op.clone();
    for _ in 0..n {
        cur = conjugate(&cur, &v)?;
        out.push(cur.clone());
    }
    Ok(out)
}

/// `Tr(ρ O)` with `ρ` the product state.
pub fn dense_expectation(op: &DenseOperatorVector, angles: &BlochAngles) -> f64 {
    let b = ParallelBasis::new(*angles);
    // in the parallel frame 2^L ρ has unit weight on every {𝟙, ∥} string
    op.to_frame(b.frame()).filter(|l| l.iter().all(|&x| x <= 1)).coeffs.iter().sum()
}

pub fn dense_densities(op: &DenseOperatorVector, basis: &ParallelBasis, omega_max: usize, time: f64) -> Densities {
    let v = op.to_frame(basis.frame());
    let mut c = vec![0.0; omega_max + 1];
    let mut nc = vec![0.0; omega_max + 1];
    for (s, x) in v.coeffs.iter().enumerate() {
        let l = v.labels(s);
        let w = l.iter().filter(|&&q| q != 0).count();
        if w <= omega_max {
            if l.iter().any(|&q| q >= 2) {
                nc[w] += x * x;
            } else {
                c[w] += x * x;
            }
        }
    }
    Densities { time, contributing: c, noncontributing: nc }
}

pub fn dense_contributions(op: &DenseOperatorVector, angles: &BlochAngles, omega_max: usize, time: f64) -> Contributions {
    let b = ParallelBasis::new(*angles);
    let v = op.to_frame(b.frame());
    let mut values = vec![0.0; omega_max + 1];
    for (s, x) in v.coeffs.iter().enumerate() {
        let l = v.labels(s);
        if l.iter().all(|&q| q <= 1) {
            let w = l.iter().filter(|&&q| q == 1).count();
            if w <= omega_max {
                values[w] += x;
            }
        }
    }
    Contributions { time, values, total: dense_expectation(op, angles) }
}

/// Dense OWE trajectory for a local operator at `site`.
#[allow(clippy::too_many_arguments)]
pub fn exact_owe_pipeline(
    angles: &BlochAngles,
    op: Pauli,
    site: usize,
    p: &QuenchParams,
    dt_grid: f64,
    n: usize,
    omega_star: usize,
    prop: Propagation,
) -> Result<OweSeries> {
    if p.length > 6 {
        return Err(Error::ResourceLimit("OWE oracle limited to L <= 6".into()));
    }
    let start = DenseOperatorVector::local(op, site, p.length)?;
    let series = heisenberg_series(&start, p, dt_grid, n, prop)?;
    let points = series
        .iter()
        .enumerate()
        .map(|(k, o)| {
            let t = k as f64 * dt_grid;
            let c = dense_contributions(o, angles, p.length, t);
            owe_point(t, &c.values, c.total, omega_star)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OweSeries { omega_star, points })
}

/// Dense counterpart of [`crate::analysis::backflow`]: `(t0, times, overlaps,
/// osee)` with the same peak rule on a `dt` grid.
pub struct DenseBackflow {
    pub t0: f64,
    pub times: Vec<f64>,
    pub overlaps: Vec<f64>,
    pub osee: Vec<f64>,
}

pub fn dense_backflow(
    op: &DenseOperatorVector,
    basis: &ParallelBasis,
    p: &QuenchParams,
    dt: f64,
    t_max: f64,
    omega_perp: usize,
    prop: Propagation,
) -> Result<DenseBackflow> {
    let v = propagator(p, dt, prop)?;
    let n = (t_max / dt).round() as usize;
    let sector = |o: &DenseOperatorVector| {
        exact_weight_sector(&exact_noncontributing(o, basis), omega_perp, WeightKind::Total)
    };
    let mut cur = op.clone();
    let mut times = vec![0.0];
    let mut dens = vec![sector(&cur).norm_sq()];
    let mut history = vec![cur.clone()];
    let mut peak = None;
    for k in 1..=n {
        cur = conjugate(&cur, &v)?;
        times.push(k as f64 * dt);
        dens.push(sector(&cur).norm_sq());
        history.push(cur.clone());
        if let Some(pk) = find_peak(&times, &dens) {
            peak = Some(pk.index);
            break;
        }
    }
    let Some(j) = peak else {
        let trace = times.into_iter().zip(dens).collect();
        return Err(Error::ProtocolIncomplete { omega_perp, t_max, trace });
    };
    let mut w = sector(&history[j]).to_frame(Frame::Pauli);
    let cut = p.length / 2;
    let mut out = DenseBackflow {
        t0: times[j],
        times: vec![times[j]],
        overlaps: vec![dense_expectation(&w, &basis.angles).abs()],
        osee: vec![w.osee(cut)?],
    };
    for k in j + 1..=n {
        w = conjugate(&w, &v)?;
        out.times.push(k as f64 * dt);
        out.overlaps.push(dense_expectation(&w, &basis.angles).abs());
        out.osee.push(w.osee(cut)?);
    }
    Ok(out)
}
