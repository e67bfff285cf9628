//! Mixed-field Ising quench and second-order Trotter evolution in the
//! Heisenberg picture.
//!
//! `H = −Σ_j (J σ^z_j σ^z_{j+1} + g σ^x_j + h σ^z_j)`. Two-site propagators
//! `u = exp(−i h_bond τ)` act on operators as `a ↦ u† a u`; in the two-site
//! Pauli basis this is a real orthogonal 16×16 matrix (the folded gate).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{c64, expm_hermitian, kron, DenseMatrix, RealMatrix};
use crate::mps::{Direction, OperatorMps, SiteTensor, Truncation};
use crate::pauli::{Frame, Pauli};

/// Largest chain accepted by the dense Hamiltonian builders.
pub const ED_LIMIT: usize = 12;

/// Folded-gate entries smaller than this are set to zero.
const GATE_CLEAN_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuenchParams {
    /// `J`; the unit of energy.
    pub coupling: f64,
    /// `g`.
    pub transverse_field: f64,
    /// `h`.
    pub longitudinal_field: f64,
    pub length: usize,
}

impl QuenchParams {
    /// The chaotic point `g/J = 1`, `h/J = 1/2`.
    pub fn model_point(length: usize) -> Self {
        Self { coupling: 1.0, transverse_field: 1.0, longitudinal_field: 0.5, length }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length < 2 {
            return Err(invalid("chain length must be at least 2"));
        }
        let finite = [self.coupling, self.transverse_field, self.longitudinal_field];
        if finite.iter().any(|x| !x.is_finite()) {
            return Err(invalid("Hamiltonian parameters must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub chi_max: usize,
    pub lambda2_cutoff: f64,
    pub t_max: f64,
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt must be positive"));
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            return Err(invalid("t_max must be nonnegative"));
        }
        Truncation::new(self.chi_max, self.lambda2_cutoff)?;
        Ok(())
    }

    pub fn truncation(&self) -> Result<Truncation> {
        Truncation::new(self.chi_max, self.lambda2_cutoff)
    }

    /// Number of steps needed to reach `t_max` (rounded to the nearest step).
    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

/// Folded two-site gate on `(bond, bond + 1)`, row-major, pair index
/// `4·p_left + p_right`.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldedGate {
    pub bond: usize,
    pub matrix: [f64; 256],
}

impl FoldedGate {
    pub fn as_matrix(&self) -> RealMatrix {
        RealMatrix::from_fn(16, 16, |a, b| self.matrix[a * 16 + b])
    }
}

/// Gates of one second-order step. Odd bonds are `(0,1), (2,3), …`; even
/// bonds `(1,2), (3,4), …`. A step is `odd_half · even · odd_half`, and two
/// consecutive outer halves merge into `odd_full`.
#[derive(Debug, Clone)]
pub struct EvolutionLayer {
    pub dt: f64,
    pub odd_half: Vec<FoldedGate>,
    pub odd_full: Vec<FoldedGate>,
    pub even: Vec<FoldedGate>,
}

fn pauli_pair(a: usize) -> DenseMatrix {
    let l = Pauli::from_index(a / 4).unwrap().matrix();
    let r = Pauli::from_index(a % 4).unwrap().matrix();
    kron(l.as_ref(), r.as_ref())
}

/// Two-site term of bond `bond`: the coupling plus the field of each site,
/// split evenly between the bonds sharing it.
pub fn bond_hamiltonian(p: &QuenchParams, bond: usize) -> DenseMatrix {
    let n = p.length;
    let weight = |site: usize| if site == 0 || site == n - 1 { 1.0 } else { 0.5 };
    let (x, z) = (Pauli::X.matrix(), Pauli::Z.matrix());
    let id = Pauli::I.matrix();
    let field = |w: f64| {
        let mut f = DenseMatrix::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                f[(i, j)] = x[(i, j)] * (w * p.transverse_field) + z[(i, j)] * (w * p.longitudinal_field);
            }
        }
        f
    };
    let zz = kron(z.as_ref(), z.as_ref());
    let fl = kron(field(weight(bond)).as_ref(), id.as_ref());
    let fr = kron(id.as_ref(), field(weight(bond + 1)).as_ref());
    DenseMatrix::from_fn(4, 4, |i, j| -(zz[(i, j)] * p.coupling + fl[(i, j)] + fr[(i, j)]))
}

/// Adjoint action `a ↦ u† a u` of `u = exp(−i h τ)` in the two-site Pauli
/// basis: `G_ab = ¼ Tr(P_a u† P_b u)`.
pub fn fold_gate(h: &DenseMatrix, tau: f64) -> Result<[f64; 256]> {
    let u = expm_hermitian(h.as_ref(), c64::new(0.0, -tau))?;
    let ud = u.adjoint().to_owned();
    let paulis: Vec<DenseMatrix> = (0..16).map(pauli_pair).collect();
    let mut g = [0.0; 256];
    for b in 0..16 {
        let moved = &ud * &paulis[b] * &u;
        for a in 0..16 {
            let prod = &paulis[a] * &moved;
            let tr: c64 = (0..4).map(|i| prod[(i, i)]).sum();
            if tr.im.abs() > 1e-10 {
                return Err(Error::NumericalFailure("folded gate is not real".into()));
            }
            let v = tr.re / 4.0;
            g[a * 16 + b] = if v.abs() < GATE_CLEAN_TOL { 0.0 } else { v };
        }
    }
    for k in 0..16 {
        g[k] = 0.0;
        g[k * 16] = 0.0;
    }
    g[0] = 1.0;
    Ok(g)
}

fn gates_on(p: &QuenchParams, first: usize, tau: f64) -> Result<Vec<FoldedGate>> {
    (first..p.length - 1)
        .step_by(2)
        .map(|bond| Ok(FoldedGate { bond, matrix: fold_gate(&bond_hamiltonian(p, bond), tau)? }))
        .collect()
}

pub fn build_trotter_layer(p: &QuenchParams, dt: f64) -> Result<EvolutionLayer> {
    p.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(invalid("dt must be positive"));
    }
    Ok(EvolutionLayer {
        dt,
        odd_half: gates_on(p, 0, dt / 2.0)?,
        odd_full: gates_on(p, 0, dt)?,
        even: gates_on(p, 1, dt)?,
    })
}

/// Applies one brick sublayer. Gates are swept left to right for
/// [`Direction::Right`] and right to left otherwise. Returns the discarded
/// weight.
pub fn apply_sublayer(
    state: &mut OperatorMps,
    gates: &[FoldedGate],
    trunc: &Truncation,
    dir: Direction,
) -> Result<f64> {
    let mut w = 0.0;
    match dir {
        Direction::Right => {
            for g in gates {
                w += state.apply_two_site(g.bond, &g.matrix, trunc, dir)?;
            }
        }
        Direction::Left => {
            for g in gates.iter().rev() {
                w += state.apply_two_site(g.bond, &g.matrix, trunc, dir)?;
            }
        }
    }
    Ok(w)
}

/// Advances one full second-order step.
pub fn step(state: &mut OperatorMps, layer: &EvolutionLayer, trunc: &Truncation) -> Result<f64> {
    let mut ev = Evolver::new(layer.clone(), *trunc);
    ev.steps = (state.time() / layer.dt).round() as u64;
    ev.advance(state, 1)
}

/// Drives an operator through repeated steps, merging adjacent half-steps
/// within each call.
#[derive(Debug, Clone)]
pub struct Evolver {
    layer: EvolutionLayer,
    trunc: Truncation,
    steps: u64,
}

impl Evolver {
    pub fn new(layer: EvolutionLayer, trunc: Truncation) -> Self {
        Self { layer, trunc, steps: 0 }
    }

    pub fn from_params(p: &QuenchParams, cfg: &EvolutionConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self::new(build_trotter_layer(p, cfg.dt)?, cfg.truncation()?))
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn set_steps(&mut self, steps: u64) {
        self.steps = steps;
    }

    pub fn dt(&self) -> f64 {
        self.layer.dt
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.layer.dt
    }

    pub fn truncation(&self) -> &Truncation {
        &self.trunc
    }

    /// Advances `n` steps; the state is at a full step boundary on return.
    pub fn advance(&mut self, state: &mut OperatorMps, n: usize) -> Result<f64> {
        if n == 0 {
            return Ok(0.0);
        }
        self.steps += n as u64;
        state.set_time(self.time());
        let l = &self.layer;
        let mut dir = Direction::Right;
        let flip = |d: &mut Direction| {
            let cur = *d;
            *d = if cur == Direction::Right { Direction::Left } else { Direction::Right };
            cur
        };
        let mut w = apply_sublayer(state, &l.odd_half, &self.trunc, flip(&mut dir))?;
        for k in 0..n {
            w += apply_sublayer(state, &l.even, &self.trunc, flip(&mut dir))?;
            let outer = if k + 1 == n { &l.odd_half } else { &l.odd_full };
            w += apply_sublayer(state, outer, &self.trunc, flip(&mut dir))?;
        }
        Ok(w)
    }
}

/// Real symmetric `2^L × 2^L` Hamiltonian, site 0 the most significant bit,
/// `|0⟩` the `σ^z = +1` state.
pub fn dense_hamiltonian_real(p: &QuenchParams, boundary: Boundary) -> Result<RealMatrix> {
    p.validate()?;
    let n = p.length;
    if n > ED_LIMIT {
        return Err(Error::ResourceLimit(format!("dense Hamiltonian limited to L <= {ED_LIMIT}")));
    }
    let dim = 1usize << n;
    let bit = |s: usize, j: usize| (s >> (n - 1 - j)) & 1;
    let spin = |s: usize, j: usize| if bit(s, j) == 0 { 1.0 } else { -1.0 };
    let bonds: Vec<(usize, usize)> = match boundary {
        Boundary::Open => (0..n - 1).map(|j| (j, j + 1)).collect(),
        Boundary::Periodic if n > 2 => (0..n).map(|j| (j, (j + 1) % n)).collect(),
        Boundary::Periodic => return Err(invalid("periodic chain needs L >= 3")),
    };
    let mut h = RealMatrix::zeros(dim, dim);
    for s in 0..dim {
        let mut diag = 0.0;
        for &(a, b) in &bonds {
            diag -= p.coupling * spin(s, a) * spin(s, b);
        }
        for j in 0..n {
            diag -= p.longitudinal_field * spin(s, j);
            h[(s ^ (1 << (n - 1 - j)), s)] -= p.transverse_field;
        }
        h[(s, s)] += diag;
    }
    Ok(h)
}

/// Open-chain Hamiltonian as a complex dense matrix.
pub fn dense_hamiltonian(p: &QuenchParams) -> Result<DenseMatrix> {
    let h = dense_hamiltonian_real(p, Boundary::Open)?;
    Ok(DenseMatrix::from_fn(h.nrows(), h.ncols(), |i, j| c64::new(h[(i, j)], 0.0)))
}

/// The open-chain Hamiltonian as a vectorised operator (bond dimension 3).
pub fn hamiltonian_mps(p: &QuenchParams) -> Result<OperatorMps> {
    p.validate()?;
    let n = p.length;
    // automaton states: 0 finished, 1 awaiting the second σ^z, 2 not started
    let mut bulk = SiteTensor::zeros(3, 3);
    bulk.set(0, 0, 0, 1.0);
    bulk.set(1, 3, 0, -p.coupling);
    bulk.set(2, 1, 0, -p.transverse_field);
    bulk.set(2, 3, 0, -p.longitudinal_field);
    bulk.set(2, 3, 1, 1.0);
    bulk.set(2, 0, 2, 1.0);
    let pick = |t: &SiteTensor, rows: &[usize], cols: &[usize]| {
        let mut out = SiteTensor::zeros(rows.len(), cols.len());
        for (li, &l) in rows.iter().enumerate() {
            for (ri, &r) in cols.iter().enumerate() {
                for q in 0..4 {
                    out.set(li, q, ri, t.get(l, q, r));
                }
            }
        }
        out
    };
    let mut sites = Vec::with_capacity(n);
    for j in 0..n {
        let rows: &[usize] = if j == 0 { &[2] } else { &[0, 1, 2] };
        let cols: &[usize] = if j == n - 1 { &[0] } else { &[0, 1, 2] };
        sites.push(pick(&bulk, rows, cols));
    }
    OperatorMps::from_sites(sites, Frame::Pauli)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mps::inner;

    fn max_orth_err(g: &[f64; 256]) -> f64 {
        let m = RealMatrix::from_fn(16, 16, |a, b| g[a * 16 + b]);
        let p = m.transpose() * &m;
        let mut err: f64 = 0.0;
        for i in 0..16 {
            for j in 0..16 {
                let id = if i == j { 1.0 } else { 0.0 };
                err = err.max((p[(i, j)] - id).abs());
            }
        }
        err
    }

    #[test]
    fn folded_gates_are_orthogonal_and_unital() {
        let p = QuenchParams::model_point(6);
        let layer = build_trotter_layer(&p, 0.1).unwrap();
        for g in layer.odd_half.iter().chain(&layer.odd_full).chain(&layer.even) {
            assert!(max_orth_err(&g.matrix) < 1e-12);
            assert_eq!(g.matrix[0], 1.0);
            assert!((1..16).all(|k| g.matrix[k] == 0.0 && g.matrix[k * 16] == 0.0));
        }
        assert_eq!(layer.odd_half.iter().map(|g| g.bond).collect::<Vec<_>>(), vec![0, 2, 4]);
        assert_eq!(layer.even.iter().map(|g| g.bond).collect::<Vec<_>>(), vec![1, 3]);
    }

    #[test]
    fn pure_ising_gate_fixes_sigma_z() {
        let p = QuenchParams { coupling: 1.0, transverse_field: 0.0, longitudinal_field: 0.0, length: 4 };
        let g = fold_gate(&bond_hamiltonian(&p, 1), 0.37).unwrap();
        let zi = 3 * 4;
        for a in 0..16 {
            let expect = if a == zi { 1.0 } else { 0.0 };
            assert!((g[a * 16 + zi] - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn transverse_field_rotates_z_into_y() {
        // J = h = 0, g = 1 on a two-site chain: each site gets the full field
        let p = QuenchParams { coupling: 0.0, transverse_field: 1.0, longitudinal_field: 0.0, length: 2 };
        let t = 0.3;
        let g = fold_gate(&bond_hamiltonian(&p, 0), t).unwrap();
        let (z1, y1) = (3 * 4, 2 * 4);
        assert!((g[z1 * 16 + z1] - (2.0 * t).cos()).abs() < 1e-13);
        assert!((g[y1 * 16 + z1] + (2.0 * t).sin()).abs() < 1e-13);
    }

    #[test]
    fn field_split_sums_to_full_hamiltonian() {
        let p = QuenchParams::model_point(5);
        let full = dense_hamiltonian(&p).unwrap();
        let mut sum = DenseMatrix::zeros(32, 32);
        for b in 0..4 {
            let hb = bond_hamiltonian(&p, b);
            let left = crate::linalg::identity::<c64>(1 << b);
            let right = crate::linalg::identity::<c64>(1 << (3 - b));
            let k = kron(kron(left.as_ref(), hb.as_ref()).as_ref(), right.as_ref());
            sum += k;
        }
        assert!(crate::linalg::max_abs_diff(full.as_ref(), sum.as_ref()) < 1e-14);
    }

    #[test]
    fn classical_pair_spectrum() {
        let p = QuenchParams { coupling: 1.0, transverse_field: 0.0, longitudinal_field: 0.0, length: 2 };
        let h = dense_hamiltonian(&p).unwrap();
        let ev = crate::linalg::eigvalsh(h.as_ref()).unwrap();
        let expect = [-1.0, -1.0, 1.0, 1.0];
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn hamiltonian_is_traceless() {
        for l in [2, 4, 8] {
            let h = dense_hamiltonian_real(&QuenchParams::model_point(l), Boundary::Open).unwrap();
            let tr: f64 = (0..h.nrows()).map(|i| h[(i, i)]).sum();
            assert!(tr.abs() < 1e-12);
        }
        assert!(dense_hamiltonian(&QuenchParams::model_point(13)).is_err());
    }

    #[test]
    fn model_point_matches_term_by_term_kron() {
        let p = QuenchParams::model_point(4);
        let h = dense_hamiltonian(&p).unwrap();
        let (x, z, id) = (Pauli::X.matrix(), Pauli::Z.matrix(), Pauli::I.matrix());
        let chain = |ops: &[&DenseMatrix]| {
            ops[1..].iter().fold(ops[0].clone(), |acc, m| kron(acc.as_ref(), m.as_ref()))
        };
        let mut expect = DenseMatrix::zeros(16, 16);
        for j in 0..4 {
            let mut ops = vec![&id; 4];
            ops[j] = &x;
            expect -= chain(&ops);
            let mut ops = vec![&id; 4];
            ops[j] = &z;
            expect -= chain(&ops) * faer::Scale(c64::new(0.5, 0.0));
            if j < 3 {
                let mut ops = vec![&id; 4];
                ops[j] = &z;
                ops[j + 1] = &z;
                expect -= chain(&ops);
            }
        }
        assert!(crate::linalg::max_abs_diff(h.as_ref(), expect.as_ref()) < 1e-14);
    }

    #[test]
    fn hamiltonian_mps_coefficients() {
        let p = QuenchParams::model_point(3);
        let d = hamiltonian_mps(&p).unwrap().to_dense().unwrap();
        let idx = |a: usize, b: usize, c: usize| a * 16 + b * 4 + c;
        assert_eq!(d[idx(3, 3, 0)], -1.0);
        assert_eq!(d[idx(0, 3, 3)], -1.0);
        assert_eq!(d[idx(0, 1, 0)], -1.0);
        assert_eq!(d[idx(0, 0, 3)], -0.5);
        assert_eq!(d[idx(3, 0, 3)], 0.0);
        let nonzero = d.iter().filter(|x| **x != 0.0).count();
        assert_eq!(nonzero, 2 + 3 + 3);
    }

    #[test]
    fn sigma_z_is_conserved_without_fields() {
        let p = QuenchParams { coupling: 1.0, transverse_field: 0.0, longitudinal_field: 0.0, length: 6 };
        let cfg = EvolutionConfig { dt: 0.05, chi_max: 64, lambda2_cutoff: 0.0, t_max: 1.0 };
        let mut ev = Evolver::from_params(&p, &cfg).unwrap();
        let start = OperatorMps::local_operator(Pauli::Z, 2, 6).unwrap();
        let mut s = start.clone();
        ev.advance(&mut s, 20).unwrap();
        assert!((inner(&s, &start).unwrap() - 1.0).abs() < 1e-10);
        assert!(s.max_bond() == 1);
    }

    #[test]
    fn merged_and_single_steps_agree() {
        let p = QuenchParams::model_point(5);
        let cfg = EvolutionConfig { dt: 0.05, chi_max: 256, lambda2_cutoff: 0.0, t_max: 1.0 };
        let start = OperatorMps::local_operator(Pauli::X, 2, 5).unwrap();
        let mut a = start.clone();
        let mut ev = Evolver::from_params(&p, &cfg).unwrap();
        ev.advance(&mut a, 6).unwrap();
        let mut b = start;
        let mut ev = Evolver::from_params(&p, &cfg).unwrap();
        for _ in 0..6 {
            ev.advance(&mut b, 1).unwrap();
        }
        let (da, db) = (a.to_dense().unwrap(), b.to_dense().unwrap());
        let err = da.iter().zip(&db).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12);
        assert_eq!(a.time(), 6.0 * 0.05);
    }

    #[test]
    fn norm_preserved_without_truncation() {
        let p = QuenchParams::model_point(6);
        let cfg = EvolutionConfig { dt: 0.05, chi_max: 4096, lambda2_cutoff: 0.0, t_max: 1.0 };
        let mut s = OperatorMps::local_operator(Pauli::X, 3, 6).unwrap();
        let mut ev = Evolver::from_params(&p, &cfg).unwrap();
        ev.advance(&mut s, 20).unwrap();
        assert!((s.norm_sq() + s.ledger().epsilon - 1.0).abs() < 1e-10);
        assert!((s.norm_sq() - 1.0).abs() < 1e-10);
    }
}
