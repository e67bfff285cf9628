//! Matrix product operators acting on vectorised operators.
//!
//! Tensors are `left × out × in × right`. The right bond of the last site may
//! be left open (dimension > 1): contracting such an MPO yields one number
//! per open index, which lets a single pass read out a whole family of
//! projections (e.g. every Pauli weight up to a cutoff).

use faer::Mat;

use crate::error::{invalid, Error, Result};
use crate::linalg::RealMatrix;
use crate::mps::{OperatorMps, SiteTensor, Truncation, MAX_BOND_DIM, PHYS};
use crate::pauli::Frame;

#[derive(Debug, Clone, PartialEq)]
pub struct MpoTensor {
    pub left: usize,
    pub right: usize,
    pub data: Vec<f64>,
}

impl MpoTensor {
    pub fn zeros(left: usize, right: usize) -> Self {
        Self { left, right, data: vec![0.0; left * PHYS * PHYS * right] }
    }

    #[inline]
    fn idx(&self, l: usize, o: usize, i: usize, r: usize) -> usize {
        ((l * PHYS + o) * PHYS + i) * self.right + r
    }

    #[inline]
    pub fn get(&self, l: usize, o: usize, i: usize, r: usize) -> f64 {
        self.data[self.idx(l, o, i, r)]
    }

    #[inline]
    pub fn set(&mut self, l: usize, o: usize, i: usize, r: usize, x: f64) {
        let k = self.idx(l, o, i, r);
        self.data[k] = x;
    }

    /// Nonzero entries as `(l, o, i, r, value)`.
    fn nonzeros(&self) -> Vec<(usize, usize, usize, usize, f64)> {
        let mut out = Vec::new();
        for l in 0..self.left {
            for o in 0..PHYS {
                for i in 0..PHYS {
                    for r in 0..self.right {
                        let w = self.get(l, o, i, r);
                        if w != 0.0 {
                            out.push((l, o, i, r, w));
                        }
                    }
                }
            }
        }
        out
    }

    /// Keeps only the listed left and right bond states.
    fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut out = Self::zeros(rows.len(), cols.len());
        for (a, &l) in rows.iter().enumerate() {
            for (b, &r) in cols.iter().enumerate() {
                for o in 0..PHYS {
                    for i in 0..PHYS {
                        out.set(a, o, i, b, self.get(l, o, i, r));
                    }
                }
            }
        }
        out
    }
}

/// Builds the tensors of a translation-invariant MPO from one bulk tensor:
/// the first site keeps row `left_state`, the last site keeps `right_states`
/// (a single state closes the MPO, several leave it open).
pub(crate) fn uniform(bulk: &MpoTensor, len: usize, left_state: usize, right_states: &[usize]) -> Vec<MpoTensor> {
    let all_rows: Vec<usize> = (0..bulk.left).collect();
    let all_cols: Vec<usize> = (0..bulk.right).collect();
    (0..len)
        .map(|j| {
            let rows: &[usize] = if j == 0 { &[left_state][..] } else { &all_rows };
            let cols: &[usize] = if j == len - 1 { right_states } else { &all_cols };
            bulk.select(rows, cols)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mpo {
    pub(crate) sites: Vec<MpoTensor>,
    /// Frame the physical indices refer to; `None` for frame-independent
    /// operators (diagonal maps that only distinguish identity from the rest).
    pub(crate) frame: Option<Frame>,
}

impl Mpo {
    pub fn from_sites(sites: Vec<MpoTensor>, frame: Option<Frame>) -> Result<Self> {
        if sites.is_empty() {
            return Err(invalid("an MPO needs at least one site"));
        }
        if sites[0].left != 1 {
            return Err(invalid("left boundary bond must have dimension 1"));
        }
        for (j, w) in sites.windows(2).enumerate() {
            if w[0].right != w[1].left {
                return Err(invalid(format!("MPO bond {j} dimension mismatch")));
            }
        }
        for s in &sites {
            if s.data.len() != s.left * PHYS * PHYS * s.right {
                return Err(invalid("MPO tensor payload has the wrong length"));
            }
        }
        Ok(Self { sites, frame })
    }

    pub fn identity(len: usize) -> Self {
        let mut t = MpoTensor::zeros(1, 1);
        for p in 0..PHYS {
            t.set(0, p, p, 0, 1.0);
        }
        Self { sites: vec![t; len], frame: None }
    }

    /// The zero map, with an open right dimension `right`.
    pub fn zero(len: usize, right: usize) -> Self {
        let mut sites = vec![MpoTensor::zeros(1, 1); len];
        sites[len - 1] = MpoTensor::zeros(1, right);
        Self { sites, frame: None }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn frame(&self) -> Option<Frame> {
        self.frame
    }

    pub fn sites(&self) -> &[MpoTensor] {
        &self.sites
    }

    /// Internal bond dimensions.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites[..self.len() - 1].iter().map(|s| s.right).collect()
    }

    /// Dimension of the (possibly open) right boundary.
    pub fn right_dim(&self) -> usize {
        self.sites[self.len() - 1].right
    }

    pub fn is_closed(&self) -> bool {
        self.right_dim() == 1
    }

    fn compatible_frame(a: Option<Frame>, b: Option<Frame>) -> Result<Option<Frame>> {
        match (a, b) {
            (Some(x), Some(y)) if x != y => Err(invalid("MPO frames differ")),
            (Some(x), _) | (_, Some(x)) => Ok(Some(x)),
            (None, None) => Ok(None),
        }
    }

    /// `self ∘ other` (apply `other` first). Open right indices combine as
    /// `a · other.right_dim() + b`.
    pub fn compose(&self, other: &Mpo) -> Result<Mpo> {
        if self.len() != other.len() {
            return Err(invalid("MPO lengths differ"));
        }
        let frame = Self::compatible_frame(self.frame, other.frame)?;
        let sites = self
            .sites
            .iter()
            .zip(&other.sites)
            .map(|(a, b)| {
                let mut out = MpoTensor::zeros(a.left * b.left, a.right * b.right);
                let bz = b.nonzeros();
                for (la, o, m, ra, wa) in a.nonzeros() {
                    for &(lb, mb, i, rb, wb) in &bz {
                        if mb != m {
                            continue;
                        }
                        let (l, r) = (la * b.left + lb, ra * b.right + rb);
                        let k = out.idx(l, o, i, r);
                        out.data[k] += wa * wb;
                    }
                }
                out
            })
            .collect();
        Ok(Mpo { sites, frame })
    }

    /// Drops bond states that are unreachable from the left boundary or
    /// cannot reach the right boundary. Exact, and keeps entries untouched.
    pub fn prune(&self) -> Mpo {
        let n = self.len();
        // forward reachability of each bond's states
        let mut reach: Vec<Vec<bool>> = Vec::with_capacity(n);
        let mut prev = vec![true];
        for s in &self.sites {
            let mut cur = vec![false; s.right];
            for (l, _, _, r, _) in s.nonzeros() {
                if prev[l] {
                    cur[r] = true;
                }
            }
            reach.push(cur.clone());
            prev = cur;
        }
        // backward usefulness; open readout indices are always kept
        let mut useful: Vec<Vec<bool>> = vec![Vec::new(); n];
        useful[n - 1] = vec![true; self.right_dim()];
        for j in (0..n - 1).rev() {
            let next = &self.sites[j + 1];
            let mut cur = vec![false; self.sites[j].right];
            for (l, _, _, r, _) in next.nonzeros() {
                if useful[j + 1][r] {
                    cur[l] = true;
                }
            }
            useful[j] = cur;
        }
        let keep: Vec<Vec<usize>> = (0..n)
            .map(|j| {
                if j == n - 1 {
                    (0..self.right_dim()).collect()
                } else {
                    (0..self.sites[j].right).filter(|&r| reach[j][r] && useful[j][r]).collect()
                }
            })
            .collect();
        if keep[..n - 1].iter().any(|k| k.is_empty()) {
            let mut z = Mpo::zero(n, self.right_dim());
            z.frame = self.frame;
            return z;
        }
        let sites = (0..n)
            .map(|j| {
                let rows: Vec<usize> = if j == 0 { vec![0] } else { keep[j - 1].clone() };
                self.sites[j].select(&rows, &keep[j])
            })
            .collect();
        Mpo { sites, frame: self.frame }
    }

    /// Contracts the open right boundary with `v`, closing the MPO.
    pub fn close_right(&self, v: &[f64]) -> Result<Mpo> {
        if v.len() != self.right_dim() {
            return Err(invalid("boundary vector length does not match the open bond"));
        }
        let n = self.len();
        let last = &self.sites[n - 1];
        let mut t = MpoTensor::zeros(last.left, 1);
        for l in 0..last.left {
            for o in 0..PHYS {
                for i in 0..PHYS {
                    let x: f64 = (0..last.right).map(|r| last.get(l, o, i, r) * v[r]).sum();
                    t.set(l, o, i, 0, x);
                }
            }
        }
        let mut sites = self.sites.clone();
        sites[n - 1] = t;
        Ok(Mpo { sites, frame: self.frame })
    }

    /// Dense `4^L × 4^L` matrix of a closed MPO (small chains only).
    pub fn to_dense(&self) -> Result<RealMatrix> {
        if !self.is_closed() {
            return Err(invalid("open MPO has no single dense matrix"));
        }
        if self.len() > 6 {
            return Err(Error::ResourceLimit("dense MPO limited to L <= 6".into()));
        }
        let dim = PHYS.pow(self.len() as u32);
        let mut out = RealMatrix::zeros(dim, dim);
        let mut acc: Vec<(usize, usize, usize, f64)> = vec![(0, 0, 0, 1.0)]; // (out, in, bond, w)
        for s in &self.sites {
            let mut next = Vec::new();
            let nz = s.nonzeros();
            for &(o_acc, i_acc, b, w) in &acc {
                for &(l, o, i, r, x) in &nz {
                    if l == b {
                        next.push((o_acc * PHYS + o, i_acc * PHYS + i, r, w * x));
                    }
                }
            }
            acc = next;
        }
        for (o, i, _, w) in acc {
            out[(o, i)] += w;
        }
        Ok(out)
    }
}

fn check_frames(mpo: &Mpo, state: &OperatorMps) -> Result<()> {
    if mpo.len() != state.len() {
        return Err(invalid(format!("MPO length {} vs state length {}", mpo.len(), state.len())));
    }
    match mpo.frame {
        Some(f) if f != state.frame() => {
            Err(invalid(format!("MPO frame {f:?} does not match state frame {:?}", state.frame())))
        }
        _ => Ok(()),
    }
}

/// Exact MPO·MPS product (bond dimensions multiply). The ledger is carried
/// over from `state`.
pub fn apply_mpo_exact(mpo: &Mpo, state: &OperatorMps) -> Result<OperatorMps> {
    check_frames(mpo, state)?;
    if !mpo.is_closed() {
        return Err(invalid("cannot apply an MPO with an open right boundary"));
    }
    let mut sites = Vec::with_capacity(state.len());
    for (w, s) in mpo.sites.iter().zip(state.sites()) {
        let (l, r) = (w.left * s.left, w.right * s.right);
        if l > MAX_BOND_DIM || r > MAX_BOND_DIM {
            return Err(Error::ResourceLimit(format!("MPO product needs bond {}", l.max(r))));
        }
        let mut out = SiteTensor::zeros(l, r);
        for (lw, o, i, rw, x) in w.nonzeros() {
            for ls in 0..s.left {
                for rs in 0..s.right {
                    let v = s.get(ls, i, rs);
                    if v != 0.0 {
                        let (a, b) = (lw * s.left + ls, rw * s.right + rs);
                        out.data[(a * PHYS + o) * r + b] += x * v;
                    }
                }
            }
        }
        sites.push(out);
    }
    let mut res = OperatorMps::from_sites(sites, state.frame())?;
    *res.ledger_mut() = state.ledger().clone();
    res.set_time(state.time());
    Ok(res)
}

/// MPO·MPS followed by SVD compression. Discarded weight is booked in the
/// result's ledger.
pub fn apply_mpo(mpo: &Mpo, state: &OperatorMps, trunc: &Truncation) -> Result<OperatorMps> {
    let mut res = apply_mpo_exact(mpo, state)?;
    res.compress(trunc)?;
    Ok(res)
}

/// `⟨bra| W |ket⟩` for every open right index of `W`.
pub fn sandwich(bra: &OperatorMps, mpo: &Mpo, ket: &OperatorMps) -> Result<Vec<f64>> {
    if bra.len() != ket.len() || bra.frame() != ket.frame() {
        return Err(invalid("bra and ket must share length and frame"));
    }
    check_frames(mpo, ket)?;
    // env[d] is bra.left × ket.left at the current bond
    let mut env: Vec<Option<RealMatrix>> = vec![Some(Mat::from_fn(1, 1, |_, _| 1.0))];
    for ((a, b), w) in bra.sites().iter().zip(ket.sites()).zip(&mpo.sites) {
        let b_slices: Vec<RealMatrix> = (0..PHYS).map(|p| b.slice(p)).collect();
        let nz = w.nonzeros();
        // y[d][i] = env[d] · B_i, only where needed
        let mut y: Vec<[Option<RealMatrix>; PHYS]> = (0..w.left).map(|_| Default::default()).collect();
        for &(d, _, i, _, _) in &nz {
            if y[d][i].is_none() {
                if let Some(e) = &env[d] {
                    y[d][i] = Some(e * &b_slices[i]);
                }
            }
        }
        // z[d'][o] = Σ w · y[d][i]
        let mut z: Vec<[Option<RealMatrix>; PHYS]> = (0..w.right).map(|_| Default::default()).collect();
        for &(d, o, i, r, x) in &nz {
            if let Some(yy) = &y[d][i] {
                match &mut z[r][o] {
                    Some(acc) => *acc += yy * faer::Scale(x),
                    slot => *slot = Some(yy * faer::Scale(x)),
                }
            }
        }
        let a_slices: Vec<RealMatrix> = (0..PHYS).map(|p| a.slice(p)).collect();
        env = z
            .into_iter()
            .map(|zs| {
                let mut acc: Option<RealMatrix> = None;
                for (o, zz) in zs.into_iter().enumerate() {
                    if let Some(zz) = zz {
                        let term = a_slices[o].transpose() * zz;
                        acc = Some(match acc {
                            Some(prev) => prev + term,
                            None => term,
                        });
                    }
                }
                acc
            })
            .collect();
    }
    Ok(env.into_iter().map(|e| e.map_or(0.0, |m| m[(0, 0)])).collect())
}
