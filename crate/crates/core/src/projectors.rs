//! Projector MPOs onto Pauli-weight and contributing sectors.
//!
//! Every projector is diagonal in the string basis, so all tensors are
//! 0/1-valued. Frame-dependent projectors are built in the parallel frame of
//! their basis and must be applied to states expressed in that frame.

use log::warn;

use crate::error::{invalid, Result};
use crate::mpo::{uniform, Mpo, MpoTensor};
use crate::mps::PHYS;
use crate::pauli::ParallelBasis;

/// Slots of the parallel frame.
const IDENTITY: usize = 0;
const PARALLEL: usize = 1;
const PERP: [usize; 2] = [2, 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectorKind {
    Contributing,
    NonContributing,
    Weight(usize),
    ParallelWeight(usize),
    OrthogonalWeight(usize),
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    ParallelWeight,
    OrthogonalWeight,
}

#[derive(Debug, Clone)]
pub struct ProjectorMpo {
    pub mpo: Mpo,
    pub kind: ProjectorKind,
    pub basis: Option<ParallelBasis>,
    /// Set when the request was out of range and the zero map was returned.
    pub warning: Option<String>,
}

impl ProjectorMpo {
    pub fn bond_dims(&self) -> Vec<usize> {
        self.mpo.bond_dims()
    }

    /// `self ∘ other`, pruned of dead bond states.
    pub fn compose(&self, other: &ProjectorMpo) -> Result<ProjectorMpo> {
        let basis = self.basis.or(other.basis);
        Ok(ProjectorMpo {
            mpo: self.mpo.compose(&other.mpo)?.prune(),
            kind: ProjectorKind::Product,
            basis,
            warning: None,
        })
    }
}

fn check_len(len: usize) -> Result<()> {
    if len == 0 {
        return Err(invalid("chain length must be positive"));
    }
    Ok(())
}

/// Bulk tensor of a weight counter: bond states `0..=max` count insertions of
/// the `count` slots, `pass` slots leave the count unchanged.
fn counter_bulk(max: usize, pass: &[usize], count: &[usize]) -> MpoTensor {
    let mut t = MpoTensor::zeros(max + 1, max + 1);
    for k in 0..=max {
        for &p in pass {
            t.set(k, p, p, k, 1.0);
        }
        if k < max {
            for &p in count {
                t.set(k, p, p, k + 1, 1.0);
            }
        }
    }
    t
}

fn counting_projector(
    omega: usize,
    len: usize,
    pass: &[usize],
    count: &[usize],
    kind: ProjectorKind,
    basis: Option<ParallelBasis>,
) -> Result<ProjectorMpo> {
    check_len(len)?;
    let frame = basis.map(|b| b.frame());
    if omega > len {
        let msg = format!("weight {omega} exceeds chain length {len}; projector is zero");
        warn!("{msg}");
        let mut mpo = Mpo::zero(len, 1);
        mpo.frame = frame;
        return Ok(ProjectorMpo { mpo, kind, basis, warning: Some(msg) });
    }
    let bulk = counter_bulk(omega, pass, count);
    let mpo = Mpo::from_sites(uniform(&bulk, len, 0, &[omega]), frame)?;
    Ok(ProjectorMpo { mpo, kind, basis, warning: None })
}

/// `⊗_j (|𝟙⟩⟨𝟙| + |σ∥⟩⟨σ∥|)`, bond dimension 1.
pub fn contributing_projector(basis: &ParallelBasis, len: usize) -> Result<ProjectorMpo> {
    check_len(len)?;
    let mut t = MpoTensor::zeros(1, 1);
    t.set(0, IDENTITY, IDENTITY, 0, 1.0);
    t.set(0, PARALLEL, PARALLEL, 0, 1.0);
    let mpo = Mpo::from_sites(vec![t; len], Some(basis.frame()))?;
    Ok(ProjectorMpo { mpo, kind: ProjectorKind::Contributing, basis: Some(*basis), warning: None })
}

fn noncontributing_bulk() -> MpoTensor {
    // state 0: no orthogonal insertion yet; state 1: at least one
    let mut t = MpoTensor::zeros(2, 2);
    for p in [IDENTITY, PARALLEL] {
        t.set(0, p, p, 0, 1.0);
    }
    for p in PERP {
        t.set(0, p, p, 1, 1.0);
    }
    for p in 0..PHYS {
        t.set(1, p, p, 1, 1.0);
    }
    t
}

/// `1 − P^c`: strings with at least one orthogonal insertion, bond
/// dimension 2.
pub fn noncontributing_projector(basis: &ParallelBasis, len: usize) -> Result<ProjectorMpo> {
    check_len(len)?;
    let mpo = Mpo::from_sites(uniform(&noncontributing_bulk(), len, 0, &[1]), Some(basis.frame()))?;
    Ok(ProjectorMpo { mpo, kind: ProjectorKind::NonContributing, basis: Some(*basis), warning: None })
}

/// Projector onto total Pauli weight `omega`, bond dimension `omega + 1`.
/// Frame independent.
pub fn weight_projector(omega: usize, len: usize) -> Result<ProjectorMpo> {
    counting_projector(omega, len, &[IDENTITY], &[1, 2, 3], ProjectorKind::Weight(omega), None)
}

/// Projector onto strings with exactly `omega` parallel (or orthogonal)
/// insertions and arbitrary content of the other kind.
pub fn sector_projector(sector: Sector, omega: usize, basis: &ParallelBasis, len: usize) -> Result<ProjectorMpo> {
    match sector {
        Sector::ParallelWeight => counting_projector(
            omega,
            len,
            &[IDENTITY, PERP[0], PERP[1]],
            &[PARALLEL],
            ProjectorKind::ParallelWeight(omega),
            Some(*basis),
        ),
        Sector::OrthogonalWeight => counting_projector(
            omega,
            len,
            &[IDENTITY, PARALLEL],
            &PERP,
            ProjectorKind::OrthogonalWeight(omega),
            Some(*basis),
        ),
    }
}

/// `P^nc · P_{ω=ω⊥}`: non-contributing strings of total weight `omega_perp`.
pub fn backflow_projector(omega_perp: usize, basis: &ParallelBasis, len: usize) -> Result<ProjectorMpo> {
    if omega_perp == 0 {
        return Err(invalid("backflow projector needs omega_perp >= 1"));
    }
    noncontributing_projector(basis, len)?.compose(&weight_projector(omega_perp, len)?)
}

/// Open-boundary total-weight counter: contracting it yields one value per
/// weight `0..=omega_max` (strings heavier than `omega_max` are dropped).
pub fn weight_counter(omega_max: usize, len: usize) -> Result<Mpo> {
    check_len(len)?;
    let bulk = counter_bulk(omega_max, &[IDENTITY], &[1, 2, 3]);
    let open: Vec<usize> = (0..=omega_max).collect();
    Mpo::from_sites(uniform(&bulk, len, 0, &open), None)
}

/// Open-boundary counter resolving both the contributing flag and the total
/// weight. Readout index `flag · (omega_max + 1) + ω` with flag 0 for
/// contributing and 1 for non-contributing strings.
pub fn split_weight_counter(basis: &ParallelBasis, omega_max: usize, len: usize) -> Result<Mpo> {
    check_len(len)?;
    let flag = Mpo::from_sites(uniform(&noncontributing_bulk(), len, 0, &[0, 1]), Some(basis.frame()))?;
    flag.compose(&weight_counter(omega_max, len)?).map(|m| m.prune())
}
