//! Matrix product states by one left-to-right pass of truncated SVDs.
//!
//! Site tensors are stored as `(left·d) × right` matrices with row index
//! `l·d + s`, so that contracting them in order reproduces the state vector
//! with particle 0 as the most significant digit.

use std::path::Path;

use serde::Serialize;

use crate::agsp::AgspCertificate;
use crate::artifact::write_blocks;
use crate::error::{Error, Result};
use crate::hamiltonian::SpectralData;
use crate::linalg::{checked_pow, svd_sorted, CMat, CVec};
use crate::schmidt::rank_of;

#[derive(Debug, Clone, Serialize)]
pub struct CutTruncation {
    /// Number of particles left of the cut.
    pub cut: usize,
    pub kept: usize,
    /// Singular values of the intermediate state at this cut.
    pub values: Vec<f64>,
    /// `Σ_{i > kept} λ_i²`.
    pub discarded_mass: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MpsState {
    pub n: usize,
    pub d: usize,
    pub max_bond: usize,
    #[serde(skip)]
    pub tensors: Vec<CMat>,
    pub bond_dims: Vec<usize>,
    /// Left-canonical: every tensor but the last is an isometry.
    pub canonical: bool,
    pub truncations: Vec<CutTruncation>,
}

impl MpsState {
    pub fn discarded_total(&self) -> f64 {
        self.truncations.iter().map(|t| t.discarded_mass).sum()
    }

    /// Contracts the chain back to a `dⁿ` vector.
    pub fn contract(&self) -> CVec {
        let d = self.d;
        let mut cur = CMat::from_element(1, 1, crate::linalg::real(1.0));
        for a in &self.tensors {
            let left = a.nrows() / d;
            let right = a.ncols();
            let mut next = CMat::zeros(cur.nrows() * d, right);
            for s in 0..d {
                let slice = CMat::from_fn(left, right, |l, r| a[(l * d + s, r)]);
                let part = &cur * slice;
                for p in 0..cur.nrows() {
                    next.row_mut(p * d + s).copy_from(&part.row(p));
                }
            }
            cur = next;
        }
        CVec::from_column_slice(cur.column(0).as_slice())
    }

    pub fn write_tensors(&self, path: &Path) -> Result<()> {
        write_blocks(path, &self.tensors)
    }
}

fn sweep(state: &CVec, n: usize, d: usize, k: usize, truncated_cuts: usize) -> Result<MpsState> {
    if k == 0 {
        return Err(Error::OutOfRange("bond dimension must be at least 1".into()));
    }
    let dim = checked_pow(d, n)?;
    if state.len() != dim {
        return Err(Error::InvalidInput(format!("state length {} is not {d}^{n}", state.len())));
    }
    let mut remainder = CMat::from_row_slice(1, dim, state.as_slice());
    let mut tensors = Vec::with_capacity(n);
    let mut bond_dims = Vec::with_capacity(n.saturating_sub(1));
    let mut truncations = Vec::new();
    for site in 0..n - 1 {
        let left = remainder.nrows();
        let rest = remainder.ncols() / d;
        let mat = CMat::from_fn(left * d, rest, |row, c| remainder[(row / d, (row % d) * rest + c)]);
        let (values, u, vt) = svd_sorted(&mat);
        let numerical = rank_of(&values).max(1);
        let kept = if site < truncated_cuts { numerical.min(k) } else { numerical };
        let discarded_mass = values[kept..].iter().map(|s| s * s).sum();
        truncations.push(CutTruncation { cut: site + 1, kept, values: values.clone(), discarded_mass });
        tensors.push(u.columns(0, kept).into_owned());
        remainder = CMat::from_fn(kept, rest, |r, c| vt[(r, c)] * crate::linalg::real(values[r]));
        bond_dims.push(kept);
    }
    let left = remainder.nrows();
    tensors.push(CMat::from_fn(left * d, 1, |row, _| remainder[(row / d, row % d)]));
    Ok(MpsState { n, d, max_bond: k, tensors, bond_dims, canonical: true, truncations })
}

/// Truncates every cut to at most `k` Schmidt values, left to right, keeping
/// the largest values with ties broken by index.
pub fn to_mps(state: &CVec, n: usize, d: usize, k: usize) -> Result<MpsState> {
    sweep(state, n, d, k, usize::MAX)
}

#[derive(Debug, Clone, Serialize)]
pub struct MpsErrorRow {
    pub k: usize,
    pub error_sq: f64,
    #[serde(rename = "bound_2nD_over_k")]
    pub bound_2nd_over_k: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MpsErrorReport {
    pub n: usize,
    pub mu: f64,
    pub d_used: f64,
    pub delta_used: f64,
    /// `D·Δ ≤ 1/2` for the certificate.
    pub precondition: bool,
    pub rows: Vec<MpsErrorRow>,
    /// Errors are nonincreasing in `k` (within `1e-12`).
    pub monotone: bool,
}

impl MpsErrorReport {
    pub fn passed(&self) -> bool {
        self.monotone && self.rows.iter().all(|r| r.pass)
    }
}

/// Full bond dimension `d^{⌊n/2⌋}` of an `n`-site chain.
pub fn full_bond(n: usize, d: usize) -> usize {
    checked_pow(d, n / 2).unwrap_or(usize::MAX)
}

/// `‖Ω − ψ_k‖² ≤ 2nD/k` for each `k`, with `D` taken from the certificate.
pub fn mps_error_check(
    spectral: &SpectralData,
    certificate: &AgspCertificate,
    mu: f64,
    ks: &[usize],
) -> Result<MpsErrorReport> {
    if !(mu > 0.0) {
        return Err(Error::OutOfRange(format!("mu must be positive, got {mu}")));
    }
    let (n, d) = (spectral.n, spectral.d);
    let omega = &spectral.ground_state;
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut rows = Vec::with_capacity(ks.len());
    for &k in &ks {
        let mps = to_mps(omega, n, d, k)?;
        let error_sq = (omega - mps.contract()).norm_squared();
        let bound = 2.0 * n as f64 * certificate.d_used / k as f64;
        rows.push(MpsErrorRow { k, error_sq, bound_2nd_over_k: bound, pass: error_sq <= bound + 1e-12 });
    }
    let monotone = rows.windows(2).all(|w| w[1].error_sq <= w[0].error_sq + 1e-12);
    Ok(MpsErrorReport {
        n,
        mu,
        d_used: certificate.d_used,
        delta_used: certificate.delta_used,
        precondition: certificate.d_used * certificate.delta_used <= 0.5,
        rows,
        monotone,
    })
}
