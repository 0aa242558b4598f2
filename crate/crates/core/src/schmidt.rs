//! Bipartition analytics: Schmidt decomposition, rank, entropy and truncation.

use std::path::Path;

use serde::Serialize;

use crate::artifact;
use crate::error::{Error, Result};
use crate::linalg::{apply_gate, checked_pow, real, svd_sorted, CMat, CVec, Placement};

pub const NORM_TOL: f64 = 1e-10;
pub const RANK_REL_TOL: f64 = 1e-10;
pub const RANK_ABS_TOL: f64 = 1e-12;

/// The bipartition between particles `position` and `position + 1`
/// (1-based), so the left block holds `position` particles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Cut {
    pub n: usize,
    pub d: usize,
    pub position: usize,
    pub left_dim: usize,
    pub right_dim: usize,
}

impl Cut {
    pub fn new(n: usize, d: usize, position: usize) -> Result<Self> {
        if position < 1 || position >= n {
            return Err(Error::OutOfRange(format!("cut position {position} not in 1..{}", n - 1)));
        }
        Ok(Self {
            n,
            d,
            position,
            left_dim: checked_pow(d, position)?,
            right_dim: checked_pow(d, n - position)?,
        })
    }

    /// The central cut, `⌊n/2⌋`.
    pub fn middle(n: usize, d: usize) -> Result<Self> {
        Self::new(n, d, n / 2)
    }

    /// 0-based index of the bond term that straddles this cut.
    pub fn straddling_bond(&self) -> usize {
        self.position - 1
    }

    pub fn max_rank(&self) -> usize {
        self.left_dim.min(self.right_dim)
    }

    fn check_len(&self, state: &CVec) -> Result<()> {
        if state.len() != self.left_dim * self.right_dim {
            return Err(Error::InvalidInput(format!(
                "state has dimension {}, cut expects {}",
                state.len(),
                self.left_dim * self.right_dim
            )));
        }
        Ok(())
    }

    /// `state` reshaped to `left_dim × right_dim`.
    pub fn reshape(&self, state: &CVec) -> CMat {
        let r = self.right_dim;
        CMat::from_fn(self.left_dim, r, |a, b| state[a * r + b])
    }
}

/// `ψ = Σ_i λ_i |L_i⟩ ⊗ |R_i⟩`.
#[derive(Debug, Clone, Serialize)]
pub struct CutDecomposition {
    pub cut: Cut,
    /// All `min(left_dim, right_dim)` coefficients, nonincreasing.
    pub values: Vec<f64>,
    /// `left_dim × values.len()`; column `i` is `|L_i⟩`.
    #[serde(skip)]
    pub left_vectors: CMat,
    /// `right_dim × values.len()`; column `i` is `|R_i⟩`.
    #[serde(skip)]
    pub right_vectors: CMat,
    pub rank: usize,
    pub entropy: f64,
}

impl CutDecomposition {
    pub fn left(&self, i: usize) -> CVec {
        self.left_vectors.column(i).into_owned()
    }

    pub fn right(&self, i: usize) -> CVec {
        self.right_vectors.column(i).into_owned()
    }

    /// `|L_i⟩ ⊗ |R_i⟩`.
    pub fn product_pair(&self, i: usize) -> CVec {
        self.left(i).kronecker(&self.right(i))
    }

    /// `Σ_{i<r} λ_i |L_i⟩|R_i⟩`.
    pub fn reconstruct(&self, r: usize) -> CVec {
        let r = r.min(self.values.len());
        let mut m = CMat::zeros(self.cut.left_dim, self.cut.right_dim);
        for i in 0..r {
            m += self.left_vectors.column(i) * self.right_vectors.column(i).transpose() * real(self.values[i]);
        }
        let rd = self.cut.right_dim;
        CVec::from_fn(self.cut.left_dim * rd, |idx, _| m[(idx / rd, idx % rd)])
    }

    /// Probability mass `Σ_{i ≥ r} λ_i²` beyond the first `r` coefficients.
    pub fn tail_mass(&self, r: usize) -> f64 {
        self.values.iter().skip(r).map(|v| v * v).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Writes the left and right vector families as two blocks of an
    /// artifact file.
    pub fn write_vectors(&self, path: &Path) -> Result<()> {
        artifact::write_blocks(path, &[self.left_vectors.clone(), self.right_vectors.clone()])
    }
}

pub fn rank_of(values: &[f64]) -> usize {
    let top = values.first().copied().unwrap_or(0.0);
    let tol = (RANK_REL_TOL * top).max(RANK_ABS_TOL);
    values.iter().filter(|&&v| v > tol).count()
}

/// Base-2 von Neumann entropy of `{λ_i²}` with `0·log 0 = 0`.
pub fn entropy_of(values: &[f64]) -> f64 {
    values
        .iter()
        .map(|v| v * v)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum::<f64>()
        .max(0.0)
}

fn decompose(state: &CVec, cut: Cut) -> CutDecomposition {
    let (values, u, vt) = svd_sorted(&cut.reshape(state));
    let rank = rank_of(&values);
    let entropy = entropy_of(&values);
    CutDecomposition { cut, rank, entropy, left_vectors: u, right_vectors: vt.transpose(), values }
}

/// Schmidt decomposition of a unit state.
pub fn schmidt_decompose(state: &CVec, cut: Cut) -> Result<CutDecomposition> {
    cut.check_len(state)?;
    let norm = state.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm });
    }
    Ok(decompose(state, cut))
}

/// Schmidt decomposition after rescaling `state` to unit norm.
pub fn schmidt_decompose_normalized(state: &CVec, cut: Cut) -> Result<CutDecomposition> {
    cut.check_len(state)?;
    let norm = state.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::NotNormalized { norm });
    }
    Ok(decompose(&(state / real(norm)), cut))
}

/// Schmidt rank of an arbitrary (possibly unnormalized) vector.
pub fn schmidt_rank(state: &CVec, cut: Cut) -> Result<usize> {
    cut.check_len(state)?;
    Ok(rank_of(&svd_sorted(&cut.reshape(state)).0))
}

/// Largest overlap of the decomposed state with a unit vector of Schmidt
/// rank `r`.
pub fn best_rank_r_overlap(decomp: &CutDecomposition, r: usize) -> f64 {
    if r >= decomp.rank {
        return 1.0;
    }
    decomp.values.iter().take(r).map(|v| v * v).sum::<f64>().sqrt().min(1.0)
}

/// Keeps the `r` largest Schmidt terms. Returns the unnormalized truncation
/// and its norm.
pub fn truncate(state: &CVec, cut: Cut, r: usize) -> Result<(CVec, f64)> {
    if r == 0 {
        return Err(Error::OutOfRange("truncation rank must be at least 1".into()));
    }
    cut.check_len(state)?;
    let decomp = decompose(state, cut);
    let out = decomp.reconstruct(r);
    let norm = out.norm();
    Ok((out, norm))
}

/// A `sites`-local operator acting on particles `start..start+sites`.
#[derive(Debug, Clone)]
pub struct OperatorDescriptor {
    pub gate: CMat,
    pub start: usize,
    pub sites: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SrFactsReport {
    /// Schmidt ranks of the input at cuts `1..n`.
    pub ranks: Vec<usize>,
    /// Schmidt ranks of `O·ψ` at the same cuts.
    pub ranks_after_operator: Vec<usize>,
    /// Subadditivity `SR(ψ + Oψ) ≤ SR(ψ) + SR(Oψ)` at every cut.
    pub subadditive: bool,
    /// `SR(Oψ) ≤ d^k · SR(ψ)` at every cut.
    pub local_growth: bool,
    /// `d^-|i-j| r_j ≤ r_i ≤ d^|i-j| r_j` for every pair of cuts.
    pub neighbouring_cuts: bool,
}

impl SrFactsReport {
    pub fn passed(&self) -> bool {
        self.subadditive && self.local_growth && self.neighbouring_cuts
    }
}

/// Measures the three elementary Schmidt-rank facts on one instance.
pub fn sr_facts_check(n: usize, d: usize, state: &CVec, op: &OperatorDescriptor) -> Result<SrFactsReport> {
    if op.start + op.sites > n || op.gate.nrows() != checked_pow(d, op.sites)? {
        return Err(Error::InvalidInput("operator does not fit the register".into()));
    }
    let mut moved = state.clone();
    apply_gate(&op.gate, Placement::new(n, d, op.start, op.sites), &mut moved);
    let sum = state + &moved;
    let cuts: Vec<Cut> = (1..n).map(|p| Cut::new(n, d, p)).collect::<Result<_>>()?;
    let rank = |v: &CVec| -> Result<Vec<usize>> { cuts.iter().map(|&c| schmidt_rank(v, c)).collect() };
    let ranks = rank(state)?;
    let after = rank(&moved)?;
    let sums = rank(&sum)?;
    let dk = d.pow(op.sites as u32);
    let subadditive = (0..cuts.len()).all(|c| sums[c] <= ranks[c] + after[c]);
    let local_growth = (0..cuts.len()).all(|c| after[c] <= dk * ranks[c]);
    let mut neighbouring = true;
    for i in 0..ranks.len() {
        for j in 0..ranks.len() {
            let f = d.saturating_pow(i.abs_diff(j) as u32);
            neighbouring &= ranks[i] <= f.saturating_mul(ranks[j]);
        }
    }
    Ok(SrFactsReport {
        ranks,
        ranks_after_operator: after,
        subadditive,
        local_growth,
        neighbouring_cuts: neighbouring,
    })
}
