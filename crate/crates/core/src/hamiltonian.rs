//! Frustration-free projector chains: construction, validation and exact
//! diagonalization.
//!
//! A chain of `n` particles of dimension `d` carries `n - 1` nearest-neighbour
//! projectors `Q_i` acting on particles `(i, i+1)`. Energies are in units of the
//! interaction strength (normalized to one), so the gap is dimensionless.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, checked_pow, eigh, embed, fix_phase, normalized, op_norm, range_projector, real, CMat,
    CVec, Placement, ONE,
};
use crate::rng::substream;

pub const HERMITICITY_TOL: f64 = 1e-12;
pub const IDEMPOTENCY_TOL: f64 = 1e-10;
pub const ZERO_ENERGY_TOL: f64 = 1e-9;
/// Eigenvalues below this (and below a hundredth of the gap) count as ground
/// space.
pub const DEGENERACY_THRESHOLD: f64 = 1e-7;
pub const DEFAULT_DIM_CAP: usize = 20_000;

/// Relative eigenvalue threshold separating a PSD term's kernel from its range.
const KERNEL_REL_TOL: f64 = 1e-10;
const KERNEL_ABS_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct ProjectorChain {
    n: usize,
    d: usize,
    terms: Vec<CMat>,
    label: String,
    flags: Vec<String>,
}

impl ProjectorChain {
    pub fn new(n: usize, d: usize, terms: Vec<CMat>, label: impl Into<String>) -> Result<Self> {
        if n < 2 || d < 2 {
            return Err(Error::InvalidInput(format!("need n >= 2 and d >= 2, got n={n}, d={d}")));
        }
        if terms.len() != n - 1 {
            return Err(Error::InvalidInput(format!(
                "expected {} bond terms, got {}",
                n - 1,
                terms.len()
            )));
        }
        let local = d * d;
        if let Some(i) = terms.iter().position(|t| t.nrows() != local || t.ncols() != local) {
            return Err(Error::InvalidInput(format!("term {i} is not {local}x{local}")));
        }
        Ok(Self { n, d, terms, label: label.into(), flags: Vec::new() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.d.pow(self.n as u32)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn flags(&self) -> &[String] {
        &self.flags
    }

    pub fn flag(&mut self, note: impl Into<String>) {
        self.flags.push(note.into());
    }

    pub fn terms(&self) -> &[CMat] {
        &self.terms
    }

    /// `Q_i` for bond `i` (0-based: acts on particles `i`, `i+1`).
    pub fn term(&self, bond: usize) -> &CMat {
        &self.terms[bond]
    }

    pub fn bond_count(&self) -> usize {
        self.terms.len()
    }

    /// Local ground projector `P_i = 1 - Q_i`.
    pub fn local_ground_projector(&self, bond: usize) -> CMat {
        let q = &self.terms[bond];
        CMat::identity(q.nrows(), q.ncols()) - q
    }

    pub fn placement(&self, bond: usize) -> Placement {
        Placement::new(self.n, self.d, bond, 2)
    }

    /// Dense `H = Σ_i Q_i`.
    pub fn hamiltonian(&self) -> CMat {
        let dim = self.dim();
        let mut h = CMat::zeros(dim, dim);
        for (i, q) in self.terms.iter().enumerate() {
            h += embed(q, self.placement(i));
        }
        h
    }

    pub fn with_replaced_term(&self, bond: usize, term: CMat) -> Self {
        let mut c = self.clone();
        c.terms[bond] = term;
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    ProductParent,
    Aklt,
    RandomMpsParent,
}

fn default_cap() -> usize {
    DEFAULT_DIM_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bond_dim: Option<usize>,
    #[serde(default)]
    pub pin_boundary: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_cap")]
    pub dim_cap: usize,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, n: usize) -> Self {
        Self { kind, n, d: None, bond_dim: None, pin_boundary: false, seed: 0, dim_cap: DEFAULT_DIM_CAP }
    }

    pub fn product_parent(n: usize) -> Self {
        Self::new(ModelKind::ProductParent, n)
    }

    pub fn aklt(n: usize, pin_boundary: bool) -> Self {
        Self { pin_boundary, ..Self::new(ModelKind::Aklt, n) }
    }

    pub fn random_mps_parent(n: usize, d: usize, bond_dim: usize, seed: u64) -> Self {
        Self { d: Some(d), bond_dim: Some(bond_dim), seed, ..Self::new(ModelKind::RandomMpsParent, n) }
    }

    pub fn local_dim(&self) -> Result<usize> {
        match self.kind {
            ModelKind::Aklt => match self.d {
                None | Some(3) => Ok(3),
                Some(d) => Err(Error::InvalidInput(format!("aklt requires d = 3, got {d}"))),
            },
            ModelKind::ProductParent => Ok(self.d.unwrap_or(2)),
            ModelKind::RandomMpsParent => Ok(self.d.unwrap_or(3)),
        }
    }

    pub fn bond_dim(&self) -> usize {
        self.bond_dim.unwrap_or(2)
    }

    pub fn label(&self) -> String {
        match self.kind {
            ModelKind::ProductParent => format!("product_parent(n={})", self.n),
            ModelKind::Aklt if self.pin_boundary => format!("aklt_pinned(n={})", self.n),
            ModelKind::Aklt => format!("aklt(n={})", self.n),
            ModelKind::RandomMpsParent => format!(
                "random_mps_parent(n={},d={},D={},seed={})",
                self.n,
                self.d.unwrap_or(3),
                self.bond_dim(),
                self.seed
            ),
        }
    }
}

/// Instantiates a model and checks it against the dimension cap.
pub fn build_model(spec: &ModelSpec) -> Result<ProjectorChain> {
    let d = spec.local_dim()?;
    if spec.n < 2 || d < 2 {
        return Err(Error::InvalidInput(format!("need n >= 2 and d >= 2, got n={}, d={d}", spec.n)));
    }
    let dim = checked_pow(d, spec.n)?;
    if dim > spec.dim_cap {
        return Err(Error::DimensionCap { dim, cap: spec.dim_cap });
    }
    let n = spec.n;
    let label = spec.label();
    match spec.kind {
        ModelKind::ProductParent => {
            let local = d * d;
            let mut q = CMat::identity(local, local);
            q[(0, 0)] -= ONE;
            ProjectorChain::new(n, d, vec![q; n - 1], label)
        }
        ModelKind::Aklt => {
            let p2 = spin2_projector();
            let mut terms = vec![p2; n - 1];
            if spec.pin_boundary {
                // Penalize m = -1 on both end sites; this removes the edge
                // doublets and leaves one ground state.
                let mut pen = CMat::zeros(3, 3);
                pen[(2, 2)] = ONE;
                let id = CMat::identity(3, 3);
                terms[0] = kernel_complement(&(&terms[0] + pen.kronecker(&id)));
                let last = n - 2;
                terms[last] = kernel_complement(&(&terms[last] + id.kronecker(&pen)));
            }
            let mut chain = ProjectorChain::new(n, d, terms, label)?;
            if !spec.pin_boundary {
                chain.flag("open AKLT chain: ground space is 4-fold degenerate (set pin_boundary)");
            }
            Ok(chain)
        }
        ModelKind::RandomMpsParent => {
            let bond = spec.bond_dim();
            if bond < 1 {
                return Err(Error::InvalidInput("random_mps_parent requires bond_dim >= 1".into()));
            }
            let psi = seed_mps_state(n, d, bond, spec.seed);
            let terms = (0..n - 1)
                .map(|i| {
                    let rho = two_site_density(&psi, n, d, i);
                    CMat::identity(d * d, d * d) - support_projector(&rho)
                })
                .collect();
            let mut chain = ProjectorChain::new(n, d, terms, label)?;
            if bond * bond >= d * d && n > 3 {
                chain.flag(format!(
                    "bond dimension {bond} saturates the two-site space of d={d}; bulk terms vanish \
                     and the ground space is degenerate"
                ));
            }
            Ok(chain)
        }
    }
}

/// Projector onto total spin 2 of two spin-1 particles, basis `m = +1, 0, -1`.
fn spin2_projector() -> CMat {
    let s = std::f64::consts::SQRT_2;
    let sz = CMat::from_diagonal(&CVec::from_vec(vec![real(1.0), real(0.0), real(-1.0)]));
    let mut sp = CMat::zeros(3, 3);
    sp[(0, 1)] = real(s);
    sp[(1, 2)] = real(s);
    let sm = sp.adjoint();
    let ss = sz.kronecker(&sz) + (sp.kronecker(&sm) + sm.kronecker(&sp)) * real(0.5);
    let id = CMat::identity(9, 9);
    &ss * real(0.5) + &ss * &ss * real(1.0 / 6.0) + id * real(1.0 / 3.0)
}

fn kernel_tol(m: &CMat) -> f64 {
    let scale = op_norm(m);
    (KERNEL_REL_TOL * scale).max(KERNEL_ABS_TOL)
}

/// Projector onto the orthogonal complement of `ker(m)` for PSD `m`.
fn kernel_complement(m: &CMat) -> CMat {
    range_projector(m, kernel_tol(m)).0
}

fn support_projector(rho: &CMat) -> CMat {
    kernel_complement(rho)
}

/// Reduced density matrix of particles `(bond, bond+1)`.
pub fn two_site_density(psi: &CVec, n: usize, d: usize, bond: usize) -> CMat {
    let left = d.pow(bond as u32);
    let right = d.pow((n - bond - 2) as u32);
    let mid = d * d;
    // M[a, (l, r)] = psi[(l*mid + a)*right + r]
    let m = CMat::from_fn(mid, left * right, |a, lr| {
        let (l, r) = (lr / right, lr % right);
        psi[(l * mid + a) * right + r]
    });
    &m * m.adjoint()
}

/// The seeded open-boundary MPS whose parent Hamiltonian `random_mps_parent`
/// builds. Bond dimensions are `min(bond_dim, d^p, d^(n-p))`; tensor entries
/// are complex Gaussians.
pub fn seed_mps_state(n: usize, d: usize, bond_dim: usize, seed: u64) -> CVec {
    let mut rng = substream(seed, "random_mps_parent/tensors");
    let dims: Vec<usize> = (0..=n)
        .map(|p| {
            if p == 0 || p == n {
                1
            } else {
                bond_dim.min(d.saturating_pow(p as u32)).min(d.saturating_pow((n - p) as u32))
            }
        })
        .collect();
    // psi is kept as a (prefix index) x (bond) matrix.
    let mut psi = CMat::from_element(1, 1, ONE);
    for p in 0..n {
        let (dl, dr) = (dims[p], dims[p + 1]);
        // tensor as (dl) x (d * dr) matrix, column index s*dr + b
        let t = linalg::random_matrix(dl, d * dr, &mut rng);
        let prod = &psi * t; // prefix x (d*dr)
        let rows = prod.nrows();
        psi = CMat::from_fn(rows * d, dr, |r, b| {
            let (prefix, s) = (r / d, r % d);
            prod[(prefix, s * dr + b)]
        });
    }
    let mut v = CVec::from_iterator(psi.nrows(), psi.column(0).iter().copied());
    v = normalized(&v);
    fix_phase(&mut v);
    v
}

#[derive(Debug, Clone, Serialize)]
pub struct TermCheck {
    pub bond: usize,
    pub hermiticity_residual: f64,
    pub idempotency_residual: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub n: usize,
    pub d: usize,
    pub label: String,
    pub terms: Vec<TermCheck>,
    pub ground_energy: f64,
    pub degeneracy: usize,
    pub gap: Option<f64>,
    pub projectors_ok: bool,
    pub frustration_free: bool,
    pub unique_ground_state: bool,
    pub flags: Vec<String>,
}

impl ValidationReport {
    /// Projector and frustration-freeness checks; uniqueness is reported
    /// separately.
    pub fn passed(&self) -> bool {
        self.projectors_ok && self.frustration_free
    }
}

fn ground_count(vals: &[f64]) -> usize {
    let below = vals.iter().take_while(|&&v| v < DEGENERACY_THRESHOLD).count();
    match vals.get(below) {
        Some(&gap) => vals[..below].iter().filter(|&&v| v < gap / 100.0).count(),
        None => below,
    }
}

pub fn validate_frustration_free(chain: &ProjectorChain) -> ValidationReport {
    let terms: Vec<TermCheck> = chain
        .terms()
        .iter()
        .enumerate()
        .map(|(bond, q)| {
            let herm = op_norm(&(q - q.adjoint()));
            let idem = op_norm(&(q * q - q));
            TermCheck {
                bond,
                hermiticity_residual: herm,
                idempotency_residual: idem,
                ok: herm <= HERMITICITY_TOL && idem <= IDEMPOTENCY_TOL,
            }
        })
        .collect();
    let vals = linalg::eigvalsh(&chain.hamiltonian());
    let degeneracy = ground_count(&vals);
    let ground_energy = vals[0];
    let gap = vals.get(degeneracy.max(1)).copied();
    let mut flags = chain.flags().to_vec();
    if degeneracy != 1 {
        flags.push(format!("ground space is {degeneracy}-fold degenerate (non-unique)"));
    }
    ValidationReport {
        n: chain.n(),
        d: chain.d(),
        label: chain.label().to_string(),
        projectors_ok: terms.iter().all(|t| t.ok),
        terms,
        ground_energy,
        degeneracy,
        gap,
        frustration_free: ground_energy.abs() <= ZERO_ENERGY_TOL,
        unique_ground_state: degeneracy == 1,
        flags,
    }
}

/// Exact spectral data of a chain with a unique zero-energy ground state.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub n: usize,
    pub d: usize,
    pub label: String,
    pub ground_state: CVec,
    pub ground_energy: f64,
    pub degeneracy: usize,
    pub gap: f64,
    /// Orthonormal basis of the orthogonal complement, one vector per column.
    pub perp_basis: CMat,
    pub spectrum: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub gap: f64,
    pub degeneracy: usize,
    pub ground_energy: f64,
    pub n: usize,
    pub d: usize,
    pub label: String,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.ground_state.len()
    }

    pub fn summary(&self) -> SpectralSummary {
        SpectralSummary {
            gap: self.gap,
            degeneracy: self.degeneracy,
            ground_energy: self.ground_energy,
            n: self.n,
            d: self.d,
            label: self.label.clone(),
        }
    }

    pub fn ground_projector(&self) -> CMat {
        &self.ground_state * self.ground_state.adjoint()
    }

    /// `|⟨Ω|ψ⟩|`.
    pub fn overlap(&self, psi: &CVec) -> f64 {
        self.ground_state.dotc(psi).norm()
    }
}

pub fn spectral_gap(chain: &ProjectorChain) -> Result<SpectralData> {
    let (vals, vecs) = eigh(&chain.hamiltonian());
    let degeneracy = ground_count(&vals);
    if degeneracy != 1 {
        return Err(Error::DegenerateGround { degeneracy });
    }
    let dim = vals.len();
    if dim < 2 {
        return Err(Error::InvalidInput("Hilbert space too small".into()));
    }
    let mut ground = CVec::from_iterator(dim, vecs.column(0).iter().copied());
    fix_phase(&mut ground);
    let perp = vecs.columns(1, dim - 1).into_owned();
    Ok(SpectralData {
        n: chain.n(),
        d: chain.d(),
        label: chain.label().to_string(),
        ground_energy: vals[0],
        gap: vals[1],
        degeneracy,
        ground_state: ground,
        perp_basis: perp,
        spectrum: vals,
    })
}

/// Replaces each PSD term by the projector onto the complement of its kernel.
/// The common kernel, and hence the ground space, is unchanged.
pub fn normalize_to_projectors(
    terms: &[CMat],
    n: usize,
    d: usize,
    label: impl Into<String>,
) -> Result<ProjectorChain> {
    let mut out = Vec::with_capacity(terms.len());
    for (i, t) in terms.iter().enumerate() {
        if op_norm(&(t - t.adjoint())) > 1e-10 * op_norm(t).max(1.0) {
            return Err(Error::InvalidInput(format!("term {i} is not Hermitian")));
        }
        let tol = kernel_tol(t);
        let (vals, _) = eigh(t);
        if vals[0] < -tol.max(1e-9) {
            return Err(Error::InvalidInput(format!("term {i} is not positive semidefinite")));
        }
        let (proj, kernel) = range_projector(t, tol);
        if kernel == 0 {
            return Err(Error::TrivialKernel { term: i });
        }
        out.push(proj);
    }
    ProjectorChain::new(n, d, out, label)
}
