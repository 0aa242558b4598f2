//! Layer projectors, the detectability operator and coarse-graining.
//!
//! Bonds are labelled `1..n-1` in the text below; bond `i` couples particles
//! `i` and `i+1`. Code indexes them from 0, so 1-based bond `i` is entry
//! `i - 1` of [`ProjectorChain::terms`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{ProjectorChain, SpectralData};
use crate::linalg::{
    self, checked_pow, embed, op_norm, product_of_gates, range_projector, CMat, CVec,
    Placement,
};
use crate::schmidt::Cut;

pub const GROUND_TOL: f64 = 1e-8;

/// `Δ₀(ε) = (ε/2 + 1)^(-2/3)`.
pub fn dl_bound(epsilon: f64) -> f64 {
    (epsilon / 2.0 + 1.0).powf(-2.0 / 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    Odd,
    Even,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductOrdering {
    /// `A = Π_odd Π_even`.
    OddEven,
    /// `A = Π_even Π_odd`.
    EvenOdd,
}

impl ProductOrdering {
    pub const BOTH: [ProductOrdering; 2] = [ProductOrdering::OddEven, ProductOrdering::EvenOdd];
}

/// 0-based indices of the bonds with odd (1, 3, 5, ...) or even (2, 4, ...)
/// 1-based label.
pub fn layer_bonds(n: usize, layer: Layer) -> Vec<usize> {
    let first = match layer {
        Layer::Odd => 0,
        Layer::Even => 1,
    };
    (first..n.saturating_sub(1)).step_by(2).collect()
}

/// Which bonds form each layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayerAssignment {
    pub odd: Vec<usize>,
    pub even: Vec<usize>,
    /// True when the literal parities were swapped so that the bond
    /// straddling the designated cut sits in the even layer.
    pub relabeled: bool,
    pub cut: Option<usize>,
}

impl LayerAssignment {
    pub fn literal(n: usize) -> Self {
        Self { odd: layer_bonds(n, Layer::Odd), even: layer_bonds(n, Layer::Even), relabeled: false, cut: None }
    }

    /// Assignment in which the bond straddling `cut` belongs to the even
    /// layer.
    pub fn for_cut(cut: Cut) -> Self {
        let mut a = Self::literal(cut.n);
        if !a.even.contains(&cut.straddling_bond()) {
            std::mem::swap(&mut a.odd, &mut a.even);
            a.relabeled = true;
        }
        a.cut = Some(cut.position);
        a
    }

    pub fn layer_of(&self, bond: usize) -> Layer {
        if self.even.contains(&bond) {
            Layer::Even
        } else {
            Layer::Odd
        }
    }
}

#[derive(Debug, Clone)]
pub struct LayerOperators {
    pub pi_odd: CMat,
    pub pi_even: CMat,
    pub assignment: LayerAssignment,
    /// Layer holding the bond that straddles the designated cut, if any.
    pub cut_layer: Option<Layer>,
}

fn layer_product(chain: &ProjectorChain, bonds: &[usize]) -> CMat {
    let locals: Vec<(CMat, Placement)> =
        bonds.iter().map(|&b| (chain.local_ground_projector(b), chain.placement(b))).collect();
    product_of_gates(chain.dim(), locals.iter().map(|(g, p)| (g, *p)))
}

pub fn layers_with(chain: &ProjectorChain, assignment: LayerAssignment) -> LayerOperators {
    let cut_layer = assignment.cut.map(|c| assignment.layer_of(c - 1));
    LayerOperators {
        pi_odd: layer_product(chain, &assignment.odd),
        pi_even: layer_product(chain, &assignment.even),
        assignment,
        cut_layer,
    }
}

/// Layers with the literal parity `Π_odd = P₁P₃⋯`, `Π_even = P₂P₄⋯`.
pub fn layer_projectors(chain: &ProjectorChain) -> LayerOperators {
    layers_with(chain, LayerAssignment::literal(chain.n()))
}

/// Layers relabelled so that the cut's straddling projector is even.
pub fn layer_projectors_for_cut(chain: &ProjectorChain, cut: Cut) -> LayerOperators {
    layers_with(chain, LayerAssignment::for_cut(cut))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LayerResiduals {
    pub odd_hermiticity: f64,
    pub odd_idempotency: f64,
    pub even_hermiticity: f64,
    pub even_idempotency: f64,
}

impl LayerResiduals {
    pub fn max(&self) -> f64 {
        self.odd_hermiticity
            .max(self.odd_idempotency)
            .max(self.even_hermiticity)
            .max(self.even_idempotency)
    }
}

impl LayerOperators {
    pub fn dl(&self, ordering: ProductOrdering) -> CMat {
        match ordering {
            ProductOrdering::OddEven => linalg::matmul(&self.pi_odd, &self.pi_even),
            ProductOrdering::EvenOdd => linalg::matmul(&self.pi_even, &self.pi_odd),
        }
    }

    pub fn residuals(&self) -> LayerResiduals {
        let r = |p: &CMat| (op_norm(&(p - p.adjoint())), op_norm(&(p * p - p)));
        let (oh, oi) = r(&self.pi_odd);
        let (eh, ei) = r(&self.pi_even);
        LayerResiduals { odd_hermiticity: oh, odd_idempotency: oi, even_hermiticity: eh, even_idempotency: ei }
    }

    /// `max(‖Π_odd Ω − Ω‖, ‖Π_even Ω − Ω‖)`.
    pub fn ground_residual(&self, omega: &CVec) -> f64 {
        let a = (&self.pi_odd * omega - omega).norm();
        let b = (&self.pi_even * omega - omega).norm();
        a.max(b)
    }
}

/// `A` in the requested order, from the literal layers.
pub fn dl_operator(chain: &ProjectorChain, ordering: ProductOrdering) -> CMat {
    layer_projectors(chain).dl(ordering)
}

#[derive(Debug, Clone, Serialize)]
pub struct ShrinkReport {
    /// `‖K|_{H⊥}‖²`.
    pub measured_delta: f64,
    /// `Δ₀(ε)` for the chain's gap.
    pub dl_bound: f64,
    pub epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ordering: Option<ProductOrdering>,
    pub label: String,
    pub ground_residual: f64,
    pub perp_leak: f64,
}

impl ShrinkReport {
    pub fn within_dl_bound(&self) -> bool {
        self.measured_delta <= self.dl_bound + 1e-9
    }

    pub fn with_ordering(mut self, ordering: ProductOrdering) -> Self {
        self.ordering = Some(ordering);
        self
    }
}

/// `‖KΩ − Ω‖` and `‖Ω†K P⊥‖`.
pub fn invariance_residuals(k: &CMat, omega: &CVec) -> (f64, f64) {
    let ground = (k * omega - omega).norm();
    let row = omega.adjoint() * k;
    let along = (&row * omega)[(0, 0)];
    let leak = (row - omega.adjoint() * along).norm();
    (ground, leak)
}

/// Squared largest singular value of `K` restricted to `H⊥`.
///
/// Uses `K P⊥` with `P⊥ = 1 − ΩΩ†`, whose nonzero singular values are those of
/// `K V` for any isometry `V` onto `H⊥`.
pub fn restricted_shrink(k: &CMat, omega: &CVec) -> f64 {
    let k_omega = k * omega;
    let kp = k - &k_omega * omega.adjoint();
    let s = op_norm(&kp);
    s * s
}

pub fn shrink_factor(k: &CMat, spectral: &SpectralData) -> Result<ShrinkReport> {
    let omega = &spectral.ground_state;
    if k.nrows() != omega.len() || k.ncols() != omega.len() {
        return Err(Error::InvalidInput("operator dimension does not match the chain".into()));
    }
    let (ground, leak) = invariance_residuals(k, omega);
    if ground > GROUND_TOL {
        return Err(Error::GroundInvariance { residual: ground });
    }
    if leak > GROUND_TOL {
        return Err(Error::PerpLeak { residual: leak });
    }
    Ok(ShrinkReport {
        measured_delta: restricted_shrink(k, omega),
        dl_bound: dl_bound(spectral.gap),
        epsilon: spectral.gap,
        ordering: None,
        label: spectral.label.clone(),
        ground_residual: ground,
        perp_leak: leak,
    })
}

/// Sum of the original terms supported inside coarse bond `i`, on the
/// `2k`-particle block.
fn block_hamiltonian(chain: &ProjectorChain, k: usize, i: usize) -> CMat {
    let d = chain.d();
    let sites = 2 * k;
    let dim = d.pow(sites as u32);
    let mut h = CMat::zeros(dim, dim);
    for j in 0..sites - 1 {
        h += embed(chain.term(i * k + j), Placement::new(sites, d, j, 2));
    }
    h
}

/// Fuses `k` adjacent particles. Coarse term `i` is the projector onto the
/// complement of the common kernel of every original term inside the fused
/// pair of blocks `(i, i+1)`.
pub fn coarse_grain(chain: &ProjectorChain, k: usize, dim_cap: usize) -> Result<ProjectorChain> {
    if k == 0 || !chain.n().is_multiple_of(k) {
        return Err(Error::InvalidInput(format!("k = {k} must divide n = {}", chain.n())));
    }
    if k == 1 {
        return Ok(chain.clone());
    }
    let nc = chain.n() / k;
    if nc < 2 {
        return Err(Error::InvalidInput("coarse chain needs at least two blocks".into()));
    }
    let dc = checked_pow(chain.d(), k)?;
    let local = dc * dc;
    if local > dim_cap {
        return Err(Error::DimensionCap { dim: local, cap: dim_cap });
    }
    let terms = (0..nc - 1)
        .map(|i| range_projector(&block_hamiltonian(chain, k, i), 1e-9).0)
        .collect();
    ProjectorChain::new(nc, dc, terms, format!("{}/coarse{k}", chain.label()))
}

/// `max ‖P'_i P_j − P'_i‖` over coarse bonds `i` and original bonds `j`
/// inside them.
pub fn pulling_residual(chain: &ProjectorChain, coarse: &ProjectorChain, k: usize) -> f64 {
    let d = chain.d();
    let sites = 2 * k;
    let mut worst: f64 = 0.0;
    for i in 0..coarse.bond_count() {
        let p_coarse = coarse.local_ground_projector(i);
        for j in 0..sites - 1 {
            let p = embed(&chain.local_ground_projector(i * k + j), Placement::new(sites, d, j, 2));
            worst = worst.max(op_norm(&(&p_coarse * p - &p_coarse)));
        }
    }
    worst
}

#[derive(Debug, Clone, Serialize)]
pub struct PyramidReport {
    pub k: usize,
    /// `‖Π'_odd Π'_even − Π'_odd (Π_even Π_odd Π_odd Π_even)^{k/2} Π'_even‖`.
    pub identity_residual: f64,
    pub pulling_residual: f64,
    pub coarse_measured_delta: f64,
    pub fine_epsilon: f64,
    /// `Δ₀(ε)^k` with the fine chain's gap.
    pub dl_bound_pow_k: f64,
    pub coarse_within_bound: bool,
    pub ground_fidelity: f64,
}

pub fn verify_pyramid_identity(chain: &ProjectorChain, k: usize, dim_cap: usize) -> Result<PyramidReport> {
    if k == 0 || k % 2 == 1 {
        return Err(Error::InvalidInput("k must be even".into()));
    }
    let coarse = coarse_grain(chain, k, dim_cap)?;
    let fine_spec = crate::hamiltonian::spectral_gap(chain)?;
    let coarse_spec = crate::hamiltonian::spectral_gap(&coarse)?;

    let fine = layer_projectors(chain);
    let cl = layer_projectors(&coarse);
    let lhs = linalg::matmul(&cl.pi_odd, &cl.pi_even);
    let eo = linalg::matmul(&fine.pi_even, &fine.pi_odd);
    let block = linalg::matmul(&eo, &eo.adjoint());
    let mut middle = CMat::identity(block.nrows(), block.ncols());
    for _ in 0..k / 2 {
        middle = linalg::matmul(&middle, &block);
    }
    let rhs = linalg::matmul(&linalg::matmul(&cl.pi_odd, &middle), &cl.pi_even);
    let identity_residual = op_norm(&(lhs - rhs));

    let coarse_measured_delta = restricted_shrink(&cl.dl(ProductOrdering::OddEven), &coarse_spec.ground_state);
    let bound = dl_bound(fine_spec.gap).powi(k as i32);
    Ok(PyramidReport {
        k,
        identity_residual,
        pulling_residual: pulling_residual(chain, &coarse, k),
        coarse_measured_delta,
        fine_epsilon: fine_spec.gap,
        dl_bound_pow_k: bound,
        coarse_within_bound: coarse_measured_delta <= bound + 1e-9,
        ground_fidelity: fine_spec.overlap(&coarse_spec.ground_state).powi(2),
    })
}

/// Ground residual of layer projectors as a standalone check.
pub fn layers_fix_ground(layers: &LayerOperators, spectral: &SpectralData) -> bool {
    layers.ground_residual(&spectral.ground_state) <= 1e-9
}

/// Commutator norm `‖[P_a, P_b]‖` of two bond projectors in the full space.
pub fn bond_commutator(chain: &ProjectorChain, a: usize, b: usize) -> f64 {
    let pa = embed(&chain.local_ground_projector(a), chain.placement(a));
    let pb = embed(&chain.local_ground_projector(b), chain.placement(b));
    linalg::fro_norm(&(linalg::matmul(&pa, &pb) - linalg::matmul(&pb, &pa)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_model, spectral_gap, ModelSpec};

    #[test]
    fn twelve_particle_layers() {
        let odd: Vec<usize> = layer_bonds(12, Layer::Odd).iter().map(|b| b + 1).collect();
        let even: Vec<usize> = layer_bonds(12, Layer::Even).iter().map(|b| b + 1).collect();
        assert_eq!(odd, vec![1, 3, 5, 7, 9, 11]);
        assert_eq!(even, vec![2, 4, 6, 8, 10]);
    }

    #[test]
    fn relabeling_puts_cut_in_even_layer() {
        let cut = Cut::new(6, 2, 3).unwrap();
        let a = LayerAssignment::for_cut(cut);
        assert!(a.even.contains(&2));
        assert!(a.relabeled);
        let b = LayerAssignment::for_cut(Cut::new(6, 2, 2).unwrap());
        assert!(!b.relabeled);
    }

    #[test]
    fn product_parent_three_sites() {
        let chain = build_model(&ModelSpec::product_parent(3)).unwrap();
        let layers = layer_projectors(&chain);
        let p1 = embed(&chain.local_ground_projector(0), chain.placement(0));
        let p2 = embed(&chain.local_ground_projector(1), chain.placement(1));
        assert!((&layers.pi_odd - p1).norm() < 1e-14);
        assert!((&layers.pi_even - p2).norm() < 1e-14);
        assert!(layers.residuals().max() < 1e-12);
    }

    #[test]
    fn disjoint_bonds_commute_exactly() {
        let chain = build_model(&ModelSpec::aklt(5, true)).unwrap();
        assert_eq!(bond_commutator(&chain, 0, 2), 0.0);
    }

    #[test]
    fn commuting_model_gives_exact_projector() {
        let chain = build_model(&ModelSpec::product_parent(4)).unwrap();
        let spec = spectral_gap(&chain).unwrap();
        let a = dl_operator(&chain, ProductOrdering::OddEven);
        assert!((&a * &a - &a).norm() < 1e-10);
        assert!((&a - spec.ground_projector()).norm() < 1e-10);
        let r = shrink_factor(&a, &spec).unwrap();
        assert!(r.measured_delta.abs() < 1e-10);
    }

    #[test]
    fn shrink_of_identity_and_ground_projector() {
        let chain = build_model(&ModelSpec::aklt(4, true)).unwrap();
        let spec = spectral_gap(&chain).unwrap();
        let id = CMat::identity(spec.dim(), spec.dim());
        assert!((shrink_factor(&id, &spec).unwrap().measured_delta - 1.0).abs() < 1e-10);
        assert!(shrink_factor(&spec.ground_projector(), &spec).unwrap().measured_delta < 1e-12);
    }

    #[test]
    fn orderings_agree_and_respect_bound() {
        let chain = build_model(&ModelSpec::aklt(5, true)).unwrap();
        let spec = spectral_gap(&chain).unwrap();
        let mut deltas = Vec::new();
        for ord in ProductOrdering::BOTH {
            let a = dl_operator(&chain, ord);
            let (_, leak) = invariance_residuals(&a, &spec.ground_state);
            assert!(leak < 1e-9);
            let r = shrink_factor(&a, &spec).unwrap();
            assert!(r.within_dl_bound(), "{r:?}");
            deltas.push(r.measured_delta);
        }
        assert!((deltas[0] - deltas[1]).abs() < 1e-9);
    }

    #[test]
    fn restricted_shrink_matches_isometry_form() {
        let chain = build_model(&ModelSpec::random_mps_parent(4, 3, 2, 3)).unwrap();
        let spec = spectral_gap(&chain).unwrap();
        let a = dl_operator(&chain, ProductOrdering::EvenOdd);
        let kv = &a * &spec.perp_basis;
        let s = linalg::svd_sorted(&kv).0[0];
        assert!((restricted_shrink(&a, &spec.ground_state) - s * s).abs() < 1e-10);
    }

    #[test]
    fn non_invariant_operator_is_rejected() {
        let chain = build_model(&ModelSpec::product_parent(2)).unwrap();
        let spec = spectral_gap(&chain).unwrap();
        let zero = CMat::zeros(4, 4);
        assert!(matches!(shrink_factor(&zero, &spec), Err(Error::GroundInvariance { .. })));
    }

    #[test]
    fn coarse_graining_product_parent() {
        let chain = build_model(&ModelSpec::product_parent(4)).unwrap();
        assert_eq!(coarse_grain(&chain, 1, 1 << 16).unwrap().terms(), chain.terms());
        let coarse = coarse_grain(&chain, 2, 1 << 16).unwrap();
        assert_eq!((coarse.n(), coarse.d()), (2, 4));
        let mut expect = CMat::identity(16, 16);
        expect[(0, 0)] = linalg::ZERO;
        assert!((coarse.term(0) - expect).norm() < 1e-12);
        assert!(pulling_residual(&chain, &coarse, 2) < 1e-10);
        assert!(coarse_grain(&chain, 3, 1 << 16).is_err());
    }

    #[test]
    fn pyramid_requires_even_k() {
        let chain = build_model(&ModelSpec::product_parent(4)).unwrap();
        let err = verify_pyramid_identity(&chain, 1, 1 << 16).unwrap_err();
        assert!(err.to_string().contains("k must be even"));
        let r = verify_pyramid_identity(&chain, 2, 1 << 16).unwrap();
        assert!(r.identity_residual < 1e-10);
        assert!(r.coarse_within_bound);
    }
}
