//! Violation counting, Chebyshev dilution and the AGSP `K = Â^ℓ`.
//!
//! With the layers relabelled so that the cut's straddling bond is even, the
//! window `P₁ … P_m` consists of the `m` even bonds closest to the cut. The
//! operator `ℕ = Σ (1 − P_i)` counts violated window terms, the diluted
//! projector is `Π̂_m = C_m(ℕ)^q`, and `Â = Π̂_m Π_rest Π_odd`.

mod amplify;
mod bounds;

pub use amplify::{amplify, AmplificationStep, AmplificationTrace, PairSelection, Termination, TraceRow};
pub use bounds::{entropy_bound, tail_bound_check, EntropyBound, TailReport, TailRow};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chebyshev::{apply_polynomial, window_polynomial, Powered};
use crate::detectability::{
    dl_bound, invariance_residuals, layers_with, restricted_shrink, LayerAssignment, LayerOperators,
    ProductOrdering,
};
use crate::error::{Error, Result};
use crate::hamiltonian::{ProjectorChain, SpectralData};
use crate::linalg::{apply_gate_columns, embed, matmul, random_state, CMat, CVec};
use crate::params::{log2_hat_d, ParameterPlan};
use crate::rng::substream;
use crate::schmidt::{schmidt_rank, Cut};

/// Largest `ℓ` picked when the caller leaves it unset.
pub const DEFAULT_ELL_CAP: usize = 12;
/// `KΩ` is re-pinned to `Ω` once its drift exceeds this.
pub const REPIN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct Window {
    /// 0-based bond indices, left to right.
    pub members: Vec<usize>,
    /// Position of the straddling bond inside `members` (0-based).
    pub center: usize,
    pub m: usize,
    pub requested_m: usize,
    pub clamped: bool,
    pub cut: Cut,
    pub assignment: LayerAssignment,
    /// Even bonds outside the window.
    pub rest: Vec<usize>,
}

impl Window {
    /// The `m` even-layer bonds nearest `cut`, arranged so that the
    /// straddling bond sits at 1-based position `⌈m/2⌉` when the chain allows
    /// it.
    pub fn new(chain: &ProjectorChain, cut: Cut, m: usize) -> Result<Self> {
        if cut.n != chain.n() || cut.d != chain.d() {
            return Err(Error::InvalidInput("cut does not match the chain".into()));
        }
        let assignment = LayerAssignment::for_cut(cut);
        let even = assignment.even.clone();
        let size = m.min(even.len());
        if size < 2 {
            return Err(Error::InvalidInput(format!(
                "window needs at least two even bonds; the layer has {}",
                even.len()
            )));
        }
        let s = even.iter().position(|&b| b == cut.straddling_bond()).expect("cut bond is even");
        let want_left = size.div_ceil(2) - 1;
        let start = s.saturating_sub(want_left).min(even.len() - size);
        let members: Vec<usize> = even[start..start + size].to_vec();
        let rest = even.iter().copied().filter(|b| !members.contains(b)).collect();
        Ok(Self {
            center: s - start,
            m: size,
            requested_m: m,
            clamped: size < m,
            cut,
            assignment,
            members,
            rest,
        })
    }
}

/// `ℕ = Σ_{i ∈ window} Q_i`.
pub fn violation_operator(chain: &ProjectorChain, window: &Window) -> CMat {
    let dim = chain.dim();
    let mut out = CMat::zeros(dim, dim);
    for &b in &window.members {
        out += embed(chain.term(b), chain.placement(b));
    }
    out
}

/// Spectral projectors of `ℕ`: `projectors[v]` projects onto the sector with
/// exactly `v` violated window terms.
#[derive(Debug, Clone)]
pub struct SectorDecomposition {
    pub projectors: Vec<CMat>,
}

impl SectorDecomposition {
    /// Builds the projectors from `E'_v = P_i E_v + Q_i E_{v-1}`,
    /// one window term at a time.
    pub fn new(chain: &ProjectorChain, window: &Window) -> Self {
        let dim = chain.dim();
        let mut sectors = vec![CMat::identity(dim, dim)];
        for &b in &window.members {
            let p = chain.local_ground_projector(b);
            let q = chain.term(b);
            let place = chain.placement(b);
            let mut next = Vec::with_capacity(sectors.len() + 1);
            for v in 0..=sectors.len() {
                let mut acc = CMat::zeros(dim, dim);
                if v < sectors.len() {
                    let mut keep = sectors[v].clone();
                    apply_gate_columns(&p, place, &mut keep);
                    acc += keep;
                }
                if v > 0 {
                    let mut up = sectors[v - 1].clone();
                    apply_gate_columns(q, place, &mut up);
                    acc += up;
                }
                next.push(acc);
            }
            sectors = next;
        }
        Self { projectors: sectors }
    }

    pub fn m(&self) -> usize {
        self.projectors.len() - 1
    }

    /// Integer eigenvalues `0..=m` of `ℕ`, one per sector.
    pub fn eigenvalues(&self) -> Vec<f64> {
        (0..self.projectors.len()).map(|v| v as f64).collect()
    }

    /// `Σ_v f(v) E_v`.
    pub fn spectral_sum(&self, coefficients: &[f64]) -> CMat {
        let dim = self.projectors[0].nrows();
        let mut out = CMat::zeros(dim, dim);
        for (e, &c) in self.projectors.iter().zip(coefficients) {
            if c != 0.0 {
                out += e * crate::linalg::real(c);
            }
        }
        out
    }

    /// Sector dimensions `tr E_v`.
    pub fn dims(&self) -> Vec<usize> {
        self.projectors.iter().map(|e| e.trace().re.round() as usize).collect()
    }
}

/// Eigenvalue of `Π̂_m` on each sector, `C_m(v)^q`.
pub fn diluted_eigenvalues(m: usize, q: u32) -> Result<Vec<f64>> {
    let poly = Powered { inner: window_polynomial(m)?, q };
    let vs: Vec<f64> = (0..=m).map(|v| v as f64).collect();
    Ok(apply_polynomial(&poly, &vs))
}

/// `Π̂_m = [C_m(ℕ)]^q`.
pub fn dilute_pi_m(sectors: &SectorDecomposition, q: u32) -> Result<CMat> {
    if q == 0 {
        return Err(Error::OutOfRange("q must be at least 1".into()));
    }
    Ok(sectors.spectral_sum(&diluted_eigenvalues(sectors.m(), q)?))
}

/// The pieces of `Â` kept for inspection.
#[derive(Debug, Clone)]
pub struct HatA {
    pub q: u32,
    pub layers: LayerOperators,
    pub sectors: SectorDecomposition,
    pub pi_hat: CMat,
    /// `Π_rest Π_odd`.
    pub rest_odd: CMat,
    pub a_hat: CMat,
}

impl HatA {
    /// `Π_m = E_0`, the exact window projector.
    pub fn pi_m(&self) -> &CMat {
        &self.sectors.projectors[0]
    }

    /// `A = Π_even Π_odd = Π_m Π_rest Π_odd`.
    pub fn dl_operator(&self) -> CMat {
        self.layers.dl(ProductOrdering::EvenOdd)
    }
}

pub fn hat_a(chain: &ProjectorChain, window: &Window, q: u32) -> Result<HatA> {
    let layers = layers_with(chain, window.assignment.clone());
    let sectors = SectorDecomposition::new(chain, window);
    let pi_hat = dilute_pi_m(&sectors, q)?;
    let mut rest_odd = layers.pi_odd.clone();
    for &b in &window.rest {
        apply_gate_columns(&chain.local_ground_projector(b), chain.placement(b), &mut rest_odd);
    }
    let a_hat = matmul(&pi_hat, &rest_odd);
    Ok(HatA { q, layers, sectors, pi_hat, rest_odd, a_hat })
}

/// `K = Â^ℓ`.
#[derive(Debug, Clone)]
pub struct KOperator {
    pub k: CMat,
    pub ell: usize,
    /// Whether `ℓ` was the default and hit [`DEFAULT_ELL_CAP`].
    pub ell_capped: bool,
    pub repins: usize,
    pub hat: HatA,
}

/// `⌈log₂ D_I⌉` with `D_I = (d²)^m`.
pub fn default_ell(d: usize, m: usize) -> usize {
    (2.0 * m as f64 * (d as f64).log2()).ceil() as usize
}

fn repin(k: &mut CMat, omega: &CVec) {
    let r = &*k * omega - omega;
    *k -= &r * omega.adjoint();
    let s = omega.adjoint() * &*k - omega.adjoint();
    *k -= omega * s;
}

pub fn build_k(
    chain: &ProjectorChain,
    spectral: &SpectralData,
    window: &Window,
    q: u32,
    ell: Option<usize>,
) -> Result<KOperator> {
    let hat = hat_a(chain, window, q)?;
    let (ell, ell_capped) = match ell {
        Some(0) => return Err(Error::OutOfRange("ell must be at least 1".into())),
        Some(l) => (l, false),
        None => {
            let l = default_ell(chain.d(), window.m);
            (l.min(DEFAULT_ELL_CAP), l > DEFAULT_ELL_CAP)
        }
    };
    let omega = &spectral.ground_state;
    let mut k = hat.a_hat.clone();
    let mut repins = 0;
    for _ in 1..ell {
        k = matmul(&k, &hat.a_hat);
        if (&k * omega - omega).norm() > REPIN_TOL {
            repin(&mut k, omega);
            repins += 1;
        }
    }
    Ok(KOperator { k, ell, ell_capped, repins, hat })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DSource {
    /// The declared bound of an attached parameter plan.
    Theory,
    /// The largest rank growth seen on probes, a lower bound on the worst
    /// case.
    Measured,
}

#[derive(Debug, Clone, Serialize)]
pub struct SrGrowth {
    pub per_probe: Vec<f64>,
    pub max: f64,
}

/// `max_φ SR(Kφ)/SR(φ)` over the probes, in probe order.
pub fn measure_sr_growth(k: &CMat, probes: &[CVec], cut: Cut) -> Result<SrGrowth> {
    if probes.is_empty() {
        return Err(Error::InvalidInput("at least one probe is required".into()));
    }
    let per_probe = probes
        .par_iter()
        .map(|phi| -> Result<f64> {
            let before = schmidt_rank(phi, cut)?.max(1);
            let after = schmidt_rank(&(k * phi), cut)?;
            Ok(after as f64 / before as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    let max = per_probe.iter().copied().fold(0.0, f64::max);
    Ok(SrGrowth { per_probe, max })
}

/// Random unit `|L⟩ ⊗ |R⟩` across `cut`, reproducible from `(seed, label)`.
pub fn product_probes(cut: Cut, count: usize, seed: u64, label: &str) -> Vec<CVec> {
    let mut rng = substream(seed, label);
    (0..count)
        .map(|_| {
            let l = random_state(cut.left_dim, &mut rng);
            let r = random_state(cut.right_dim, &mut rng);
            l.kronecker(&r)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct AgspCertificate {
    pub label: String,
    pub n: usize,
    pub d: usize,
    pub cut: usize,
    pub m: usize,
    pub m_requested: usize,
    pub q: u32,
    pub ell: usize,
    pub ground_residual: f64,
    pub perp_leak: f64,
    pub repins: usize,
    pub epsilon: f64,
    /// `‖K|_{H⊥}‖²`.
    pub measured_delta: f64,
    pub measured_delta_hat_a: f64,
    pub measured_delta_dl: f64,
    pub measured_sr_growth: f64,
    pub probe_count: usize,
    /// `log₂(D_I · D̂^ℓ)` at the operator's own `(d, m, q, ℓ)`.
    pub theory_log2_d: f64,
    /// `(Δ₀(ε) + 9^-q)^ℓ`.
    pub theory_delta: f64,
    pub plan_attached: bool,
    pub d_source: DSource,
    /// The `D` used for `product_ok` and amplification.
    pub d_used: f64,
    pub delta_used: f64,
    pub product_ok: bool,
}

impl AgspCertificate {
    pub fn ground_ok(&self) -> bool {
        self.ground_residual <= 1e-8 && self.perp_leak <= 1e-8
    }

    pub fn delta_within_theory(&self) -> bool {
        self.measured_delta <= self.theory_delta + 1e-9
    }

    /// Replaces `D` and `Δ` by the plan's declared values.
    pub fn attach_plan(&mut self, plan: &ParameterPlan) {
        self.plan_attached = true;
        self.d_source = DSource::Theory;
        self.d_used = plan.log_d_total.exp2();
        self.delta_used = plan.log_delta_total.exp2();
        self.product_ok = plan.log_d_total + plan.log_delta_total < -1.0;
    }
}

/// Measures `K` and fills in the toy theory bounds.
pub fn certify(
    spectral: &SpectralData,
    window: &Window,
    kop: &KOperator,
    probes: &[CVec],
) -> Result<AgspCertificate> {
    let omega = &spectral.ground_state;
    let (ground, leak) = invariance_residuals(&kop.k, omega);
    if ground > 1e-8 {
        return Err(Error::GroundInvariance { residual: ground });
    }
    if leak > 1e-8 {
        return Err(Error::PerpLeak { residual: leak });
    }
    let measured_delta = restricted_shrink(&kop.k, omega);
    let measured_delta_hat_a = restricted_shrink(&kop.hat.a_hat, omega);
    let measured_delta_dl = restricted_shrink(&kop.hat.dl_operator(), omega);
    let growth = measure_sr_growth(&kop.k, probes, window.cut)?;

    let (d, m, q, ell) = (spectral.d, window.m, kop.hat.q, kop.ell);
    let log2_d0 = 2.0 * (d as f64).log2();
    let j = q as f64 * crate::chebyshev::window_degree(m) as f64;
    let log2_dhat = log2_hat_d(j, m as f64, log2_d0);
    let theory_log2_d = m as f64 * log2_d0 + ell as f64 * log2_dhat;
    let delta_hat = dl_bound(spectral.gap) + 9f64.powi(-(q as i32));
    let theory_delta = delta_hat.powi(ell as i32);

    let d_used = growth.max;
    Ok(AgspCertificate {
        label: spectral.label.clone(),
        n: spectral.n,
        d,
        cut: window.cut.position,
        m,
        m_requested: window.requested_m,
        q,
        ell,
        ground_residual: ground,
        perp_leak: leak,
        repins: kop.repins,
        epsilon: spectral.gap,
        measured_delta,
        measured_delta_hat_a,
        measured_delta_dl,
        measured_sr_growth: growth.max,
        probe_count: probes.len(),
        theory_log2_d,
        theory_delta,
        plan_attached: false,
        d_source: DSource::Measured,
        d_used,
        delta_used: measured_delta,
        product_ok: d_used * measured_delta < 0.5,
    })
}
