//! Parameter fixing for the diluted AGSP in one and two dimensions.
//!
//! All logarithms are base 2. Inequalities are re-evaluated in double-double
//! precision (about 106 bits).

use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr};
use twofloat::{consts::LOG2_E, TwoFloat};

use crate::detectability::dl_bound;
use crate::error::{Error, Result};

/// Largest gap the fixing of `k` is stated for; larger values are clamped.
pub const EPSILON_CLAMP: f64 = 10.0;
/// Upper end of the linear scan in [`solve_q`].
pub const Q_SCAN_LIMIT: u64 = 1_000_000;

fn tf(x: f64) -> TwoFloat {
    TwoFloat::from(x)
}

fn log2_tf(x: TwoFloat) -> TwoFloat {
    x.ln() * LOG2_E
}

/// `log₂ D̂ = log₂ 20 + (3/2)log j + (1/2)log²j + (j/m)·log₂ D₀'`, where
/// `D₀'` is the (possibly coarse-grained, possibly boundary-enlarged)
/// single-bond rank factor.
pub fn log2_hat_d(j: f64, m: f64, log2_d0: f64) -> f64 {
    let lj = j.log2();
    20f64.log2() + 1.5 * lj + 0.5 * lj * lj + (j / m) * log2_d0
}

/// Left side of `(3/2)log j + (1/2)log²j − q ≤ −log 80` at `j = 20Xq²`.
pub fn q_condition_lhs(x: f64, q: u64) -> f64 {
    let j = tf(20.0 * x) * tf(q as f64) * tf(q as f64);
    let lj = log2_tf(j);
    let lhs = lj * 1.5 + lj * lj * 0.5 - tf(q as f64);
    lhs.hi() + lhs.lo()
}

pub fn log2_80() -> f64 {
    let v = log2_tf(tf(80.0));
    v.hi() + v.lo()
}

/// Smallest `q ≥ 1` with `(3/2)log j + (1/2)log²j − q ≤ −log 80`,
/// `j = 20Xq²`.
pub fn solve_q(x: f64) -> Result<u64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::OutOfRange(format!("X must be positive, got {x}")));
    }
    let target = -log2_80();
    (1..=Q_SCAN_LIMIT)
        .find(|&q| q_condition_lhs(x, q) <= target)
        .ok_or_else(|| Error::OutOfRange(format!("no q up to {Q_SCAN_LIMIT} for X = {x}")))
}

/// Integers wider than 64 bits serialize as decimal strings.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterPlan {
    #[serde(rename = "X")]
    pub x: f64,
    pub epsilon: f64,
    pub epsilon_clamped: bool,
    pub d: usize,
    pub q: u64,
    pub k: u64,
    #[serde_as(as = "DisplayFromStr")]
    pub m: u128,
    /// `√m` in 1D and `√(m/I)` in 2D; `m` is `side²` or `side²·I`.
    #[serde_as(as = "DisplayFromStr")]
    pub side: u128,
    #[serde_as(as = "DisplayFromStr")]
    pub j: u128,
    pub delta0: f64,
    /// `log₂ D_I`.
    pub log_d_i: f64,
    /// `log₂ D̂`.
    pub log_d_hat: f64,
    /// `Δ̂ = Δ₀^k + 9^-q`, as `log₂`.
    pub log_delta_hat: f64,
    #[serde_as(as = "DisplayFromStr")]
    pub ell0: u128,
    /// `log₂(D_I D̂^ℓ₀)`.
    pub log_d_total: f64,
    /// `log₂ Δ̂^ℓ₀`.
    pub log_delta_total: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_i: Option<u64>,
    /// Increments applied to `q` beyond [`solve_q`] so that the rounded
    /// plan still satisfies every inequality.
    pub q_bumps: u64,
}

impl ParameterPlan {
    pub fn is_2d(&self) -> bool {
        self.boundary_i.is_some()
    }

    /// `log₂ D / (X³ log⁸ X)`; undefined at `X = 1`.
    pub fn scaling_constant_1d(&self) -> Option<f64> {
        let lx = self.x.log2();
        (lx > 0.0).then(|| self.log_d_total / (self.x.powi(3) * lx.powi(8)))
    }

    /// `log₂ D / (I² X³ log⁸(IX))`; undefined when `IX = 1`.
    pub fn scaling_constant_2d(&self) -> Option<f64> {
        let i = self.boundary_i.unwrap_or(1) as f64;
        let l = (i * self.x).log2();
        (l > 0.0).then(|| self.log_d_total / (i * i * self.x.powi(3) * l.powi(8)))
    }
}

fn clamp_epsilon(epsilon: f64) -> Result<(f64, bool)> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::OutOfRange(format!("epsilon must be positive, got {epsilon}")));
    }
    if epsilon > EPSILON_CLAMP {
        log::warn!("epsilon = {epsilon} exceeds {EPSILON_CLAMP}; clamping");
        return Ok((EPSILON_CLAMP, true));
    }
    Ok((epsilon, false))
}

/// `log₂(2^a + 2^b)` without leaving log space.
fn log2_sum(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp2().ln_1p() / std::f64::consts::LN_2
}

fn ceil_u128(x: f64) -> u128 {
    x.ceil() as u128
}

fn assemble(epsilon: f64, clamped: bool, d: usize, q: u64, boundary: Option<u64>, bumps: u64) -> ParameterPlan {
    let x = (d as f64).log2() / epsilon;
    let k = (20.0 * q as f64 / epsilon).ceil() as u64;
    let i = boundary.unwrap_or(1);
    let log_i = (i as f64).log2();
    let side = ceil_u128(if boundary.is_some() { 0.5 * log_i + 20.0 * x * q as f64 } else { 20.0 * q as f64 * x });
    let m = side * side * i as u128;
    let j = q as u128 * side * i as u128;
    let log_d0 = 2.0 * (d as f64).log2();
    let log_d0k = k as f64 * log_d0;
    let log_d_i = m as f64 * i as f64 * log_d0k;
    let log_d_hat = log2_hat_d(j as f64, m as f64, log_d0k + log_i);
    let delta0 = dl_bound(epsilon);
    let log_delta_hat = log2_sum(k as f64 * delta0.log2(), -(q as f64) * 9f64.log2());
    let ell0 = ceil_u128(log_d_i);
    let log_d_total = log_d_i + ell0 as f64 * log_d_hat;
    let log_delta_total = ell0 as f64 * log_delta_hat;
    ParameterPlan {
        x,
        epsilon,
        epsilon_clamped: clamped,
        d,
        q,
        k,
        m,
        side,
        j,
        delta0,
        log_d_i,
        log_d_hat,
        log_delta_hat,
        ell0,
        log_d_total,
        log_delta_total,
        boundary_i: boundary,
        q_bumps: bumps,
    }
}

fn plan_with(epsilon: f64, d: usize, boundary: Option<u64>) -> Result<ParameterPlan> {
    if d < 2 {
        return Err(Error::OutOfRange(format!("d must be at least 2, got {d}")));
    }
    let (eps, clamped) = clamp_epsilon(epsilon)?;
    let x = (d as f64).log2() / eps;
    let q0 = match boundary {
        None => solve_q(x)?,
        Some(i) => solve_q_2d(x, i)?,
    };
    for bump in 0..64 {
        let plan = assemble(eps, clamped, d, q0 + bump, boundary, bump);
        if verify_plan(&plan).passed() {
            return Ok(plan);
        }
    }
    Err(Error::OutOfRange(format!("no valid plan near q = {q0}")))
}

pub fn plan_1d(epsilon: f64, d: usize) -> Result<ParameterPlan> {
    plan_with(epsilon, d, None)
}

/// Plan for a boundary of `I` particles: `m = ⌈(1/2)log I + 20Xq⌉²·I` and
/// `j = q√(mI)`.
pub fn plan_2d(epsilon: f64, d: usize, boundary: u64) -> Result<ParameterPlan> {
    if boundary == 0 {
        return Err(Error::OutOfRange("boundary length must be at least 1".into()));
    }
    plan_with(epsilon, d, Some(boundary))
}

/// Left side of the 2D inequality with the rounded `m` and `j`.
pub fn q_condition_lhs_2d(x: f64, boundary: u64, q: u64) -> f64 {
    let i = boundary as f64;
    let side = (0.5 * i.log2() + 20.0 * x * q as f64).ceil();
    let j = tf(q as f64) * tf(side) * tf(i);
    let m = tf(side) * tf(side) * tf(i);
    let lj = log2_tf(j);
    let lhs = lj * 1.5 + lj * lj * 0.5 + (log2_tf(tf(i)) + tf(40.0 * x) * tf(q as f64)) * j / m
        - tf(3.0 * q as f64);
    lhs.hi() + lhs.lo()
}

/// Smallest `q` satisfying the 2D inequality at the rounded `(m, j)`.
pub fn solve_q_2d(x: f64, boundary: u64) -> Result<u64> {
    if !(x > 0.0) || boundary == 0 {
        return Err(Error::OutOfRange("need X > 0 and I ≥ 1".into()));
    }
    let target = -log2_80();
    (1..=Q_SCAN_LIMIT)
        .find(|&q| q_condition_lhs_2d(x, boundary, q) <= target)
        .ok_or_else(|| Error::OutOfRange(format!("no q up to {Q_SCAN_LIMIT}")))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlanCheck {
    pub name: &'static str,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanVerification {
    pub checks: Vec<PlanCheck>,
    /// Left side of the 1D or 2D log inequality.
    pub log_inequality_lhs: f64,
    /// `log₂(D̂ Δ̂)`.
    pub log_hat_product: f64,
    /// `log₂(D Δ)`.
    pub log_total_product: f64,
}

impl PlanVerification {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<bool> {
        self.checks.iter().find(|c| c.name == name).map(|c| c.pass)
    }
}

/// Re-evaluates every inequality of a plan in double-double precision.
pub fn verify_plan(plan: &ParameterPlan) -> PlanVerification {
    let q = tf(plan.q as f64);
    let x = tf(plan.x);
    let j = tf(plan.j as f64);
    let m = tf(plan.m as f64);
    let lj = log2_tf(j);
    let target = -log2_tf(tf(80.0));
    let i = plan.boundary_i.unwrap_or(1);
    let log_i = log2_tf(tf(i as f64));

    let fix_k = plan.delta0.log2() * plan.k as f64 <= -3.0 * plan.q as f64;
    // 40X(j/m) ≤ 2 in 1D; (log I + 20Xq)(j/m) ≤ 2q in 2D.
    // X is itself an f64, so equality cases are allowed a few ulps of slack.
    let slack = tf(1.0 + f64::EPSILON * 8.0);
    let fix_m = if plan.is_2d() {
        (log_i + x * q * 20.0) * j <= q * m * slack * 2.0
    } else {
        x * j * 40.0 <= m * slack * 2.0
    };
    let drive = if plan.is_2d() { log_i + x * q * 40.0 } else { x * q * 40.0 };
    let lhs = lj * 1.5 + lj * lj * 0.5 + drive * j / m - q * 3.0;
    let log_inequality = lhs <= target;

    let log_hat_product = plan.log_d_hat + plan.log_delta_hat;
    let log_total_product = plan.log_d_total + plan.log_delta_total;
    let hat_product = tf(plan.log_d_hat) + tf(plan.log_delta_hat) <= tf(-1.0);
    let total_product = tf(plan.log_d_total) + tf(plan.log_delta_total) < tf(-1.0);

    PlanVerification {
        checks: vec![
            PlanCheck { name: "fix_k", pass: fix_k },
            PlanCheck { name: "fix_m", pass: fix_m },
            PlanCheck { name: "log_inequality", pass: log_inequality },
            PlanCheck { name: "hat_product", pass: hat_product },
            PlanCheck { name: "total_product", pass: total_product },
        ],
        log_inequality_lhs: lhs.hi() + lhs.lo(),
        log_hat_product,
        log_total_product,
    }
}

/// One row of a plan sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    #[serde(rename = "X")]
    pub x: f64,
    pub q: u64,
    pub k: u64,
    pub m: u128,
    pub j: u128,
    #[serde(rename = "logD_total")]
    pub log_d_total: f64,
    /// `log₂(D Δ)`.
    #[serde(rename = "product_DDelta")]
    pub product_d_delta: f64,
    pub pass: bool,
}

pub fn sweep_row(plan: &ParameterPlan) -> SweepRow {
    let v = verify_plan(plan);
    SweepRow {
        x: plan.x,
        q: plan.q,
        k: plan.k,
        m: plan.m,
        j: plan.j,
        log_d_total: plan.log_d_total,
        product_d_delta: v.log_total_product,
        pass: v.passed(),
    }
}

/// Plans with `d = 2` and `ε = 1/X` over the given `X` values.
pub fn sweep_x(xs: &[f64]) -> Result<Vec<ParameterPlan>> {
    xs.iter().map(|&x| plan_1d(1.0 / x, 2)).collect()
}
