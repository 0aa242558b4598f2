use serde::Serialize;

use super::AgspCertificate;
use crate::error::{Error, Result};
use crate::hamiltonian::SpectralData;
use crate::schmidt::{schmidt_decompose, Cut};

/// The explicit entropy bound in bits, before and after the power trick.
#[derive(Debug, Clone, Serialize)]
pub struct EntropyBound {
    pub mu: f64,
    pub d: f64,
    pub delta: f64,
    /// `k = ⌈1/log₂(Δ⁻¹)⌉`; the rescaled bound uses `(D^k, Δ^k)`.
    pub power: u32,
    pub ell0_raw: u64,
    pub head_raw: f64,
    pub tail_raw: f64,
    pub raw: f64,
    pub ell0: u64,
    pub head: f64,
    pub tail: f64,
    pub rescaled: f64,
}

impl EntropyBound {
    /// The reported bound, `rescaled`.
    pub fn value(&self) -> f64 {
        self.rescaled
    }
}

fn explicit(mu: f64, d: f64, delta: f64) -> (u64, f64, f64) {
    let ratio = (mu * mu).recip().log2() / delta.recip().log2();
    let ell0 = (ratio - 1e-12).ceil().max(0.0) as u64;
    let head = 2.0 * (ell0 as f64 + 1.0) * d.log2();
    let tail = delta / (1.0 - delta).powi(2) * (d.powi(4) / delta).log2();
    (ell0, head, tail)
}

/// `2(ℓ₀+1)·log₂ D + (Δ/(1−Δ)²)·log₂(D⁴/Δ)` with
/// `ℓ₀ = ⌈log₂(μ⁻²)/log₂(Δ⁻¹)⌉`.
pub fn entropy_bound(mu: f64, d: f64, delta: f64) -> Result<EntropyBound> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::OutOfRange(format!("mu must lie in (0, 1], got {mu}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::OutOfRange(format!("Delta must lie in (0, 1), got {delta}")));
    }
    if !(d >= 2.0) || !d.is_finite() {
        return Err(Error::OutOfRange(format!("D must be at least 2, got {d}")));
    }
    let (ell0_raw, head_raw, tail_raw) = explicit(mu, d, delta);
    let power = (1.0 / delta.recip().log2()).ceil().max(1.0) as u32;
    let (ell0, head, tail) = explicit(mu, d.powi(power as i32), delta.powi(power as i32));
    Ok(EntropyBound {
        mu,
        d,
        delta,
        power,
        ell0_raw,
        head_raw,
        tail_raw,
        raw: head_raw + tail_raw,
        ell0,
        head,
        tail,
        rescaled: head + tail,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TailRow {
    pub ell: u32,
    /// `⌈D^ℓ⌉`, saturated.
    pub rank: usize,
    /// `Σ_{i > rank} λ_i²` of the ground state.
    pub tail: f64,
    /// `Δ^ℓ / μ²`.
    pub bound_mu: f64,
    /// `2DΔ^ℓ`.
    pub bound_2d: f64,
    pub pass_mu: bool,
    pub pass_2d: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailReport {
    pub cut: usize,
    pub mu: f64,
    pub d: f64,
    pub delta: f64,
    pub rows: Vec<TailRow>,
}

impl TailReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass_mu && r.pass_2d)
    }
}

/// Compares the ground state's Schmidt tail beyond rank `⌈D^ℓ⌉` with
/// `Δ^ℓ/μ²` and `2DΔ^ℓ`.
pub fn tail_bound_check(
    spectral: &SpectralData,
    cut: Cut,
    certificate: &AgspCertificate,
    mu: f64,
    ells: impl IntoIterator<Item = u32>,
) -> Result<TailReport> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::OutOfRange(format!("mu must lie in (0, 1], got {mu}")));
    }
    let dec = schmidt_decompose(&spectral.ground_state, cut)?;
    let (d, delta) = (certificate.d_used, certificate.delta_used);
    let rows = ells
        .into_iter()
        .map(|ell| {
            let r = d.powi(ell as i32).ceil();
            let rank = if r >= usize::MAX as f64 { usize::MAX } else { r as usize };
            let tail = dec.tail_mass(rank);
            let de = delta.powi(ell as i32);
            let bound_mu = de / (mu * mu);
            let bound_2d = 2.0 * d * de;
            TailRow {
                ell,
                rank,
                tail,
                bound_mu,
                bound_2d,
                pass_mu: tail <= bound_mu + 1e-9,
                pass_2d: tail <= bound_2d + 1e-9,
            }
        })
        .collect();
    Ok(TailReport { cut: cut.position, mu, d, delta, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_value() {
        let b = entropy_bound(std::f64::consts::FRAC_1_SQRT_2, 2.0, 0.25).unwrap();
        assert_eq!(b.ell0, 1);
        assert!((b.head - 4.0).abs() < 1e-12);
        assert!((b.tail - 8.0 / 3.0).abs() < 1e-12);
        assert!((b.value() - 20.0 / 3.0).abs() < 1e-12);
        assert_eq!(b.power, 1);
    }

    #[test]
    fn unit_overlap_has_no_head_steps() {
        let b = entropy_bound(1.0, 4.0, 0.3).unwrap();
        assert_eq!(b.ell0_raw, 0);
        assert!((b.head_raw - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rescaling_lands_in_quarter_half() {
        for delta in [0.3, 0.5, 0.7, 0.9, 0.99] {
            let b = entropy_bound(0.5, 3.0, delta).unwrap();
            let dk = delta.powi(b.power as i32);
            assert!((0.25..=0.5 + 1e-12).contains(&dk), "delta={delta} -> {dk}");
        }
    }

    #[test]
    fn domain_errors() {
        assert!(entropy_bound(0.0, 2.0, 0.5).is_err());
        assert!(entropy_bound(0.5, 1.5, 0.5).is_err());
        assert!(entropy_bound(0.5, 2.0, 1.0).is_err());
    }
}
