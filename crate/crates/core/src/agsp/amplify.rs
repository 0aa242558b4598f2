use serde::{Deserialize, Serialize};

use super::AgspCertificate;
use crate::error::{Error, Result};
use crate::hamiltonian::SpectralData;
use crate::linalg::{normalized, CMat, CVec};
use crate::schmidt::{schmidt_decompose_normalized, schmidt_rank, Cut};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSelection {
    /// The Schmidt pair with the largest overlap with the exact ground state.
    Oracle,
    /// The pair with the largest Schmidt coefficient. Carries no guarantee.
    LargestSchmidt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    InitialAboveThreshold,
    ReachedThreshold,
    MaxIterations,
}

#[derive(Debug, Clone, Serialize)]
pub struct AmplificationStep {
    pub iteration: usize,
    /// `|⟨Ω|φ⟩|` of the product state entering this iteration's output.
    pub mu: f64,
    #[serde(skip)]
    pub state: CVec,
    /// `SR(φ)` of the previous state.
    pub rank_before: usize,
    /// `SR(Kφ)` of the previous state.
    pub rank_after: usize,
    /// `max(D_used, rank_after)`.
    pub d_effective: f64,
    /// Whether `D·Δ ≤ 1/2` and `μ < 1/√(2D)` held for the previous state.
    pub preconditions: bool,
    /// `μ²/(D(μ² + Δ))`, the guaranteed squared overlap of the best pair.
    pub lemma_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AmplificationTrace {
    pub steps: Vec<AmplificationStep>,
    pub termination: Termination,
    pub selection: PairSelection,
    pub threshold: f64,
    pub d_used: f64,
    pub delta_used: f64,
}

/// CSV row for a trace.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub mu: f64,
    pub rank_before: usize,
    pub rank_after: usize,
}

impl AmplificationTrace {
    pub fn final_mu(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.mu)
    }

    pub fn final_state(&self) -> &CVec {
        &self.steps.last().expect("trace has an initial step").state
    }

    pub fn mus(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.mu).collect()
    }

    /// Whether every step taken under the preconditions increased `μ`.
    pub fn monotone_where_guaranteed(&self) -> bool {
        self.steps.windows(2).all(|w| !w[1].preconditions || w[1].mu > w[0].mu)
    }

    pub fn rows(&self) -> Vec<TraceRow> {
        self.steps
            .iter()
            .map(|s| TraceRow {
                iteration: s.iteration,
                mu: s.mu,
                rank_before: s.rank_before,
                rank_after: s.rank_after,
            })
            .collect()
    }
}

/// Repeatedly applies `K`, Schmidt-decomposes at `cut` and keeps one product
/// pair, until `μ ≥ 1/√(2D)` or `max_iters` iterations.
///
/// With [`PairSelection::Oracle`], a step that fails to increase `μ` while
/// `D·Δ ≤ 1/2` and `μ < 1/√(2D)` is reported as
/// [`Error::CertificateViolation`].
pub fn amplify(
    spectral: &SpectralData,
    k: &CMat,
    certificate: &AgspCertificate,
    initial: &CVec,
    cut: Cut,
    max_iters: usize,
    selection: PairSelection,
) -> Result<AmplificationTrace> {
    let omega = &spectral.ground_state;
    let phi0 = normalized(initial);
    let mu0 = omega.dotc(&phi0).norm();
    if mu0 < 1e-14 {
        return Err(Error::ZeroOverlap);
    }
    let d_used = certificate.d_used.max(1.0);
    let delta = certificate.delta_used;
    let threshold = 1.0 / (2.0 * d_used).sqrt();
    let r0 = schmidt_rank(&phi0, cut)?;
    let mut steps = vec![AmplificationStep {
        iteration: 0,
        mu: mu0,
        state: phi0,
        rank_before: r0,
        rank_after: r0,
        d_effective: d_used,
        preconditions: false,
        lemma_bound: 0.0,
    }];
    if mu0 >= threshold {
        return Ok(AmplificationTrace {
            steps,
            termination: Termination::InitialAboveThreshold,
            selection,
            threshold,
            d_used,
            delta_used: delta,
        });
    }
    let mut termination = Termination::MaxIterations;
    for it in 1..=max_iters {
        let prev = steps.last().expect("nonempty");
        let (mu, phi) = (prev.mu, &prev.state);
        let rank_before = schmidt_rank(phi, cut)?;
        let image = k * phi;
        let dec = schmidt_decompose_normalized(&image, cut)?;
        let d_eff = d_used.max(dec.rank as f64);
        let preconditions = d_eff * delta <= 0.5 && mu < 1.0 / (2.0 * d_eff).sqrt();
        let lemma_bound = mu * mu / (d_eff * (mu * mu + delta));

        let pick = match selection {
            PairSelection::LargestSchmidt => 0,
            PairSelection::Oracle => {
                let mut best = (0, -1.0);
                for i in 0..dec.rank.max(1) {
                    let o = omega.dotc(&dec.product_pair(i)).norm();
                    if o > best.1 {
                        best = (i, o);
                    }
                }
                best.0
            }
        };
        let next = dec.product_pair(pick);
        let next_mu = omega.dotc(&next).norm();
        if selection == PairSelection::Oracle && preconditions && next_mu <= mu {
            return Err(Error::CertificateViolation { iteration: it, before: mu, after: next_mu });
        }
        steps.push(AmplificationStep {
            iteration: it,
            mu: next_mu,
            state: next,
            rank_before,
            rank_after: dec.rank,
            d_effective: d_eff,
            preconditions,
            lemma_bound,
        });
        if next_mu >= threshold {
            termination = Termination::ReachedThreshold;
            break;
        }
    }
    Ok(AmplificationTrace { steps, termination, selection, threshold, d_used, delta_used: delta })
}
