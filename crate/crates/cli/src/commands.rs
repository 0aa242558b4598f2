//! One handler per subcommand. Handlers are pure functions of the config.

use std::collections::BTreeMap;

use agsplab::agsp::{
    amplify, build_k, certify, entropy_bound, product_probes, tail_bound_check, AgspCertificate, KOperator,
    Window,
};
use agsplab::chebyshev::{chebyshev_t, verify_window_bounds};
use agsplab::combinatorics::{
    constrained_product_max, count_row, min_entangling_count, sweep_per_layer, symbolic_split_check,
};
use agsplab::detectability::{
    bond_commutator, dl_bound, layer_projectors, shrink_factor, verify_pyramid_identity, ProductOrdering,
};
use agsplab::hamiltonian::{build_model, spectral_gap, validate_frustration_free, ProjectorChain, SpectralData};
use agsplab::linalg::{matmul, op_norm, random_product_state, CVec};
use agsplab::mps::{full_bond, mps_error_check};
use agsplab::params::{
    log2_80, plan_1d, plan_2d, q_condition_lhs, q_condition_lhs_2d, verify_plan, ParameterPlan,
};
use agsplab::rng::substream;
use agsplab::schmidt::{schmidt_decompose, Cut};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{BondSpec, ExperimentConfig};
use crate::{CliError, Subcommand, EXIT_BOUND, EXIT_CONFIG, EXIT_OK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Model or input validation; failure exits with code 2.
    Validation,
    /// A numerical bound; failure exits with code 3.
    Bound,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub kind: CheckKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub csv: String,
}

impl Table {
    pub fn from_rows<T: Serialize>(name: &str, rows: &[T]) -> Result<Self, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(Self { name: name.to_string(), csv: String::from_utf8(bytes).expect("csv is utf-8") })
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub subcommand: Subcommand,
    pub results: Value,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, f64>,
    pub tables: Vec<Table>,
}

impl Outcome {
    fn new(subcommand: Subcommand) -> Self {
        Self { subcommand, results: Value::Null, checks: Vec::new(), metrics: BTreeMap::new(), tables: Vec::new() }
    }

    fn bound(&mut self, name: impl Into<String>, pass: bool) {
        self.checks.push(Check { name: name.into(), pass, kind: CheckKind::Bound });
    }

    fn validation(&mut self, name: impl Into<String>, pass: bool) {
        self.checks.push(Check { name: name.into(), pass, kind: CheckKind::Validation });
    }

    /// Non-finite values are dropped; JSON has no encoding for them.
    fn metric(&mut self, name: &str, value: f64) {
        if value.is_finite() {
            self.metrics.insert(name.to_string(), value);
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<bool> {
        self.checks.iter().find(|c| c.name == name).map(|c| c.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.checks.iter().any(|c| !c.pass && c.kind == CheckKind::Validation) {
            EXIT_CONFIG
        } else if self.checks.iter().any(|c| !c.pass) {
            EXIT_BOUND
        } else {
            EXIT_OK
        }
    }
}

/// Runs one subcommand on a config. `sweep` and `report` are handled by
/// their own modules.
pub fn run_subcommand(sub: Subcommand, cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    cfg.check_schema()?;
    match sub {
        Subcommand::Model => model(cfg),
        Subcommand::Spectrum => spectrum(cfg),
        Subcommand::DlCheck => dl_check(cfg),
        Subcommand::ChebCheck => cheb_check(cfg),
        Subcommand::AgspCertify => agsp_certify(cfg),
        Subcommand::Amplify => amplify_cmd(cfg),
        Subcommand::EntropyBound => entropy_cmd(cfg),
        Subcommand::TailCheck => tail_check(cfg),
        Subcommand::MpsCheck => mps_check(cfg),
        Subcommand::CountCheck => count_check(cfg),
        Subcommand::Plan => plan_cmd(cfg),
        Subcommand::Sweep | Subcommand::Report => {
            Err(CliError::Config(format!("{sub} cannot run as a single point")))
        }
    }
}

struct Prepared {
    chain: ProjectorChain,
    spectral: SpectralData,
    cut: Cut,
}

fn prepare(cfg: &ExperimentConfig) -> Result<Prepared, CliError> {
    let chain = build_model(cfg.model()?)?;
    let spectral = spectral_gap(&chain)?;
    let cut = match cfg.cut {
        Some(p) => Cut::new(chain.n(), chain.d(), p)?,
        None => Cut::middle(chain.n(), chain.d())?,
    };
    Ok(Prepared { chain, spectral, cut })
}

struct Certified {
    window: Window,
    kop: KOperator,
    cert: AgspCertificate,
}

fn certify_config(cfg: &ExperimentConfig, p: &Prepared) -> Result<Certified, CliError> {
    let window = Window::new(&p.chain, p.cut, cfg.m)?;
    let kop = build_k(&p.chain, &p.spectral, &window, cfg.q, cfg.ell)?;
    let probes = product_probes(p.cut, cfg.probes, cfg.stream_seed(), "agsp/probes");
    let cert = certify(&p.spectral, &window, &kop, &probes)?;
    Ok(Certified { window, kop, cert })
}

/// `μ` from the config, else the top Schmidt coefficient of the ground state,
/// which is the best overlap any product state across the cut can reach.
fn resolve_mu(cfg: &ExperimentConfig, p: &Prepared) -> Result<f64, CliError> {
    match cfg.mu {
        Some(mu) => Ok(mu),
        None => Ok(schmidt_decompose(&p.spectral.ground_state, p.cut)?.values[0]),
    }
}

fn model(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let chain = build_model(cfg.model()?)?;
    let report = validate_frustration_free(&chain);
    let mut out = Outcome::new(Subcommand::Model);
    out.validation("projectors", report.projectors_ok);
    out.validation("frustration_free", report.frustration_free);
    out.validation("unique_ground_state", report.unique_ground_state);
    if let Some(g) = report.gap {
        out.metric("gap", g);
    }
    out.metric("degeneracy", report.degeneracy as f64);
    out.results = json!({ "dim": chain.dim(), "validation": report });
    Ok(out)
}

#[derive(Serialize)]
struct SpectrumRow {
    index: usize,
    eigenvalue: f64,
}

fn spectrum(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let chain = build_model(cfg.model()?)?;
    let s = spectral_gap(&chain)?;
    let mut out = Outcome::new(Subcommand::Spectrum);
    out.metric("gap", s.gap);
    let rows: Vec<SpectrumRow> =
        s.spectrum.iter().enumerate().map(|(index, &eigenvalue)| SpectrumRow { index, eigenvalue }).collect();
    out.tables.push(Table::from_rows("spectrum", &rows)?);
    out.results = json!({ "summary": s.summary(), "dl_bound": dl_bound(s.gap) });
    Ok(out)
}

#[derive(Serialize)]
struct DlRow {
    ordering: String,
    measured_delta: f64,
    dl_bound: f64,
    pass: bool,
}

fn dl_check(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let spec = cfg.model()?;
    let chain = build_model(spec)?;
    let spectral = spectral_gap(&chain)?;
    let layers = layer_projectors(&chain);
    let mut out = Outcome::new(Subcommand::DlCheck);
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for ordering in ProductOrdering::BOTH {
        let a = layers.dl(ordering);
        let r = shrink_factor(&a, &spectral)?.with_ordering(ordering);
        let name = format!("{ordering:?}").to_lowercase();
        out.bound(format!("dl_bound_{name}"), r.within_dl_bound());
        rows.push(DlRow {
            ordering: name.clone(),
            measured_delta: r.measured_delta,
            dl_bound: r.dl_bound,
            pass: r.within_dl_bound(),
        });
        let idempotency = op_norm(&(matmul(&a, &a) - &a));
        reports.push(json!({ "shrink": r, "idempotency_residual": idempotency }));
        out.metric(&format!("measured_delta_{name}"), r.measured_delta);
    }
    let bonds = chain.bond_count();
    let max_commutator = (0..bonds)
        .flat_map(|a| (a + 1..bonds).map(move |b| (a, b)))
        .map(|(a, b)| bond_commutator(&chain, a, b))
        .fold(0.0, f64::max);
    out.metric("dl_bound", dl_bound(spectral.gap));
    out.metric("epsilon", spectral.gap);
    out.tables.push(Table::from_rows("dl", &rows)?);
    let mut results = json!({
        "epsilon": spectral.gap,
        "orderings": reports,
        "max_bond_commutator": max_commutator,
    });
    if let Some(k) = cfg.coarse_k {
        let pyr = verify_pyramid_identity(&chain, k, spec.dim_cap)?;
        out.bound("coarse_within_bound", pyr.coarse_within_bound);
        out.bound("pulling_property", pyr.pulling_residual <= 1e-10);
        out.metric("coarse_measured_delta", pyr.coarse_measured_delta);
        out.metric("pyramid_identity_residual", pyr.identity_residual);
        results["coarse"] = serde_json::to_value(&pyr)?;
    }
    out.results = results;
    Ok(out)
}

/// Grid for `|T_n(−1−δ)| ≥ 1 + n²δ`: `n = 1..=50`, `δ = k/50` for `k = 1..=50`.
fn t_growth_grid() -> (usize, f64) {
    let mut failures = 0;
    let mut worst = f64::INFINITY;
    for n in 1..=50usize {
        for k in 1..=50 {
            let delta = k as f64 / 50.0;
            let lhs = chebyshev_t(n, -1.0 - delta).abs();
            let rhs = 1.0 + (n * n) as f64 * delta;
            worst = worst.min(lhs / rhs);
            if lhs < rhs * (1.0 - 1e-12) {
                failures += 1;
            }
        }
    }
    (failures, worst)
}

fn cheb_check(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let ms = cfg.cheb_m.clone().unwrap_or_else(|| vec![4, 9, 16, 25, 36, 49]);
    let mut out = Outcome::new(Subcommand::ChebCheck);
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for &m in &ms {
        let r = verify_window_bounds(m)?;
        out.bound(format!("window_m{m}"), r.pass);
        rows.push(r.row());
        reports.push(r);
    }
    let (failures, worst) = t_growth_grid();
    out.bound("t_growth_grid", failures == 0);
    out.metric("t_growth_min_ratio", worst);
    out.metric("max_abs_on_window", reports.iter().map(|r| r.max_abs_on_window).fold(0.0, f64::max));
    out.tables.push(Table::from_rows("cheb", &rows)?);
    out.results = json!({ "windows": reports, "t_growth": { "failures": failures, "min_ratio": worst } });
    Ok(out)
}

#[derive(Serialize)]
struct SectorRow {
    violations: usize,
    dim: usize,
    eigenvalue: f64,
    residual: f64,
}

/// Measured action of `Π̂_m` on each violation sector.
fn sector_rows(ck: &Certified) -> Vec<SectorRow> {
    let hat = &ck.kop.hat;
    hat.sectors
        .projectors
        .iter()
        .zip(hat.sectors.dims())
        .enumerate()
        .filter(|(_, (_, dim))| *dim > 0)
        .map(|(v, (e, dim))| {
            let pe = matmul(&hat.pi_hat, e);
            let eigenvalue = pe.trace().re / dim as f64;
            let residual = op_norm(&(pe - e * agsplab::linalg::real(eigenvalue)));
            SectorRow { violations: v, dim, eigenvalue, residual }
        })
        .collect()
}

fn certificate_checks(out: &mut Outcome, ck: &Certified) {
    let c = &ck.cert;
    let q = c.q as i32;
    out.bound("ground_invariance", c.ground_ok());
    out.bound("dl_bound", c.measured_delta_dl <= dl_bound(c.epsilon) + 1e-9);
    out.bound("hat_composition", c.measured_delta_hat_a <= c.measured_delta_dl + 9f64.powi(-q) + 1e-9);
    out.bound("delta_within_theory", c.delta_within_theory());
    out.metric("measured_delta", c.measured_delta);
    out.metric("measured_delta_hat_a", c.measured_delta_hat_a);
    out.metric("measured_delta_dl", c.measured_delta_dl);
    out.metric("d_used", c.d_used);
    out.metric("d_delta", c.d_used * c.delta_used);
    out.metric("certified", if c.product_ok { 1.0 } else { 0.0 });
}

fn agsp_certify(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = prepare(cfg)?;
    let ck = certify_config(cfg, &p)?;
    let mut out = Outcome::new(Subcommand::AgspCertify);
    certificate_checks(&mut out, &ck);
    let sectors = sector_rows(&ck);
    let q = ck.cert.q as i32;
    let zero_ok = sectors.iter().find(|r| r.violations == 0).is_some_and(|r| (r.eigenvalue - 1.0).abs() <= 1e-10 && r.residual <= 1e-10);
    let decay_ok = sectors
        .iter()
        .filter(|r| r.violations > 0)
        .all(|r| r.eigenvalue.abs() <= 3f64.powi(-q) + 1e-10 && r.residual <= 1e-9);
    out.bound("sector_zero_fixed", zero_ok);
    out.bound("sector_decay", decay_ok);
    out.tables.push(Table::from_rows("sectors", &sectors)?);
    out.results = json!({
        "certificate": ck.cert,
        "window": { "members": ck.window.members, "center": ck.window.center, "clamped": ck.window.clamped },
        "ell_capped": ck.kop.ell_capped,
        "sectors": sectors,
    });
    Ok(out)
}

#[derive(Serialize)]
struct TraceCsvRow {
    state: usize,
    iteration: usize,
    mu: f64,
    rank_before: usize,
    rank_after: usize,
    preconditions: bool,
}

#[derive(Serialize)]
struct StateSummary {
    state: usize,
    initial_mu: f64,
    final_mu: f64,
    iterations: usize,
    termination: Option<String>,
    guaranteed_steps: usize,
    monotone: bool,
    violation: Option<String>,
    mus: Vec<f64>,
}

fn amplify_cmd(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = prepare(cfg)?;
    let ck = certify_config(cfg, &p)?;
    let mut rng = substream(cfg.stream_seed(), "amplify/initial");
    let initial: Vec<CVec> =
        (0..cfg.initial_states).map(|_| random_product_state(p.chain.n(), p.chain.d(), &mut rng)).collect();
    let traces: Vec<Result<_, agsplab::Error>> = initial
        .par_iter()
        .map(|phi| amplify(&p.spectral, &ck.kop.k, &ck.cert, phi, p.cut, cfg.max_iters, cfg.selection))
        .collect();

    let mut summaries = Vec::new();
    let mut rows = Vec::new();
    for (i, t) in traces.into_iter().enumerate() {
        match t {
            Ok(trace) => {
                for s in &trace.steps {
                    rows.push(TraceCsvRow {
                        state: i,
                        iteration: s.iteration,
                        mu: s.mu,
                        rank_before: s.rank_before,
                        rank_after: s.rank_after,
                        preconditions: s.preconditions,
                    });
                }
                summaries.push(StateSummary {
                    state: i,
                    initial_mu: trace.steps[0].mu,
                    final_mu: trace.final_mu(),
                    iterations: trace.steps.len() - 1,
                    termination: Some(format!("{:?}", trace.termination)),
                    guaranteed_steps: trace.steps.iter().filter(|s| s.preconditions).count(),
                    monotone: trace.monotone_where_guaranteed(),
                    violation: None,
                    mus: trace.mus(),
                });
            }
            Err(e @ agsplab::Error::CertificateViolation { .. }) => summaries.push(StateSummary {
                state: i,
                initial_mu: p.spectral.overlap(&initial[i]),
                final_mu: f64::NAN,
                iterations: 0,
                termination: None,
                guaranteed_steps: 0,
                monotone: false,
                violation: Some(e.to_string()),
                mus: Vec::new(),
            }),
            Err(e) => return Err(e.into()),
        }
    }
    let mut out = Outcome::new(Subcommand::Amplify);
    certificate_checks(&mut out, &ck);
    let counterexamples = summaries.iter().filter(|s| !s.monotone).count();
    out.bound("amplification_monotone", counterexamples == 0);
    out.metric("counterexamples", counterexamples as f64);
    out.metric("guaranteed_steps", summaries.iter().map(|s| s.guaranteed_steps).sum::<usize>() as f64);
    out.metric("min_final_mu", summaries.iter().map(|s| s.final_mu).fold(f64::INFINITY, f64::min));
    out.tables.push(Table::from_rows("trace", &rows)?);
    out.results = json!({
        "certificate": ck.cert,
        "threshold": 1.0 / (2.0 * ck.cert.d_used.max(1.0)).sqrt(),
        "states": summaries,
    });
    Ok(out)
}

/// `D` and `Δ` moved into the domain of the explicit bound: `D ≥ 2` and
/// `Δ > 0` weaken nothing.
fn bound_inputs(cert: &AgspCertificate) -> (f64, f64) {
    (cert.d_used.max(2.0), cert.delta_used.max(1e-300))
}

#[derive(Serialize)]
struct EntropyRow {
    label: String,
    cut: usize,
    entropy: f64,
    bound: f64,
    raw_bound: f64,
    certified: bool,
    pass: bool,
}

fn entropy_cmd(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let mut out = Outcome::new(Subcommand::EntropyBound);
    if let Some(inp) = &cfg.entropy {
        let b = entropy_bound(inp.mu, inp.d, inp.delta)?;
        out.metric("bound", b.value());
        out.metric("raw_bound", b.raw);
        out.results = json!({ "bound": b });
        return Ok(out);
    }
    let p = prepare(cfg)?;
    let ck = certify_config(cfg, &p)?;
    let mu = resolve_mu(cfg, &p)?;
    let (d, delta) = bound_inputs(&ck.cert);
    let b = entropy_bound(mu, d, delta)?;
    let entropy = schmidt_decompose(&p.spectral.ground_state, p.cut)?.entropy;
    let certified = ck.cert.product_ok;
    let pass = entropy <= b.value() + 1e-12;
    if certified {
        out.bound("entropy_within_bound", pass);
    }
    out.metric("entropy", entropy);
    out.metric("bound", b.value());
    out.metric("raw_bound", b.raw);
    out.metric("certified", if certified { 1.0 } else { 0.0 });
    let row = EntropyRow {
        label: p.spectral.label.clone(),
        cut: p.cut.position,
        entropy,
        bound: b.value(),
        raw_bound: b.raw,
        certified,
        pass,
    };
    out.tables.push(Table::from_rows("entropy", &[row])?);
    out.results = json!({ "certificate": ck.cert, "mu": mu, "entropy": entropy, "bound": b });
    Ok(out)
}

fn tail_check(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = prepare(cfg)?;
    let ck = certify_config(cfg, &p)?;
    let mu = resolve_mu(cfg, &p)?;
    let ells = cfg.ells.clone().unwrap_or_else(|| (1..=5).collect());
    let report = tail_bound_check(&p.spectral, p.cut, &ck.cert, mu, ells)?;
    let mut out = Outcome::new(Subcommand::TailCheck);
    if ck.cert.product_ok {
        out.bound("tail_bounds", report.passed());
    }
    out.metric("certified", if ck.cert.product_ok { 1.0 } else { 0.0 });
    out.tables.push(Table::from_rows("tail", &report.rows)?);
    out.results = json!({ "certificate": ck.cert, "tail": report });
    Ok(out)
}

fn mps_check(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let p = prepare(cfg)?;
    let ck = certify_config(cfg, &p)?;
    let mu = resolve_mu(cfg, &p)?;
    let full = full_bond(p.chain.n(), p.chain.d());
    let specs = cfg.k_list.clone().unwrap_or_else(|| {
        [1, 2, 4, 8].into_iter().map(BondSpec::Value).chain([BondSpec::Full(crate::config::FullTag::Full)]).collect()
    });
    let ks: Vec<usize> = specs
        .iter()
        .map(|s| match s {
            BondSpec::Value(k) => *k,
            BondSpec::Full(_) => full,
        })
        .collect();
    if ks.contains(&0) {
        return Err(CliError::Config("k_list entries must be at least 1".into()));
    }
    let report = mps_error_check(&p.spectral, &ck.cert, mu, &ks)?;
    let mut out = Outcome::new(Subcommand::MpsCheck);
    out.bound("mps_error_bound", report.rows.iter().all(|r| r.pass));
    out.bound("mps_monotone", report.monotone);
    if let Some(r) = report.rows.iter().find(|r| r.k >= full) {
        out.bound("mps_exact_at_full", r.error_sq <= 1e-10);
    }
    out.tables.push(Table::from_rows("mps", &report.rows)?);
    out.results = json!({ "certificate": ck.cert, "full_bond": full, "mps": report });
    Ok(out)
}

fn count_check(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let c = &cfg.count;
    if c.j_max < 2 {
        return Err(CliError::Config("count.j_max must be at least 2".into()));
    }
    let mut out = Outcome::new(Subcommand::CountCheck);
    let per_layer = sweep_per_layer(2, c.j_max, false);
    out.bound("per_layer_product", per_layer.passed());
    let squared_all = sweep_per_layer(2, c.j_max, true);
    let powers: Vec<u64> = (1..64).map(|p| 1u64 << p).take_while(|&j| j <= c.j_max).collect();
    let squared_powers_ok =
        powers.iter().all(|&j| min_entangling_count(j, 1).map(|b| b.per_layer_squared_within).unwrap_or(false));
    out.bound("per_layer_squared_powers_of_two", squared_powers_ok);

    let mut brute = Vec::new();
    let mut brute_ok = true;
    for ell in 1..=c.brute_ell {
        for budget in 0..=c.brute_budget {
            let (max, arg) = constrained_product_max(ell, budget)?;
            if (budget as usize).is_multiple_of(ell) {
                let expect = (budget as u64 / ell as u64 + 1).pow(ell as u32);
                brute_ok &= max == expect;
            }
            brute.push(json!({ "ell": ell, "budget": budget, "max": max, "argmax": arg }));
        }
    }
    out.bound("constrained_product_max", brute_ok);

    let mut symbolic = Vec::new();
    let mut symbolic_ok = true;
    for j in 0..=c.symbolic_j {
        for ell in 1..=c.symbolic_ell {
            let r = symbolic_split_check(j, ell)?;
            symbolic_ok &= r.passed();
            symbolic.push(json!({
                "j": j, "ell": ell, "terms": r.term_count, "expected": r.expected_terms, "pass": r.passed()
            }));
        }
    }
    out.bound("symbolic_split", symbolic_ok);

    let mut js: Vec<u64> = (1..=64.min(c.j_max)).collect();
    js.extend(powers.iter().filter(|&&j| j > 64));
    let rows: Vec<_> = js.iter().map(|&j| count_row(j)).collect();
    out.tables.push(Table::from_rows("count", &rows)?);
    out.metric("per_layer_max_ratio", per_layer.max_ratio);
    out.metric("squared_failures", squared_all.failures.len() as f64);
    out.results = json!({
        "per_layer": per_layer,
        "per_layer_squared": {
            "failures": squared_all.failures.len(),
            "first_failures": squared_all.failures.iter().take(16).collect::<Vec<_>>(),
            "max_ratio": squared_all.max_ratio,
            "powers_of_two_ok": squared_powers_ok,
        },
        "worked": [min_entangling_count(4, 1)?, min_entangling_count(1, 3)?],
        "constrained_product_max": brute,
        "symbolic": symbolic,
    });
    Ok(out)
}

fn plan_checks(out: &mut Outcome, plan: &ParameterPlan) {
    let v = verify_plan(plan);
    for c in &v.checks {
        out.bound(c.name, c.pass);
    }
    let q0 = plan.q - plan.q_bumps;
    let target = -log2_80();
    let minimal = q0 == 1
        || match plan.boundary_i {
            None => q_condition_lhs(plan.x, q0 - 1) > target,
            Some(i) => q_condition_lhs_2d(plan.x, i, q0 - 1) > target,
        };
    out.bound("q_minimal", minimal);
    out.metric("log_d_total", plan.log_d_total);
    out.metric("log_total_product", v.log_total_product);
    out.metric("log_hat_product", v.log_hat_product);
    out.metric("q", plan.q as f64);
    out.metric("X", plan.x);
    let scaling = if plan.is_2d() { plan.scaling_constant_2d() } else { plan.scaling_constant_1d() };
    if let Some(s) = scaling {
        out.metric("scaling_constant", s);
    }
    out.results = json!({ "plan": plan, "verification": v, "solver_q": q0 });
}

fn plan_cmd(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let eps = cfg
        .plan
        .epsilon()
        .ok_or_else(|| CliError::Config("plan needs \"plan.epsilon\" or \"plan.X\"".into()))?;
    let plan = match cfg.plan.boundary {
        None => plan_1d(eps, cfg.plan.d)?,
        Some(i) => plan_2d(eps, cfg.plan.d, i)?,
    };
    let mut out = Outcome::new(Subcommand::Plan);
    plan_checks(&mut out, &plan);
    Ok(out)
}
