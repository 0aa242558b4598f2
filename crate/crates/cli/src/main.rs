use std::path::PathBuf;
use std::process::ExitCode;

use agsplab_cli::config::{set_path, BondSpec, ExperimentConfig};
use agsplab_cli::persist::{latest_run, output_root, persist_single};
use agsplab_cli::report::{report, write_report};
use agsplab_cli::sweep::{persist_sweep, run_sweep, started};
use agsplab_cli::{run_subcommand, CliError, Subcommand, EXIT_CONFIG, EXIT_OK};
use clap::Parser;
use serde_json::{json, Value};

#[derive(Debug, Parser)]
#[command(name = "agsplab", version, about = "Numerical checks for area-law machinery on 1D frustration-free chains")]
struct Args {
    #[arg(value_enum)]
    subcommand: Subcommand,

    /// JSON config; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output root; overrides the config and `AGSPLAB_OUT`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Largest Hilbert-space dimension a model may have.
    #[arg(long, global = true)]
    cap: Option<usize>,

    #[arg(long, value_parser = ["product_parent", "aklt", "random_mps_parent"])]
    model: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    bond_dim: Option<usize>,
    #[arg(long)]
    pin: bool,
    #[arg(long)]
    model_seed: Option<u64>,
    #[arg(long)]
    cut: Option<usize>,
    /// Window size for most subcommands; a comma list for `cheb-check`.
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    #[arg(long)]
    q: Option<u32>,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long)]
    probes: Option<usize>,
    #[arg(long)]
    initial_states: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long = "x", alias = "X")]
    x: Option<f64>,
    #[arg(long)]
    boundary: Option<u64>,
    /// Bond dimensions for `mps-check`, e.g. `1,2,4,full`.
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<BondSpec>>,
    #[arg(long, value_delimiter = ',')]
    ells: Option<Vec<u32>>,
    #[arg(long)]
    j_max: Option<u64>,
    #[arg(long)]
    coarse_k: Option<usize>,
    /// Raw override `path=json`, e.g. `plan.d=3`. Repeatable.
    #[arg(long = "set")]
    set: Vec<String>,

    /// Run directory for `report`; the latest run under the output root by default.
    #[arg(long)]
    run: Option<PathBuf>,
    /// Re-run every record and compare it with the stored one.
    #[arg(long)]
    replay: bool,
}

fn overrides(args: &Args) -> Result<Vec<(String, Value)>, CliError> {
    let mut o: Vec<(String, Value)> = Vec::new();
    let mut push = |p: &str, v: Value| o.push((p.to_string(), v));
    if let Some(v) = args.seed {
        push("seed", json!(v));
    }
    if let Some(v) = &args.model {
        push("model.kind", json!(v));
    }
    if let Some(v) = args.n {
        push("model.n", json!(v));
    }
    if let Some(v) = args.d {
        if args.subcommand == Subcommand::Plan {
            push("plan.d", json!(v));
        } else {
            push("model.d", json!(v));
        }
    }
    if let Some(v) = args.bond_dim {
        push("model.bond_dim", json!(v));
    }
    if args.pin {
        push("model.pin_boundary", json!(true));
    }
    if let Some(v) = args.model_seed {
        push("model.seed", json!(v));
    }
    if let Some(v) = args.cap {
        push("model.dim_cap", json!(v));
    }
    if let Some(v) = args.cut {
        push("cut", json!(v));
    }
    if let Some(v) = &args.m {
        if args.subcommand == Subcommand::ChebCheck {
            push("cheb_m", json!(v));
        } else if let [one] = v.as_slice() {
            push("m", json!(one));
        } else {
            return Err(CliError::Config("--m takes a single value here".into()));
        }
    }
    if let Some(v) = args.q {
        push("q", json!(v));
    }
    if let Some(v) = args.ell {
        push("ell", json!(v));
    }
    if let Some(v) = args.probes {
        push("probes", json!(v));
    }
    if let Some(v) = args.initial_states {
        push("initial_states", json!(v));
    }
    if let Some(v) = args.max_iters {
        push("max_iters", json!(v));
    }
    if let Some(v) = args.mu {
        push("mu", json!(v));
    }
    if let Some(v) = args.epsilon {
        push("plan.epsilon", json!(v));
    }
    if let Some(v) = args.x {
        push("plan.X", json!(v));
    }
    if let Some(v) = args.boundary {
        push("plan.boundary", json!(v));
    }
    if let Some(v) = &args.k {
        push("k_list", serde_json::to_value(v)?);
    }
    if let Some(v) = &args.ells {
        push("ells", json!(v));
    }
    if let Some(v) = args.j_max {
        push("count.j_max", json!(v));
    }
    if let Some(v) = args.coarse_k {
        push("coarse_k", json!(v));
    }
    for s in &args.set {
        let (path, raw) = s.split_once('=').ok_or_else(|| CliError::Config(format!("--set expects path=json, got {s}")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        o.push((path.to_string(), value));
    }
    Ok(o)
}

fn load_config(args: &Args) -> Result<ExperimentConfig, CliError> {
    let base = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let out = base.out.clone();
    let mut v = serde_json::to_value(&base)?;
    for (path, value) in overrides(args)? {
        set_path(&mut v, &path, value)?;
    }
    let mut cfg: ExperimentConfig = serde_json::from_value(v)?;
    cfg.out = out;
    cfg.check_schema()?;
    Ok(cfg)
}

fn run(args: &Args) -> Result<i32, CliError> {
    if let Some(j) = args.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let cfg = load_config(args)?;
    let root = output_root(args.out.as_deref(), &cfg);
    let t0 = started();
    match args.subcommand {
        Subcommand::Report => {
            let run = match &args.run {
                Some(p) => p.clone(),
                None => latest_run(&root)?,
            };
            let r = report(&run, args.replay)?;
            let dir = write_report(&r)?;
            for t in &r.tables {
                println!("table {}", dir.join(format!("{}.csv", t.name)).display());
            }
            for line in &r.replay {
                println!("replay {} {}", line.record, if line.identical { "identical" } else { "MISMATCH" });
            }
            if !r.replay_ok() {
                let bad = r.replay.iter().filter(|l| !l.identical).count();
                return Err(CliError::Replay(format!("{bad} of {} records differ", r.records)));
            }
            println!("report: {} records from {}", r.records, run.display());
            Ok(EXIT_OK)
        }
        Subcommand::Sweep => {
            let result = run_sweep(&cfg)?;
            let dir = persist_sweep(&root, &cfg, &result, t0)?;
            println!(
                "sweep {}: {}/{} points passed, exit {}, run {}",
                result.subcommand,
                result.passed(),
                result.points.len(),
                result.exit_code,
                dir.path.display()
            );
            Ok(result.exit_code)
        }
        sub => {
            let outcome = run_subcommand(sub, &cfg);
            let (dir, code) = persist_single(&root, sub, &cfg, &outcome, t0)?;
            match &outcome {
                Ok(o) => {
                    for c in &o.checks {
                        println!("{} {}", if c.pass { "PASS" } else { "FAIL" }, c.name);
                    }
                    for (k, v) in &o.metrics {
                        println!("  {k} = {v}");
                    }
                }
                Err(e) => eprintln!("error: {e}"),
            }
            println!("{sub}: exit {code}, run {}", dir.path.display());
            Ok(code)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match run(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
