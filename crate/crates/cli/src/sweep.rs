//! Sweeps: the cartesian product of config axes, one record per point.

use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::commands::{run_subcommand, Outcome};
use crate::config::{set_path, ExperimentConfig, DEFAULT_SWEEP_LIMIT};
use crate::persist::{now_ms, RecordBody, RunDir};
use crate::{CliError, Subcommand, EXIT_BOUND, EXIT_CONFIG, EXIT_OK};

/// Expands the axes into explicit, type-checked point configs, in
/// deterministic order. Fails before any computation if a point does not
/// parse or the expansion exceeds the limit.
pub fn expand(cfg: &ExperimentConfig) -> Result<(Subcommand, Vec<ExperimentConfig>), CliError> {
    let spec = cfg.sweep.as_ref().ok_or_else(|| CliError::Config("sweep needs a \"sweep\" section".into()))?;
    let sub: Subcommand = spec.subcommand.parse()?;
    if matches!(sub, Subcommand::Sweep | Subcommand::Report) {
        return Err(CliError::Config(format!("cannot sweep over {sub}")));
    }
    let limit = spec.limit.unwrap_or(DEFAULT_SWEEP_LIMIT);
    for (axis, values) in &spec.axes {
        if values.is_empty() {
            log::warn!("axis {axis} is empty and is ignored");
        }
    }
    let axes: Vec<(&String, &Vec<Value>)> = spec.axes.iter().filter(|(_, v)| !v.is_empty()).collect();
    let total = axes
        .iter()
        .try_fold(1usize, |acc, (_, v)| acc.checked_mul(v.len()))
        .ok_or_else(|| CliError::Config("sweep size overflows".into()))?;
    if total > limit {
        return Err(CliError::Config(format!("sweep has {total} points, above the limit {limit}")));
    }
    let mut base = cfg.clone();
    base.sweep = None;
    let base_json = serde_json::to_value(&base)?;
    let mut points = Vec::with_capacity(total);
    for index in 0..total {
        let mut v = base_json.clone();
        let mut rem = index;
        for (axis, values) in axes.iter().rev() {
            let pick = rem % values.len();
            rem /= values.len();
            set_path(&mut v, axis, values[pick].clone())?;
        }
        let mut point: ExperimentConfig = serde_json::from_value(v)
            .map_err(|e| CliError::Config(format!("sweep point {index}: {e}")))?;
        point.out = base.out.clone();
        point.check_schema()?;
        points.push(point);
    }
    Ok((sub, points))
}

#[derive(Debug, Serialize)]
struct SummaryRow {
    point: usize,
    config_hash: String,
    pass: bool,
    exit_code: i32,
    axes: String,
    metrics: String,
}

#[derive(Debug)]
pub struct SweepResult {
    pub subcommand: Subcommand,
    pub points: Vec<ExperimentConfig>,
    pub outcomes: Vec<Result<Outcome, CliError>>,
    pub exit_code: i32,
}

impl SweepResult {
    pub fn passed(&self) -> usize {
        self.outcomes.iter().filter(|o| matches!(o, Ok(o) if o.passed())).count()
    }
}

/// Runs every point in parallel; aggregation follows point order.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult, CliError> {
    let (sub, points) = expand(cfg)?;
    let outcomes: Vec<Result<Outcome, CliError>> = points.par_iter().map(|p| run_subcommand(sub, p)).collect();
    let codes: Vec<i32> = outcomes
        .iter()
        .map(|o| match o {
            Ok(o) => o.exit_code(),
            Err(e) => e.exit_code(),
        })
        .collect();
    let exit_code = if codes.contains(&EXIT_CONFIG) {
        EXIT_CONFIG
    } else if codes.contains(&EXIT_BOUND) {
        EXIT_BOUND
    } else {
        EXIT_OK
    };
    Ok(SweepResult { subcommand: sub, points, outcomes, exit_code })
}

/// Writes one record per point plus `tables/sweep_summary.csv`.
pub fn persist_sweep(root: &Path, cfg: &ExperimentConfig, result: &SweepResult, started: u128) -> Result<RunDir, CliError> {
    let mut run = RunDir::create(root, Subcommand::Sweep, &cfg.content_hash())?;
    let axis_names: Vec<String> =
        cfg.sweep.as_ref().map(|s| s.axes.keys().cloned().collect()).unwrap_or_default();
    let mut rows = Vec::new();
    for (i, (point, outcome)) in result.points.iter().zip(&result.outcomes).enumerate() {
        let body = RecordBody::new(result.subcommand, point, outcome);
        let point_json = serde_json::to_value(point)?;
        let axes: Vec<String> = axis_names
            .iter()
            .map(|a| {
                let v = a.split('.').try_fold(&point_json, |v, k| v.get(k)).cloned().unwrap_or(Value::Null);
                format!("{a}={v}")
            })
            .collect();
        rows.push(SummaryRow {
            point: i,
            config_hash: body.config_hash.clone(),
            pass: body.pass,
            exit_code: body.exit_code,
            axes: axes.join(";"),
            metrics: serde_json::to_string(&body.metrics)?,
        });
        run.write_record(body, started)?;
        if let Ok(o) = outcome {
            for t in &o.tables {
                run.write_table(t, Some(i))?;
            }
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r)?;
    }
    let csv = String::from_utf8(w.into_inner().map_err(|e| CliError::Config(e.to_string()))?).expect("utf-8");
    run.write_table(&crate::Table { name: "sweep_summary".into(), csv }, None)?;
    run.write_manifest(Subcommand::Sweep, cfg, result.passed(), result.points.len(), result.exit_code)?;
    Ok(run)
}

/// Metric names present in any point, sorted.
pub fn metric_names(result: &SweepResult) -> BTreeSet<String> {
    result.outcomes.iter().filter_map(|o| o.as_ref().ok()).flat_map(|o| o.metrics.keys().cloned()).collect()
}

pub fn started() -> u128 {
    now_ms()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(text).unwrap()
    }

    #[test]
    fn cartesian_order_last_axis_fastest() {
        let c = cfg(r#"{"schema":1,"sweep":{"subcommand":"plan","axes":{"plan.X":[1,2],"plan.d":[2,3,4]}}}"#);
        let (sub, pts) = expand(&c).unwrap();
        assert_eq!(sub, Subcommand::Plan);
        let got: Vec<(f64, usize)> = pts.iter().map(|p| (p.plan.x.unwrap(), p.plan.d)).collect();
        assert_eq!(got, vec![(1.0, 2), (1.0, 3), (1.0, 4), (2.0, 2), (2.0, 3), (2.0, 4)]);
        assert!(pts.iter().all(|p| p.sweep.is_none()));
    }

    #[test]
    fn empty_axes_give_one_point() {
        let c = cfg(r#"{"schema":1,"plan":{"epsilon":1},"sweep":{"subcommand":"plan","axes":{}}}"#);
        let (_, pts) = expand(&c).unwrap();
        assert_eq!(pts.len(), 1);
        let mut plain = c.clone();
        plain.sweep = None;
        assert_eq!(pts[0], plain);
    }

    #[test]
    fn limit_and_types_checked_up_front() {
        let c = cfg(r#"{"schema":1,"sweep":{"subcommand":"plan","limit":3,"axes":{"seed":[1,2,3,4]}}}"#);
        assert!(matches!(expand(&c), Err(CliError::Config(_))));
        let c = cfg(r#"{"schema":1,"sweep":{"subcommand":"plan","axes":{"seed":["x"]}}}"#);
        assert!(expand(&c).is_err());
        let c = cfg(r#"{"schema":1,"sweep":{"subcommand":"sweep","axes":{}}}"#);
        assert!(expand(&c).is_err());
    }
}
