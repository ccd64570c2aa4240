//! Empirical-norm risk and the Monte Carlo benchmark harness.
//!
//! A benchmark cell is one (sample size, contamination level) pair. Every
//! replicate simulates a dataset, optionally contaminates it, fits each
//! requested estimator on the same data, and measures the empirical L2 risk
//! of the fitted surface against the clean truth. Replicates run
//! concurrently on derived seeds; reports assemble by replicate index, never
//! by completion order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::contam::{apply, ContaminationSpec, Interval};
use crate::error::{Error, Result};
use crate::estimator::{fit, ArchitectureConfig};
use crate::grid::make_grid;
use crate::loss::LossSpec;
use crate::rng::splitmix64;
use crate::sim::{simulate, FunctionalSample, MeanSpec, NoiseSpec};
use crate::trainer::TrainConfig;

/// Mean squared deviation over the grid: `(1/N) sum_j (est_j - truth_j)^2`.
pub fn empirical_risk(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::Dimension(format!(
            "estimate has {} values, truth has {}",
            estimate.len(),
            truth.len()
        )));
    }
    if estimate.is_empty() {
        return Err(Error::Invalid("empirical risk over an empty grid".into()));
    }
    Ok(estimate
        .iter()
        .zip(truth)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<f64>()
        / estimate.len() as f64)
}

/// Benchmark design, mirroring the simulation studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scenario {
    Clean2d,
    Stripe2d { a0: f64, intervals: Vec<Interval> },
    Square2d { lo: f64, hi: f64 },
    MixCauchy2d,
    MixSlash2d,
    Clean3d,
    Cube3d { lo: f64, hi: f64 },
    MixCauchy3d,
    MixSlash3d,
}

impl Scenario {
    pub fn dim(&self) -> usize {
        match self {
            Scenario::Clean2d
            | Scenario::Stripe2d { .. }
            | Scenario::Square2d { .. }
            | Scenario::MixCauchy2d
            | Scenario::MixSlash2d => 2,
            _ => 3,
        }
    }

    /// True when the level list means contamination proportions rather than
    /// mixture weights.
    fn is_contaminated(&self) -> bool {
        matches!(
            self,
            Scenario::Stripe2d { .. } | Scenario::Square2d { .. } | Scenario::Cube3d { .. }
        )
    }

    fn is_clean(&self) -> bool {
        matches!(self, Scenario::Clean2d | Scenario::Clean3d)
    }

    /// Scenario label in reports; region bounds are folded in so rows from
    /// different configurations stay distinguishable.
    pub fn label(&self) -> String {
        match self {
            Scenario::Clean2d => "clean2d".into(),
            Scenario::Stripe2d { intervals, .. } => {
                if intervals.len() == 1 && intervals[0] == Interval::closed(0.0, 1.0) {
                    "stripe_full".into()
                } else {
                    "stripe_interrupted".into()
                }
            }
            Scenario::Square2d { lo, hi } => format!("square2d[{lo}-{hi}]"),
            Scenario::MixCauchy2d => "mix_cauchy2d".into(),
            Scenario::MixSlash2d => "mix_slash2d".into(),
            Scenario::Clean3d => "clean3d".into(),
            Scenario::Cube3d { lo, hi } => format!("cube3d[{lo}-{hi}]"),
            Scenario::MixCauchy3d => "mix_cauchy3d".into(),
            Scenario::MixSlash3d => "mix_slash3d".into(),
        }
    }
}

/// Estimators the harness can compare.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorId {
    /// Huber loss with threshold 1, the robust estimator.
    RdnnHuber,
    /// Plain least squares.
    DnnL2,
    /// Pinball loss at the given level.
    Quantile(f64),
}

impl EstimatorId {
    pub fn label(&self) -> String {
        match self {
            EstimatorId::RdnnHuber => "rdnn_huber".into(),
            EstimatorId::DnnL2 => "dnn_l2".into(),
            EstimatorId::Quantile(tau) => format!("quantile_{tau}"),
        }
    }

    pub fn loss(&self) -> Result<LossSpec> {
        match self {
            EstimatorId::RdnnHuber => LossSpec::huber(1.0),
            EstimatorId::DnnL2 => Ok(LossSpec::L2),
            EstimatorId::Quantile(tau) => LossSpec::quantile(*tau),
        }
    }
}

/// One benchmark run: a scenario crossed with sample sizes and levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub scenario: Scenario,
    pub n_list: Vec<usize>,
    /// Contamination proportions or mixture weights; empty means level 0.
    #[serde(default)]
    pub levels: Vec<f64>,
    /// Points per axis; defaults to 10 in 2D and 5 in 3D.
    #[serde(default)]
    pub m: Option<usize>,
    pub replicates: usize,
    pub estimators: Vec<EstimatorId>,
    #[serde(default)]
    pub base_seed: u64,
    /// Training overrides applied to every fit.
    #[serde(default)]
    pub train: Option<TrainConfig>,
    /// Architecture override; defaults to the size-driven selection.
    #[serde(default)]
    pub arch: Option<ArchitectureConfig>,
}

impl BenchConfig {
    fn resolved_m(&self) -> usize {
        self.m.unwrap_or(match self.scenario.dim() {
            2 => 10,
            _ => 5,
        })
    }

    fn resolved_levels(&self) -> Vec<f64> {
        if self.levels.is_empty() {
            vec![0.0]
        } else {
            self.levels.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Invalid("replicate count must be positive".into()));
        }
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return Err(Error::Invalid("sample sizes must be positive".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::Invalid("at least one estimator is required".into()));
        }
        for &level in &self.levels {
            if !(0.0..=1.0).contains(&level) {
                return Err(Error::Invalid(format!("level must lie in [0,1], got {level}")));
            }
            if self.scenario.is_clean() && level != 0.0 {
                return Err(Error::Invalid("clean scenarios take level 0 only".into()));
            }
        }
        if let Some(m) = self.m {
            if m == 0 {
                return Err(Error::Invalid("points per axis must be positive".into()));
            }
        }
        if let Some(train) = &self.train {
            train.validate()?;
        }
        if let Some(arch) = &self.arch {
            arch.validate()?;
        }
        Ok(())
    }
}

/// Aggregated result for one (cell, estimator).
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub scenario: String,
    pub n: usize,
    pub level: f64,
    pub estimator: String,
    pub mean_risk: f64,
    pub sd_risk: f64,
    pub replicates: usize,
    pub seconds: f64,
}

/// One replicate's risk.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRisk {
    pub scenario: String,
    pub n: usize,
    pub level: f64,
    pub estimator: String,
    pub replicate: usize,
    pub risk: f64,
}

/// Benchmark output: aggregated rows plus the per-replicate raw risks.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub raw: Vec<RawRisk>,
}

/// Simulated (and possibly contaminated) data of one replicate, together
/// with the clean truth the risk is measured against.
///
/// Depends only on the cell and the replicate index, never on the estimator
/// list, so estimators within a cell are compared on identical data.
pub(crate) fn build_replicate(
    config: &BenchConfig,
    n: usize,
    level: f64,
    replicate: usize,
) -> Result<(FunctionalSample, Vec<f64>)> {
    let m = config.resolved_m();
    let grid = make_grid(config.scenario.dim(), m)?;
    let mean = match config.scenario.dim() {
        2 => MeanSpec::TwoD,
        _ => MeanSpec::ThreeD,
    };
    let noise = match &config.scenario {
        Scenario::MixCauchy2d | Scenario::MixCauchy3d => NoiseSpec::mixture_cauchy(level)?,
        Scenario::MixSlash2d | Scenario::MixSlash3d => NoiseSpec::mixture_slash(level)?,
        _ => NoiseSpec::standard(),
    };
    let data_seed = config.base_seed.wrapping_add(replicate as u64);
    let sample = simulate(&grid, &mean, &noise, n, data_seed)?;
    let truth = sample.truth.clone().expect("simulated truth");

    let sample = if config.scenario.is_contaminated() && level > 0.0 {
        let spec = match &config.scenario {
            Scenario::Stripe2d { a0, intervals } => ContaminationSpec::stripe(*a0, intervals.clone(), level)?,
            Scenario::Square2d { lo, hi } => ContaminationSpec::block(*lo, *hi, level)?,
            Scenario::Cube3d { lo, hi } => ContaminationSpec::block(*lo, *hi, level)?,
            _ => unreachable!(),
        };
        apply(&sample, &spec, data_seed)?
    } else {
        sample
    };
    Ok((sample, truth))
}

fn estimator_seed(data_seed: u64, label: &str) -> u64 {
    label
        .bytes()
        .fold(splitmix64(data_seed ^ 0xE57), |acc, b| splitmix64(acc ^ b as u64))
}

fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

struct TaskOutcome {
    cell: usize,
    replicate: usize,
    /// Risk and fit seconds per estimator, in config order.
    risks: Vec<f64>,
    seconds: Vec<f64>,
}

/// Runs the full benchmark.
///
/// `RDNN_THREADS` caps replicate parallelism when set; results are identical
/// either way. A replicate producing a non-finite risk aborts its cell with a
/// diagnostic error.
pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    match std::env::var("RDNN_THREADS") {
        Ok(raw) => {
            let threads: usize = raw
                .parse()
                .ok()
                .filter(|&t| t >= 1)
                .ok_or_else(|| Error::Invalid(format!("RDNN_THREADS must be a positive integer, got {raw:?}")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
            pool.install(|| run_bench_inner(config))
        }
        Err(_) => run_bench_inner(config),
    }
}

fn run_bench_inner(config: &BenchConfig) -> Result<BenchReport> {
    let levels = config.resolved_levels();
    let cells: Vec<(usize, f64)> = config
        .n_list
        .iter()
        .flat_map(|&n| levels.iter().map(move |&level| (n, level)))
        .collect();
    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|cell| (0..config.replicates).map(move |rep| (cell, rep)))
        .collect();

    let mut outcomes: Vec<TaskOutcome> = tasks
        .par_iter()
        .map(|&(cell, rep)| -> Result<TaskOutcome> {
            let (n, level) = cells[cell];
            let (sample, truth) = build_replicate(config, n, level, rep)?;
            let data_seed = config.base_seed.wrapping_add(rep as u64);
            let mut risks = Vec::with_capacity(config.estimators.len());
            let mut seconds = Vec::with_capacity(config.estimators.len());
            for estimator in &config.estimators {
                let loss = estimator.loss()?;
                let seed = estimator_seed(data_seed, &estimator.label());
                let started = Instant::now();
                let result = fit(&sample, &loss, config.arch.as_ref(), config.train.as_ref(), seed)?;
                seconds.push(started.elapsed().as_secs_f64());
                let risk = empirical_risk(&result.fitted_surface, &truth)?;
                if !risk.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "risk for {} at n={n}, level={level}, replicate {rep}",
                        estimator.label()
                    )));
                }
                risks.push(risk);
            }
            Ok(TaskOutcome {
                cell,
                replicate: rep,
                risks,
                seconds,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // Deterministic assembly regardless of completion order.
    outcomes.sort_by_key(|o| (o.cell, o.replicate));

    let scenario_label = config.scenario.label();
    let mut rows = Vec::new();
    let mut raw = Vec::new();
    for (cell, &(n, level)) in cells.iter().enumerate() {
        for (e_idx, estimator) in config.estimators.iter().enumerate() {
            let mut risks = Vec::with_capacity(config.replicates);
            let mut secs = 0.0;
            for outcome in outcomes.iter().filter(|o| o.cell == cell) {
                risks.push(outcome.risks[e_idx]);
                secs += outcome.seconds[e_idx];
                raw.push(RawRisk {
                    scenario: scenario_label.clone(),
                    n,
                    level,
                    estimator: estimator.label(),
                    replicate: outcome.replicate,
                    risk: outcome.risks[e_idx],
                });
            }
            let (mean_risk, sd_risk) = mean_sd(&risks);
            rows.push(BenchRow {
                scenario: scenario_label.clone(),
                n,
                level,
                estimator: estimator.label(),
                mean_risk,
                sd_risk,
                replicates: risks.len(),
                seconds: secs,
            });
        }
    }
    Ok(BenchReport { rows, raw })
}

/// Merges reports from several configurations into one.
pub fn merge_reports(reports: Vec<BenchReport>) -> BenchReport {
    let mut rows = Vec::new();
    let mut raw = Vec::new();
    for report in reports {
        rows.extend(report.rows);
        raw.extend(report.raw);
    }
    BenchReport { rows, raw }
}

/// Formats `x` with six significant digits, plain decimal where readable.
fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0.00000".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        let decimals = (5 - mag).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.5e}")
    }
}

/// Aggregated report as CSV: one header plus one row per (cell, estimator),
/// numbers at six significant digits.
pub fn report_csv(report: &BenchReport) -> String {
    let mut out = String::from("scenario,n,level,estimator,mean_risk,sd_risk,replicates,seconds\n");
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.scenario,
            row.n,
            format_sig(row.level),
            row.estimator,
            format_sig(row.mean_risk),
            format_sig(row.sd_risk),
            row.replicates,
            format_sig(row.seconds),
        ));
    }
    out
}

/// Per-replicate risks as CSV at full precision; fully deterministic under a
/// fixed seed (no timing column).
pub fn raw_csv(report: &BenchReport) -> String {
    let mut out = String::from("scenario,n,level,estimator,replicate,risk\n");
    for r in &report.raw {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.scenario, r.n, r.level, r.estimator, r.replicate, r.risk
        ));
    }
    out
}

/// Parses a report CSV back into rows.
pub fn parse_report_csv(text: &str) -> Result<Vec<BenchRow>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty csv".into()))?;
    if header != "scenario,n,level,estimator,mean_risk,sd_risk,replicates,seconds" {
        return Err(Error::Format(format!("unexpected csv header: {header}")));
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(Error::Format(format!("row {idx} has {} fields", fields.len())));
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Format(format!("bad number {s:?} in row {idx}")))
        };
        let parse_u = |s: &str| -> Result<usize> {
            s.parse::<usize>()
                .map_err(|_| Error::Format(format!("bad integer {s:?} in row {idx}")))
        };
        rows.push(BenchRow {
            scenario: fields[0].to_string(),
            n: parse_u(fields[1])?,
            level: parse_f(fields[2])?,
            estimator: fields[3].to_string(),
            mean_risk: parse_f(fields[4])?,
            sd_risk: parse_f(fields[5])?,
            replicates: parse_u(fields[6])?,
            seconds: parse_f(fields[7])?,
        });
    }
    Ok(rows)
}

/// Benchmark configurations reproducing one of the published tables at the
/// given replicate budget. Tables 2, 3 and 5 expand to several
/// configurations whose reports are meant to be merged.
pub fn paper_table(
    table: u8,
    replicates: usize,
    base_seed: u64,
    train: Option<TrainConfig>,
    arch: Option<ArchitectureConfig>,
) -> Result<Vec<BenchConfig>> {
    let n_list = vec![50, 100, 200];
    let both = vec![EstimatorId::RdnnHuber, EstimatorId::DnnL2];
    let mk = |scenario: Scenario, levels: Vec<f64>| BenchConfig {
        scenario,
        n_list: n_list.clone(),
        levels,
        m: None,
        replicates,
        estimators: both.clone(),
        base_seed,
        train,
        arch,
    };
    let configs = match table {
        1 => vec![mk(Scenario::Clean2d, vec![])],
        2 => {
            let interrupted = (1..=5)
                .map(|k| Interval::half_open((2 * k - 2) as f64 / 10.0, (2 * k - 1) as f64 / 10.0))
                .collect();
            vec![
                mk(
                    Scenario::Stripe2d {
                        a0: 0.2,
                        intervals: interrupted,
                    },
                    vec![0.1, 0.2],
                ),
                mk(
                    Scenario::Stripe2d {
                        a0: 0.2,
                        intervals: vec![Interval::closed(0.0, 1.0)],
                    },
                    vec![0.1, 0.2],
                ),
                mk(Scenario::Square2d { lo: 0.1, hi: 0.3 }, vec![0.1, 0.2]),
                mk(Scenario::Square2d { lo: 0.1, hi: 0.5 }, vec![0.1, 0.2]),
            ]
        }
        3 => vec![
            mk(Scenario::MixCauchy2d, vec![0.3, 0.5]),
            mk(Scenario::MixSlash2d, vec![0.3, 0.5]),
        ],
        4 => vec![mk(Scenario::Clean3d, vec![])],
        5 => vec![
            mk(Scenario::Cube3d { lo: 0.10, hi: 0.20 }, vec![0.1, 0.2]),
            mk(Scenario::Cube3d { lo: 0.10, hi: 0.30 }, vec![0.1, 0.2]),
        ],
        other => {
            return Err(Error::Invalid(format!("no preset for table {other}; expected 1-5")));
        }
    };
    Ok(configs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(estimators: Vec<EstimatorId>) -> BenchConfig {
        BenchConfig {
            scenario: Scenario::Clean2d,
            n_list: vec![4],
            levels: vec![],
            m: Some(4),
            replicates: 2,
            estimators,
            base_seed: 5,
            train: Some(TrainConfig {
                epochs: 2,
                batch_size: 32,
                ..TrainConfig::default()
            }),
            arch: Some(ArchitectureConfig {
                hidden_layers: 1,
                width: 8,
                sparsity: 8,
                dropout_keep: 1.0,
                theta: 0.5,
                nu: 0.5,
            }),
        }
    }

    #[test]
    fn risk_of_identical_vectors_is_zero() {
        let v = vec![1.0, -2.0, 3.5];
        assert_eq!(empirical_risk(&v, &v).unwrap(), 0.0);
    }

    #[test]
    fn risk_of_constant_offset_is_its_square() {
        let truth = vec![0.0; 10];
        let est = vec![0.7; 10];
        assert!((empirical_risk(&est, &truth).unwrap() - 0.49).abs() < 1e-15);
        let alternating: Vec<f64> = (0..10).map(|j| if j % 2 == 0 { 0.3 } else { -0.3 }).collect();
        assert!((empirical_risk(&alternating, &truth).unwrap() - 0.09).abs() < 1e-15);
    }

    #[test]
    fn risk_rejects_length_mismatch() {
        assert!(empirical_risk(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn mean_sd_matches_two_point_example() {
        let (mean, sd) = mean_sd(&[0.1, 0.3]);
        assert!((mean - 0.2).abs() < 1e-15);
        assert!((sd - 0.1414214).abs() < 1e-7);
    }

    #[test]
    fn empty_report_is_header_only() {
        let report = BenchReport {
            rows: vec![],
            raw: vec![],
        };
        assert_eq!(
            report_csv(&report),
            "scenario,n,level,estimator,mean_risk,sd_risk,replicates,seconds\n"
        );
    }

    #[test]
    fn six_digit_formatting() {
        assert_eq!(format_sig(0.1141235), "0.114124");
        assert_eq!(format_sig(2.014230), "2.01423");
        assert_eq!(format_sig(0.0), "0.00000");
        assert_eq!(format_sig(1.5e-7), "1.50000e-7");
        let (_, sd) = mean_sd(&[0.1, 0.3]);
        assert_eq!(format_sig(sd), "0.141421");
    }

    #[test]
    fn report_csv_round_trips() {
        let config = tiny_config(vec![EstimatorId::DnnL2]);
        let report = run_bench(&config).unwrap();
        let text = report_csv(&report);
        let parsed = parse_report_csv(&text).unwrap();
        assert_eq!(parsed.len(), report.rows.len());
        for (a, b) in parsed.iter().zip(&report.rows) {
            assert_eq!(a.scenario, b.scenario);
            assert_eq!(a.n, b.n);
            assert_eq!(a.estimator, b.estimator);
            assert_eq!(a.replicates, b.replicates);
            let rel = (a.mean_risk - b.mean_risk).abs() / b.mean_risk.abs().max(1e-12);
            assert!(rel < 1e-5, "mean {} vs {}", a.mean_risk, b.mean_risk);
        }
        // Re-emitting the parsed rows reproduces the text exactly.
        let again = report_csv(&BenchReport {
            rows: parsed,
            raw: vec![],
        });
        assert_eq!(again, text);
    }

    #[test]
    fn raw_risks_round_trip_via_display() {
        let config = tiny_config(vec![EstimatorId::DnnL2]);
        let report = run_bench(&config).unwrap();
        let text = raw_csv(&report);
        for (line, r) in text.lines().skip(1).zip(&report.raw) {
            let risk: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
            assert_eq!(risk.to_bits(), r.risk.to_bits());
        }
    }

    #[test]
    fn replicate_data_is_independent_of_estimator_list() {
        let a_cfg = tiny_config(vec![EstimatorId::DnnL2]);
        let b_cfg = tiny_config(vec![EstimatorId::RdnnHuber, EstimatorId::DnnL2]);
        let (a, ta) = build_replicate(&a_cfg, 4, 0.0, 1).unwrap();
        let (b, tb) = build_replicate(&b_cfg, 4, 0.0, 1).unwrap();
        assert_eq!(a.responses, b.responses);
        assert_eq!(ta, tb);
    }

    #[test]
    fn bench_runs_are_bit_deterministic() {
        let config = tiny_config(vec![EstimatorId::RdnnHuber, EstimatorId::DnnL2]);
        let a = run_bench(&config).unwrap();
        let b = run_bench(&config).unwrap();
        assert_eq!(a.raw, b.raw);
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.mean_risk.to_bits(), rb.mean_risk.to_bits());
            assert_eq!(ra.sd_risk.to_bits(), rb.sd_risk.to_bits());
        }
    }

    #[test]
    fn row_aggregates_are_consistent_with_raw_risks() {
        let config = tiny_config(vec![EstimatorId::RdnnHuber, EstimatorId::DnnL2]);
        let report = run_bench(&config).unwrap();
        for row in &report.rows {
            let risks: Vec<f64> = report
                .raw
                .iter()
                .filter(|r| r.n == row.n && r.level == row.level && r.estimator == row.estimator)
                .map(|r| r.risk)
                .collect();
            assert_eq!(risks.len(), row.replicates);
            let (mean, sd) = mean_sd(&risks);
            assert!((mean - row.mean_risk).abs() < 1e-12);
            assert!((sd - row.sd_risk).abs() < 1e-12);
        }
    }

    #[test]
    fn contaminated_cells_share_the_clean_part() {
        let mut config = tiny_config(vec![EstimatorId::DnnL2]);
        config.scenario = Scenario::Square2d { lo: 0.25, hi: 0.5 };
        config.levels = vec![0.5];
        let (contaminated, truth) = build_replicate(&config, 4, 0.5, 0).unwrap();
        config.levels = vec![0.0];
        let (clean, clean_truth) = build_replicate(&config, 4, 0.0, 0).unwrap();
        assert_eq!(truth, clean_truth);
        let mask = crate::contam::block_mask(&clean.grid, 0.25, 0.5).unwrap();
        for i in 0..4 {
            for j in 0..clean.grid.n_points() {
                if !mask.contains(&j) {
                    assert_eq!(contaminated.responses[[i, j]], clean.responses[[i, j]]);
                }
            }
        }
    }

    #[test]
    fn config_validation_rejects_bad_inputs() {
        let mut config = tiny_config(vec![EstimatorId::DnnL2]);
        config.replicates = 0;
        assert!(config.validate().is_err());
        let mut config = tiny_config(vec![]);
        config.replicates = 1;
        assert!(config.validate().is_err());
        let mut config = tiny_config(vec![EstimatorId::DnnL2]);
        config.levels = vec![0.5];
        assert!(config.validate().is_err(), "clean scenario with nonzero level");
    }

    #[test]
    fn paper_table_presets_have_expected_cells() {
        let t1 = paper_table(1, 10, 0, None, None).unwrap();
        assert_eq!(t1.len(), 1);
        let rows: usize = t1
            .iter()
            .map(|c| c.n_list.len() * c.resolved_levels().len() * c.estimators.len())
            .sum();
        assert_eq!(rows, 6);

        let t2 = paper_table(2, 10, 0, None, None).unwrap();
        let rows: usize = t2
            .iter()
            .map(|c| c.n_list.len() * c.resolved_levels().len() * c.estimators.len())
            .sum();
        assert_eq!(rows, 48);

        assert!(paper_table(6, 10, 0, None, None).is_err());
    }
}
