//! Sweeps over the twisting parameter and the threshold, efficiency tables and
//! diagnostics, with CSV output.

use std::io::Write;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::distributions::db_to_linear;
use crate::dominance::{check_tail_dominance, Scenario, TailDominance};
use crate::error::{Error, Result};
use crate::estimators::{
    efficiency, estimate_conventional, estimate_improved, estimate_naive, estimate_with_theta,
    optimality_ratio, EstimateReport, Method,
};
use crate::optimizer::{improved_plan, solve_p_prime, theta_conventional};

pub const SWEEP_HEADER: [&str; 12] = [
    "gamma_db",
    "method",
    "theta",
    "alpha_hat",
    "second_moment",
    "std_error",
    "variance",
    "relative_error",
    "ci95_low",
    "ci95_high",
    "runs",
    "seed",
];

pub const EFFICIENCY_HEADER: [&str; 4] = ["gamma_db", "xi1", "xi2", "alpha_ref"];

pub const DIAGNOSTICS_HEADER: [&str; 10] = [
    "gamma_db",
    "method",
    "theta",
    "s",
    "A",
    "A_prime",
    "A_prime_over_2_lambda1",
    "alpha_hat",
    "second_moment",
    "optimality_ratio",
];

const IS_METHODS: [Method; 2] = [Method::ConventionalIs, Method::ImprovedIs];

/// Shortest round-trip decimal; scientific notation outside `[1e-4, 1e15)`.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else if (1e-4..1e15).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub gamma_db: f64,
    pub report: EstimateReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyRow {
    pub gamma_db: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub alpha_ref: f64,
    pub improved: EstimateReport,
    pub conventional: EstimateReport,
}

/// Minmax parameter used by `method` at the scenario's threshold.
pub fn minmax_theta(scenario: &Scenario, method: Method) -> Result<f64> {
    match method {
        Method::NaiveMc => Ok(0.0),
        Method::ConventionalIs => theta_conventional(scenario),
        Method::ImprovedIs => Ok(improved_plan(scenario)?.0.theta()),
    }
}

/// Runs `method` at its minmax parameter.
pub fn estimate_minmax(
    scenario: &Scenario,
    method: Method,
    runs: u64,
    seed: u64,
) -> Result<EstimateReport> {
    match method {
        Method::NaiveMc => estimate_naive(scenario, runs, seed),
        Method::ConventionalIs => {
            estimate_conventional(scenario, theta_conventional(scenario)?, runs, seed)
        }
        Method::ImprovedIs => estimate_improved(scenario, &improved_plan(scenario)?.0, runs, seed),
    }
}

fn expect_kind(config: &ExperimentConfig, kind: ExperimentKind) -> Result<ExperimentConfig> {
    config.for_experiment(kind)
}

/// Second moment against the twisting parameter at a fixed threshold.
pub fn run_theta_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let config = expect_kind(config, ExperimentKind::ThetaSweep)?;
    let methods = config.methods_or(&IS_METHODS);
    let gamma_db = config.scenario.threshold_db();
    let mut rows = Vec::with_capacity(config.theta_grid.len() * methods.len());
    for &theta in &config.theta_grid {
        for &method in &methods {
            let report =
                estimate_with_theta(&config.scenario, method, theta, config.runs, config.seed)?;
            rows.push(SweepRow { gamma_db, report });
        }
    }
    Ok(rows)
}

/// Second moment against the threshold, each method at its minmax parameter.
pub fn run_threshold_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let config = expect_kind(config, ExperimentKind::ThresholdSweep)?;
    let methods = config.methods_or(&IS_METHODS);
    let mut rows = Vec::with_capacity(config.gamma_grid_db.len() * methods.len());
    for &gamma_db in &config.gamma_grid_db {
        let scenario = config.scenario.with_threshold_db(gamma_db)?;
        for &method in &methods {
            let report = estimate_minmax(&scenario, method, config.runs, config.seed)?;
            rows.push(SweepRow { gamma_db, report });
        }
    }
    Ok(rows)
}

/// Efficiencies of both IS estimators relative to naive MC. The reference
/// probability is the improved estimate at each threshold.
pub fn run_efficiency_sweep(config: &ExperimentConfig) -> Result<Vec<EfficiencyRow>> {
    let config = expect_kind(config, ExperimentKind::EfficiencySweep)?;
    let mut rows = Vec::with_capacity(config.gamma_grid_db.len());
    for &gamma_db in &config.gamma_grid_db {
        let scenario = config.scenario.with_threshold_db(gamma_db)?;
        let improved = estimate_minmax(&scenario, Method::ImprovedIs, config.runs, config.seed)?;
        let conventional =
            estimate_minmax(&scenario, Method::ConventionalIs, config.runs, config.seed)?;
        let alpha_ref = improved.alpha_hat;
        let xi1 = efficiency(&improved, alpha_ref)?.xi;
        let xi2 = efficiency(&conventional, alpha_ref)?.xi;
        rows.push(EfficiencyRow {
            gamma_db,
            xi1,
            xi2,
            alpha_ref,
            improved,
            conventional,
        });
    }
    Ok(rows)
}

/// One estimate per method at the configured threshold.
pub fn run_single_estimate(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let config = expect_kind(config, ExperimentKind::SingleEstimate)?;
    let methods = config.methods_or(&Method::ALL);
    let gamma_db = config.scenario.threshold_db();
    methods
        .iter()
        .map(|&m| {
            Ok(SweepRow {
                gamma_db,
                report: estimate_minmax(&config.scenario, m, config.runs, config.seed)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticRow {
    pub gamma_db: f64,
    pub method: Method,
    pub theta: f64,
    pub s: usize,
    /// Value of (P).
    pub a: f64,
    /// Value of (P').
    pub a_prime: f64,
    /// `A' / (2 Lambda_1(gamma))`, which tends to 1.
    pub a_prime_ratio: f64,
    pub alpha_hat: f64,
    pub second_moment: f64,
    /// `ln E[T^2] / ln alpha_ref` with `alpha_ref` the improved estimate;
    /// NaN when undefined.
    pub optimality_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub dominant_indices: Vec<usize>,
    pub tail_grid: Vec<f64>,
    pub dominance: Vec<TailDominance>,
    pub rows: Vec<DiagnosticRow>,
}

impl DiagnosticsReport {
    /// Human-readable summary of the tail-dominance verdicts.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let dominant: Vec<String> = self
            .dominant_indices
            .iter()
            .map(|i| (i + 1).to_string())
            .collect();
        out.push_str(&format!(
            "dominant components: {{{}}} (s = {})\n",
            dominant.join(", "),
            self.dominant_indices.len()
        ));
        if let (Some(lo), Some(hi)) = (self.tail_grid.first(), self.tail_grid.last()) {
            out.push_str(&format!(
                "tail dominance 2*L1 - Li on [{}, {}]:\n",
                format_number(*lo),
                format_number(*hi)
            ));
        }
        if self.dominance.is_empty() {
            out.push_str("  (all components are dominant)\n");
        }
        for d in &self.dominance {
            let first = d.gaps.first().map_or(f64::NAN, |g| g.1);
            let last = d.gaps.last().map_or(f64::NAN, |g| g.1);
            out.push_str(&format!(
                "  component {}: {} (gap {} -> {})\n",
                d.component + 1,
                d.verdict,
                format_number(first),
                format_number(last)
            ));
        }
        out
    }
}

/// Tail grid for the dominance check: geometric, from the smallest threshold
/// to at least ten decades above it.
pub fn tail_check_grid(gamma_grid_db: &[f64]) -> Vec<f64> {
    const POINTS: usize = 41;
    let lo = db_to_linear(gamma_grid_db[0]);
    let hi = db_to_linear(*gamma_grid_db.last().unwrap()).max(lo * 1e10);
    (0..POINTS)
        .map(|i| lo * (hi / lo).powf(i as f64 / (POINTS - 1) as f64))
        .collect()
}

/// Tail-dominance verdicts plus, per threshold and method, the minmax
/// quantities and the optimality ratio.
pub fn run_diagnostics(config: &ExperimentConfig) -> Result<DiagnosticsReport> {
    if config.gamma_grid_db.is_empty() {
        return Err(Error::config(
            0,
            "gamma_grid_db",
            "diagnose needs a threshold grid",
        ));
    }
    let methods = config.methods_or(&IS_METHODS);
    let (plan, _) = improved_plan(&config.scenario)?;
    let tail_grid = tail_check_grid(&config.gamma_grid_db);
    let dominance = check_tail_dominance(&config.scenario, &plan, &tail_grid)?;
    let mut rows = Vec::new();
    for &gamma_db in &config.gamma_grid_db {
        let scenario = config.scenario.with_threshold_db(gamma_db)?;
        let (plan, p) = improved_plan(&scenario)?;
        let pp = solve_p_prime(&scenario, &plan)?;
        let lambda1 = plan
            .dominant_spec(&scenario)
            .cumulative_hazard(scenario.threshold_linear())?;
        let improved = estimate_improved(&scenario, &plan, config.runs, config.seed)?;
        let alpha_ref = improved.alpha_hat;
        for &method in &methods {
            let report = if method == Method::ImprovedIs {
                improved.clone()
            } else {
                estimate_minmax(&scenario, method, config.runs, config.seed)?
            };
            rows.push(DiagnosticRow {
                gamma_db,
                method,
                theta: report.theta,
                s: plan.s(),
                a: p.objective_value,
                a_prime: pp.objective_value,
                a_prime_ratio: pp.objective_value / (2.0 * lambda1),
                alpha_hat: report.alpha_hat,
                second_moment: report.second_moment,
                optimality_ratio: optimality_ratio(report.second_moment, alpha_ref)
                    .unwrap_or(f64::NAN),
            });
        }
    }
    Ok(DiagnosticsReport {
        dominant_indices: plan.dominant_indices().to_vec(),
        tail_grid,
        dominance,
        rows,
    })
}

pub fn sweep_record(row: &SweepRow) -> Vec<String> {
    let r = &row.report;
    vec![
        format_number(row.gamma_db),
        r.method.to_string(),
        format_number(r.theta),
        format_number(r.alpha_hat),
        format_number(r.second_moment),
        format_number(r.second_moment_std_error),
        format_number(r.variance),
        format_number(r.relative_error),
        format_number(r.ci95_low),
        format_number(r.ci95_high),
        r.runs.to_string(),
        r.seed.to_string(),
    ]
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for row in rows {
        w.write_record(sweep_record(row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_efficiency_csv<W: Write>(rows: &[EfficiencyRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EFFICIENCY_HEADER)?;
    for row in rows {
        w.write_record([
            format_number(row.gamma_db),
            format_number(row.xi1),
            format_number(row.xi2),
            format_number(row.alpha_ref),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_diagnostics_csv<W: Write>(report: &DiagnosticsReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DIAGNOSTICS_HEADER)?;
    for row in &report.rows {
        w.write_record([
            format_number(row.gamma_db),
            row.method.to_string(),
            format_number(row.theta),
            row.s.to_string(),
            format_number(row.a),
            format_number(row.a_prime),
            format_number(row.a_prime_ratio),
            format_number(row.alpha_hat),
            format_number(row.second_moment),
            format_number(row.optimality_ratio),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_string(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<String> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

/// Sweep rows as a CSV document.
pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    csv_string(|b| write_sweep_csv(rows, b))
}

pub fn efficiency_csv(rows: &[EfficiencyRow]) -> Result<String> {
    csv_string(|b| write_efficiency_csv(rows, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;
    use crate::dominance::TailVerdict;

    const WEIBULL2: &str = "\
gamma_grid_db = 20:6:32
runs = 20000
seed = 3
[component]
family = weibull
k = 0.4
beta = 1
[component]
family = weibull
k = 0.8
beta = 1
";

    #[test]
    fn number_format() {
        assert_eq!(format_number(0.0), "0");
        assert_eq!(format_number(20.0), "20");
        assert_eq!(format_number(0.35), "0.35");
        assert_eq!(format_number(3.524e-8), "3.524e-8");
        assert_eq!(format_number(7.25e16), "7.25e16");
        assert_eq!(format_number(f64::INFINITY), "inf");
        for x in [1.0 / 3.0, 6.02e23, 1e-300, 123456.789] {
            assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn threshold_sweep_shape() {
        let cfg = parse_config(WEIBULL2).unwrap();
        let rows = run_threshold_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 3 * 2);
        assert_eq!(rows[0].gamma_db, 20.0);
        assert_eq!(rows[0].report.method, Method::ConventionalIs);
        assert_eq!(rows[1].report.method, Method::ImprovedIs);
        assert!((rows[1].report.theta - 0.841_510_680_753_888_7).abs() < 1e-9);
        let csv = sweep_csv(&rows).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), SWEEP_HEADER.join(","));
        assert_eq!(lines.count(), 6);
    }

    #[test]
    fn theta_sweep_single_point() {
        let text = WEIBULL2.replace("gamma_grid_db = 20:6:32", "gamma_db = 20\ntheta_grid = 0.5");
        let cfg = parse_config(&text).unwrap();
        let rows = run_theta_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.report.theta == 0.5));
    }

    #[test]
    fn efficiency_rows() {
        let cfg = parse_config(WEIBULL2).unwrap();
        let rows = run_efficiency_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 3);
        for r in &rows {
            assert!(r.xi1 > 1.0 && r.xi2 > 1.0);
        }
        let csv = efficiency_csv(&rows).unwrap();
        assert!(csv.starts_with("gamma_db,xi1,xi2,alpha_ref\n"));
    }

    #[test]
    fn diagnostics_report() {
        let cfg = parse_config(WEIBULL2).unwrap();
        let d = run_diagnostics(&cfg).unwrap();
        assert_eq!(d.dominant_indices, vec![0]);
        assert_eq!(d.dominance.len(), 1);
        assert_eq!(d.dominance[0].verdict, TailVerdict::Satisfied);
        assert_eq!(d.rows.len(), 6);
        assert!(d.summary().contains("component 2: SATISFIED"));
        for r in &d.rows {
            // Weibull hazards are concave: A' = 2 Lambda_1 exactly.
            assert!((r.a_prime_ratio - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn wrong_experiment_is_rejected() {
        let cfg = parse_config(WEIBULL2).unwrap();
        assert!(run_theta_sweep(&cfg).is_err());
    }

    #[test]
    fn single_estimate_defaults_to_all_methods() {
        let text = WEIBULL2.replace("gamma_grid_db = 20:6:32", "gamma_db = 15");
        let cfg = parse_config(&text).unwrap();
        let rows = run_single_estimate(&cfg).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].report.method, Method::NaiveMc);
    }
}
