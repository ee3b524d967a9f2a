//! wasm-bindgen entry points for the static demo page in `www/`.
//!
//! Each export takes a scenario document in the CLI config format and returns
//! a JSON string; errors come back as `{"error": "..."}`.

use hazard_twist::config::ExperimentKind;
use hazard_twist::experiments::{run_theta_sweep, run_threshold_sweep};
use hazard_twist::optimizer::log_bound_h;
use hazard_twist::{improved_plan, parse_config, theta_conventional, Method, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize, Default)]
struct Curves {
    x: Vec<f64>,
    conventional: Vec<f64>,
    conventional_se: Vec<f64>,
    improved: Vec<f64>,
    improved_se: Vec<f64>,
    conventional_theta: Vec<f64>,
    improved_theta: Vec<f64>,
}

impl Curves {
    fn push(&mut self, x: f64, method: Method, m2: f64, se: f64, theta: f64) {
        if self.x.last() != Some(&x) {
            self.x.push(x);
        }
        let (v, s, t) = match method {
            Method::ConventionalIs => (
                &mut self.conventional,
                &mut self.conventional_se,
                &mut self.conventional_theta,
            ),
            _ => (
                &mut self.improved,
                &mut self.improved_se,
                &mut self.improved_theta,
            ),
        };
        v.push(m2);
        s.push(se);
        t.push(theta);
    }
}

#[derive(Serialize)]
struct Bound {
    s: usize,
    a: f64,
    theta_star: f64,
    theta_conventional: f64,
    theta: Vec<f64>,
    log10_h: Vec<f64>,
}

fn to_json<T: Serialize>(r: Result<T>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| error_json(&e.to_string())),
        Err(e) => error_json(&e.to_string()),
    }
}

fn error_json(msg: &str) -> String {
    serde_json::json!({ "error": msg }).to_string()
}

fn theta_curves(config_text: &str, runs: u32, seed: u32) -> Result<Curves> {
    let mut config = parse_config(config_text)?.for_experiment(ExperimentKind::ThetaSweep)?;
    config.runs = runs.max(1) as u64;
    config.seed = seed as u64;
    config.methods = Some(vec![Method::ConventionalIs, Method::ImprovedIs]);
    let mut out = Curves::default();
    for row in run_theta_sweep(&config)? {
        let r = &row.report;
        out.push(
            r.theta,
            r.method,
            r.second_moment,
            r.second_moment_std_error,
            r.theta,
        );
    }
    Ok(out)
}

fn threshold_curves(config_text: &str, runs: u32, seed: u32) -> Result<Curves> {
    let mut config = parse_config(config_text)?.for_experiment(ExperimentKind::ThresholdSweep)?;
    config.runs = runs.max(1) as u64;
    config.seed = seed as u64;
    config.methods = Some(vec![Method::ConventionalIs, Method::ImprovedIs]);
    let mut out = Curves::default();
    for row in run_threshold_sweep(&config)? {
        let r = &row.report;
        out.push(
            row.gamma_db,
            r.method,
            r.second_moment,
            r.second_moment_std_error,
            r.theta,
        );
    }
    Ok(out)
}

fn bound_curve(config_text: &str, gamma_db: f64) -> Result<Bound> {
    let config = parse_config(config_text)?;
    let scenario = config.scenario.with_threshold_db(gamma_db)?;
    let (plan, p) = improved_plan(&scenario)?;
    let a = p.objective_value;
    let theta: Vec<f64> = (0..200).map(|i| i as f64 / 200.0).collect();
    let log10_h = theta
        .iter()
        .map(|&t| Ok(log_bound_h(plan.s(), a, t)? / std::f64::consts::LN_10))
        .collect::<Result<_>>()?;
    Ok(Bound {
        s: plan.s(),
        a,
        theta_star: plan.theta(),
        theta_conventional: theta_conventional(&scenario)?,
        theta,
        log10_h,
    })
}

/// Second moments of both IS estimators on the document's `theta_grid`.
#[wasm_bindgen]
pub fn theta_sweep(config_text: &str, runs: u32, seed: u32) -> String {
    to_json(theta_curves(config_text, runs, seed))
}

/// Second moments at each method's minmax parameter on `gamma_grid_db`.
#[wasm_bindgen]
pub fn threshold_sweep(config_text: &str, runs: u32, seed: u32) -> String {
    to_json(threshold_curves(config_text, runs, seed))
}

/// Minmax bound `h(theta)` of the improved estimator at `gamma_db`, with both
/// minmax parameters.
#[wasm_bindgen]
pub fn minmax_bound(config_text: &str, gamma_db: f64) -> String {
    to_json(bound_curve(config_text, gamma_db))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN: &str = include_str!("../../../configs/lognormal_theta_sweep.conf");
    const WB: &str = include_str!("../../../configs/weibull_n2.conf");

    fn parse(s: &str) -> serde_json::Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn theta_sweep_returns_aligned_curves() {
        let v = parse(&theta_sweep(LN, 20_000, 1));
        let n = v["x"].as_array().unwrap().len();
        assert_eq!(n, 16);
        for key in ["conventional", "improved", "conventional_se", "improved_se"] {
            assert_eq!(v[key].as_array().unwrap().len(), n, "{key}");
        }
    }

    #[test]
    fn threshold_sweep_reports_minmax_thetas() {
        let v = parse(&threshold_sweep(WB, 5_000, 1));
        assert_eq!(v["x"][0], 20.0);
        let t = v["improved_theta"][0].as_f64().unwrap();
        assert!((t - 0.8415).abs() < 1e-3, "{t}");
        let c = v["conventional_theta"][0].as_f64().unwrap();
        assert!((c - 0.683).abs() < 1e-3, "{c}");
    }

    #[test]
    fn bound_minimum_sits_at_theta_star() {
        let v = parse(&minmax_bound(LN, 25.0));
        assert_eq!(v["s"], 2);
        let ts = v["theta_star"].as_f64().unwrap();
        assert!((ts - 0.8195).abs() < 1e-3);
        let h: Vec<f64> = v["log10_h"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .collect();
        let i = (0..h.len())
            .min_by(|&a, &b| h[a].partial_cmp(&h[b]).unwrap())
            .unwrap();
        assert!((i as f64 / 200.0 - ts).abs() <= 0.005);
    }

    #[test]
    fn errors_are_reported_as_json() {
        let v = parse(&theta_sweep("gamma_db = 3\n", 10, 1));
        assert!(v["error"].as_str().unwrap().contains("component"));
        let v = parse(&theta_sweep(WB, 10, 1));
        assert!(v["error"].as_str().unwrap().contains("theta_grid"));
    }
}
