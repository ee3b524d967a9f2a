//! Naive Monte Carlo and hazard-twisted importance-sampling estimators of
//! `alpha = P(X_1 + ... + X_N > gamma)`.
//!
//! Replications are split into chunks of [`CHUNK_SIZE`]; chunk `j` draws from
//! substream `j` of the seed and the chunk accumulators are merged in chunk
//! order, so a report depends only on `(scenario, method, theta, runs, seed)`
//! and never on how many workers ran the chunks.

use std::fmt;
use std::str::FromStr;

use crate::distributions::DistributionSpec;
use crate::dominance::{select_dominant, Scenario, ThetaSource, TwistPlan};
use crate::error::{Error, Result};
use crate::rng::UnitSampleStream;

pub const CHUNK_SIZE: u64 = 1 << 16;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    NaiveMc,
    ConventionalIs,
    ImprovedIs,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::NaiveMc, Method::ConventionalIs, Method::ImprovedIs];

    pub fn name(&self) -> &'static str {
        match self {
            Method::NaiveMc => "naive",
            Method::ConventionalIs => "conventional",
            Method::ImprovedIs => "improved",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "naive" | "naivemc" | "mc" => Ok(Method::NaiveMc),
            "conventional" | "conventionalis" => Ok(Method::ConventionalIs),
            "improved" | "improvedis" => Ok(Method::ImprovedIs),
            other => Err(Error::parameter(format!("unknown method `{other}`"))),
        }
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    runs: u64,
    hits: u64,
    t: CompensatedSum,
    t2: CompensatedSum,
    t4: CompensatedSum,
}

impl Moments {
    #[inline]
    fn push(&mut self, value: f64) {
        self.runs += 1;
        if value > 0.0 {
            self.hits += 1;
            let sq = value * value;
            self.t.add(value);
            self.t2.add(sq);
            self.t4.add(sq * sq);
        }
    }

    fn merge(&mut self, other: &Moments) {
        self.runs += other.runs;
        self.hits += other.hits;
        self.t.add(other.t.value());
        self.t2.add(other.t2.value());
        self.t4.add(other.t4.value());
    }
}

/// Result of one estimation run.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub method: Method,
    pub alpha_hat: f64,
    /// Sample mean of `T^2`.
    pub second_moment: f64,
    /// Standard error of `second_moment`.
    pub second_moment_std_error: f64,
    /// Unbiased sample variance of `T`.
    pub variance: f64,
    /// `sqrt(variance / runs) / alpha_hat`; infinite when nothing was hit.
    pub relative_error: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    pub runs: u64,
    /// Replications with `S_N > gamma`.
    pub hits: u64,
    pub theta: f64,
    pub seed: u64,
}

impl EstimateReport {
    fn from_moments(method: Method, theta: f64, seed: u64, m: &Moments) -> Self {
        let n = m.runs as f64;
        let alpha_hat = m.t.value() / n;
        let second_moment = m.t2.value() / n;
        let fourth = m.t4.value() / n;
        let (variance, m2_var) = if m.runs > 1 {
            let c = n / (n - 1.0);
            (
                (c * (second_moment - alpha_hat * alpha_hat)).max(0.0),
                (c * (fourth - second_moment * second_moment)).max(0.0),
            )
        } else {
            (0.0, 0.0)
        };
        let std_error = (variance / n).sqrt();
        let relative_error = if alpha_hat > 0.0 {
            std_error / alpha_hat
        } else {
            f64::INFINITY
        };
        Self {
            method,
            alpha_hat,
            second_moment,
            second_moment_std_error: (m2_var / n).sqrt(),
            variance,
            relative_error,
            ci95_low: (alpha_hat - Z95 * std_error).max(0.0),
            ci95_high: alpha_hat + Z95 * std_error,
            runs: m.runs,
            hits: m.hits,
            theta,
            seed,
        }
    }

    /// Standard error of `alpha_hat`.
    pub fn std_error(&self) -> f64 {
        (self.variance / self.runs as f64).sqrt()
    }
}

/// Per-component sampling instructions for one estimator.
struct Sampler<'a> {
    components: &'a [DistributionSpec],
    twisted: Vec<bool>,
    stretch: f64,
    theta: f64,
    log_norm: f64,
    threshold: f64,
}

impl<'a> Sampler<'a> {
    fn new(scenario: &'a Scenario, twisted: Vec<bool>, theta: f64) -> Self {
        let m = twisted.iter().filter(|&&t| t).count() as f64;
        Self {
            components: scenario.components(),
            twisted,
            stretch: 1.0 / (1.0 - theta),
            theta,
            log_norm: -m * (1.0 - theta).ln(),
            threshold: scenario.threshold_linear(),
        }
    }

    #[inline]
    fn replicate(&self, stream: &mut UnitSampleStream) -> f64 {
        let mut sum = 0.0;
        let mut twisted_hazard = 0.0;
        for (spec, &twisted) in self.components.iter().zip(&self.twisted) {
            if twisted {
                let (x, y) = spec.draw_with_hazard(self.stretch, stream);
                sum += x;
                twisted_hazard += y;
            } else {
                let (x, _) = spec.draw_with_hazard(1.0, stream);
                sum += x;
            }
        }
        if sum > self.threshold {
            (self.log_norm - self.theta * twisted_hazard).exp()
        } else {
            0.0
        }
    }

    fn run_chunk(&self, seed: u64, chunk: u64, runs: u64) -> Moments {
        let mut stream = UnitSampleStream::substream_of(seed, chunk);
        let start = chunk * CHUNK_SIZE;
        let end = (start + CHUNK_SIZE).min(runs);
        let mut m = Moments::default();
        for _ in start..end {
            m.push(self.replicate(&mut stream));
        }
        m
    }

    fn run(&self, runs: u64, seed: u64) -> Moments {
        let chunks = runs.div_ceil(CHUNK_SIZE);
        #[cfg(feature = "parallel")]
        let parts: Vec<Moments> = {
            use rayon::prelude::*;
            (0..chunks)
                .into_par_iter()
                .map(|j| self.run_chunk(seed, j, runs))
                .collect()
        };
        #[cfg(not(feature = "parallel"))]
        let parts: Vec<Moments> = (0..chunks).map(|j| self.run_chunk(seed, j, runs)).collect();
        let mut total = Moments::default();
        for p in &parts {
            total.merge(p);
        }
        total
    }
}

fn check_runs(runs: u64) -> Result<()> {
    if runs == 0 {
        Err(Error::parameter("runs must be at least 1"))
    } else {
        Ok(())
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if (0.0..1.0).contains(&theta) {
        Ok(())
    } else {
        Err(Error::parameter(format!(
            "twisting parameter must lie in [0, 1), got {theta}"
        )))
    }
}

/// Crude Monte Carlo: the fraction of replications whose sum exceeds the threshold.
pub fn estimate_naive(scenario: &Scenario, runs: u64, seed: u64) -> Result<EstimateReport> {
    check_runs(runs)?;
    let sampler = Sampler::new(scenario, vec![false; scenario.len()], 0.0);
    let m = sampler.run(runs, seed);
    Ok(EstimateReport::from_moments(Method::NaiveMc, 0.0, seed, &m))
}

/// Twists only the plan's dominant components by `plan.theta()`.
pub fn estimate_improved(
    scenario: &Scenario,
    plan: &TwistPlan,
    runs: u64,
    seed: u64,
) -> Result<EstimateReport> {
    check_runs(runs)?;
    if plan.dominant_indices().iter().any(|&i| i >= scenario.len()) {
        return Err(Error::parameter("twist plan does not match scenario"));
    }
    let twisted = (0..scenario.len()).map(|i| plan.is_dominant(i)).collect();
    let sampler = Sampler::new(scenario, twisted, plan.theta());
    let m = sampler.run(runs, seed);
    Ok(EstimateReport::from_moments(
        Method::ImprovedIs,
        plan.theta(),
        seed,
        &m,
    ))
}

/// Twists every component by the same `theta`.
pub fn estimate_conventional(
    scenario: &Scenario,
    theta: f64,
    runs: u64,
    seed: u64,
) -> Result<EstimateReport> {
    check_runs(runs)?;
    check_theta(theta)?;
    let sampler = Sampler::new(scenario, vec![true; scenario.len()], theta);
    let m = sampler.run(runs, seed);
    Ok(EstimateReport::from_moments(
        Method::ConventionalIs,
        theta,
        seed,
        &m,
    ))
}

/// Runs `method` at a manual `theta` (ignored by naive MC). The improved
/// estimator twists the dominant group of `scenario`.
pub fn estimate_with_theta(
    scenario: &Scenario,
    method: Method,
    theta: f64,
    runs: u64,
    seed: u64,
) -> Result<EstimateReport> {
    match method {
        Method::NaiveMc => estimate_naive(scenario, runs, seed),
        Method::ConventionalIs => estimate_conventional(scenario, theta, runs, seed),
        Method::ImprovedIs => {
            let plan = select_dominant(scenario).with_theta(theta, ThetaSource::Manual)?;
            estimate_improved(scenario, &plan, runs, seed)
        }
    }
}

/// `(1 - theta)^(-s) exp(-theta sum_i Lambda_1(x_i))` over the dominant values.
pub fn likelihood_ratio_improved(
    plan: &TwistPlan,
    dominant_values: &[f64],
    spec: &DistributionSpec,
) -> Result<f64> {
    if dominant_values.len() != plan.s() {
        return Err(Error::parameter(format!(
            "expected {} dominant values, got {}",
            plan.s(),
            dominant_values.len()
        )));
    }
    let theta = plan.theta();
    let mut hazard = 0.0;
    for &x in dominant_values {
        if !(x > 0.0) {
            return Err(Error::domain(format!("values must be positive, got {x}")));
        }
        hazard += spec.cumulative_hazard(x)?;
    }
    Ok((-(plan.s() as f64) * (1.0 - theta).ln() - theta * hazard).exp())
}

/// `(1 - theta)^(-N) exp(-theta sum_i Lambda_i(x_i))` over all components.
pub fn likelihood_ratio_conventional(
    scenario: &Scenario,
    theta: f64,
    values: &[f64],
) -> Result<f64> {
    check_theta(theta)?;
    if values.len() != scenario.len() {
        return Err(Error::parameter(format!(
            "expected {} values, got {}",
            scenario.len(),
            values.len()
        )));
    }
    let mut hazard = 0.0;
    for (spec, &x) in scenario.components().iter().zip(values) {
        if !(x > 0.0) {
            return Err(Error::domain(format!("values must be positive, got {x}")));
        }
        hazard += spec.cumulative_hazard(x)?;
    }
    Ok((-(values.len() as f64) * (1.0 - theta).ln() - theta * hazard).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyReport {
    /// `alpha (1 - alpha) / var_IS`: the factor of runs saved over naive MC.
    pub xi: f64,
    pub baseline_alpha: f64,
}

pub fn efficiency(is_report: &EstimateReport, alpha_ref: f64) -> Result<EfficiencyReport> {
    if !(alpha_ref > 0.0 && alpha_ref < 1.0) {
        return Err(Error::domain(format!(
            "reference probability must lie in (0, 1), got {alpha_ref}"
        )));
    }
    if !(is_report.variance > 0.0) {
        return Err(Error::Degenerate(format!(
            "{} estimate has zero variance",
            is_report.method
        )));
    }
    Ok(EfficiencyReport {
        xi: alpha_ref * (1.0 - alpha_ref) / is_report.variance,
        baseline_alpha: alpha_ref,
    })
}

/// `ln E[T^2] / ln alpha`. Equals 1 for naive MC and is at most 2.
pub fn optimality_ratio(second_moment: f64, alpha: f64) -> Result<f64> {
    if !(second_moment > 0.0 && second_moment < 1.0) {
        return Err(Error::domain(format!(
            "second moment must lie in (0, 1), got {second_moment}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(second_moment.ln() / alpha.ln())
}

/// Runs `f` on a dedicated pool of `workers` threads.
#[cfg(feature = "parallel")]
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::parameter(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
pub fn with_workers<R: Send>(_workers: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    Ok(f())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(k: f64) -> DistributionSpec {
        DistributionSpec::weibull(k, 1.0).unwrap()
    }

    fn fig2(n: usize, db: f64) -> Scenario {
        let mut c = vec![w(0.4)];
        c.extend(std::iter::repeat_n(w(0.8), n - 1));
        Scenario::new(c, db).unwrap()
    }

    #[test]
    fn zero_threshold_always_hit() {
        let sc = Scenario::new(vec![w(0.4), w(0.8)], f64::NEG_INFINITY).unwrap();
        let r = estimate_naive(&sc, 1000, 1).unwrap();
        assert_eq!(r.alpha_hat, 1.0);
        assert_eq!(r.variance, 0.0);
    }

    #[test]
    fn single_weibull_tail() {
        let sc = Scenario::new(vec![w(0.4)], 20.0).unwrap();
        let r = estimate_naive(&sc, 1_000_000, 3).unwrap();
        let exact = (-100f64.powf(0.4)).exp();
        assert!((r.alpha_hat - exact).abs() < 3.0 * r.std_error());
        assert!(r.ci95_low <= r.alpha_hat && r.alpha_hat <= r.ci95_high);
    }

    #[test]
    fn untwisted_improved_equals_naive() {
        let sc = fig2(2, 15.0);
        let plan = select_dominant(&sc);
        let a = estimate_improved(&sc, &plan, 100_000, 9).unwrap();
        let b = estimate_naive(&sc, 100_000, 9).unwrap();
        assert_eq!(a.alpha_hat, b.alpha_hat);
        assert_eq!(a.second_moment, b.second_moment);
    }

    #[test]
    fn iid_improved_equals_conventional() {
        let sc = Scenario::new(vec![w(0.5); 3], 15.0).unwrap();
        let plan = select_dominant(&sc)
            .with_theta(0.6, ThetaSource::Manual)
            .unwrap();
        let a = estimate_improved(&sc, &plan, 100_000, 4).unwrap();
        let b = estimate_conventional(&sc, 0.6, 100_000, 4).unwrap();
        assert_eq!(a.alpha_hat, b.alpha_hat);
        assert_eq!(a.second_moment, b.second_moment);
        assert_eq!(a.variance, b.variance);
    }

    #[test]
    fn likelihood_ratio_formula() {
        let sc = fig2(2, 20.0);
        let plan = select_dominant(&sc);
        assert_eq!(
            likelihood_ratio_improved(&plan, &[37.0], &w(0.4)).unwrap(),
            1.0
        );
        let plan = plan.with_theta(0.8415, ThetaSource::Manual).unwrap();
        let got = likelihood_ratio_improved(&plan, &[100.0], &w(0.4)).unwrap();
        let want = (1.0 / 0.1585) * (-0.8415 * 100f64.powf(0.4)).exp();
        assert!((got / want - 1.0).abs() < 1e-12);
        assert!(likelihood_ratio_improved(&plan, &[], &w(0.4)).is_err());
        assert!(likelihood_ratio_improved(&plan, &[0.0], &w(0.4)).is_err());
    }

    #[test]
    fn efficiency_edges() {
        let mut r = estimate_naive(&fig2(2, 10.0), 10_000, 1).unwrap();
        let a = 0.3;
        r.variance = a * (1.0 - a);
        assert!((efficiency(&r, a).unwrap().xi - 1.0).abs() < 1e-15);
        r.variance = 0.0;
        assert!(matches!(efficiency(&r, a), Err(Error::Degenerate(_))));
        r.variance = 0.1;
        assert!(efficiency(&r, 1.0).is_err());
    }

    #[test]
    fn optimality_ratio_edges() {
        let a: f64 = 1e-5;
        assert!((optimality_ratio(a, a).unwrap() - 1.0).abs() < 1e-15);
        assert!((optimality_ratio(a * a, a).unwrap() - 2.0).abs() < 1e-15);
        assert!(optimality_ratio(1.0, a).is_err());
        assert!(optimality_ratio(a, 1.5).is_err());
        assert!(optimality_ratio(0.0, a).is_err());
    }

    #[test]
    fn parameter_errors() {
        let sc = fig2(2, 20.0);
        assert!(estimate_naive(&sc, 0, 1).is_err());
        assert!(estimate_conventional(&sc, 1.0, 10, 1).is_err());
        assert!(estimate_conventional(&sc, -0.5, 10, 1).is_err());
    }

    #[test]
    fn chunk_boundaries_deterministic() {
        let sc = fig2(2, 18.0);
        let runs = CHUNK_SIZE * 2 + 17;
        let a = with_workers(1, || estimate_conventional(&sc, 0.5, runs, 5))
            .unwrap()
            .unwrap();
        let b = with_workers(3, || estimate_conventional(&sc, 0.5, runs, 5))
            .unwrap()
            .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.runs, runs);
    }

    #[test]
    fn method_parsing() {
        assert_eq!("Improved".parse::<Method>().unwrap(), Method::ImprovedIs);
        assert_eq!("naive".parse::<Method>().unwrap(), Method::NaiveMc);
        assert!("bogus".parse::<Method>().is_err());
    }
}
