//! Minmax twisting parameters.
//!
//! The bounds on the likelihood ratio reduce to separable problems of the
//! form
//!
//! ```text
//! minimize   sum_j w_j Lambda_j(x_j)
//! subject to sum_j x_j >= gamma,  x_j >= 0
//! ```
//!
//! Every `Lambda_j` is nondecreasing with `Lambda_j(0) = 0`, so the
//! constraint is active at an optimum and the search runs over the simplex
//! face `sum_j x_j = gamma`. Concave hazards put the optimum on a vertex;
//! log-normal hazards are convex near the origin, so interior candidates are
//! searched as well.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distributions::DistributionSpec;
use crate::dominance::{approx_eq, select_dominant, Scenario, ThetaSource, TwistPlan};
use crate::error::{Error, Result};

const MULTI_STARTS: usize = 8;
const MAX_DESCENT_ITERS: usize = 500;
const OBJECTIVE_TOL: f64 = 1e-10;
const PAIR_SCAN_POINTS: usize = 64;

/// Minimizer of a separable hazard problem.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub argmin_x: Vec<f64>,
    pub objective_value: f64,
    pub attained_on_boundary: bool,
}

#[derive(Debug, Clone)]
struct Term {
    weight: f64,
    spec: DistributionSpec,
}

/// `sum_j w_j Lambda_j(x_j)` over `{x >= 0, sum x = budget}`.
#[derive(Debug, Clone)]
pub struct SeparableProblem {
    terms: Vec<Term>,
    budget: f64,
}

impl SeparableProblem {
    pub fn new(terms: Vec<(f64, DistributionSpec)>, budget: f64) -> Result<Self> {
        if !(budget > 0.0 && budget.is_finite()) {
            return Err(Error::parameter(format!(
                "infeasible threshold: need 0 < gamma < inf, got {budget}"
            )));
        }
        if terms.is_empty() {
            return Err(Error::parameter("optimization problem has no variables"));
        }
        if terms.iter().any(|(w, _)| !(*w > 0.0)) {
            return Err(Error::parameter("objective weights must be positive"));
        }
        let terms = terms
            .into_iter()
            .map(|(weight, spec)| Term { weight, spec })
            .collect();
        Ok(Self { terms, budget })
    }

    pub fn dimension(&self) -> usize {
        self.terms.len()
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    #[inline]
    fn term_value(&self, j: usize, x: f64) -> f64 {
        let t = &self.terms[j];
        t.weight * t.spec.cumulative_hazard_unchecked(x)
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(j, &v)| self.term_value(j, v))
            .sum()
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        // Weibull hazards blow up at 0; evaluate slightly inside.
        let floor = self.budget * 1e-12;
        let cap = 1e12 / self.budget;
        x.iter()
            .zip(&self.terms)
            .map(|(&v, t)| {
                let h = t.spec.hazard_rate(v.max(floor)).unwrap_or(cap);
                (t.weight * h).min(cap)
            })
            .collect()
    }

    fn finish(&self, mut x: Vec<f64>) -> OptimizationResult {
        let snap = self.budget * 1e-12;
        for v in x.iter_mut() {
            if *v < snap {
                *v = 0.0;
            }
        }
        let total: f64 = x.iter().sum();
        if total < self.budget {
            let scale = self.budget / total;
            x.iter_mut().for_each(|v| *v *= scale);
        }
        OptimizationResult {
            objective_value: self.objective(&x),
            attained_on_boundary: x.contains(&0.0),
            argmin_x: x,
        }
    }

    /// Vertex and equal-split candidates. The equal splits cover the
    /// symmetric KKT points of each group of identical terms.
    fn structured_candidates(&self) -> Vec<Vec<f64>> {
        let n = self.dimension();
        let mut out = Vec::new();
        for j in 0..n {
            let mut x = vec![0.0; n];
            x[j] = self.budget;
            out.push(x);
        }
        let mut seen = vec![false; n];
        for j in 0..n {
            if seen[j] {
                continue;
            }
            let group: Vec<usize> = (j..n)
                .filter(|&i| {
                    approx_eq(self.terms[i].weight, self.terms[j].weight)
                        && self.terms[i].spec == self.terms[j].spec
                })
                .collect();
            for &i in &group {
                seen[i] = true;
            }
            for r in 2..=group.len() {
                let mut x = vec![0.0; n];
                for &i in &group[..r] {
                    x[i] = self.budget / r as f64;
                }
                out.push(x);
            }
        }
        if n > 1 {
            out.push(vec![self.budget / n as f64; n]);
        }
        out
    }

    fn random_starts(&self) -> Vec<Vec<f64>> {
        let n = self.dimension();
        let mut rng = ChaCha8Rng::seed_from_u64(0x0005_eed0_f7a1);
        (0..MULTI_STARTS)
            .map(|_| {
                // Uniform on the simplex via normalized exponentials.
                let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
                let total: f64 = e.iter().sum();
                e.into_iter().map(|v| v / total * self.budget).collect()
            })
            .collect()
    }

    /// Projected gradient descent with Armijo backtracking.
    fn descend(&self, mut x: Vec<f64>) -> Vec<f64> {
        let mut fx = self.objective(&x);
        for _ in 0..MAX_DESCENT_ITERS {
            let g = self.gradient(&x);
            let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if gmax == 0.0 {
                break;
            }
            let mut step = self.budget / gmax;
            let mut improved = false;
            for _ in 0..60 {
                let trial: Vec<f64> = x.iter().zip(&g).map(|(v, d)| v - step * d).collect();
                let trial = project_simplex(&trial, self.budget);
                let decrease: f64 = g
                    .iter()
                    .zip(x.iter().zip(&trial))
                    .map(|(d, (a, b))| d * (a - b))
                    .sum();
                let ft = self.objective(&trial);
                if ft <= fx - 1e-4 * decrease && ft < fx {
                    let rel_gain = (fx - ft) / fx.abs().max(1e-300);
                    x = trial;
                    fx = ft;
                    improved = rel_gain > OBJECTIVE_TOL;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        x
    }

    /// Golden-section refinement of mass exchanges between coordinate pairs.
    fn polish_pairs(&self, mut x: Vec<f64>) -> Vec<f64> {
        let n = self.dimension();
        for _ in 0..50 {
            let mut changed = false;
            for i in 0..n {
                for j in (i + 1)..n {
                    let c = x[i] + x[j];
                    if c <= 0.0 {
                        continue;
                    }
                    let pair = |a: f64| self.term_value(i, a) + self.term_value(j, c - a);
                    let current = pair(x[i]);
                    let best = minimize_on_interval(pair, c);
                    let value = pair(best);
                    if value < current - OBJECTIVE_TOL * current.abs().max(1e-300) {
                        x[i] = best;
                        x[j] = c - best;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        x
    }

    pub fn solve(&self) -> OptimizationResult {
        if self.dimension() == 1 {
            return self.finish(vec![self.budget]);
        }
        let mut best: Option<OptimizationResult> = None;
        let mut consider = |x: Vec<f64>| {
            let r = self.finish(x);
            if best
                .as_ref()
                .is_none_or(|b| r.objective_value < b.objective_value)
            {
                best = Some(r);
            }
        };
        for x in self.structured_candidates() {
            consider(x);
        }
        for x0 in self.random_starts() {
            consider(self.polish_pairs(self.descend(x0)));
        }
        best.expect("at least one candidate")
    }
}

/// Dense scan plus golden section on `[0, c]`.
fn minimize_on_interval(f: impl Fn(f64) -> f64, c: f64) -> f64 {
    let h = c / PAIR_SCAN_POINTS as f64;
    let (mut k_best, mut f_best) = (0, f(0.0));
    for k in 1..=PAIR_SCAN_POINTS {
        let v = f(k as f64 * h);
        if v < f_best {
            k_best = k;
            f_best = v;
        }
    }
    if k_best == 0 || k_best == PAIR_SCAN_POINTS {
        return k_best as f64 * h;
    }
    let (mut lo, mut hi) = ((k_best - 1) as f64 * h, (k_best + 1) as f64 * h);
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..100 {
        if hi - lo <= 1e-13 * c {
            break;
        }
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INV_PHI * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INV_PHI * (hi - lo);
            fb = f(b);
        }
    }
    let mid = 0.5 * (lo + hi);
    if f(mid) <= f_best {
        mid
    } else {
        k_best as f64 * h
    }
}

/// Euclidean projection onto `{x >= 0, sum x = total}` (sort-based).
pub(crate) fn project_simplex(v: &[f64], total: f64) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cumulative += uk;
        let t = (cumulative - total) / (k + 1) as f64;
        if uk - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// Problem (P): the dominant group alone, `min sum_{i<=s} Lambda_1(x_i)`.
/// Its value is `A(gamma)`.
pub fn solve_p(scenario: &Scenario, plan: &TwistPlan) -> Result<OptimizationResult> {
    let spec = *plan.dominant_spec(scenario);
    let terms = vec![(1.0, spec); plan.s()];
    Ok(SeparableProblem::new(terms, scenario.threshold_linear())?.solve())
}

/// Problem (P'): all components, dominant hazards doubled. Its value is
/// `A'(gamma)`.
pub fn solve_p_prime(scenario: &Scenario, plan: &TwistPlan) -> Result<OptimizationResult> {
    let terms = scenario
        .components()
        .iter()
        .enumerate()
        .map(|(i, &spec)| (if plan.is_dominant(i) { 2.0 } else { 1.0 }, spec))
        .collect();
    Ok(SeparableProblem::new(terms, scenario.threshold_linear())?.solve())
}

/// `max(0, 1 - s / A)`.
pub fn theta_star(s: usize, a: f64) -> Result<f64> {
    if s == 0 {
        return Err(Error::parameter("s must be positive"));
    }
    if !(a > 0.0) {
        return Err(Error::parameter(format!(
            "minmax objective must be positive, got {a}"
        )));
    }
    Ok((1.0 - s as f64 / a).max(0.0))
}

/// `ln h(theta) = -2 s ln(1 - theta) - 2 theta A`.
pub fn log_bound_h(s: usize, a: f64, theta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::parameter(format!(
            "twisting parameter must lie in [0, 1), got {theta}"
        )));
    }
    if !(a > 0.0) {
        return Err(Error::parameter(format!(
            "minmax objective must be positive, got {a}"
        )));
    }
    Ok(-2.0 * s as f64 * (1.0 - theta).ln() - 2.0 * theta * a)
}

/// Upper bound `h(theta) = (1 - theta)^(-2s) exp(-2 theta A)` on the dominant
/// second-moment term.
pub fn bound_h(plan: &TwistPlan, a: f64, theta: f64) -> Result<f64> {
    Ok(log_bound_h(plan.s(), a, theta)?.exp())
}

/// Value of the all-components problem `min sum_i Lambda_i(x_i)`.
pub fn conventional_objective(scenario: &Scenario) -> Result<OptimizationResult> {
    let terms = scenario.components().iter().map(|&c| (1.0, c)).collect();
    Ok(SeparableProblem::new(terms, scenario.threshold_linear())?.solve())
}

/// Minmax parameter when every component is twisted: `max(0, 1 - N / A_conv)`.
pub fn theta_conventional(scenario: &Scenario) -> Result<f64> {
    theta_star(
        scenario.len(),
        conventional_objective(scenario)?.objective_value,
    )
}

/// Dominant group with its minmax parameter, plus the solution of (P).
pub fn improved_plan(scenario: &Scenario) -> Result<(TwistPlan, OptimizationResult)> {
    let plan = select_dominant(scenario);
    let p = solve_p(scenario, &plan)?;
    let theta = theta_star(plan.s(), p.objective_value)?;
    Ok((plan.with_theta(theta, ThetaSource::MinmaxImproved)?, p))
}
