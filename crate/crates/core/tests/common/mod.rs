#![allow(dead_code)]

use hazard_twist::DistributionSpec;

pub fn weibull(k: f64, beta: f64) -> DistributionSpec {
    DistributionSpec::weibull(k, beta).unwrap()
}

pub fn lognormal(mu_db: f64, sigma_db: f64) -> DistributionSpec {
    DistributionSpec::lognormal_db(mu_db, sigma_db).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        ((a - b) / b).abs()
    }
}

pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// Two-sided Kolmogorov-Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.627_6 / (n as f64).sqrt()
}

/// Adaptive Simpson quadrature on `[a, b]`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn step(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Root of an increasing function by bisection on `[lo, hi]`.
pub fn bisect(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All points of the simplex grid `{x_i = k_i * total / steps, sum k_i = steps}`.
pub fn simplex_grid(dim: usize, steps: usize, total: f64, visit: &mut impl FnMut(&[f64])) {
    fn rec(
        prefix: &mut Vec<f64>,
        dim: usize,
        left: usize,
        steps: usize,
        total: f64,
        visit: &mut impl FnMut(&[f64]),
    ) {
        if prefix.len() == dim - 1 {
            prefix.push(left as f64 * total / steps as f64);
            visit(prefix);
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k as f64 * total / steps as f64);
            rec(prefix, dim, left - k, steps, total, visit);
            prefix.pop();
        }
    }
    rec(
        &mut Vec::with_capacity(dim),
        dim,
        steps,
        steps,
        total,
        visit,
    );
}
