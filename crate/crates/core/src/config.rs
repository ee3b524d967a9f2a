//! Line-oriented experiment configuration.
//!
//! ```text
//! # theta sweep, four log-normal components
//! gamma_db = 25
//! theta_grid = 0.2:0.05:0.95
//! runs = 1000000
//! seed = 1
//! methods = conventional,improved
//!
//! [component]
//! family = lognormal
//! mu_db = 0
//! sigma_db = 4
//! ```
//!
//! Top-level keys may appear anywhere; component keys apply to the most
//! recent `[component]` block. Grids are either `start:step:stop`
//! (inclusive) or comma-separated lists, and must be strictly increasing.

use std::fmt;

use crate::distributions::DistributionSpec;
use crate::dominance::Scenario;
use crate::error::{Error, Result};
use crate::estimators::Method;

pub const DEFAULT_RUNS: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    ThetaSweep,
    ThresholdSweep,
    EfficiencySweep,
    SingleEstimate,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExperimentKind::ThetaSweep => "theta-sweep",
            ExperimentKind::ThresholdSweep => "threshold-sweep",
            ExperimentKind::EfficiencySweep => "efficiency",
            ExperimentKind::SingleEstimate => "estimate",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Components plus the single threshold (`gamma_db`, or the first grid
    /// point when only a grid is given).
    pub scenario: Scenario,
    pub experiment: ExperimentKind,
    pub theta_grid: Vec<f64>,
    pub gamma_grid_db: Vec<f64>,
    /// `None` when the document does not list methods; each runner then
    /// uses its own default.
    pub methods: Option<Vec<Method>>,
    pub runs: u64,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Re-targets the config at another experiment, checking that the grids
    /// it needs are present.
    pub fn for_experiment(&self, kind: ExperimentKind) -> Result<Self> {
        match kind {
            ExperimentKind::ThetaSweep if self.theta_grid.is_empty() => {
                return Err(Error::config(
                    0,
                    "theta_grid",
                    "theta-sweep needs theta_grid",
                ))
            }
            ExperimentKind::ThresholdSweep | ExperimentKind::EfficiencySweep
                if self.gamma_grid_db.is_empty() =>
            {
                return Err(Error::config(
                    0,
                    "gamma_grid_db",
                    format!("{kind} needs gamma_grid_db or gamma_db"),
                ))
            }
            _ => {}
        }
        Ok(Self {
            experiment: kind,
            ..self.clone()
        })
    }

    pub fn methods_or(&self, default: &[Method]) -> Vec<Method> {
        self.methods.clone().unwrap_or_else(|| default.to_vec())
    }
}

#[derive(Default)]
struct ComponentDraft {
    line: usize,
    family: Option<(usize, String)>,
    k: Option<(usize, f64)>,
    beta: Option<(usize, f64)>,
    mu_db: Option<(usize, f64)>,
    sigma_db: Option<(usize, f64)>,
}

impl ComponentDraft {
    fn build(self) -> Result<DistributionSpec> {
        let (fam_line, family) = self
            .family
            .ok_or_else(|| Error::config(self.line, "family", "component is missing `family`"))?;
        let reject = |field: &Option<(usize, f64)>, key: &str, fam: &str| match field {
            Some((line, _)) => Err(Error::config(
                *line,
                key,
                format!("`{key}` is not a {fam} parameter"),
            )),
            None => Ok(()),
        };
        let need = |field: Option<(usize, f64)>, key: &str| {
            field.ok_or_else(|| {
                Error::config(self.line, key, format!("component is missing `{key}`"))
            })
        };
        match family.as_str() {
            "weibull" => {
                reject(&self.mu_db, "mu_db", "weibull")?;
                reject(&self.sigma_db, "sigma_db", "weibull")?;
                let (kl, k) = need(self.k, "k")?;
                let (bl, beta) = self.beta.unwrap_or((self.line, 1.0));
                if !(k > 0.0) {
                    return Err(Error::config(
                        kl,
                        "k",
                        format!("weibull_shape must be > 0, got {k}"),
                    ));
                }
                let spec = DistributionSpec::weibull(k, beta)
                    .map_err(|e| Error::config(bl, "beta", e.to_string()))?;
                if !spec.is_subexponential() {
                    log::warn!("line {kl}: weibull shape {k} >= 1 is not subexponential");
                }
                Ok(spec)
            }
            "lognormal" => {
                reject(&self.k, "k", "lognormal")?;
                reject(&self.beta, "beta", "lognormal")?;
                let (ml, mu) = self.mu_db.unwrap_or((self.line, 0.0));
                let (sl, sigma) = need(self.sigma_db, "sigma_db")?;
                if !(sigma > 0.0) {
                    return Err(Error::config(
                        sl,
                        "sigma_db",
                        format!("lognormal_sigma_db must be > 0, got {sigma}"),
                    ));
                }
                DistributionSpec::lognormal_db(mu, sigma)
                    .map_err(|e| Error::config(ml, "mu_db", e.to_string()))
            }
            other => Err(Error::config(
                fam_line,
                "family",
                format!("unknown family `{other}` (expected weibull or lognormal)"),
            )),
        }
    }
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| !v.is_nan())
        .ok_or_else(|| Error::config(line, key, format!("`{value}` is not a number")))
}

fn parse_u64(line: usize, key: &str, value: &str) -> Result<u64> {
    let v = value.trim().replace('_', "");
    if let Ok(n) = v.parse::<u64>() {
        return Ok(n);
    }
    // Accept integral scientific notation such as 1e6.
    match v.parse::<f64>() {
        Ok(f) if f >= 0.0 && f.fract() == 0.0 && f < 1.8e19 => Ok(f as u64),
        _ => Err(Error::config(
            line,
            key,
            format!("`{value}` is not a nonnegative integer"),
        )),
    }
}

/// Parses `start:step:stop` (inclusive) or `a,b,c`.
pub fn parse_grid(line: usize, key: &str, value: &str) -> Result<Vec<f64>> {
    let value = value.trim();
    let grid = if value.contains(':') {
        let parts: Vec<&str> = value.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::config(line, key, "range must be start:step:stop"));
        }
        let start = parse_f64(line, key, parts[0])?;
        let step = parse_f64(line, key, parts[1])?;
        let stop = parse_f64(line, key, parts[2])?;
        if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
            return Err(Error::config(line, key, "range step must be > 0"));
        }
        if stop < start {
            return Err(Error::config(line, key, "range stop is below start"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if count > 1_000_000 {
            return Err(Error::config(line, key, "range has too many points"));
        }
        // Snap away accumulated binary noise so 0.2 + 3 * 0.05 prints as 0.35.
        (0..count)
            .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
            .collect()
    } else {
        value
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| parse_f64(line, key, p))
            .collect::<Result<Vec<f64>>>()?
    };
    if grid.is_empty() {
        return Err(Error::config(line, key, "grid is empty"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::config(
            line,
            key,
            "grid values must be strictly increasing",
        ));
    }
    Ok(grid)
}

fn parse_methods(line: usize, value: &str) -> Result<Vec<Method>> {
    let mut out = Vec::new();
    for name in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let m = name
            .parse::<Method>()
            .map_err(|e| Error::config(line, "methods", e.to_string()))?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(Error::config(line, "methods", "methods list is empty"));
    }
    Ok(out)
}

/// Parses a comma-separated method list (as given on the command line).
pub fn parse_method_list(value: &str) -> Result<Vec<Method>> {
    parse_methods(0, value)
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut components: Vec<ComponentDraft> = Vec::new();
    let mut gamma_db: Option<(usize, f64)> = None;
    let mut gamma_grid: Option<(usize, Vec<f64>)> = None;
    let mut theta_grid: Option<Vec<f64>> = None;
    let mut methods = None;
    let mut runs = DEFAULT_RUNS;
    let mut seed = DEFAULT_SEED;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            if content == "[component]" {
                components.push(ComponentDraft {
                    line,
                    ..Default::default()
                });
                continue;
            }
            return Err(Error::config(line, content, "unknown section"));
        }
        let (key, value) = content
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| Error::config(line, content, "expected `key = value`"))?;
        let set_once = |seen: bool| {
            if seen {
                Err(Error::config(line, key, "duplicate key"))
            } else {
                Ok(())
            }
        };
        match key {
            "gamma_db" => {
                set_once(gamma_db.is_some())?;
                gamma_db = Some((line, parse_f64(line, key, value)?));
            }
            "gamma_grid_db" => {
                set_once(gamma_grid.is_some())?;
                gamma_grid = Some((line, parse_grid(line, key, value)?));
            }
            "theta_grid" => {
                set_once(theta_grid.is_some())?;
                let grid = parse_grid(line, key, value)?;
                if grid.iter().any(|t| !(0.0..1.0).contains(t)) {
                    return Err(Error::config(line, key, "theta values must lie in [0, 1)"));
                }
                theta_grid = Some(grid);
            }
            "runs" => {
                runs = parse_u64(line, key, value)?;
                if runs == 0 {
                    return Err(Error::config(line, key, "runs must be at least 1"));
                }
            }
            "seed" => seed = parse_u64(line, key, value)?,
            "methods" => {
                set_once(methods.is_some())?;
                methods = Some(parse_methods(line, value)?);
            }
            "family" | "k" | "beta" | "mu_db" | "sigma_db" => {
                let c = components.last_mut().ok_or_else(|| {
                    Error::config(line, key, "component key outside a [component] block")
                })?;
                let dup = |seen: bool| {
                    if seen {
                        Err(Error::config(line, key, "duplicate key in component"))
                    } else {
                        Ok(())
                    }
                };
                match key {
                    "family" => {
                        dup(c.family.is_some())?;
                        c.family = Some((line, value.to_ascii_lowercase()));
                    }
                    "k" => {
                        dup(c.k.is_some())?;
                        c.k = Some((line, parse_f64(line, key, value)?));
                    }
                    "beta" => {
                        dup(c.beta.is_some())?;
                        c.beta = Some((line, parse_f64(line, key, value)?));
                    }
                    "mu_db" => {
                        dup(c.mu_db.is_some())?;
                        c.mu_db = Some((line, parse_f64(line, key, value)?));
                    }
                    _ => {
                        dup(c.sigma_db.is_some())?;
                        c.sigma_db = Some((line, parse_f64(line, key, value)?));
                    }
                }
            }
            other => return Err(Error::config(line, other, "unknown field")),
        }
    }

    if components.is_empty() {
        return Err(Error::config(0, "[component]", "no components defined"));
    }
    let first_line = components[0].line;
    let specs = components
        .into_iter()
        .map(ComponentDraft::build)
        .collect::<Result<Vec<_>>>()?;

    let gamma_grid_db = match (&gamma_grid, gamma_db) {
        (Some((_, g)), _) => g.clone(),
        (None, Some((_, g))) => vec![g],
        (None, None) => Vec::new(),
    };
    let threshold = match (gamma_db, &gamma_grid) {
        (Some((_, g)), _) => g,
        (None, Some((_, g))) => g[0],
        (None, None) => {
            return Err(Error::config(
                0,
                "gamma_db",
                "set gamma_db or gamma_grid_db",
            ));
        }
    };
    let scenario = Scenario::new(specs, threshold).map_err(|e| match e {
        Error::Parameter(msg) => Error::config(first_line, "family", msg),
        other => other,
    })?;

    let theta_grid = theta_grid.unwrap_or_default();
    let experiment = if !theta_grid.is_empty() {
        ExperimentKind::ThetaSweep
    } else if gamma_grid.is_some() {
        ExperimentKind::ThresholdSweep
    } else {
        ExperimentKind::SingleEstimate
    };

    Ok(ExperimentConfig {
        scenario,
        experiment,
        theta_grid,
        gamma_grid_db,
        methods,
        runs,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dominance::select_dominant;

    const FIG1: &str = "\
gamma_db = 25
theta_grid = 0.2:0.05:0.95
runs = 1e6
seed = 7
methods = conventional, improved

[component]
family = lognormal
mu_db = 0
sigma_db = 4
[component]
family = lognormal
mu_db = 0
sigma_db = 4
[component]
family = lognormal
mu_db = 0
sigma_db = 6
[component]
family = lognormal
mu_db = 0
sigma_db = 6
";

    fn line_of(e: &Error) -> usize {
        match e {
            Error::Config { line, .. } => *line,
            _ => panic!("not a config error: {e}"),
        }
    }

    #[test]
    fn parses_theta_sweep() {
        let c = parse_config(FIG1).unwrap();
        assert_eq!(c.experiment, ExperimentKind::ThetaSweep);
        assert_eq!(c.theta_grid.len(), 16);
        assert_eq!(c.theta_grid[3], 0.35);
        assert_eq!(c.theta_grid[15], 0.95);
        assert_eq!(c.runs, 1_000_000);
        assert_eq!(c.seed, 7);
        assert_eq!(c.scenario.len(), 4);
        assert_eq!(select_dominant(&c.scenario).s(), 2);
        assert_eq!(
            c.methods,
            Some(vec![Method::ConventionalIs, Method::ImprovedIs])
        );
    }

    #[test]
    fn rejects_zero_shape() {
        let e = parse_config("gamma_db=20\n[component]\nfamily=weibull\nk=0\n").unwrap_err();
        assert!(e.to_string().contains("weibull_shape must be > 0"), "{e}");
        assert_eq!(line_of(&e), 4);
    }

    #[test]
    fn rejects_mixed_families() {
        let text = "gamma_db=20\n[component]\nfamily=weibull\nk=0.4\n[component]\nfamily=lognormal\nsigma_db=6\n";
        let e = parse_config(text).unwrap_err();
        assert!(e.to_string().contains("family mismatch"), "{e}");
    }

    #[test]
    fn rejects_foreign_parameter() {
        let e = parse_config("gamma_db=20\n[component]\nfamily=weibull\nk=0.4\nsigma_db=3\n")
            .unwrap_err();
        assert!(e.to_string().contains("sigma_db"), "{e}");
        assert_eq!(line_of(&e), 5);
    }

    #[test]
    fn rejects_unknown_field() {
        let e = parse_config("gamma_db=20\ncolour=blue\n").unwrap_err();
        assert!(e.to_string().contains("colour"));
        assert_eq!(line_of(&e), 2);
    }

    #[test]
    fn rejects_bad_grids() {
        let base = "[component]\nfamily=weibull\nk=0.4\n";
        for bad in [
            "gamma_grid_db = 20,20,21",
            "gamma_grid_db = 30:1:20",
            "gamma_grid_db = 20:0:30",
            "theta_grid = 0.5:0.25:1.0\ngamma_db=1",
            "methods = ",
        ] {
            let e = parse_config(&format!("{bad}\n{base}")).unwrap_err();
            assert!(e.is_config(), "{bad}: {e}");
        }
    }

    #[test]
    fn threshold_grid_and_experiment_switch() {
        let c =
            parse_config("gamma_grid_db=20:6:32\n[component]\nfamily=weibull\nk=0.4\n").unwrap();
        assert_eq!(c.gamma_grid_db, vec![20.0, 26.0, 32.0]);
        assert_eq!(c.experiment, ExperimentKind::ThresholdSweep);
        assert_eq!(c.scenario.threshold_db(), 20.0);
        assert!(c.for_experiment(ExperimentKind::ThetaSweep).is_err());
        let e = c.for_experiment(ExperimentKind::EfficiencySweep).unwrap();
        assert_eq!(e.experiment, ExperimentKind::EfficiencySweep);
        assert_eq!(c.methods, None);
    }

    #[test]
    fn single_theta_grid() {
        let c = parse_config("gamma_db=25\ntheta_grid=0.5\n[component]\nfamily=weibull\nk=0.4\n")
            .unwrap();
        assert_eq!(c.theta_grid, vec![0.5]);
    }

    #[test]
    fn missing_pieces() {
        assert!(parse_config("gamma_db=20\n").is_err());
        assert!(parse_config("[component]\nfamily=weibull\nk=0.4\n").is_err());
        assert!(parse_config("gamma_db=20\nk=0.4\n").is_err());
        assert!(parse_config("gamma_db=20\n[component]\nk=0.4\n").is_err());
        assert!(parse_config("gamma_db=20\n[component]\nfamily=gamma\n").is_err());
    }
}
