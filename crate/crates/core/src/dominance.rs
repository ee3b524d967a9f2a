//! Scenarios, the dominant (heaviest-tailed) sub-group, and the
//! tail-dominance diagnostic.

use std::fmt;

use crate::distributions::{db_to_linear, DistributionSpec, Family};
use crate::error::{Error, Result};

/// Relative tolerance used when grouping parameters that should be equal.
pub const PARAM_TOLERANCE: f64 = 1e-12;

pub(crate) fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= PARAM_TOLERANCE * a.abs().max(b.abs())
}

/// A sum of independent components and the threshold it must exceed.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    components: Vec<DistributionSpec>,
    threshold_db: f64,
}

impl Scenario {
    pub fn new(components: Vec<DistributionSpec>, threshold_db: f64) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::parameter("a scenario needs at least one component"))?;
        let family = first.family();
        if let Some((i, c)) = components
            .iter()
            .enumerate()
            .find(|(_, c)| c.family() != family)
        {
            return Err(Error::parameter(format!(
                "family mismatch: component 1 is {family} but component {} is {}",
                i + 1,
                c.family()
            )));
        }
        // -inf dB is the zero threshold.
        if threshold_db.is_nan() || threshold_db == f64::INFINITY {
            return Err(Error::parameter(format!(
                "threshold must be below +inf dB, got {threshold_db}"
            )));
        }
        Ok(Self {
            components,
            threshold_db,
        })
    }

    pub fn components(&self) -> &[DistributionSpec] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn family(&self) -> Family {
        self.components[0].family()
    }

    pub fn threshold_db(&self) -> f64 {
        self.threshold_db
    }

    /// `10^(threshold_db / 10)`.
    pub fn threshold_linear(&self) -> f64 {
        db_to_linear(self.threshold_db)
    }

    pub fn with_threshold_db(&self, threshold_db: f64) -> Result<Self> {
        Self::new(self.components.clone(), threshold_db)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaSource {
    MinmaxImproved,
    MinmaxConventional,
    Manual,
}

/// Which components are twisted, and by how much.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistPlan {
    dominant_indices: Vec<usize>,
    theta: f64,
    theta_source: ThetaSource,
}

impl TwistPlan {
    /// Builds a plan for `scenario`. Indices are zero-based and must refer to
    /// components with identical parameters.
    pub fn new(
        scenario: &Scenario,
        mut dominant_indices: Vec<usize>,
        theta: f64,
        theta_source: ThetaSource,
    ) -> Result<Self> {
        dominant_indices.sort_unstable();
        dominant_indices.dedup();
        let &first = dominant_indices
            .first()
            .ok_or_else(|| Error::parameter("twist plan needs at least one dominant index"))?;
        if let Some(&bad) = dominant_indices.iter().find(|&&i| i >= scenario.len()) {
            return Err(Error::parameter(format!(
                "dominant index {bad} out of range for {} components",
                scenario.len()
            )));
        }
        let reference = scenario.components()[first].tail_key();
        for &i in &dominant_indices {
            let key = scenario.components()[i].tail_key();
            if !(approx_eq(key.0, reference.0) && approx_eq(key.1, reference.1)) {
                return Err(Error::parameter(format!(
                    "dominant components {} and {} differ in parameters",
                    first + 1,
                    i + 1
                )));
            }
        }
        check_theta(theta)?;
        Ok(Self {
            dominant_indices,
            theta,
            theta_source,
        })
    }

    pub fn dominant_indices(&self) -> &[usize] {
        &self.dominant_indices
    }

    /// Number of twisted components.
    pub fn s(&self) -> usize {
        self.dominant_indices.len()
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn theta_source(&self) -> ThetaSource {
        self.theta_source
    }

    pub fn is_dominant(&self, index: usize) -> bool {
        self.dominant_indices.binary_search(&index).is_ok()
    }

    pub fn with_theta(&self, theta: f64, source: ThetaSource) -> Result<Self> {
        check_theta(theta)?;
        Ok(Self {
            theta,
            theta_source: source,
            ..self.clone()
        })
    }

    /// The law shared by all dominant components.
    pub fn dominant_spec<'a>(&self, scenario: &'a Scenario) -> &'a DistributionSpec {
        &scenario.components()[self.dominant_indices[0]]
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

/// Selects the components with the heaviest right tail.
///
/// Weibull: smallest shape, then largest scale among those. Log-normal:
/// largest sigma, then largest mu among those. The returned plan has
/// `theta = 0` and source [`ThetaSource::Manual`].
pub fn select_dominant(scenario: &Scenario) -> TwistPlan {
    let keys: Vec<(f64, f64)> = scenario.components().iter().map(|c| c.tail_key()).collect();
    let primary = match scenario.family() {
        Family::Weibull => keys.iter().map(|k| k.0).fold(f64::INFINITY, f64::min),
        Family::LogNormal => keys.iter().map(|k| k.0).fold(f64::NEG_INFINITY, f64::max),
    };
    let secondary = keys
        .iter()
        .filter(|k| approx_eq(k.0, primary))
        .map(|k| k.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let dominant_indices = keys
        .iter()
        .enumerate()
        .filter(|(_, k)| approx_eq(k.0, primary) && approx_eq(k.1, secondary))
        .map(|(i, _)| i)
        .collect();
    TwistPlan {
        dominant_indices,
        theta: 0.0,
        theta_source: ThetaSource::Manual,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailVerdict {
    Satisfied,
    Violated,
    Inconclusive,
}

impl fmt::Display for TailVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TailVerdict::Satisfied => "SATISFIED",
            TailVerdict::Violated => "VIOLATED",
            TailVerdict::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// Gap `2 Lambda_1(gamma) - Lambda_i(gamma)` for one non-dominant component.
#[derive(Debug, Clone, PartialEq)]
pub struct TailDominance {
    pub component: usize,
    /// `(gamma_linear, gap)` pairs in grid order.
    pub gaps: Vec<(f64, f64)>,
    pub verdict: TailVerdict,
}

/// Required drop of the gap across the grid for a SATISFIED verdict.
const REQUIRED_DROP: f64 = 10.0;

/// Checks `P(X_i > g) = o(P(X_1 > g)^2)` on a grid of linear thresholds by
/// tracking whether `2 Lambda_1 - Lambda_i` heads to minus infinity.
/// Purely diagnostic.
pub fn check_tail_dominance(
    scenario: &Scenario,
    plan: &TwistPlan,
    gamma_grid: &[f64],
) -> Result<Vec<TailDominance>> {
    if gamma_grid.is_empty() {
        return Err(Error::parameter("tail-dominance grid is empty"));
    }
    if gamma_grid.iter().any(|g| !(*g > 0.0)) {
        return Err(Error::parameter("tail-dominance grid must be positive"));
    }
    if gamma_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::parameter(
            "tail-dominance grid must be strictly increasing",
        ));
    }
    let heavy = plan.dominant_spec(scenario);
    let report = scenario
        .components()
        .iter()
        .enumerate()
        .filter(|(i, _)| !plan.is_dominant(*i))
        .map(|(i, spec)| {
            let gaps: Vec<(f64, f64)> = gamma_grid
                .iter()
                .map(|&g| {
                    let gap = 2.0 * heavy.cumulative_hazard_unchecked(g)
                        - spec.cumulative_hazard_unchecked(g);
                    (g, gap)
                })
                .collect();
            TailDominance {
                component: i,
                verdict: verdict(&gaps),
                gaps,
            }
        })
        .collect();
    Ok(report)
}

fn verdict(gaps: &[(f64, f64)]) -> TailVerdict {
    let first = gaps[0].1;
    let last = gaps[gaps.len() - 1].1;
    let decreasing = gaps.windows(2).all(|w| w[1].1 <= w[0].1);
    let increasing = gaps.windows(2).all(|w| w[1].1 >= w[0].1) && last > first;
    if decreasing && last < first - REQUIRED_DROP {
        TailVerdict::Satisfied
    } else if increasing {
        TailVerdict::Violated
    } else {
        TailVerdict::Inconclusive
    }
}
