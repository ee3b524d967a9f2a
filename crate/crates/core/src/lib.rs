//! Importance sampling for right-tail probabilities of sums of independent
//! subexponential random variables.
//!
//! Two hazard-rate twisting estimators are provided next to crude Monte
//! Carlo: a conventional one that inflates the tail of every summand, and an
//! improved one that twists only the heaviest-tailed i.i.d. sub-group and
//! leaves the lighter components untouched. Both use minmax twisting
//! parameters obtained from separable hazard minimizations.
//!
//! ```
//! use hazard_twist::{DistributionSpec, Scenario, estimate_improved, improved_plan};
//!
//! let scenario = Scenario::new(
//!     vec![
//!         DistributionSpec::weibull(0.4, 1.0)?,
//!         DistributionSpec::weibull(0.8, 1.0)?,
//!     ],
//!     20.0, // dB
//! )?;
//! let (plan, _) = improved_plan(&scenario)?;
//! let report = estimate_improved(&scenario, &plan, 10_000, 1)?;
//! assert!(report.alpha_hat > 0.0);
//! # Ok::<(), hazard_twist::Error>(())
//! ```

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod distributions;
pub mod dominance;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod normal;
pub mod optimizer;
pub mod rng;

pub use config::{parse_config, ExperimentConfig, ExperimentKind};
pub use distributions::{db_to_linear, DistributionSpec, Family};
pub use dominance::{
    check_tail_dominance, select_dominant, Scenario, TailDominance, TailVerdict, ThetaSource,
    TwistPlan,
};
pub use error::{Error, Result};
pub use estimators::{
    efficiency, estimate_conventional, estimate_improved, estimate_naive, estimate_with_theta,
    likelihood_ratio_conventional, likelihood_ratio_improved, optimality_ratio, with_workers,
    EfficiencyReport, EstimateReport, Method,
};
pub use experiments::{
    run_diagnostics, run_efficiency_sweep, run_single_estimate, run_theta_sweep,
    run_threshold_sweep,
};
pub use optimizer::{
    bound_h, improved_plan, solve_p, solve_p_prime, theta_conventional, theta_star,
    OptimizationResult,
};
pub use rng::{UniformSource, UnitSampleStream};
