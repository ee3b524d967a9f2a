//! Weibull and log-normal component models.
//!
//! Every quantity is expressed through the cumulative hazard
//! `Lambda(x) = -ln(1 - F(x))`, which stays finite and accurate far into the
//! tail where `1 - F(x)` underflows. Sampling inverts `Lambda`: if `U` is
//! uniform then `Lambda^{-1}(-ln U / (1 - theta))` has survival function
//! `(1 - F(x))^(1 - theta)`, which is the hazard-twisted law.

use std::f64::consts::LN_10;
use std::fmt;

use crate::error::{Error, Result};
use crate::normal;
use crate::rng::UniformSource;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Weibull,
    LogNormal,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Weibull => f.write_str("weibull"),
            Family::LogNormal => f.write_str("lognormal"),
        }
    }
}

/// One summand's law.
///
/// Log-normal parameters are in dB: the variable is `10^(G/10)` with `G`
/// normal of mean `mu_db` and standard deviation `sigma_db`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionSpec {
    Weibull { shape: f64, scale: f64 },
    LogNormal { mu_db: f64, sigma_db: f64 },
}

/// Converts a dB quantity to the natural-log scale.
#[inline]
pub fn db_to_ln(db: f64) -> f64 {
    db * LN_10 / 10.0
}

/// Power convention: `10^(db/10)`.
#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
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

impl DistributionSpec {
    /// Weibull with shape `k` and scale `beta`. Shapes `k >= 1` are accepted
    /// but are not subexponential; see [`DistributionSpec::is_subexponential`].
    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite()) {
            return Err(Error::parameter(format!(
                "weibull_shape must be > 0, got {shape}"
            )));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::parameter(format!(
                "weibull_scale must be > 0, got {scale}"
            )));
        }
        Ok(DistributionSpec::Weibull { shape, scale })
    }

    pub fn lognormal_db(mu_db: f64, sigma_db: f64) -> Result<Self> {
        if !mu_db.is_finite() {
            return Err(Error::parameter(format!(
                "lognormal_mu_db must be finite, got {mu_db}"
            )));
        }
        if !(sigma_db > 0.0 && sigma_db.is_finite()) {
            return Err(Error::parameter(format!(
                "lognormal_sigma_db must be > 0, got {sigma_db}"
            )));
        }
        Ok(DistributionSpec::LogNormal { mu_db, sigma_db })
    }

    pub fn family(&self) -> Family {
        match self {
            DistributionSpec::Weibull { .. } => Family::Weibull,
            DistributionSpec::LogNormal { .. } => Family::LogNormal,
        }
    }

    /// False for Weibull shapes `k >= 1`, whose tails are exponential or lighter.
    pub fn is_subexponential(&self) -> bool {
        match *self {
            DistributionSpec::Weibull { shape, .. } => shape < 1.0,
            DistributionSpec::LogNormal { .. } => true,
        }
    }

    /// `(mu, sigma)` of `ln X` for the log-normal family.
    #[inline]
    fn ln_params(mu_db: f64, sigma_db: f64) -> (f64, f64) {
        (db_to_ln(mu_db), db_to_ln(sigma_db))
    }

    pub(crate) fn cumulative_hazard_unchecked(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match *self {
            DistributionSpec::Weibull { shape, scale } => (x / scale).powf(shape),
            DistributionSpec::LogNormal { mu_db, sigma_db } => {
                let (mu, sigma) = Self::ln_params(mu_db, sigma_db);
                -normal::log_upper_tail((x.ln() - mu) / sigma)
            }
        }
    }

    pub(crate) fn inverse_cumulative_hazard_unchecked(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        match *self {
            DistributionSpec::Weibull { shape, scale } => scale * y.powf(shape.recip()),
            DistributionSpec::LogNormal { mu_db, sigma_db } => {
                let (mu, sigma) = Self::ln_params(mu_db, sigma_db);
                (mu + sigma * normal::upper_quantile_from_neg_log(y)).exp()
            }
        }
    }

    fn hazard_rate_unchecked(&self, x: f64) -> f64 {
        match *self {
            DistributionSpec::Weibull { shape, scale } => {
                shape / scale * (x / scale).powf(shape - 1.0)
            }
            DistributionSpec::LogNormal { mu_db, sigma_db } => {
                let (mu, sigma) = Self::ln_params(mu_db, sigma_db);
                normal::normal_hazard((x.ln() - mu) / sigma) / (sigma * x)
            }
        }
    }

    /// Hazard rate `f(x) / (1 - F(x))`.
    pub fn hazard_rate(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::domain(format!("hazard rate needs x > 0, got {x}")));
        }
        Ok(self.hazard_rate_unchecked(x))
    }

    /// Cumulative hazard `-ln(1 - F(x))`.
    pub fn cumulative_hazard(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::domain(format!(
                "cumulative hazard needs x >= 0, got {x}"
            )));
        }
        Ok(self.cumulative_hazard_unchecked(x))
    }

    pub fn inverse_cumulative_hazard(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(Error::domain(format!(
                "inverse cumulative hazard needs y >= 0, got {y}"
            )));
        }
        Ok(self.inverse_cumulative_hazard_unchecked(y))
    }

    /// `ln f(x) = ln lambda(x) - Lambda(x)`.
    pub fn log_density(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            return Err(Error::domain(format!("log density needs x > 0, got {x}")));
        }
        Ok(self.hazard_rate_unchecked(x).ln() - self.cumulative_hazard_unchecked(x))
    }

    /// Log density of the law twisted by `theta`:
    /// `ln(1 - theta) + ln lambda(x) - (1 - theta) Lambda(x)`.
    pub fn log_twisted_density(&self, theta: f64, x: f64) -> Result<f64> {
        check_theta(theta)?;
        if !(x > 0.0) {
            return Err(Error::domain(format!("log density needs x > 0, got {x}")));
        }
        Ok((1.0 - theta).ln() + self.hazard_rate_unchecked(x).ln()
            - (1.0 - theta) * self.cumulative_hazard_unchecked(x))
    }

    /// Inverse-transform draw from a fixed uniform `u` in (0, 1).
    pub fn quantile_from_uniform(&self, u: f64) -> f64 {
        self.inverse_cumulative_hazard_unchecked(-u.ln())
    }

    /// Twisted inverse-transform draw from a fixed uniform `u` in (0, 1).
    pub fn twisted_quantile_from_uniform(&self, theta: f64, u: f64) -> Result<f64> {
        check_theta(theta)?;
        Ok(self.inverse_cumulative_hazard_unchecked(-u.ln() / (1.0 - theta)))
    }

    pub fn sample<S: UniformSource + ?Sized>(&self, stream: &mut S) -> f64 {
        self.quantile_from_uniform(stream.next_uniform())
    }

    pub fn sample_twisted<S: UniformSource + ?Sized>(
        &self,
        theta: f64,
        stream: &mut S,
    ) -> Result<f64> {
        check_theta(theta)?;
        self.twisted_quantile_from_uniform(theta, stream.next_uniform())
    }

    /// Draws from the law whose cumulative hazard is `Lambda / stretch`
    /// (`stretch = 1 / (1 - theta)`), returning the value together with its
    /// cumulative hazard under the original law.
    #[inline]
    pub(crate) fn draw_with_hazard<S: UniformSource + ?Sized>(
        &self,
        stretch: f64,
        stream: &mut S,
    ) -> (f64, f64) {
        let y = -stream.next_uniform().ln() * stretch;
        (self.inverse_cumulative_hazard_unchecked(y), y)
    }

    /// Hazard-function parameters that decide tail heaviness, compared
    /// lexicographically by `dominance`.
    pub(crate) fn tail_key(&self) -> (f64, f64) {
        match *self {
            DistributionSpec::Weibull { shape, scale } => (shape, scale),
            DistributionSpec::LogNormal { mu_db, sigma_db } => (sigma_db, mu_db),
        }
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistributionSpec::Weibull { shape, scale } => {
                write!(f, "Weibull(k={shape}, beta={scale})")
            }
            DistributionSpec::LogNormal { mu_db, sigma_db } => {
                write!(f, "LogNormal(mu={mu_db} dB, sigma={sigma_db} dB)")
            }
        }
    }
}
