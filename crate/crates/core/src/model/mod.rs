//! The generative model: hyperparameters, relation parameters, candidate
//! spaces, exact log-joint evaluation and forward sampling.

mod joint;
mod params;
mod space;
pub mod synth;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use joint::{feature_emission_log, log_joint, Assignment, JointEvaluator};
pub use params::{log_dirichlet_density, ModelParams, RelationParams};
pub use space::{CandidateSpace, Choice, DocumentSpace, SpaceOptions, Triple};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid hyperparameters: {0}")]
    Hyper(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("infeasible shape: {0}")]
    Shape(String),
    #[error(transparent)]
    Feature(#[from] crate::features::FeatureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperParams {
    /// Number of relation types.
    pub k: usize,
    /// Number of document segments (L).
    pub segments: usize,
    /// Symmetric Dirichlet concentration of every feature distribution.
    pub theta0: f64,
    /// Symmetric Dirichlet concentration of the location distributions.
    pub lambda0: f64,
    /// Make an empty choice available in every (document, relation) factor.
    pub allow_null: bool,
    /// Prior weight of that empty choice.
    pub null_prior: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            k: 10,
            segments: crate::corpus::DEFAULT_SEGMENTS,
            theta0: 0.1,
            lambda0: 0.1,
            allow_null: false,
            null_prior: 1e-3,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.k == 0 {
            return Err(ModelError::Hyper("K must be at least 1".into()));
        }
        if self.segments == 0 {
            return Err(ModelError::Hyper("L must be at least 1".into()));
        }
        if !(self.theta0 > 0.0 && self.theta0.is_finite())
            || !(self.lambda0 > 0.0 && self.lambda0.is_finite())
        {
            return Err(ModelError::Hyper(
                "Dirichlet concentrations must be positive and finite".into(),
            ));
        }
        if !(self.null_prior > 0.0 && self.null_prior < 1.0) {
            return Err(ModelError::Hyper("null prior must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Numerically stable `ln Σ exp(x)`.
pub fn log_sum_exp<I>(xs: I) -> f64
where
    I: IntoIterator<Item = f64>,
    I::IntoIter: Clone,
{
    let xs = xs.into_iter();
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hyper_validation() {
        assert!(HyperParams::default().validate().is_ok());
        assert!(HyperParams {
            k: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(HyperParams {
            theta0: 0.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(HyperParams {
            segments: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn lse() {
        let v = log_sum_exp([0.5f64.ln(), 0.25f64.ln(), 0.25f64.ln()]);
        assert!(v.abs() < 1e-12);
        assert_eq!(log_sum_exp([f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((log_sum_exp([1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-9);
    }
}
