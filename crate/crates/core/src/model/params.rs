use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::{HyperParams, ModelError};
use crate::features::FeatureVocabulary;

/// Parameters of one relation type. Each `theta_*` holds one probability
/// vector per template slot of the matching role vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationParams {
    pub theta_i: Vec<Vec<f64>>,
    pub theta_bi: Vec<Vec<f64>>,
    pub theta_a: Vec<Vec<f64>>,
    pub theta_ba: Vec<Vec<f64>>,
    pub lambda: Vec<f64>,
}

impl RelationParams {
    /// Uniform distributions everywhere.
    pub fn uniform(ind_cards: &[usize], arg_cards: &[usize], segments: usize) -> Self {
        let uni = |cards: &[usize]| -> Vec<Vec<f64>> {
            cards.iter().map(|&c| vec![1.0 / c as f64; c]).collect()
        };
        Self {
            theta_i: uni(ind_cards),
            theta_bi: uni(ind_cards),
            theta_a: uni(arg_cards),
            theta_ba: uni(arg_cards),
            lambda: vec![1.0 / segments as f64; segments],
        }
    }

    /// Every vector in a fixed order: the four feature families, then λ.
    pub fn vectors(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.theta_i
            .iter()
            .chain(&self.theta_bi)
            .chain(&self.theta_a)
            .chain(&self.theta_ba)
            .chain(std::iter::once(&self.lambda))
    }

    pub fn validate(
        &self,
        ind_cards: &[usize],
        arg_cards: &[usize],
        segments: usize,
    ) -> Result<(), ModelError> {
        let dims = |name: &str, fam: &[Vec<f64>], cards: &[usize]| -> Result<(), ModelError> {
            if fam.len() != cards.len() || fam.iter().zip(cards).any(|(v, &c)| v.len() != c) {
                return Err(ModelError::Dimension(format!(
                    "{name} does not match the vocabulary"
                )));
            }
            Ok(())
        };
        dims("theta_i", &self.theta_i, ind_cards)?;
        dims("theta_bi", &self.theta_bi, ind_cards)?;
        dims("theta_a", &self.theta_a, arg_cards)?;
        dims("theta_ba", &self.theta_ba, arg_cards)?;
        if self.lambda.len() != segments {
            return Err(ModelError::Dimension(format!(
                "lambda has {} entries for {segments} segments",
                self.lambda.len()
            )));
        }
        for v in self.vectors() {
            if v.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
                return Err(ModelError::Params(
                    "negative or non-finite probability".into(),
                ));
            }
            let s: f64 = v.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(ModelError::Params(format!("vector sums to {s}, not 1")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub relations: Vec<RelationParams>,
}

impl ModelParams {
    pub fn k(&self) -> usize {
        self.relations.len()
    }

    pub fn validate(
        &self,
        vocab: &FeatureVocabulary,
        hyper: &HyperParams,
    ) -> Result<(), ModelError> {
        if self.relations.len() != hyper.k {
            return Err(ModelError::Dimension(format!(
                "{} relation parameter sets for K = {}",
                self.relations.len(),
                hyper.k
            )));
        }
        let ic = vocab.indicator.cardinalities();
        let ac = vocab.argument.cardinalities();
        for r in &self.relations {
            r.validate(&ic, &ac, hyper.segments)?;
        }
        Ok(())
    }

    /// `Σ_k [log Dir(θ_k·; θ0) + log Dir(λ_k; λ0)]`.
    pub fn log_prior(&self, hyper: &HyperParams) -> f64 {
        self.relations
            .iter()
            .map(|r| {
                let feats: f64 = r
                    .theta_i
                    .iter()
                    .chain(&r.theta_bi)
                    .chain(&r.theta_a)
                    .chain(&r.theta_ba)
                    .map(|v| log_dirichlet_density(v, hyper.theta0))
                    .sum();
                feats + log_dirichlet_density(&r.lambda, hyper.lambda0)
            })
            .sum()
    }
}

/// Log density of a symmetric Dirichlet with concentration `alpha` at `p`.
pub fn log_dirichlet_density(p: &[f64], alpha: f64) -> f64 {
    let n = p.len() as f64;
    let norm = ln_gamma(alpha * n) - n * ln_gamma(alpha);
    let body: f64 = p
        .iter()
        .map(|&x| {
            if alpha == 1.0 {
                0.0
            } else {
                (alpha - 1.0) * x.ln()
            }
        })
        .sum();
    norm + body
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_dirichlet_density_is_log_gamma_of_dim() {
        // Dir(1,1,1) has density Γ(3) = 2 everywhere on the simplex.
        let v = log_dirichlet_density(&[0.2, 0.3, 0.5], 1.0);
        assert!((v - 2f64.ln()).abs() < 1e-12);
        // Beta(2,2) at 0.5: 6 * 0.25 = 1.5.
        let v = log_dirichlet_density(&[0.5, 0.5], 2.0);
        assert!((v - 1.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn validation_checks_dims_and_sums() {
        let r = RelationParams::uniform(&[2, 3], &[4], 4);
        assert!(r.validate(&[2, 3], &[4], 4).is_ok());
        assert!(r.validate(&[2, 2], &[4], 4).is_err());
        assert!(r.validate(&[2, 3], &[4], 3).is_err());
        let mut bad = r.clone();
        bad.theta_i[0] = vec![0.7, 0.7];
        assert!(bad.validate(&[2, 3], &[4], 4).is_err());
    }
}
