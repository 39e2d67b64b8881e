use serde::{Deserialize, Serialize};

use super::{log_sum_exp, CandidateSpace, HyperParams, ModelError, ModelParams};
use crate::features::{FeatureVector, Role};

/// Option index chosen in every (document, relation) factor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    /// `choices[d][k]`.
    pub choices: Vec<Vec<usize>>,
}

/// Log probability of a candidate's feature values under the
/// product-of-experts emission: per template, relation `k` contributes its
/// foreground vector if `chosen_by[k]`, otherwise its background vector,
/// and the product is normalized over the template's values.
pub fn feature_emission_log(
    fv: &FeatureVector,
    role: Role,
    chosen_by: &[bool],
    params: &ModelParams,
) -> Result<f64, ModelError> {
    if chosen_by.len() != params.k() {
        return Err(ModelError::Dimension(format!(
            "chosen_by has {} entries for K = {}",
            chosen_by.len(),
            params.k()
        )));
    }
    let mut total = 0.0;
    for &(slot, v) in &fv.entries {
        let vectors: Vec<&Vec<f64>> = params
            .relations
            .iter()
            .zip(chosen_by)
            .map(|(r, &fg)| {
                let fam = match (role, fg) {
                    (Role::Indicator, true) => &r.theta_i,
                    (Role::Indicator, false) => &r.theta_bi,
                    (Role::Argument, true) => &r.theta_a,
                    (Role::Argument, false) => &r.theta_ba,
                };
                fam.get(slot).ok_or_else(|| {
                    ModelError::Dimension(format!("no parameters for template slot {slot}"))
                })
            })
            .collect::<Result<_, _>>()?;
        let card = vectors[0].len();
        if (v as usize) >= card || vectors.iter().any(|x| x.len() != card) {
            return Err(ModelError::Dimension(format!(
                "value {v} outside template slot {slot}"
            )));
        }
        let joint = |value: usize| -> f64 { vectors.iter().map(|x| x[value].ln()).sum() };
        total += joint(v as usize) - log_sum_exp((0..card).map(joint));
    }
    Ok(total)
}

fn document_term(
    space: &CandidateSpace,
    params: &ModelParams,
    d: usize,
    choices: &[usize],
) -> Result<f64, ModelError> {
    let ds = &space.docs[d];
    let k = params.k();
    if choices.len() != k {
        return Err(ModelError::Dimension(format!(
            "document {d} has {} choices for K = {k}",
            choices.len()
        )));
    }
    let mut total = 0.0;
    let mut ind_chosen = vec![vec![false; k]; ds.indicators.len()];
    let mut arg_chosen = vec![vec![false; k]; ds.arguments.len()];
    for (kk, &o) in choices.iter().enumerate() {
        if o >= ds.n_options() {
            return Err(ModelError::Dimension(format!(
                "option {o} outside document {d}"
            )));
        }
        total += ds.option_log_prior(o, &params.relations[kk].lambda);
        if let Some(t) = ds.options[o].triple() {
            let t = ds.triples[t];
            ind_chosen[t.indicator][kk] = true;
            arg_chosen[t.argument][kk] = true;
        }
    }
    for (fv, c) in ds.ind_features.iter().zip(&ind_chosen) {
        total += feature_emission_log(fv, Role::Indicator, c, params)?;
    }
    for (fv, c) in ds.arg_features.iter().zip(&arg_chosen) {
        total += feature_emission_log(fv, Role::Argument, c, params)?;
    }
    Ok(total)
}

/// Exact log joint of parameters, latent choices and observed features.
pub fn log_joint(
    params: &ModelParams,
    assignment: &Assignment,
    space: &CandidateSpace,
    hyper: &HyperParams,
) -> Result<f64, ModelError> {
    if assignment.choices.len() != space.docs.len() {
        return Err(ModelError::Dimension(
            "assignment does not cover the corpus".into(),
        ));
    }
    let mut total = params.log_prior(hyper);
    for (d, c) in assignment.choices.iter().enumerate() {
        total += document_term(space, params, d, c)?;
    }
    Ok(total)
}

/// Log joint maintained under single-factor changes; only the touched
/// document is re-evaluated.
#[derive(Debug)]
pub struct JointEvaluator<'a> {
    space: &'a CandidateSpace,
    params: &'a ModelParams,
    assignment: Assignment,
    prior: f64,
    doc_terms: Vec<f64>,
}

impl<'a> JointEvaluator<'a> {
    pub fn new(
        params: &'a ModelParams,
        space: &'a CandidateSpace,
        hyper: &HyperParams,
        assignment: Assignment,
    ) -> Result<Self, ModelError> {
        let doc_terms = assignment
            .choices
            .iter()
            .enumerate()
            .map(|(d, c)| document_term(space, params, d, c))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            space,
            params,
            prior: params.log_prior(hyper),
            assignment,
            doc_terms,
        })
    }

    pub fn set(&mut self, d: usize, k: usize, option: usize) -> Result<(), ModelError> {
        let old = self.assignment.choices[d][k];
        self.assignment.choices[d][k] = option;
        match document_term(self.space, self.params, d, &self.assignment.choices[d]) {
            Ok(v) => {
                self.doc_terms[d] = v;
                Ok(())
            }
            Err(e) => {
                self.assignment.choices[d][k] = old;
                Err(e)
            }
        }
    }

    pub fn total(&self) -> f64 {
        self.prior + self.doc_terms.iter().sum::<f64>()
    }

    pub fn assignment(&self) -> &Assignment {
        &self.assignment
    }
}
