use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::model::{
    CandidateSpace, Choice, DocumentSpace, HyperParams, ModelParams, RelationParams,
};

/// Dirichlet parameters of one relation's variational factors, laid out
/// like [`RelationParams`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationDirichlets {
    pub theta_i: Vec<Vec<f64>>,
    pub theta_bi: Vec<Vec<f64>>,
    pub theta_a: Vec<Vec<f64>>,
    pub theta_ba: Vec<Vec<f64>>,
    pub lambda: Vec<f64>,
}

impl RelationDirichlets {
    fn prior(ind_cards: &[usize], arg_cards: &[usize], hyper: &HyperParams) -> Self {
        let fam = |cards: &[usize]| {
            cards
                .iter()
                .map(|&c| vec![hyper.theta0; c])
                .collect::<Vec<_>>()
        };
        Self {
            theta_i: fam(ind_cards),
            theta_bi: fam(ind_cards),
            theta_a: fam(arg_cards),
            theta_ba: fam(arg_cards),
            lambda: vec![hyper.lambda0; hyper.segments],
        }
    }

    fn families(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.theta_i
            .iter()
            .chain(&self.theta_bi)
            .chain(&self.theta_a)
            .chain(&self.theta_ba)
    }

    /// Posterior means.
    pub fn mean(&self) -> RelationParams {
        let norm = |v: &Vec<f64>| {
            let s: f64 = v.iter().sum();
            v.iter().map(|x| x / s).collect::<Vec<_>>()
        };
        let fam = |f: &Vec<Vec<f64>>| f.iter().map(norm).collect::<Vec<_>>();
        RelationParams {
            theta_i: fam(&self.theta_i),
            theta_bi: fam(&self.theta_bi),
            theta_a: fam(&self.theta_a),
            theta_ba: fam(&self.theta_ba),
            lambda: norm(&self.lambda),
        }
    }
}

/// `E[ln θ]` under `Dir(α)`.
pub fn expected_log(alpha: &[f64]) -> Vec<f64> {
    let total = digamma(alpha.iter().sum());
    alpha.iter().map(|&a| digamma(a) - total).collect()
}

/// `KL(Dir(α) || Dir(α0·1))`.
pub fn dirichlet_kl(alpha: &[f64], alpha0: f64) -> f64 {
    let n = alpha.len() as f64;
    let sum: f64 = alpha.iter().sum();
    let psi_sum = digamma(sum);
    ln_gamma(sum) - alpha.iter().map(|&a| ln_gamma(a)).sum::<f64>() - ln_gamma(alpha0 * n)
        + n * ln_gamma(alpha0)
        + alpha
            .iter()
            .map(|&a| (a - alpha0) * (digamma(a) - psi_sum))
            .sum::<f64>()
}

/// `E[ln θ]` of every family of one relation.
#[derive(Debug, Clone)]
pub(crate) struct ExpectedLogs {
    pub theta_i: Vec<Vec<f64>>,
    pub theta_bi: Vec<Vec<f64>>,
    pub theta_a: Vec<Vec<f64>>,
    pub theta_ba: Vec<Vec<f64>>,
    pub lambda: Vec<f64>,
}

impl ExpectedLogs {
    fn of(r: &RelationDirichlets) -> Self {
        let fam = |f: &Vec<Vec<f64>>| f.iter().map(|v| expected_log(v)).collect::<Vec<_>>();
        Self {
            theta_i: fam(&r.theta_i),
            theta_bi: fam(&r.theta_bi),
            theta_a: fam(&r.theta_a),
            theta_ba: fam(&r.theta_ba),
            lambda: expected_log(&r.lambda),
        }
    }
}

/// Per-document scores of one relation: the log weight of every option
/// and the option-independent background term.
#[derive(Debug, Clone)]
pub(crate) struct FactorScores {
    pub options: Vec<f64>,
    pub background: f64,
}

fn factor_scores(ds: &DocumentSpace, el: &ExpectedLogs) -> FactorScores {
    let sum_over = |fv: &crate::features::FeatureVector, fam: &Vec<Vec<f64>>| -> f64 {
        fv.entries.iter().map(|&(s, v)| fam[s][v as usize]).sum()
    };
    let ind_bg: Vec<f64> = ds
        .ind_features
        .iter()
        .map(|f| sum_over(f, &el.theta_bi))
        .collect();
    let arg_bg: Vec<f64> = ds
        .arg_features
        .iter()
        .map(|f| sum_over(f, &el.theta_ba))
        .collect();
    let ind_diff: Vec<f64> = ds
        .ind_features
        .iter()
        .zip(&ind_bg)
        .map(|(f, bg)| sum_over(f, &el.theta_i) - bg)
        .collect();
    let arg_diff: Vec<f64> = ds
        .arg_features
        .iter()
        .zip(&arg_bg)
        .map(|(f, bg)| sum_over(f, &el.theta_a) - bg)
        .collect();
    let options = ds
        .options
        .iter()
        .zip(&ds.option_base)
        .map(|(c, base)| match *c {
            Choice::Triple { triple, segment } => {
                let t = ds.triples[triple];
                el.lambda[segment] + base + ind_diff[t.indicator] + arg_diff[t.argument]
            }
            Choice::Null => *base,
        })
        .collect();
    FactorScores {
        options,
        background: ind_bg.iter().sum::<f64>() + arg_bg.iter().sum::<f64>(),
    }
}

/// Mean-field state: Dirichlet factors per relation and a categorical over
/// the options of every (document, relation) factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalState {
    pub relations: Vec<RelationDirichlets>,
    /// `c_hat[d][k][option]`.
    pub c_hat: Vec<Vec<Vec<f64>>>,
}

impl VariationalState {
    /// Dirichlets at the prior and uniform choice distributions.
    pub fn uniform(space: &CandidateSpace) -> Self {
        let hyper = &space.hyper;
        let (ic, ac) = (space.ind_cards(), space.arg_cards());
        Self {
            relations: (0..hyper.k)
                .map(|_| RelationDirichlets::prior(&ic, &ac, hyper))
                .collect(),
            c_hat: space
                .docs
                .iter()
                .map(|d| vec![vec![1.0 / d.n_options() as f64; d.n_options()]; hyper.k])
                .collect(),
        }
    }

    /// Like [`Self::uniform`] but every choice distribution is a draw from
    /// a flat Dirichlet.
    pub fn random<R: Rng>(space: &CandidateSpace, rng: &mut R) -> Self {
        let mut s = Self::uniform(space);
        for doc in &mut s.c_hat {
            for row in doc.iter_mut() {
                let draws: Vec<f64> = row.iter().map(|_| Exp1.sample(rng)).collect();
                let total: f64 = draws.iter().sum();
                *row = draws.iter().map(|x: &f64| x / total).collect();
            }
        }
        s
    }

    pub fn k(&self) -> usize {
        self.relations.len()
    }

    /// Conjugate update: every Dirichlet becomes prior plus the expected
    /// counts of its events under `c_hat`.
    pub fn update_q_theta(&mut self, space: &CandidateSpace) {
        let hyper = &space.hyper;
        let (ic, ac) = (space.ind_cards(), space.arg_cards());
        for (k, rel) in self.relations.iter_mut().enumerate() {
            let mut r = RelationDirichlets::prior(&ic, &ac, hyper);
            for (ds, doc_c) in space.docs.iter().zip(&self.c_hat) {
                let c = &doc_c[k];
                let mut p_ind = vec![0.0; ds.indicators.len()];
                let mut p_arg = vec![0.0; ds.arguments.len()];
                for (o, &mass) in c.iter().enumerate() {
                    if let Choice::Triple { triple, segment } = ds.options[o] {
                        let t = ds.triples[triple];
                        p_ind[t.indicator] += mass;
                        p_arg[t.argument] += mass;
                        r.lambda[segment] += mass;
                    }
                }
                for (fv, &p) in ds.ind_features.iter().zip(&p_ind) {
                    for &(s, v) in &fv.entries {
                        r.theta_i[s][v as usize] += p;
                        r.theta_bi[s][v as usize] += 1.0 - p;
                    }
                }
                for (fv, &p) in ds.arg_features.iter().zip(&p_arg) {
                    for &(s, v) in &fv.entries {
                        r.theta_a[s][v as usize] += p;
                        r.theta_ba[s][v as usize] += 1.0 - p;
                    }
                }
            }
            *rel = r;
        }
    }

    pub(crate) fn expected_logs(&self) -> Vec<ExpectedLogs> {
        self.relations.iter().map(ExpectedLogs::of).collect()
    }

    /// `scores[d][k]` under the current Dirichlets.
    pub(crate) fn scores(&self, space: &CandidateSpace) -> Vec<Vec<FactorScores>> {
        let els = self.expected_logs();
        space
            .docs
            .par_iter()
            .map(|ds| els.iter().map(|el| factor_scores(ds, el)).collect())
            .collect()
    }

    /// Normalized log weights `ln q'` of every factor, `[d][k][option]`.
    pub fn unconstrained_qz(&self, space: &CandidateSpace) -> Vec<Vec<Vec<f64>>> {
        self.scores(space)
            .into_iter()
            .map(|doc| {
                doc.into_iter()
                    .map(|f| {
                        let z = crate::model::log_sum_exp(f.options.iter().copied());
                        f.options.iter().map(|x| x - z).collect()
                    })
                    .collect()
            })
            .collect()
    }

    /// Negative evidence lower bound `E_q[ln q] - E_q[ln p]` of the
    /// factorized joint (product-of-experts normalizers omitted).
    pub fn free_energy(&self, space: &CandidateSpace) -> f64 {
        let hyper = &space.hyper;
        let kl: f64 = self
            .relations
            .iter()
            .map(|r| {
                r.families()
                    .map(|v| dirichlet_kl(v, hyper.theta0))
                    .sum::<f64>()
                    + dirichlet_kl(&r.lambda, hyper.lambda0)
            })
            .sum();
        let scores = self.scores(space);
        let choice: f64 = scores
            .iter()
            .zip(&self.c_hat)
            .map(|(doc_s, doc_c)| {
                doc_s
                    .iter()
                    .zip(doc_c)
                    .map(|(fs, c)| {
                        let body: f64 = c
                            .iter()
                            .zip(&fs.options)
                            .map(|(&q, &s)| if q > 0.0 { q * (q.ln() - s) } else { 0.0 })
                            .sum();
                        body - fs.background
                    })
                    .sum::<f64>()
            })
            .sum();
        kl + choice
    }

    /// Posterior-mean parameters.
    pub fn mean_params(&self) -> ModelParams {
        ModelParams {
            relations: self
                .relations
                .iter()
                .map(RelationDirichlets::mean)
                .collect(),
        }
    }

    /// Maximum deviation of any choice distribution's total from one.
    pub fn normalization_error(&self) -> f64 {
        self.c_hat
            .iter()
            .flatten()
            .map(|row| (row.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Mass per triple of factor `(d, k)`, summed over location draws.
    pub fn triple_mass(&self, space: &CandidateSpace, d: usize, k: usize) -> Vec<f64> {
        let ds = &space.docs[d];
        let mut m = vec![0.0; ds.triples.len()];
        for (o, &q) in self.c_hat[d][k].iter().enumerate() {
            if let Some(t) = ds.options[o].triple() {
                m[t] += q;
            }
        }
        m
    }
}
