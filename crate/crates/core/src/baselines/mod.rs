//! Utterance-level baselines and agglomerative clustering of decision-related
//! dialogue acts.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::corpus::{ClusterAssignment, Corpus, DecisionDocument, DialogueAct, Meeting};
use crate::pipeline::{Method, Summary, SummaryItem};
use crate::text::{preprocess, Stopwords};

/// Document frequencies over a collection of dialogue acts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Idf {
    n: usize,
    df: HashMap<String, usize>,
}

impl Idf {
    pub fn from_token_lists<'a>(lists: impl IntoIterator<Item = &'a [String]>) -> Self {
        let mut idf = Self::default();
        for toks in lists {
            idf.n += 1;
            let mut seen: Vec<&String> = toks.iter().collect();
            seen.sort();
            seen.dedup();
            for t in seen {
                *idf.df.entry(t.clone()).or_default() += 1;
            }
        }
        idf
    }

    /// Over every decision-related dialogue act of the corpus.
    pub fn from_corpus(corpus: &Corpus, stopwords: &Stopwords) -> Self {
        let lists: Vec<Vec<String>> = corpus
            .meetings
            .iter()
            .flat_map(Meeting::drdas)
            .map(|da| preprocess(&da.text(), stopwords))
            .collect();
        Self::from_token_lists(lists.iter().map(Vec::as_slice))
    }

    /// `ln(N / df)`, zero for unseen terms.
    pub fn idf(&self, term: &str) -> f64 {
        match self.df.get(term) {
            Some(&df) if df > 0 => (self.n as f64 / df as f64).ln(),
            _ => 0.0,
        }
    }

    pub fn documents(&self) -> usize {
        self.n
    }
}

/// Sparse non-negative term weights.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TfIdfVector {
    pub weights: BTreeMap<String, f64>,
    pub norm: f64,
}

impl TfIdfVector {
    pub fn new(tokens: &[String], idf: &Idf) -> Self {
        let mut weights: BTreeMap<String, f64> = BTreeMap::new();
        for t in tokens {
            *weights.entry(t.clone()).or_default() += 1.0;
        }
        for (t, w) in weights.iter_mut() {
            *w *= idf.idf(t);
        }
        weights.retain(|_, w| *w > 0.0);
        Self::from_weights(weights)
    }

    fn from_weights(weights: BTreeMap<String, f64>) -> Self {
        let norm = weights.values().map(|w| w * w).sum::<f64>().sqrt();
        Self { weights, norm }
    }

    /// Arithmetic mean of the vectors.
    pub fn centroid(vs: &[TfIdfVector]) -> Self {
        let mut weights: BTreeMap<String, f64> = BTreeMap::new();
        for v in vs {
            for (t, w) in &v.weights {
                *weights.entry(t.clone()).or_default() += w;
            }
        }
        let n = vs.len().max(1) as f64;
        weights.values_mut().for_each(|w| *w /= n);
        Self::from_weights(weights)
    }

    pub fn is_zero(&self) -> bool {
        self.norm == 0.0
    }

    /// Cosine similarity; zero if either vector is zero.
    pub fn cosine(&self, other: &Self) -> f64 {
        if self.is_zero() || other.is_zero() {
            return 0.0;
        }
        let (small, large) = if self.weights.len() <= other.weights.len() {
            (self, other)
        } else {
            (other, self)
        };
        let dot: f64 = small
            .weights
            .iter()
            .filter_map(|(t, w)| large.weights.get(t).map(|x| x * w))
            .sum();
        dot / (self.norm * other.norm)
    }
}

fn da_item(da: &DialogueAct) -> SummaryItem {
    SummaryItem::DialogueAct {
        da_id: da.id.clone(),
        text: da.text(),
    }
}

fn longest_index(dd: &DecisionDocument) -> Option<usize> {
    let mut best: Option<(usize, usize)> = None;
    for (i, da) in dd.das.iter().enumerate() {
        if best.is_none_or(|(_, n)| da.tokens.len() > n) {
            best = Some((i, da.tokens.len()));
        }
    }
    best.map(|(i, _)| i)
}

/// The dialogue act with the most tokens, earliest on ties.
pub fn longest_da(dd: &DecisionDocument) -> Summary {
    Summary {
        decision_id: dd.decision_id.clone(),
        method: Method::Longest,
        items: longest_index(dd)
            .map(|i| da_item(&dd.das[i]))
            .into_iter()
            .collect(),
    }
}

/// The dialogue act closest in TF-IDF cosine to the centroid of the
/// document, earliest on ties.
pub fn prototype_da(dd: &DecisionDocument, idf: &Idf, stopwords: &Stopwords) -> Summary {
    let vs: Vec<TfIdfVector> = dd
        .das
        .iter()
        .map(|da| TfIdfVector::new(&preprocess(&da.text(), stopwords), idf))
        .collect();
    let centroid = TfIdfVector::centroid(&vs);
    let pick = if vs.iter().all(TfIdfVector::is_zero) {
        if !dd.das.is_empty() {
            log::warn!(
                "{}: every dialogue act has a zero TF-IDF vector; using the longest",
                dd.decision_id
            );
        }
        longest_index(dd)
    } else {
        let mut best: Option<(usize, f64)> = None;
        for (i, v) in vs.iter().enumerate() {
            let c = v.cosine(&centroid);
            if best.is_none_or(|(_, b)| c > b) {
                best = Some((i, c));
            }
        }
        best.map(|(i, _)| i)
    };
    Summary {
        decision_id: dd.decision_id.clone(),
        method: Method::Prototype,
        items: pick.map(|i| da_item(&dd.das[i])).into_iter().collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StopRule {
    /// Merge while the best average-link similarity is at least this.
    Threshold(f64),
    /// Merge until this many clusters remain.
    Target(usize),
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule::Threshold(DEFAULT_THRESHOLD)
    }
}

pub const DEFAULT_THRESHOLD: f64 = 0.3;

/// Average-link agglomerative clustering over pairwise similarities.
/// Clusters are lists of item indices, ordered by their first member.
pub fn agglomerate(sim: &[Vec<f64>], rule: StopRule) -> Vec<Vec<usize>> {
    let n = sim.len();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let link = |a: &[usize], b: &[usize]| -> f64 {
        let total: f64 = a
            .iter()
            .flat_map(|&i| b.iter().map(move |&j| sim[i][j]))
            .sum();
        total / (a.len() * b.len()) as f64
    };
    loop {
        if let StopRule::Target(t) = rule {
            if clusters.len() <= t.max(1) {
                break;
            }
        }
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let s = link(&clusters[i], &clusters[j]);
                if best.is_none_or(|(_, _, b)| s > b) {
                    best = Some((i, j, s));
                }
            }
        }
        let Some((i, j, s)) = best else { break };
        if let StopRule::Threshold(tau) = rule {
            if s < tau {
                break;
            }
        }
        let merged = clusters.remove(j);
        clusters[i].extend(merged);
        clusters[i].sort_unstable();
    }
    clusters
}

/// Clusters the decision-related dialogue acts of one meeting.
pub fn cluster_drdas(
    meeting: &Meeting,
    idf: &Idf,
    stopwords: &Stopwords,
    rule: StopRule,
) -> Vec<Vec<Arc<DialogueAct>>> {
    let das: Vec<&Arc<DialogueAct>> = meeting.drdas().collect();
    let vs: Vec<TfIdfVector> = das
        .iter()
        .map(|da| TfIdfVector::new(&preprocess(&da.text(), stopwords), idf))
        .collect();
    let sim: Vec<Vec<f64>> = vs
        .iter()
        .enumerate()
        .map(|(i, a)| {
            vs.iter()
                .enumerate()
                .map(|(j, b)| if i == j { 1.0 } else { a.cosine(b) })
                .collect()
        })
        .collect();
    agglomerate(&sim, rule)
        .into_iter()
        .map(|c| c.into_iter().map(|i| Arc::clone(das[i])).collect())
        .collect()
}

/// Clusters every meeting; cluster ids are `<meeting>.c<n>`.
pub fn cluster_corpus(corpus: &Corpus, stopwords: &Stopwords, rule: StopRule) -> ClusterAssignment {
    let idf = Idf::from_corpus(corpus, stopwords);
    let mut entries = IndexMap::new();
    for m in &corpus.meetings {
        for (ci, cluster) in cluster_drdas(m, &idf, stopwords, rule)
            .into_iter()
            .enumerate()
        {
            for da in cluster {
                entries.insert(da.id.clone(), format!("{}.c{ci}", m.id));
            }
        }
    }
    ClusterAssignment { entries }
}
