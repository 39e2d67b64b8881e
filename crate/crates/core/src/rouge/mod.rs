//! ROUGE-1, ROUGE-2 and ROUGE-SU4 with stemming and stopword removal.

use std::collections::HashMap;
use std::hash::Hash;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::text::Stopwords;

pub use crate::text::preprocess;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RougeError {
    #[error("n must be 1 or 2 (got {0})")]
    Order(usize),
    #[error("summaries without a gold abstract: {}", .0.join(", "))]
    MissingGold(Vec<String>),
    #[error("gold abstracts without a summary: {}", .0.join(", "))]
    MissingSummary(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "R-1")]
    Rouge1,
    #[serde(rename = "R-2")]
    Rouge2,
    #[serde(rename = "R-SU4")]
    RougeSu4,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Rouge1, Metric::Rouge2, Metric::RougeSu4];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Rouge1 => "R-1",
            Metric::Rouge2 => "R-2",
            Metric::RougeSu4 => "R-SU4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    #[default]
    Macro,
    Micro,
}

impl std::str::FromStr for Aggregate {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "macro" => Ok(Aggregate::Macro),
            "micro" => Ok(Aggregate::Micro),
            other => Err(format!(
                "unknown aggregation {other:?} (expected macro or micro)"
            )),
        }
    }
}

/// Clipped overlap and unit totals of one comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub overlap: usize,
    pub system: usize,
    pub reference: usize,
}

impl Counts {
    pub fn scores(&self) -> Scores {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        Scores::new(
            ratio(self.overlap, self.system),
            ratio(self.overlap, self.reference),
        )
    }

    /// Recall is undefined and reported as zero.
    pub fn reference_empty(&self) -> bool {
        self.reference == 0
    }
}

impl std::ops::Add for Counts {
    type Output = Counts;
    fn add(self, o: Counts) -> Counts {
        Counts {
            overlap: self.overlap + o.overlap,
            system: self.system + o.system,
            reference: self.reference + o.reference,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Scores {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            precision,
            recall,
            f1,
        }
    }
}

fn clipped<T: Eq + Hash>(sys: Vec<T>, reference: Vec<T>) -> Counts {
    let (ns, nr) = (sys.len(), reference.len());
    let mut bag: HashMap<T, usize> = HashMap::new();
    for u in reference {
        *bag.entry(u).or_default() += 1;
    }
    let mut overlap = 0;
    for u in sys {
        if let Some(c) = bag.get_mut(&u) {
            if *c > 0 {
                *c -= 1;
                overlap += 1;
            }
        }
    }
    Counts {
        overlap,
        system: ns,
        reference: nr,
    }
}

fn ngrams(toks: &[String], n: usize) -> Vec<&[String]> {
    if toks.len() < n {
        Vec::new()
    } else {
        toks.windows(n).collect()
    }
}

pub fn rouge_n_counts(
    sys: &[String],
    reference: &[String],
    n: usize,
) -> Result<Counts, RougeError> {
    if !(1..=2).contains(&n) {
        return Err(RougeError::Order(n));
    }
    Ok(clipped(ngrams(sys, n), ngrams(reference, n)))
}

pub fn rouge_n(sys: &[String], reference: &[String], n: usize) -> Result<Scores, RougeError> {
    rouge_n_counts(sys, reference, n).map(|c| c.scores())
}

/// Largest number of tokens allowed between the two words of a skip bigram.
pub const MAX_GAP: usize = 4;

/// Skip bigrams with gap at most [`MAX_GAP`] plus one `(BEGIN, w)` unit
/// per token.
fn su_units(toks: &[String]) -> Vec<(Option<&str>, &str)> {
    let mut out: Vec<(Option<&str>, &str)> = toks.iter().map(|t| (None, t.as_str())).collect();
    for i in 0..toks.len() {
        for j in i + 1..toks.len().min(i + MAX_GAP + 2) {
            out.push((Some(toks[i].as_str()), toks[j].as_str()));
        }
    }
    out
}

pub fn rouge_su4_counts(sys: &[String], reference: &[String]) -> Counts {
    clipped(su_units(sys), su_units(reference))
}

pub fn rouge_su4(sys: &[String], reference: &[String]) -> Scores {
    rouge_su4_counts(sys, reference).scores()
}

pub fn metric_counts(metric: Metric, sys: &[String], reference: &[String]) -> Counts {
    match metric {
        Metric::Rouge1 => clipped(ngrams(sys, 1), ngrams(reference, 1)),
        Metric::Rouge2 => clipped(ngrams(sys, 2), ngrams(reference, 2)),
        Metric::RougeSu4 => rouge_su4_counts(sys, reference),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRow {
    pub decision_id: String,
    /// In [`Metric::ALL`] order.
    pub counts: [Counts; 3],
    pub scores: [Scores; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RougeReport {
    pub aggregate: Aggregate,
    pub rows: Vec<DecisionRow>,
    /// In [`Metric::ALL`] order.
    pub overall: [Scores; 3],
}

/// Scores system texts against gold texts, both keyed by decision id.
/// Rows follow the order of `summaries`.
pub fn evaluate(
    summaries: &IndexMap<String, String>,
    golds: &IndexMap<String, String>,
    stopwords: &Stopwords,
    aggregate: Aggregate,
) -> Result<RougeReport, RougeError> {
    let no_gold: Vec<String> = summaries
        .keys()
        .filter(|k| !golds.contains_key(*k))
        .cloned()
        .collect();
    if !no_gold.is_empty() {
        return Err(RougeError::MissingGold(no_gold));
    }
    let no_sys: Vec<String> = golds
        .keys()
        .filter(|k| !summaries.contains_key(*k))
        .cloned()
        .collect();
    if !no_sys.is_empty() {
        return Err(RougeError::MissingSummary(no_sys));
    }
    let rows: Vec<DecisionRow> = summaries
        .iter()
        .map(|(id, text)| {
            let sys = preprocess(text, stopwords);
            let reference = preprocess(&golds[id], stopwords);
            let counts = Metric::ALL.map(|m| metric_counts(m, &sys, &reference));
            if counts[0].reference_empty() {
                log::warn!(
                    "decision {id}: empty reference after preprocessing; recall reported as 0"
                );
            }
            DecisionRow {
                decision_id: id.clone(),
                counts,
                scores: counts.map(|c| c.scores()),
            }
        })
        .collect();
    let overall = std::array::from_fn(|m| match aggregate {
        Aggregate::Macro => {
            let n = rows.len().max(1) as f64;
            let mean =
                |f: fn(&Scores) -> f64| rows.iter().map(|r| f(&r.scores[m])).sum::<f64>() / n;
            Scores {
                precision: mean(|s| s.precision),
                recall: mean(|s| s.recall),
                f1: mean(|s| s.f1),
            }
        }
        Aggregate::Micro => rows
            .iter()
            .map(|r| r.counts[m])
            .fold(Counts::default(), |a, b| a + b)
            .scores(),
    });
    Ok(RougeReport {
        aggregate,
        rows,
        overall,
    })
}

impl RougeReport {
    pub fn get(&self, metric: Metric) -> Scores {
        self.overall[Metric::ALL
            .iter()
            .position(|m| *m == metric)
            .expect("known metric")]
    }

    /// `scope metric precision recall f1`, tab-separated, per decision
    /// then the aggregate under the scope `ALL`.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("scope\tmetric\tprecision\trecall\tf1\n");
        let line = |s: &mut String, scope: &str, m: Metric, sc: &Scores| {
            s.push_str(&format!(
                "{scope}\t{}\t{:.6}\t{:.6}\t{:.6}\n",
                m.name(),
                sc.precision,
                sc.recall,
                sc.f1
            ));
        };
        for r in &self.rows {
            for (m, sc) in Metric::ALL.iter().zip(&r.scores) {
                line(&mut s, &r.decision_id, *m, sc);
            }
        }
        for (m, sc) in Metric::ALL.iter().zip(&self.overall) {
            line(&mut s, "ALL", *m, sc);
        }
        s
    }

    /// One row per system with PREC/REC/F1 under each metric, in percent.
    pub fn table_row(&self, label: &str) -> String {
        let mut s = label.to_string();
        for sc in &self.overall {
            s.push_str(&format!(
                "\t{:.2}\t{:.2}\t{:.2}",
                100.0 * sc.precision,
                100.0 * sc.recall,
                100.0 * sc.f1
            ));
        }
        s
    }

    pub fn table_header() -> String {
        let mut s = "system".to_string();
        for m in Metric::ALL {
            for c in ["PREC", "REC", "F1"] {
                s.push_str(&format!("\t{} {c}", m.name()));
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn su4_worked_example() {
        let c = rouge_su4_counts(&t("a b c"), &t("a c"));
        assert_eq!(
            c,
            Counts {
                overlap: 3,
                system: 6,
                reference: 3
            }
        );
        let s = c.scores();
        assert!((s.precision - 0.5).abs() < 1e-12 && (s.recall - 1.0).abs() < 1e-12);
    }

    #[test]
    fn su4_gap_limit() {
        // Tokens 0 and 5 have four tokens between them; 0 and 6 have five.
        let toks = t("a x x x x b c");
        let units = su_units(&toks);
        assert!(units.contains(&(Some("a"), "b")));
        assert!(!units.contains(&(Some("a"), "c")));
    }

    #[test]
    fn order_must_be_one_or_two() {
        assert_eq!(rouge_n(&t("a"), &t("a"), 3), Err(RougeError::Order(3)));
    }
}
