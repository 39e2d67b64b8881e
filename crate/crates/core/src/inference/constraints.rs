use std::collections::BTreeMap;

use indexmap::IndexSet;
use serde::{Deserialize, Serialize};

use super::projection::LinearConstraint;
use super::syntax::syntactic_match;
use crate::model::CandidateSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scope {
    /// The factors of relation `k` across all documents.
    Relation(usize),
    /// The factors of document `d` across all relations.
    Document(usize),
    Corpus,
}

/// Count of a single factor's choice; the empty choice counts zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Counter {
    SyntacticMatch,
    Realized,
    /// The chosen dialogue act lies in this segment.
    InSegment(usize),
    /// The indicator has this stem.
    IndicatorWord(String),
    /// The argument contains a token with this stem.
    ArgumentContainsWord(String),
    /// The argument is exactly this span.
    ArgumentSpan {
        da_index: usize,
        lo: usize,
        hi: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub id: String,
    pub scope: Scope,
    pub counter: Counter,
    pub direction: Direction,
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintFamilies {
    pub syntactic: bool,
    pub prevalence: bool,
    pub occurrence: bool,
    pub discourse: bool,
}

impl Default for ConstraintFamilies {
    fn default() -> Self {
        Self {
            syntactic: true,
            prevalence: true,
            occurrence: true,
            discourse: true,
        }
    }
}

impl ConstraintFamilies {
    pub fn none() -> Self {
        Self {
            syntactic: false,
            prevalence: false,
            occurrence: false,
            discourse: false,
        }
    }
}

/// Fraction of documents that must contain a pattern-matching instance.
pub const SYNTACTIC_FRACTION: f64 = 0.8;
/// Fraction of documents in which each relation must be instantiated.
pub const PREVALENCE_FRACTION: f64 = 0.8;
/// Fraction of each relation's instances drawn from the last segment.
pub const DISCOURSE_FRACTION: f64 = 0.5;
pub const MAX_INDICATOR_USES: f64 = 2.0;
pub const MAX_ARGUMENT_WORD_USES: f64 = 2.0;
pub const MAX_SPAN_USES: f64 = 1.0;

/// The constraint families over a candidate space.
pub fn build_default_constraints(
    space: &CandidateSpace,
    families: ConstraintFamilies,
) -> Vec<ConstraintSpec> {
    let k = space.hyper.k;
    let d = space.docs.len() as f64;
    let last = space.hyper.segments - 1;
    let mut out = Vec::new();
    for kk in 0..k {
        if families.syntactic {
            out.push(ConstraintSpec {
                id: format!("syntactic/k{kk}"),
                scope: Scope::Relation(kk),
                counter: Counter::SyntacticMatch,
                direction: Direction::AtLeast,
                bound: SYNTACTIC_FRACTION * d,
            });
        }
        if families.prevalence {
            out.push(ConstraintSpec {
                id: format!("prevalence/k{kk}"),
                scope: Scope::Relation(kk),
                counter: Counter::Realized,
                direction: Direction::AtLeast,
                bound: PREVALENCE_FRACTION * d,
            });
        }
        if families.discourse {
            out.push(ConstraintSpec {
                id: format!("discourse/k{kk}"),
                scope: Scope::Relation(kk),
                counter: Counter::InSegment(last),
                direction: Direction::AtLeast,
                bound: DISCOURSE_FRACTION * d,
            });
        }
    }
    if families.occurrence {
        for (di, ds) in space.docs.iter().enumerate() {
            let words: IndexSet<&str> = (0..ds.indicators.len())
                .map(|i| ds.indicator_stem(i))
                .collect();
            for w in words {
                out.push(ConstraintSpec {
                    id: format!("occurrence/d{di}/indicator/{w}"),
                    scope: Scope::Document(di),
                    counter: Counter::IndicatorWord(w.to_string()),
                    direction: Direction::AtMost,
                    bound: MAX_INDICATOR_USES,
                });
                out.push(ConstraintSpec {
                    id: format!("occurrence/d{di}/argument-word/{w}"),
                    scope: Scope::Document(di),
                    counter: Counter::ArgumentContainsWord(w.to_string()),
                    direction: Direction::AtMost,
                    bound: MAX_ARGUMENT_WORD_USES,
                });
            }
            let spans: IndexSet<(usize, usize, usize)> = ds
                .arguments
                .iter()
                .map(|a| (a.da_index, a.lo, a.hi))
                .collect();
            for (da, lo, hi) in spans {
                out.push(ConstraintSpec {
                    id: format!("occurrence/d{di}/span/{da}:{lo}-{hi}"),
                    scope: Scope::Document(di),
                    counter: Counter::ArgumentSpan {
                        da_index: da,
                        lo,
                        hi,
                    },
                    direction: Direction::AtMost,
                    bound: MAX_SPAN_USES,
                });
            }
        }
    }
    out
}

/// Per-document flags precomputed once per candidate space.
#[derive(Debug, Clone)]
pub struct ConstraintContext {
    syntactic: Vec<Vec<bool>>,
}

impl ConstraintContext {
    pub fn new(space: &CandidateSpace) -> Self {
        let syntactic = space
            .docs
            .iter()
            .map(|ds| {
                ds.triples
                    .iter()
                    .map(|t| {
                        syntactic_match(
                            &ds.doc,
                            &ds.indicators[t.indicator],
                            &ds.arguments[t.argument],
                        )
                    })
                    .collect()
            })
            .collect();
        Self { syntactic }
    }

    pub fn syntactic(&self, d: usize, triple: usize) -> bool {
        self.syntactic[d][triple]
    }
}

fn counter_value(
    space: &CandidateSpace,
    ctx: &ConstraintContext,
    d: usize,
    option: usize,
    counter: &Counter,
) -> f64 {
    let ds = &space.docs[d];
    let Some(ti) = ds.options[option].triple() else {
        return 0.0;
    };
    let t = ds.triples[ti];
    let hit = match counter {
        Counter::SyntacticMatch => ctx.syntactic(d, ti),
        Counter::Realized => true,
        Counter::InSegment(s) => ds.triple_segment(ti) == *s,
        Counter::IndicatorWord(w) => ds.indicator_stem(t.indicator) == w,
        Counter::ArgumentContainsWord(w) => ds.argument_stems(t.argument).any(|s| s == w),
        Counter::ArgumentSpan { da_index, lo, hi } => {
            let a = ds.arguments[t.argument];
            a.da_index == *da_index && a.lo == *lo && a.hi == *hi
        }
    };
    if hit {
        1.0
    } else {
        0.0
    }
}

/// Factor index of `(d, k)` in the flattened layout used by projection.
pub fn factor_index(k_total: usize, d: usize, k: usize) -> usize {
    d * k_total + k
}

/// Translates specs into `≤` constraints over flattened factors.
pub fn compile(
    space: &CandidateSpace,
    ctx: &ConstraintContext,
    specs: &[ConstraintSpec],
) -> Vec<LinearConstraint> {
    let kt = space.hyper.k;
    specs
        .iter()
        .map(|spec| {
            let factors: Vec<(usize, usize)> = match spec.scope {
                Scope::Relation(k) => (0..space.docs.len()).map(|d| (d, k)).collect(),
                Scope::Document(d) => (0..kt).map(|k| (d, k)).collect(),
                Scope::Corpus => (0..space.docs.len())
                    .flat_map(|d| (0..kt).map(move |k| (d, k)))
                    .collect(),
            };
            let sign = match spec.direction {
                Direction::AtMost => 1.0,
                Direction::AtLeast => -1.0,
            };
            // Counters depend on the document only, so evaluate once per d.
            let mut per_doc: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
            let mut entries = Vec::new();
            for (d, k) in factors {
                let vals = per_doc.entry(d).or_insert_with(|| {
                    (0..space.docs[d].n_options())
                        .map(|o| (o, counter_value(space, ctx, d, o, &spec.counter)))
                        .filter(|(_, v)| *v != 0.0)
                        .collect()
                });
                let f = factor_index(kt, d, k);
                entries.extend(vals.iter().map(|&(o, v)| (f, o, sign * v)));
            }
            LinearConstraint {
                id: spec.id.clone(),
                entries,
                bound: sign * spec.bound,
            }
        })
        .collect()
}

/// Sizes of the flattened factors.
pub fn factor_sizes(space: &CandidateSpace) -> Vec<usize> {
    space
        .docs
        .iter()
        .flat_map(|ds| std::iter::repeat_n(ds.n_options(), space.hyper.k))
        .collect()
}

/// Per-factor margin kept when a bound is pulled inside the achievable range.
pub const CLAMP_MARGIN: f64 = 0.02;

/// Moves bounds the candidate space cannot satisfy to just inside the
/// achievable range. Returns the adjusted specs and one message per change.
pub fn clamp_to_achievable(
    space: &CandidateSpace,
    ctx: &ConstraintContext,
    specs: &[ConstraintSpec],
) -> (Vec<ConstraintSpec>, Vec<String>) {
    let sizes = factor_sizes(space);
    let compiled = compile(space, ctx, specs);
    let mut out = Vec::with_capacity(specs.len());
    let mut notes = Vec::new();
    for (spec, lc) in specs.iter().zip(&compiled) {
        let (lo, hi) = lc.achievable_range(&sizes);
        let varying = {
            let mut per: BTreeMap<usize, (f64, f64, usize)> = BTreeMap::new();
            for &(f, _, v) in &lc.entries {
                let e = per
                    .entry(f)
                    .or_insert((f64::INFINITY, f64::NEG_INFINITY, 0));
                e.0 = e.0.min(v);
                e.1 = e.1.max(v);
                e.2 += 1;
            }
            per.iter()
                .filter(|(f, (mn, mx, n))| *n < sizes[**f] || mx > mn)
                .count() as f64
        };
        let floor = lo + CLAMP_MARGIN * varying;
        let mut s = spec.clone();
        if lc.bound < floor {
            let sign = if spec.direction == Direction::AtMost {
                1.0
            } else {
                -1.0
            };
            let new_bound = (sign * floor.min(hi)).max(0.0);
            notes.push(format!(
                "constraint {} bound {:.3} is not achievable; using {:.3}",
                spec.id, spec.bound, new_bound
            ));
            s.bound = new_bound;
        }
        out.push(s);
    }
    (out, notes)
}
