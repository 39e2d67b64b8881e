use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::constraints::factor_index;
use super::projection::{project, DualConfig, LinearConstraint};
use super::state::VariationalState;
use super::{InferenceConfig, InferenceError};
use crate::model::CandidateSpace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub restart: usize,
    pub sweep: usize,
    pub free_energy: f64,
    pub max_violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub restart: usize,
    pub free_energy: f64,
    pub sweeps: usize,
    pub converged: bool,
    /// Ids of constraints violated beyond the reporting slack at the end.
    pub violated: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceResult {
    pub state: VariationalState,
    pub best_restart: usize,
    pub free_energy: f64,
    pub restarts: Vec<RestartSummary>,
    pub trace: Vec<TraceRow>,
    /// Final multipliers of the best restart.
    pub mu: Vec<f64>,
}

/// Flattens `[d][k][o]` into factors indexed by `d * K + k`.
fn flatten(x: Vec<Vec<Vec<f64>>>) -> Vec<Vec<f64>> {
    x.into_iter().flatten().collect()
}

fn unflatten(space: &CandidateSpace, q: Vec<Vec<f64>>) -> Vec<Vec<Vec<f64>>> {
    let k = space.hyper.k;
    let mut it = q.into_iter();
    (0..space.docs.len())
        .map(|d| {
            (0..k)
                .map(|kk| {
                    debug_assert_eq!(factor_index(k, d, kk), d * k + kk);
                    it.next().expect("factor count")
                })
                .collect()
        })
        .collect()
}

struct RestartOutcome {
    state: VariationalState,
    summary: RestartSummary,
    trace: Vec<TraceRow>,
    mu: Vec<f64>,
}

fn run_restart(
    space: &CandidateSpace,
    constraints: &[LinearConstraint],
    cfg: &InferenceConfig,
    restart: usize,
    init: Option<&VariationalState>,
) -> Result<RestartOutcome, InferenceError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(restart as u64));
    let mut state = match init {
        Some(s) => s.clone(),
        None => VariationalState::random(space, &mut rng),
    };
    let dual_cfg = DualConfig {
        step: cfg.dual_step,
        max_iters: cfg.dual_max_iters,
        tol: cfg.dual_tol,
    };
    let mut mu: Option<Vec<f64>> = None;
    let mut trace = Vec::new();
    let mut prev = f64::INFINITY;
    let mut converged = false;
    let mut violated = Vec::new();
    let mut sweeps = 0;
    for sweep in 0..cfg.max_sweeps {
        state.update_q_theta(space);
        let log_q = flatten(state.unconstrained_qz(space));
        let p = project(&log_q, constraints, &dual_cfg, mu.as_deref()).map_err(|e| {
            InferenceError::Restart {
                restart,
                source: Box::new(e),
            }
        })?;
        let max_violation = p.max_violation(constraints);
        violated = p
            .violated
            .iter()
            .map(|&i| constraints[i].id.clone())
            .collect();
        mu = Some(p.dual.mu);
        state.c_hat = unflatten(space, p.q);
        let f = state.free_energy(space);
        sweeps = sweep + 1;
        trace.push(TraceRow {
            restart,
            sweep,
            free_energy: f,
            max_violation,
        });
        if !f.is_finite() {
            return Err(InferenceError::Restart {
                restart,
                source: Box::new(InferenceError::NonFinite { sweep }),
            });
        }
        if prev.is_finite() && (prev - f).abs() <= cfg.tol * f.abs().max(1.0) {
            converged = true;
            break;
        }
        prev = f;
    }
    let free_energy = trace.last().map_or(f64::INFINITY, |r| r.free_energy);
    Ok(RestartOutcome {
        state,
        summary: RestartSummary {
            restart,
            free_energy,
            sweeps,
            converged,
            violated,
        },
        trace,
        mu: mu.unwrap_or_default(),
    })
}

/// Coordinate-ascent variational inference with the choice distributions
/// projected onto the constraint set after every update. Runs
/// `cfg.restarts` random initializations and keeps the one with the lowest
/// free energy.
pub fn run(
    space: &CandidateSpace,
    constraints: &[LinearConstraint],
    cfg: &InferenceConfig,
) -> Result<InferenceResult, InferenceError> {
    run_with_init(space, constraints, cfg, None)
}

/// Like [`run`]; a given initial state replaces the random one of every
/// restart.
pub fn run_with_init(
    space: &CandidateSpace,
    constraints: &[LinearConstraint],
    cfg: &InferenceConfig,
    init: Option<&VariationalState>,
) -> Result<InferenceResult, InferenceError> {
    cfg.validate()?;
    let restarts = cfg.restarts.max(1);
    let outcomes: Vec<Result<RestartOutcome, InferenceError>> = (0..restarts)
        .into_par_iter()
        .map(|r| run_restart(space, constraints, cfg, r, init))
        .collect();
    let mut kept = Vec::new();
    let mut trace = Vec::new();
    for o in outcomes {
        match o {
            Ok(o) => {
                trace.extend(o.trace.iter().copied());
                kept.push(o);
            }
            Err(InferenceError::Restart { source, .. })
                if matches!(*source, InferenceError::Infeasible { .. }) =>
            {
                return Err(*source);
            }
            Err(e @ InferenceError::Restart { .. }) => log::warn!("{e}"),
            Err(e) => return Err(e),
        }
    }
    let best = kept
        .iter()
        .enumerate()
        .filter(|(_, o)| o.summary.free_energy.is_finite())
        .min_by(|a, b| {
            a.1.summary
                .free_energy
                .total_cmp(&b.1.summary.free_energy)
                .then(a.0.cmp(&b.0))
        })
        .map(|(i, _)| i)
        .ok_or(InferenceError::NoFiniteRestart)?;
    let restarts_summary = kept.iter().map(|o| o.summary.clone()).collect();
    let o = kept.swap_remove(best);
    if !o.summary.violated.is_empty() {
        log::warn!(
            "{} constraint(s) remain violated after inference: {}",
            o.summary.violated.len(),
            o.summary.violated.join(", ")
        );
    }
    Ok(InferenceResult {
        best_restart: o.summary.restart,
        free_energy: o.summary.free_energy,
        state: o.state,
        restarts: restarts_summary,
        trace,
        mu: o.mu,
    })
}

/// Tab-separated trace with a header row.
pub fn trace_tsv(rows: &[TraceRow]) -> String {
    let mut s = String::from("restart\tsweep\tfree_energy\tmax_violation\n");
    for r in rows {
        s.push_str(&format!(
            "{}\t{}\t{:.10}\t{:.3e}\n",
            r.restart, r.sweep, r.free_energy, r.max_violation
        ));
    }
    s
}
