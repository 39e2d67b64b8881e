//! Mean-field variational inference with posterior constraints.

mod constraints;
mod projection;
mod run;
mod state;
mod syntax;

use serde::{Deserialize, Serialize};

pub use constraints::{
    build_default_constraints, clamp_to_achievable, compile, factor_index, factor_sizes,
    ConstraintContext, ConstraintFamilies, ConstraintSpec, Counter, Direction, Scope, CLAMP_MARGIN,
    DISCOURSE_FRACTION, MAX_ARGUMENT_WORD_USES, MAX_INDICATOR_USES, MAX_SPAN_USES,
    PREVALENCE_FRACTION, SYNTACTIC_FRACTION,
};
pub use projection::{
    project, DualConfig, DualState, LinearConstraint, Projection, VIOLATION_SLACK,
};
pub use run::{run, run_with_init, trace_tsv, InferenceResult, RestartSummary, TraceRow};
pub use state::{dirichlet_kl, expected_log, RelationDirichlets, VariationalState};
pub use syntax::{matching_pattern, syntactic_match, SyntacticPattern};

#[derive(Debug, thiserror::Error)]
pub enum InferenceError {
    #[error("infeasible constraints ({reason}): {}", constraints.join(", "))]
    Infeasible {
        constraints: Vec<String>,
        reason: String,
    },
    #[error("free energy is not finite at sweep {sweep}")]
    NonFinite { sweep: usize },
    #[error("restart {restart} failed: {source}")]
    Restart {
        restart: usize,
        #[source]
        source: Box<InferenceError>,
    },
    #[error("no restart produced a finite free energy")]
    NoFiniteRestart,
    #[error("invalid inference configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceConfig {
    pub restarts: usize,
    /// Relative change of the free energy below which a restart stops.
    pub tol: f64,
    pub max_sweeps: usize,
    pub dual_step: f64,
    pub dual_max_iters: usize,
    pub dual_tol: f64,
    pub seed: u64,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            tol: 1e-5,
            max_sweeps: 200,
            dual_step: 1.0,
            dual_max_iters: 500,
            dual_tol: 1e-6,
            seed: 0,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<(), InferenceError> {
        let bad = |m: &str| Err(InferenceError::Config(m.into()));
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad("tol must be positive");
        }
        if self.max_sweeps == 0 {
            return bad("max_sweeps must be at least 1");
        }
        if !(self.dual_step > 0.0 && self.dual_step <= 1.0) {
            return bad("dual_step must lie in (0, 1]");
        }
        if self.dual_max_iters == 0 || !(self.dual_tol > 0.0) {
            return bad("dual solver limits must be positive");
        }
        Ok(())
    }
}
