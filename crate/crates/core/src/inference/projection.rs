use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::InferenceError;
use crate::model::log_sum_exp;

/// A constraint `Σ_(f,o) q_f(o) · value ≤ bound` over independent
/// categorical factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub id: String,
    /// `(factor, option, value)`, at most one entry per (factor, option).
    pub entries: Vec<(usize, usize, f64)>,
    pub bound: f64,
}

impl LinearConstraint {
    /// `E_q[f]`.
    pub fn expectation(&self, q: &[Vec<f64>]) -> f64 {
        self.entries.iter().map(|&(f, o, v)| q[f][o] * v).sum()
    }

    /// Smallest and largest expectation any `q` can reach.
    pub fn achievable_range(&self, factor_sizes: &[usize]) -> (f64, f64) {
        let mut per: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
        for &(f, _, v) in &self.entries {
            per.entry(f).or_default().push(v);
        }
        let mut lo = 0.0;
        let mut hi = 0.0;
        for (f, vals) in per {
            let has_zero = vals.len() < factor_sizes[f];
            let mn = vals
                .iter()
                .copied()
                .fold(if has_zero { 0.0 } else { f64::INFINITY }, f64::min);
            let mx = vals
                .iter()
                .copied()
                .fold(if has_zero { 0.0 } else { f64::NEG_INFINITY }, f64::max);
            lo += mn;
            hi += mx;
        }
        (lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualConfig {
    /// Multiplier on each Newton step of a multiplier update.
    pub step: f64,
    /// Maximum sweeps over the constraints.
    pub max_iters: usize,
    /// Tolerance on the projected dual gradient.
    pub tol: f64,
}

impl Default for DualConfig {
    fn default() -> Self {
        Self {
            step: 1.0,
            max_iters: 500,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DualState {
    pub mu: Vec<f64>,
    /// Dual objective after each sweep.
    pub trace: Vec<f64>,
    pub iterations: usize,
    /// Every constraint reached its target.
    pub converged: bool,
    /// Stopped early: after a minimum number of sweeps the dual gained less
    /// than the tolerance in one sweep while every constraint was well
    /// within the violation slack.
    pub stalled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub q: Vec<Vec<f64>>,
    pub dual: DualState,
    /// `E_q[f_c]` per constraint.
    pub expectations: Vec<f64>,
    /// Constraints still violated by more than the reporting slack.
    pub violated: Vec<usize>,
}

impl Projection {
    pub fn max_violation(&self, constraints: &[LinearConstraint]) -> f64 {
        self.expectations
            .iter()
            .zip(constraints)
            .map(|(e, c)| (e - c.bound).max(0.0))
            .fold(0.0, f64::max)
    }
}

/// Slack beyond which a constraint is reported as violated.
pub const VIOLATION_SLACK: f64 = 1e-3;
const MU_LIMIT: f64 = 1e8;
const RESYNC_EVERY: usize = 16;
const STALL_AFTER: usize = 50;
const MU_REPORT: f64 = 1e3;
/// Largest free set for which a full Newton step is attempted.
const NEWTON_MAX: usize = 800;

struct Solver<'a> {
    constraints: &'a [LinearConstraint],
    logits: Vec<Vec<f64>>,
    log_z: Vec<f64>,
    /// `Σ_f ln Σ_o base_f(o)`, zero up to rounding.
    base_log_z: f64,
    /// Normalized probabilities at the current multipliers.
    probs: Vec<Vec<f64>>,
    mu: Vec<f64>,
    /// Per constraint: `(factor, [(option, value)])`.
    touch: Vec<Vec<(usize, Vec<(usize, f64)>)>>,
    /// Bounds the solver aims for, `None` for constraints no `q` can break.
    targets: Vec<Option<f64>>,
}

impl<'a> Solver<'a> {
    fn new(
        base: &'a [Vec<f64>],
        constraints: &'a [LinearConstraint],
        mu: Vec<f64>,
        tol: f64,
    ) -> Self {
        let sizes: Vec<usize> = base.iter().map(Vec::len).collect();
        // Aim a little inside the bound so converged solutions are
        // feasible, not merely within tolerance.
        let targets = constraints
            .iter()
            .map(|c| {
                let (lo, hi) = c.achievable_range(&sizes);
                let b = c.bound;
                if hi <= b + 1e-12 {
                    None
                } else if b - lo > 0.2 * tol {
                    Some(b - 0.1 * tol)
                } else {
                    Some(b)
                }
            })
            .collect();
        let touch: Vec<Vec<(usize, Vec<(usize, f64)>)>> = constraints
            .iter()
            .map(|c| {
                let mut per: std::collections::BTreeMap<usize, Vec<(usize, f64)>> =
                    Default::default();
                for &(f, o, v) in &c.entries {
                    per.entry(f).or_default().push((o, v));
                }
                per.into_iter().collect()
            })
            .collect();
        let mut logits: Vec<Vec<f64>> = base.to_vec();
        for (c, t) in touch.iter().enumerate() {
            if mu[c] != 0.0 {
                for (f, ents) in t {
                    for &(o, v) in ents {
                        logits[*f][o] -= mu[c] * v;
                    }
                }
            }
        }
        let log_z: Vec<f64> = logits
            .iter()
            .map(|l| log_sum_exp(l.iter().copied()))
            .collect();
        let probs = logits
            .iter()
            .zip(&log_z)
            .map(|(l, z)| l.iter().map(|x| (x - z).exp()).collect())
            .collect();
        Self {
            base_log_z: base.iter().map(|l| log_sum_exp(l.iter().copied())).sum(),
            constraints,
            logits,
            log_z,
            probs,
            mu,
            touch,
            targets,
        }
    }

    /// Recomputes normalizers and probabilities from the logits.
    fn resync(&mut self) {
        for ((l, z), p) in self.logits.iter().zip(&mut self.log_z).zip(&mut self.probs) {
            *z = log_sum_exp(l.iter().copied());
            for (pi, li) in p.iter_mut().zip(l) {
                *pi = (li - *z).exp();
            }
        }
    }

    fn q(&self, f: usize, o: usize) -> f64 {
        self.probs[f][o]
    }

    fn expectation(&self, c: usize) -> f64 {
        self.touch[c]
            .iter()
            .map(|(f, ents)| ents.iter().map(|&(o, v)| self.q(*f, o) * v).sum::<f64>())
            .sum()
    }

    /// Dual objective `-Σ_f ln Z_f(μ) - μ·b` with `Z_f` relative to the
    /// normalized base weights.
    fn dual_objective(&self) -> f64 {
        let z: f64 = self.log_z.iter().sum();
        -(z - self.base_log_z)
            - self
                .mu
                .iter()
                .zip(self.constraints)
                .map(|(m, c)| m * c.bound)
                .sum::<f64>()
    }

    /// Dual objective measured against the targets.
    fn target_objective(&self) -> f64 {
        let z: f64 = self.log_z.iter().sum();
        -(z - self.base_log_z)
            - self
                .mu
                .iter()
                .zip(&self.targets)
                .map(|(m, t)| m * t.unwrap_or(0.0))
                .sum::<f64>()
    }

    /// Projected Newton step on the multipliers that are positive or whose
    /// constraint is above target, kept only if the dual improves.
    fn newton(&mut self) -> bool {
        let free: Vec<(usize, f64)> = (0..self.constraints.len())
            .filter_map(|c| {
                let t = self.targets[c]?;
                let g = self.expectation(c) - t;
                (self.mu[c] > 0.0 || g > 0.0).then_some((c, g))
            })
            .collect();
        let m = free.len();
        if m == 0 || m > NEWTON_MAX {
            return false;
        }
        // Covariance of the free constraint functions under q, factor by
        // factor.
        let mut by_factor: BTreeMap<usize, Vec<(usize, &[(usize, f64)])>> = BTreeMap::new();
        for (i, &(c, _)) in free.iter().enumerate() {
            for (f, ents) in &self.touch[c] {
                by_factor.entry(*f).or_default().push((i, ents));
            }
        }
        let mut h = DMatrix::<f64>::zeros(m, m);
        let mut cells: Vec<(usize, usize, f64)> = Vec::new();
        for (f, list) in &by_factor {
            let p = &self.probs[*f];
            let means: Vec<f64> = list
                .iter()
                .map(|(_, e)| e.iter().map(|&(o, v)| p[o] * v).sum())
                .collect();
            for (a, &(i, _)) in list.iter().enumerate() {
                for (b, &(j, _)) in list.iter().enumerate() {
                    h[(i, j)] -= means[a] * means[b];
                }
            }
            cells.clear();
            cells.extend(
                list.iter()
                    .flat_map(|&(i, e)| e.iter().map(move |&(o, v)| (o, i, v))),
            );
            cells.sort_unstable_by_key(|&(o, i, _)| (o, i));
            for group in cells.chunk_by(|x, y| x.0 == y.0) {
                let po = p[group[0].0];
                for &(_, i, v) in group {
                    for &(_, j, w) in group {
                        h[(i, j)] += po * v * w;
                    }
                }
            }
        }
        let g = DVector::from_iterator(m, free.iter().map(|&(_, g)| g));
        let scale = (0..m).map(|i| h[(i, i)]).fold(0.0, f64::max);
        let mut ridge = 1e-12 * (1.0 + scale);
        let d = loop {
            let mut hr = h.clone();
            for i in 0..m {
                hr[(i, i)] += ridge;
            }
            if let Some(ch) = hr.cholesky() {
                break ch.solve(&g);
            }
            ridge *= 100.0;
            if ridge > 1.0 + scale {
                return false;
            }
        };

        let before = self.target_objective();
        let saved = (
            self.logits.clone(),
            self.log_z.clone(),
            self.probs.clone(),
            self.mu.clone(),
        );
        let mut alpha = 1.0;
        for _ in 0..12 {
            for (i, &(c, _)) in free.iter().enumerate() {
                // Multipliers beyond the reporting level are left to the
                // coordinate updates, which detect divergence.
                let next = (saved.3[c] + alpha * d[i]).clamp(0.0, MU_REPORT.max(saved.3[c]));
                let delta = next - self.mu[c];
                if delta != 0.0 {
                    for (f, ents) in &self.touch[c] {
                        for &(o, v) in ents {
                            self.logits[*f][o] -= delta * v;
                        }
                    }
                    self.mu[c] = next;
                }
            }
            self.resync();
            if self.target_objective() > before {
                return true;
            }
            alpha *= 0.5;
        }
        (self.logits, self.log_z, self.probs, self.mu) = saved;
        false
    }

    /// Constraint `c` and every other constraint whose multiplier has
    /// grown large, in index order.
    fn pushing(&self, c: usize) -> Vec<String> {
        (0..self.constraints.len())
            .filter(|&j| j == c || self.mu[j] > MU_REPORT)
            .map(|j| self.constraints[j].id.clone())
            .collect()
    }

    /// Exact coordinate maximization of the dual in `μ_c`.
    fn update(&mut self, c: usize, cfg: &DualConfig) -> Result<(), InferenceError> {
        let Some(b) = self.targets[c] else {
            return Ok(());
        };
        if self.mu[c] == 0.0 && self.expectation(c) <= self.constraints[c].bound {
            return Ok(());
        }
        // Per touched factor: ln of the untouched mass and (ln q, value) of
        // the touched options, all at the current multipliers.
        let parts: Vec<(f64, Vec<(f64, f64)>)> = self.touch[c]
            .iter()
            .map(|(f, ents)| {
                let lz = self.log_z[*f];
                let touched: Vec<(f64, f64)> = ents
                    .iter()
                    .map(|&(o, v)| (self.logits[*f][o] - lz, v))
                    .collect();
                let mass: f64 = ents.iter().map(|&(o, _)| self.probs[*f][o]).sum();
                let rest = if mass < 0.5 {
                    (-mass).ln_1p()
                } else {
                    let all: f64 = self.probs[*f].iter().sum();
                    let untouched = all - mass;
                    if untouched > 1e-3 * all {
                        untouched.ln()
                    } else {
                        let mut p = self.probs[*f].clone();
                        for &(o, _) in ents {
                            p[o] = 0.0;
                        }
                        p.iter().sum::<f64>().ln()
                    }
                };
                (rest, touched)
            })
            .collect();
        // h(δ) = E(δ) - b and h'(δ) = -Var(δ).
        let eval = |delta: f64| -> (f64, f64) {
            let mut mean = 0.0;
            let mut var = 0.0;
            for (rest, touched) in &parts {
                let us = touched.iter().map(|(lq, v)| (lq - delta * v, *v));
                let ld = log_sum_exp(std::iter::once(*rest).chain(us.clone().map(|(u, _)| u)));
                let m1: f64 = us.clone().map(|(u, v)| (u - ld).exp() * v).sum();
                // Centered to avoid cancellation when one option dominates.
                let spread: f64 = us.map(|(u, v)| (u - ld).exp() * (v - m1).powi(2)).sum();
                mean += m1;
                var += spread + (rest - ld).exp() * m1 * m1;
            }
            (mean - b, -var)
        };

        let mu0 = self.mu[c];
        let lo_bound = -mu0;
        let (h_lo, _) = eval(lo_bound);
        let delta = if h_lo <= 0.0 {
            lo_bound
        } else {
            let mut lo = lo_bound;
            let mut hi: Option<f64> = None;
            let mut x = 0.0f64.max(lo);
            let mut found = x;
            for _ in 0..200 {
                let (h, dh) = eval(x);
                found = x;
                if h.abs() <= cfg.tol * 1e-2 {
                    break;
                }
                if h > 0.0 {
                    lo = lo.max(x);
                } else {
                    hi = Some(hi.map_or(x, |u: f64| u.min(x)));
                }
                let newton = if dh < -1e-300 {
                    x - cfg.step * h / dh
                } else {
                    f64::NAN
                };
                let next = match hi {
                    Some(u) if newton.is_finite() && newton > lo && newton < u => newton,
                    Some(u) => 0.5 * (lo + u),
                    None if newton.is_finite() && newton > lo => newton,
                    None => lo + (1.0 + lo.abs()),
                };
                if hi.is_none() && mu0 + next > MU_LIMIT {
                    if eval(MU_LIMIT - mu0).0 <= 0.0 {
                        hi = Some(MU_LIMIT - mu0);
                        x = 0.5 * (lo + MU_LIMIT - mu0);
                        continue;
                    }
                    return Err(InferenceError::Infeasible {
                        constraints: self.pushing(c),
                        reason: "multiplier diverged".into(),
                    });
                }
                if let Some(u) = hi {
                    if (u - lo).abs() <= 1e-15 * (1.0 + lo.abs()) {
                        found = 0.5 * (lo + u);
                        break;
                    }
                }
                x = next;
                found = x;
            }
            found
        };
        if delta != 0.0 {
            // Renormalize incrementally; `resync` removes the drift.
            for ((f, ents), (rest, touched)) in self.touch[c].iter().zip(&parts) {
                let ld = log_sum_exp(
                    std::iter::once(*rest).chain(touched.iter().map(|(lq, v)| lq - delta * v)),
                );
                self.log_z[*f] += ld;
                let scale = (-ld).exp();
                for p in &mut self.probs[*f] {
                    *p *= scale;
                }
                for &(o, v) in ents {
                    self.logits[*f][o] -= delta * v;
                    self.probs[*f][o] = (self.logits[*f][o] - self.log_z[*f]).exp();
                }
            }
            self.mu[c] = (mu0 + delta).max(0.0);
        }
        Ok(())
    }
}

/// KL projection of independent categoricals onto `E_q[f_c] ≤ b_c`.
///
/// `log_weights[f]` are unnormalized log weights of factor `f`. The result
/// is `q_f(o) ∝ q'_f(o) exp(-Σ_c μ_c f_c(f, o))` with `μ` maximizing the
/// dual, found by cyclic exact maximization over single multipliers
/// interleaved with projected Newton steps on the free multipliers.
/// `warm` seeds the multipliers.
pub fn project(
    log_weights: &[Vec<f64>],
    constraints: &[LinearConstraint],
    cfg: &DualConfig,
    warm: Option<&[f64]>,
) -> Result<Projection, InferenceError> {
    let base: Vec<Vec<f64>> = log_weights
        .iter()
        .map(|l| {
            let z = log_sum_exp(l.iter().copied());
            l.iter().map(|x| x - z).collect()
        })
        .collect();
    let sizes: Vec<usize> = base.iter().map(Vec::len).collect();
    let infeasible: Vec<String> = constraints
        .iter()
        .filter(|c| c.achievable_range(&sizes).0 > c.bound + 1e-12)
        .map(|c| c.id.clone())
        .collect();
    if !infeasible.is_empty() {
        return Err(InferenceError::Infeasible {
            constraints: infeasible,
            reason: "bound below the smallest achievable expectation".into(),
        });
    }
    let mu = match warm {
        Some(m) if m.len() == constraints.len() => m.iter().map(|x| x.max(0.0)).collect(),
        _ => vec![0.0; constraints.len()],
    };
    let mut s = Solver::new(&base, constraints, mu, cfg.tol);
    let mut dual = DualState::default();
    // (all targets met, largest violation)
    let status = |s: &Solver<'_>| -> (bool, f64) {
        let mut ok = true;
        let mut worst = f64::NEG_INFINITY;
        for c in (0..constraints.len()).filter(|&c| s.targets[c].is_some()) {
            let g = s.expectation(c) - constraints[c].bound;
            ok &= g <= 0.0 && (s.mu[c] == 0.0 || g >= -cfg.tol);
            worst = worst.max(g);
        }
        (ok, worst)
    };
    if constraints.is_empty() || status(&s).0 {
        dual.converged = true;
    } else {
        let mut prev = s.dual_objective();
        for it in 0..cfg.max_iters {
            for c in 0..constraints.len() {
                s.update(c, cfg)?;
            }
            dual.iterations = it + 1;
            if !s.newton() && dual.iterations % RESYNC_EVERY == 0 {
                s.resync();
            }
            let obj = s.dual_objective();
            dual.trace.push(obj);
            let (ok, worst) = status(&s);
            if ok {
                dual.converged = true;
                break;
            }
            if dual.iterations >= STALL_AFTER
                && worst <= 0.1 * VIOLATION_SLACK
                && obj - prev <= cfg.tol * (1.0 + obj.abs())
            {
                dual.stalled = true;
                break;
            }
            prev = obj;
        }
    }
    s.resync();
    let q: Vec<Vec<f64>> = (0..base.len())
        .map(|f| (0..base[f].len()).map(|o| s.q(f, o)).collect())
        .collect();
    let expectations: Vec<f64> = constraints.iter().map(|c| c.expectation(&q)).collect();
    let violated = expectations
        .iter()
        .zip(constraints)
        .enumerate()
        .filter(|(_, (e, c))| **e - c.bound > VIOLATION_SLACK)
        .map(|(i, _)| i)
        .collect();
    dual.mu = s.mu;
    Ok(Projection {
        q,
        dual,
        expectations,
        violated,
    })
}
