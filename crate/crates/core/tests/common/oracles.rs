use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

use super::{hyper, shape, synth_space};
use relexsum::inference::{LinearConstraint, VariationalState};
use relexsum::model::synth::PlantedModel;
use relexsum::model::{CandidateSpace, Choice, HyperParams};

/// Maximizes a concave function on `[lo, hi]` by golden-section search.
pub fn golden_max(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    for _ in 0..90 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) >= f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

pub struct Joint {
    pub configs: Vec<Vec<usize>>,
    pub log_q: Vec<f64>,
    pub feats: Vec<Vec<f64>>,
}

pub fn enumerate(sizes: &[usize], log_w: &[Vec<f64>], cons: &[LinearConstraint]) -> Joint {
    let mut configs = vec![vec![]];
    for &n in sizes {
        configs = configs
            .into_iter()
            .flat_map(|c| {
                (0..n).map(move |o| {
                    let mut c = c.clone();
                    c.push(o);
                    c
                })
            })
            .collect();
    }
    let norm: Vec<f64> = log_w
        .iter()
        .map(|l| l.iter().map(|x| x.exp()).sum::<f64>().ln())
        .collect();
    let log_q = configs
        .iter()
        .map(|c| {
            c.iter()
                .enumerate()
                .map(|(f, &o)| log_w[f][o] - norm[f])
                .sum()
        })
        .collect();
    let feats = configs
        .iter()
        .map(|c| {
            cons.iter()
                .map(|k| {
                    k.entries
                        .iter()
                        .filter(|(f, o, _)| c[*f] == *o)
                        .map(|(_, _, v)| v)
                        .sum()
                })
                .collect()
        })
        .collect();
    Joint {
        configs,
        log_q,
        feats,
    }
}

pub fn oracle_marginals(
    sizes: &[usize],
    log_w: &[Vec<f64>],
    cons: &[LinearConstraint],
) -> Vec<Vec<f64>> {
    let j = enumerate(sizes, log_w, cons);
    let dual = |mu: &[f64]| -> f64 {
        let z: f64 = j
            .log_q
            .iter()
            .zip(&j.feats)
            .map(|(lq, f)| (lq - mu.iter().zip(f).map(|(m, v)| m * v).sum::<f64>()).exp())
            .sum();
        -z.ln() - mu.iter().zip(cons).map(|(m, c)| m * c.bound).sum::<f64>()
    };
    const HI: f64 = 60.0;
    let mu: Vec<f64> = match cons.len() {
        1 => vec![golden_max(0.0, HI, |m| dual(&[m]))],
        2 => {
            let inner = |m1: f64| golden_max(0.0, HI, |m2| dual(&[m1, m2]));
            let m1 = golden_max(0.0, HI, |m1| dual(&[m1, inner(m1)]));
            vec![m1, inner(m1)]
        }
        _ => unreachable!(),
    };
    let w: Vec<f64> = j
        .log_q
        .iter()
        .zip(&j.feats)
        .map(|(lq, f)| (lq - mu.iter().zip(f).map(|(m, v)| m * v).sum::<f64>()).exp())
        .collect();
    let z: f64 = w.iter().sum();
    let mut marg: Vec<Vec<f64>> = sizes.iter().map(|&n| vec![0.0; n]).collect();
    for (c, wi) in j.configs.iter().zip(&w) {
        for (f, &o) in c.iter().enumerate() {
            marg[f][o] += wi / z;
        }
    }
    marg
}

pub fn random_problem(seed: u64) -> (Vec<usize>, Vec<Vec<f64>>, Vec<LinearConstraint>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes = if rng.random_bool(0.5) {
        vec![rng.random_range(2..=12)]
    } else {
        vec![rng.random_range(2..=4), rng.random_range(2..=3)]
    };
    let log_w: Vec<Vec<f64>> = sizes
        .iter()
        .map(|&n| (0..n).map(|_| rng.random_range(-3.0..3.0)).collect())
        .collect();
    // A strictly interior point fixes feasible bounds.
    let star: Vec<Vec<f64>> = sizes
        .iter()
        .map(|&n| {
            let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..1.0)).collect();
            let s: f64 = w.iter().sum();
            w.iter().map(|x| x / s).collect()
        })
        .collect();
    let n_cons = rng.random_range(1..=2);
    let cons = (0..n_cons)
        .map(|c| {
            let mut entries = Vec::new();
            for (f, &n) in sizes.iter().enumerate() {
                for o in 0..n {
                    let v: f64 = match rng.random_range(0..3) {
                        0 => 0.0,
                        1 => 1.0,
                        _ => rng.random_range(-1.0..1.0),
                    };
                    if v != 0.0 {
                        entries.push((f, o, v));
                    }
                }
            }
            let at_star: f64 = entries.iter().map(|&(f, o, v)| star[f][o] * v).sum();
            LinearConstraint {
                id: format!("c{c}"),
                entries,
                bound: at_star + rng.random_range(0.0..0.05),
            }
        })
        .collect();
    (sizes, log_w, cons)
}

/// Expected counts accumulated option by option: the chosen indicator and
/// argument emit foreground, every other word background.
pub fn oracle_counts(
    space: &CandidateSpace,
    state: &VariationalState,
    k: usize,
) -> VariationalState {
    let mut out = VariationalState::uniform(space);
    let r = &mut out.relations[k];
    for (d, ds) in space.docs.iter().enumerate() {
        for (o, &q) in state.c_hat[d][k].iter().enumerate() {
            let (ci, ca, seg) = match ds.options[o] {
                Choice::Triple { triple, segment } => {
                    let t = ds.triples[triple];
                    (Some(t.indicator), Some(t.argument), Some(segment))
                }
                Choice::Null => (None, None, None),
            };
            if let Some(s) = seg {
                r.lambda[s] += q;
            }
            for (w, fv) in ds.ind_features.iter().enumerate() {
                for &(slot, v) in &fv.entries {
                    if ci == Some(w) {
                        r.theta_i[slot][v as usize] += q;
                    } else {
                        r.theta_bi[slot][v as usize] += q;
                    }
                }
            }
            for (a, fv) in ds.arg_features.iter().enumerate() {
                for &(slot, v) in &fv.entries {
                    if ca == Some(a) {
                        r.theta_a[slot][v as usize] += q;
                    } else {
                        r.theta_ba[slot][v as usize] += q;
                    }
                }
            }
        }
    }
    out
}

pub fn assert_close_nested(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) {
    for (x, y) in a.iter().flatten().zip(b.iter().flatten()) {
        assert!((x - y).abs() <= tol, "{x} vs {y}");
    }
}

/// `ln Σ_z ∫ p(θ, λ, z, x)` by enumeration with Dirichlet-multinomial marginals.
pub fn oracle_log_evidence(space: &CandidateSpace) -> f64 {
    let k = space.hyper.k;
    let factors: Vec<(usize, usize)> = (0..space.docs.len())
        .flat_map(|d| (0..k).map(move |kk| (d, kk)))
        .collect();
    let sizes: Vec<usize> = factors
        .iter()
        .map(|&(d, _)| space.docs[d].n_options())
        .collect();
    let total: usize = sizes.iter().product();
    assert!(total <= 200, "{total} configurations");
    let ln_dm = |counts: &[f64], a: f64| -> f64 {
        let n: f64 = counts.iter().sum();
        let m = counts.len() as f64;
        ln_gamma(a * m) - ln_gamma(a * m + n)
            + counts
                .iter()
                .map(|c| ln_gamma(a + c) - ln_gamma(a))
                .sum::<f64>()
    };
    let mut terms = Vec::with_capacity(total);
    for idx in 0..total {
        let mut rem = idx;
        let choice: Vec<usize> = sizes
            .iter()
            .map(|&n| {
                let o = rem % n;
                rem /= n;
                o
            })
            .collect();
        let mut lp = 0.0;
        for kk in 0..k {
            let mut state = VariationalState::uniform(space);
            for (&(d, fk), &o) in factors.iter().zip(&choice) {
                if fk == kk {
                    state.c_hat[d][kk] = vec![0.0; space.docs[d].n_options()];
                    state.c_hat[d][kk][o] = 1.0;
                    lp += space.docs[d].option_base[o];
                }
            }
            let counts = oracle_counts(space, &state, kk);
            let r = &counts.relations[kk];
            let sub = |v: &Vec<f64>, a: f64| v.iter().map(|x| x - a).collect::<Vec<_>>();
            for fam in [&r.theta_i, &r.theta_bi, &r.theta_a, &r.theta_ba] {
                for v in fam {
                    lp += ln_dm(&sub(v, 0.1), space.hyper.theta0);
                }
            }
            lp += ln_dm(&sub(&r.lambda, 0.1), space.hyper.lambda0);
        }
        terms.push(lp);
    }
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

pub fn enumerable_spaces() -> Vec<CandidateSpace> {
    let mut out = Vec::new();
    let p2 = PlantedModel::well_separated(2, 1);
    out.push(synth_space(&p2, shape(2, 1, 2, 1), 1, hyper(2, 1)).1);
    let p2l = PlantedModel::well_separated(2, 2);
    out.push(synth_space(&p2l, shape(1, 2, 1, 1), 2, hyper(2, 2)).1);
    let p1 = PlantedModel::well_separated(1, 1);
    let h = HyperParams {
        allow_null: true,
        ..hyper(1, 1)
    };
    out.push(synth_space(&p1, shape(2, 1, 1, 2), 3, h).1);
    out.push(synth_space(&p1, shape(3, 1, 2, 2), 4, hyper(1, 1)).1);
    out
}
