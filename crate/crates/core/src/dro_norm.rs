//! Worst-case distribution solvers for norm balls.
//!
//! The l-infinity and l1 balls admit exact one-pass sweeps after sorting by
//! payoff: mass is added to the highest-payoff coordinates and drained from
//! the lowest-payoff ones, with the per-coordinate (l-infinity) or total
//! (l1) movement capped by the radius. The l2 ball reduces to an outer
//! scalar equation in `mu` whose every evaluation solves an inner
//! piecewise-linear equation for `lambda` by sort-and-scan.

use std::cell::RefCell;

use crate::dro_phi::SolveError;
use crate::problem::{CostVector, Distribution, DroInstance, SolveStatus, SolverResult};
use crate::rootfind::{newton_guarded, RootConfig, RootError, ScalarFn, Shape};
use crate::util::dot;

/// Inner solve for the l2 reduction at a fixed `mu`: the unique `lambda`
/// with `sum_i min(lambda - c[i], mu q[i]) = 0`, plus the size of the
/// active set `{i : lambda - c[i] < mu q[i]}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L2InnerSolution {
    pub mu: f64,
    pub lambda: f64,
    pub active_set_size: usize,
}

#[derive(Debug, Clone, Copy)]
enum SweepNorm {
    Linf,
    L1,
}

/// Two-pointer transfer sweep shared by the l1 and l-infinity solvers.
///
/// `q` must be a strictly positive distribution. Accepts `eps = 0`, which
/// returns `q` unchanged.
fn sweep(q: &[f64], c: &[f64], eps: f64, norm: SweepNorm) -> Vec<f64> {
    let n = q.len();
    let mut p = q.to_vec();
    if n < 2 || eps <= 0.0 {
        return p;
    }
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort, payoffs descending: receivers at the front, donors at
    // the back; equal payoffs keep their input order (any resolution gives
    // the same objective)
    order.sort_by(|&i, &j| c[j].total_cmp(&c[i]));

    let donor_cap = |pj: f64| match norm {
        SweepNorm::Linf => pj.min(eps),
        SweepNorm::L1 => pj,
    };
    let recv_cap = match norm {
        SweepNorm::Linf => eps,
        SweepNorm::L1 => f64::INFINITY,
    };
    // total mass that may be added; the l1 ball allows eps/2 up and eps/2 down
    let mut budget = match norm {
        SweepNorm::Linf => f64::INFINITY,
        SweepNorm::L1 => eps / 2.0,
    };

    let mut i = 0;
    let mut j = n - 1;
    let mut give = donor_cap(p[order[j]]);
    while i < j && budget > 0.0 {
        let mut want = (1.0 - p[order[i]]).min(recv_cap).min(budget);
        while want > 0.0 && i < j {
            let d = want.min(give);
            if d > 0.0 {
                p[order[i]] += d;
                p[order[j]] -= d;
                want -= d;
                give -= d;
                budget -= d;
            }
            if give <= 0.0 {
                if j - 1 == i {
                    break;
                }
                j -= 1;
                give = donor_cap(p[order[j]]);
            }
        }
        i += 1;
    }
    p
}

/// Exact sweep for the l-infinity ball: every coordinate moves by at most
/// `eps`, clipped into `[0, 1]`.
pub fn linf_sweep(q: &[f64], c: &[f64], eps: f64) -> Vec<f64> {
    sweep(q, c, eps, SweepNorm::Linf)
}

/// Exact sweep for the l1 ball: total added mass capped at `eps / 2`.
pub fn l1_sweep(q: &[f64], c: &[f64], eps: f64) -> Vec<f64> {
    sweep(q, c, eps, SweepNorm::L1)
}

fn degenerate(inst: &DroInstance) -> SolverResult {
    SolverResult {
        p: inst.q().weights().to_vec(),
        lambda: None,
        mu: None,
        status: SolveStatus::DegenerateObjective,
        h_evaluations: 0,
        objective: inst.c().cmax(),
    }
}

fn sweep_result(inst: &DroInstance, p: Vec<f64>) -> SolverResult {
    let objective = dot(inst.c().costs(), &p);
    SolverResult {
        p,
        lambda: None,
        mu: None,
        status: SolveStatus::RootFound,
        h_evaluations: 0,
        objective,
    }
}

pub fn solve_linf(inst: &DroInstance) -> SolverResult {
    if inst.c().is_constant() {
        return degenerate(inst);
    }
    let p = linf_sweep(inst.q().weights(), inst.c().costs(), inst.epsilon());
    sweep_result(inst, p)
}

pub fn solve_l1(inst: &DroInstance) -> SolverResult {
    if inst.c().is_constant() {
        return degenerate(inst);
    }
    let p = l1_sweep(inst.q().weights(), inst.c().costs(), inst.epsilon());
    sweep_result(inst, p)
}

/// Candidate for the l2 trivial case: uniform shift of the argmax weights,
/// zero elsewhere. Returned only when it lies inside the ball.
pub fn l2_trivial(q: &Distribution, c: &CostVector, eps: f64) -> Option<Vec<f64>> {
    let qs = q.weights();
    let argmax = c.argmax_set();
    let k = argmax.len() as f64;
    let mass: f64 = argmax.iter().map(|&i| qs[i]).sum();
    let shift = (1.0 - mass) / k;
    let mut p = vec![0.0; qs.len()];
    for &i in argmax {
        p[i] = qs[i] + shift;
    }
    let dist2: f64 = p
        .iter()
        .zip(qs)
        .map(|(&pi, &qi)| (pi - qi) * (pi - qi))
        .sum();
    if dist2.sqrt() <= eps {
        Some(p)
    } else {
        None
    }
}

/// Solve `sum_i min(lambda - c[i], mu q[i]) = 0` for `lambda` at fixed
/// `mu > 0`, by sorting `v = mu q + c` descending and scanning for the
/// breakpoint of the equivalent equation `sum_i max(v[i] - lambda, 0) = mu`.
fn inner_lambda(mu: f64, q: &[f64], c: &[f64], scratch: &mut Vec<f64>) -> f64 {
    scratch.clear();
    scratch.extend(q.iter().zip(c).map(|(&qi, &ci)| mu * qi + ci));
    scratch.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut prefix = 0.0;
    let mut lambda = scratch[0] - mu;
    for (k, &v) in scratch.iter().enumerate() {
        prefix += v;
        let cand = (prefix - mu) / (k + 1) as f64;
        if v > cand {
            lambda = cand;
        } else {
            break;
        }
    }
    lambda
}

/// Public form of the inner solve, reporting the active set size.
pub fn lambda_of_mu(mu: f64, inst: &DroInstance) -> L2InnerSolution {
    assert!(mu > 0.0, "inner solve requires mu > 0");
    let q = inst.q().weights();
    let c = inst.c().costs();
    let mut scratch = Vec::new();
    let lambda = inner_lambda(mu, q, c, &mut scratch);
    let active_set_size = q
        .iter()
        .zip(c)
        .filter(|&(&qi, &ci)| lambda - ci < mu * qi)
        .count();
    L2InnerSolution {
        mu,
        lambda,
        active_set_size,
    }
}

fn h6_raw(mu: f64, q: &[f64], c: &[f64], eps: f64, scratch: &mut Vec<f64>) -> (f64, f64) {
    let lambda = inner_lambda(mu, q, c, scratch);
    let mut sum_sq = 0.0;
    for (&qi, &ci) in q.iter().zip(c) {
        let m = (lambda - ci).min(mu * qi);
        sum_sq += m * m;
    }
    (sum_sq - eps * eps * mu * mu, lambda)
}

/// Outer l2 equation `sum_i min^2(lambda(mu) - c[i], mu q[i]) - eps^2 mu^2`.
pub fn h6(mu: f64, inst: &DroInstance) -> f64 {
    assert!(mu > 0.0, "h6 requires mu > 0");
    let mut scratch = Vec::new();
    h6_raw(
        mu,
        inst.q().weights(),
        inst.c().costs(),
        inst.epsilon(),
        &mut scratch,
    )
    .0
}

/// Piece slope of the outer equation: the analytic derivative is
/// `h6'(mu) = 2 mu ((sum_{i not active} q_i)^2 / |active| +
/// sum_{i not active} q_i^2 - eps^2)`, and the parenthesized factor is
/// constant on each piece of the active set.
fn h6_piece_slope(mu: f64, lambda: f64, q: &[f64], c: &[f64], eps: f64) -> f64 {
    let mut inactive_q = 0.0;
    let mut inactive_q2 = 0.0;
    let mut active = 0usize;
    for (&qi, &ci) in q.iter().zip(c) {
        if lambda - ci < mu * qi {
            active += 1;
        } else {
            inactive_q += qi;
            inactive_q2 += qi * qi;
        }
    }
    inactive_q * inactive_q / active as f64 + inactive_q2 - eps * eps
}

pub fn solve_l2(inst: &DroInstance) -> Result<SolverResult, SolveError> {
    if inst.c().is_constant() {
        return Ok(degenerate(inst));
    }
    let q = inst.q().weights();
    let c = inst.c().costs();
    let eps = inst.epsilon();

    if let Some(p) = l2_trivial(inst.q(), inst.c(), eps) {
        let objective = dot(c, &p);
        return Ok(SolverResult {
            p,
            lambda: None,
            mu: None,
            status: SolveStatus::TrivialCase,
            h_evaluations: 0,
            objective,
        });
    }

    // The outer equation is solved in y = mu^2. On each piece of the
    // active set, lambda(mu) is affine and the centered costs sum to zero,
    // which kills the linear term: h6 restricted to a piece is exactly
    // K mu^2 + C with K the parenthesized factor of the analytic
    // derivative. In y the function is therefore piecewise linear and
    // concave, and each guarded Newton step clears a whole piece, so the
    // iteration count does not grow with the scale of the root.
    // Value and derivative share the inner solve at the same point.
    #[derive(Default)]
    struct InnerCache {
        scratch: Vec<f64>,
        last: Option<(f64, f64)>, // (mu, lambda) of the latest inner solve
    }
    let cache = RefCell::new(InnerCache::default());
    let g = ScalarFn::with_derivative(
        |y: f64| {
            let mu = y.sqrt();
            let mut state = cache.borrow_mut();
            let InnerCache { scratch, last } = &mut *state;
            let (value, lambda) = h6_raw(mu, q, c, eps, scratch);
            *last = Some((mu, lambda));
            value
        },
        |y: f64| {
            let mu = y.sqrt();
            let cached = {
                let state = cache.borrow();
                match state.last {
                    Some((m, l)) if m == mu => Some(l),
                    _ => None,
                }
            };
            let lambda = cached.unwrap_or_else(|| {
                let mut state = cache.borrow_mut();
                inner_lambda(mu, q, c, &mut state.scratch)
            });
            h6_piece_slope(mu, lambda, q, c, eps)
        },
    );

    let cfg = RootConfig::default();
    // Geometric scale search for the Newton start: from y = 1, walk up
    // until the negative side of the root appears, or down while still
    // negative. Newton then starts within a bounded factor of the root
    // whatever the root's scale, keeping the evaluation count flat in n.
    const SCALE_STEP: f64 = 64.0;
    let mut y0 = 1.0;
    let mut probes = 0usize;
    let mut g0 = g.eval(y0);
    if g0 >= 0.0 {
        while g0 > 0.0 {
            y0 *= SCALE_STEP;
            probes += 1;
            if probes >= 200 || !y0.is_finite() {
                return Err(RootError::MaxProbesExceeded { probes }.into());
            }
            g0 = g.eval(y0);
        }
    } else {
        loop {
            let y_next = y0 / SCALE_STEP;
            probes += 1;
            if y_next == 0.0 || probes >= 200 || g.eval(y_next) >= 0.0 {
                break;
            }
            y0 = y_next;
        }
    }
    let y = newton_guarded(&g, y0, Shape::ConcaveDecreasing, &cfg)?;
    let mu = y.sqrt();
    let h_evaluations = g.evaluations();

    let inner = lambda_of_mu(mu, inst);
    let p: Vec<f64> = q
        .iter()
        .zip(c)
        .map(|(&qi, &ci)| (qi - (inner.lambda - ci) / mu).max(0.0))
        .collect();
    let objective = dot(c, &p);
    Ok(SolverResult {
        p,
        lambda: Some(inner.lambda),
        mu: Some(mu),
        status: SolveStatus::RootFound,
        h_evaluations,
        objective,
    })
}
