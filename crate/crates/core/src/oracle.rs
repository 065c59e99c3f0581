//! Brute-force ground truth and residual checks.
//!
//! The grid oracle enumerates the uniform lattice on the simplex for small
//! dimensions (integer compositions, so no accumulation error) and keeps
//! the best feasible point. It is deliberately independent of every solver
//! code path and exists to verify them.

use thiserror::Error;

use crate::box_simplex::h7;
use crate::divergence::divergence;
use crate::dro_norm::h6;
use crate::dro_phi::h_eval;
use crate::problem::{BoxSimplexInstance, DistanceKind, DroInstance, SolveStatus, SolverResult};
use crate::util::{compensated_sum, dot};

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("grid enumeration supports n <= 4, got {n}")]
    TooLarge { n: usize },
    #[error("no lattice point is feasible at the given step and radius")]
    NoFeasiblePoint,
}

/// Lattice spacing for the grid oracle.
#[derive(Debug, Clone, Copy)]
pub struct GridConfig {
    pub step: f64,
}

impl GridConfig {
    /// Defaults from the verification plan: 1e-5 for n = 2, 1e-3 for n = 3,
    /// 1e-2 above.
    pub fn for_dimension(n: usize) -> Self {
        let step = match n {
            0..=2 => 1e-5,
            3 => 1e-3,
            _ => 1e-2,
        };
        Self { step }
    }
}

/// Distance of `p` from the instance's nominal distribution under the
/// instance's own metric (divergence value or norm).
pub fn distance(inst: &DroInstance, p: &[f64]) -> f64 {
    let q = inst.q().weights();
    match inst.distance() {
        DistanceKind::L1 => p.iter().zip(q).map(|(pi, qi)| (pi - qi).abs()).sum(),
        DistanceKind::L2 => p
            .iter()
            .zip(q)
            .map(|(pi, qi)| (pi - qi) * (pi - qi))
            .sum::<f64>()
            .sqrt(),
        DistanceKind::Linf => p
            .iter()
            .zip(q)
            .map(|(pi, qi)| (pi - qi).abs())
            .fold(0.0, f64::max),
        other => {
            let kind = other.divergence().expect("divergence kind");
            divergence(kind, p, inst.q()).unwrap_or(f64::INFINITY)
        }
    }
}

fn for_each_composition(m: u64, n: usize, visit: &mut impl FnMut(&[u64])) {
    let mut point = vec![0u64; n];
    fn recurse(depth: usize, remaining: u64, point: &mut [u64], visit: &mut impl FnMut(&[u64])) {
        if depth == point.len() - 1 {
            point[depth] = remaining;
            visit(point);
            return;
        }
        for k in 0..=remaining {
            point[depth] = k;
            recurse(depth + 1, remaining - k, point, visit);
        }
    }
    recurse(0, m, &mut point, visit);
}

/// Exhaustive search over the simplex lattice with the given step,
/// maximizing `c' p` subject to the instance's ball constraint. Infinite
/// divergences at lattice points with zeros are simply infeasible.
pub fn grid_solve(inst: &DroInstance, cfg: &GridConfig) -> Result<(Vec<f64>, f64), OracleError> {
    let n = inst.len();
    if n > 4 {
        return Err(OracleError::TooLarge { n });
    }
    let m = (1.0 / cfg.step).round() as u64;
    let c = inst.c().costs();
    let eps = inst.epsilon();
    let scale = m as f64;

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut p = vec![0.0; n];
    for_each_composition(m, n, &mut |counts| {
        for (pi, &k) in p.iter_mut().zip(counts) {
            *pi = k as f64 / scale;
        }
        if distance(inst, &p) > eps {
            return;
        }
        let obj = dot(c, &p);
        if best.as_ref().is_none_or(|(_, b)| obj > *b) {
            best = Some((p.clone(), obj));
        }
    });
    best.ok_or(OracleError::NoFeasiblePoint)
}

/// Exhaustive search over the box-constrained simplex lattice, minimizing
/// `0.5 ||p - q||^2`.
pub fn grid_solve_box(
    inst: &BoxSimplexInstance,
    cfg: &GridConfig,
) -> Result<(Vec<f64>, f64), OracleError> {
    let n = inst.len();
    if n > 4 {
        return Err(OracleError::TooLarge { n });
    }
    let m = (1.0 / cfg.step).round() as u64;
    let q = inst.q();
    let l = inst.lower();
    let u = inst.upper();
    let scale = m as f64;

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut p = vec![0.0; n];
    for_each_composition(m, n, &mut |counts| {
        for (pi, &k) in p.iter_mut().zip(counts) {
            *pi = k as f64 / scale;
        }
        if p.iter().zip(l).any(|(pi, li)| pi < li) || p.iter().zip(u).any(|(pi, ui)| pi > ui) {
            return;
        }
        let obj = 0.5
            * p.iter()
                .zip(q)
                .map(|(pi, qi)| (pi - qi) * (pi - qi))
                .sum::<f64>();
        if best.as_ref().is_none_or(|(_, b)| obj < *b) {
            best = Some((p.clone(), obj));
        }
    });
    best.ok_or(OracleError::NoFeasiblePoint)
}

/// Feasibility and optimality residuals of a solver result. Every field is
/// nonnegative by construction.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    /// `|sum(p) - 1|`
    pub sum_violation: f64,
    /// How far below zero the worst coordinate sits (box problems: below
    /// its lower bound).
    pub nonneg_violation: f64,
    /// `max(0, distance - eps)` (box problems: worst upper-bound
    /// violation).
    pub ball_violation: f64,
    /// `|h(root)|` for root-based solves, 0 otherwise.
    pub root_residual: f64,
    /// `max(0, oracle objective - solver objective)` when an oracle value
    /// was supplied.
    pub objective_gap_vs_oracle: Option<f64>,
}

/// Residuals of a worst-case-distribution result.
pub fn residuals(inst: &DroInstance, result: &SolverResult) -> ResidualReport {
    let sum = compensated_sum(result.p.iter().copied());
    let min_p = result.p.iter().copied().fold(f64::INFINITY, f64::min);
    let ball = if result.status == SolveStatus::DegenerateObjective {
        0.0
    } else {
        (distance(inst, &result.p) - inst.epsilon()).max(0.0)
    };
    let root_residual = match inst.distance() {
        DistanceKind::Kl => result
            .mu
            .map(|mu| h_eval(crate::divergence::DivergenceKind::Kl, mu, inst).unwrap_or(f64::NAN))
            .unwrap_or(0.0)
            .abs(),
        DistanceKind::Burg
        | DistanceKind::Hellinger
        | DistanceKind::ChiSq
        | DistanceKind::ModChiSq => result
            .lambda
            .map(|lam| h_eval(inst.distance().divergence().unwrap(), lam, inst).unwrap_or(f64::NAN))
            .unwrap_or(0.0)
            .abs(),
        DistanceKind::L2 => result.mu.map(|mu| h6(mu, inst)).unwrap_or(0.0).abs(),
        DistanceKind::L1 | DistanceKind::Linf => 0.0,
    };
    ResidualReport {
        sum_violation: (sum - 1.0).abs(),
        nonneg_violation: (-min_p).max(0.0),
        ball_violation: ball,
        root_residual,
        objective_gap_vs_oracle: None,
    }
}

/// Residuals of a projection result; bound violations take the place of the
/// nonnegativity (lower) and ball (upper) fields.
pub fn residuals_box(inst: &BoxSimplexInstance, result: &SolverResult) -> ResidualReport {
    let sum = compensated_sum(result.p.iter().copied());
    let lower = result
        .p
        .iter()
        .zip(inst.lower())
        .map(|(pi, li)| li - pi)
        .fold(0.0, f64::max);
    let upper = result
        .p
        .iter()
        .zip(inst.upper())
        .map(|(pi, ui)| pi - ui)
        .fold(0.0, f64::max);
    let root_residual = result.lambda.map(|lam| h7(lam, inst)).unwrap_or(0.0).abs();
    ResidualReport {
        sum_violation: (sum - 1.0).abs(),
        nonneg_violation: lower.max(0.0),
        ball_violation: upper.max(0.0),
        root_residual,
        objective_gap_vs_oracle: None,
    }
}

/// Classical sort-based projection onto the unit simplex, kept independent
/// of the kink walk so the two can be checked against each other.
pub fn classical_simplex_projection(q: &[f64]) -> Vec<f64> {
    let mut sorted = q.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut prefix = 0.0;
    let mut threshold = sorted[0] - 1.0;
    for (k, &v) in sorted.iter().enumerate() {
        prefix += v;
        let cand = (prefix - 1.0) / (k + 1) as f64;
        if v > cand {
            threshold = cand;
        } else {
            break;
        }
    }
    q.iter().map(|&qi| (qi - threshold).max(0.0)).collect()
}
