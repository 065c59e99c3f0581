//! Worst-case distribution solvers for divergence balls.
//!
//! Each divergence reduces the KKT system of the inner maximization to one
//! scalar equation: KL in the multiplier `mu`, the other four in `lambda`.
//! KL, Burg and Hellinger are bisected on closed-form brackets; chi-square
//! and modified chi-square use guarded Newton with analytic derivatives.
//! Before any root finding, the cheap candidate that puts all mass on the
//! argmax payoffs is tested against the ball radius.

use thiserror::Error;

use crate::divergence::{divergence, DivergenceKind};
use crate::problem::{CostVector, Distribution, DroInstance, SolveStatus, SolverResult};
use crate::rootfind::{
    bisect, find_sign_point, newton_guarded, RootConfig, RootError, ScalarFn, Shape, Sign,
};
use crate::util::{compensated_sum, dot};

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Root(#[from] RootError),
    #[error("{variable} = {x} is outside the domain of the {kind:?} equation")]
    DomainViolation {
        kind: DivergenceKind,
        variable: &'static str,
        x: f64,
    },
    #[error("instance distance is not a divergence")]
    NotADivergence,
}

/// Which scalar variable the solved equation is written in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquationVariable {
    Mu,
    Lambda,
}

/// Diagnostic record of one divergence solve.
#[derive(Debug, Clone)]
pub struct PhiSolveTrace {
    pub used_trivial: bool,
    pub equation_variable: EquationVariable,
    /// Root of the scalar equation (NaN when the trivial case was taken).
    pub root: f64,
    /// Search bracket; upper end inclusive, `+inf` for the Newton kinds.
    pub bracket: (f64, f64),
    pub h_evaluations: u64,
}

/// Candidate that concentrates all mass on the argmax payoffs:
/// `p[i] = q[i] / sum_{j in argmax} q[j]` there, zero elsewhere.
pub fn trivial_candidate(q: &Distribution, c: &CostVector) -> Vec<f64> {
    let qs = q.weights();
    let mass: f64 = c.argmax_set().iter().map(|&i| qs[i]).sum();
    let mut p = vec![0.0; qs.len()];
    for &i in c.argmax_set() {
        p[i] = qs[i] / mass;
    }
    p
}

/// True when the trivial candidate lies inside the ball (boundary included,
/// where both branches coincide). Always false for Burg and chi-square with
/// a proper argmax subset, whose divergence of a vector with zeros is
/// infinite.
pub fn trivial_check(kind: DivergenceKind, p_hat: &[f64], q: &Distribution, epsilon: f64) -> bool {
    match divergence(kind, p_hat, q) {
        Ok(d) => d <= epsilon,
        Err(_) => false,
    }
}

// --- scalar equations ------------------------------------------------------

/// KL equation in the rescaled, overflow-free form. With
/// `w[i] = q[i] exp((c[i] - cmax)/mu)` the log-sum-exp identity
/// `log sum q e^{c/mu} = cmax/mu + log sum w` turns the textbook equation
/// into `sum_i w[i] ((c[i] - cmax)/mu - log sum w - eps)`, which has the
/// same sign and the same root (the dropped factor `e^{cmax/mu}` is
/// positive) but never overflows for small `mu`.
fn h_kl(mu: f64, q: &[f64], c: &[f64], cmax: f64, eps: f64) -> f64 {
    let mut sum_w = 0.0;
    for (&qi, &ci) in q.iter().zip(c) {
        sum_w += qi * ((ci - cmax) / mu).exp();
    }
    let log_sum = sum_w.ln();
    let mut acc = 0.0;
    for (&qi, &ci) in q.iter().zip(c) {
        let shifted = (ci - cmax) / mu;
        let w = qi * shifted.exp();
        acc += w * (shifted - log_sum - eps);
    }
    acc
}

fn h_burg(lambda: f64, q: &[f64], c: &[f64], eps: f64) -> f64 {
    let mut sum_log = 0.0;
    let mut sum_inv = 0.0;
    for (&qi, &ci) in q.iter().zip(c) {
        let d = lambda - ci;
        sum_log += qi * d.ln();
        sum_inv += qi / d;
    }
    sum_log + sum_inv.ln() - eps
}

fn h_hellinger(lambda: f64, q: &[f64], c: &[f64], eps: f64) -> f64 {
    let mut sum_inv = 0.0;
    let mut sum_inv2 = 0.0;
    for (&qi, &ci) in q.iter().zip(c) {
        let d = lambda - ci;
        sum_inv += qi / d;
        sum_inv2 += qi / (d * d);
    }
    2.0 * sum_inv - (2.0 - eps) * sum_inv2.sqrt()
}

fn h_chisq(lambda: f64, q: &[f64], c: &[f64], eps: f64) -> f64 {
    let mut sum_sqrt = 0.0;
    let mut sum_inv_sqrt = 0.0;
    for (&qi, &ci) in q.iter().zip(c) {
        let s = (lambda - ci).sqrt();
        sum_sqrt += qi * s;
        sum_inv_sqrt += qi / s;
    }
    sum_sqrt * sum_inv_sqrt - 1.0 - eps
}

/// d/dlambda of the chi-square equation: with `A = sum q sqrt(lambda - c)`,
/// `B = sum q (lambda - c)^{-1/2}`, `C = sum q (lambda - c)^{-3/2}` the
/// derivative is `B^2/2 - A C / 2`.
fn dh_chisq(lambda: f64, q: &[f64], c: &[f64]) -> f64 {
    let mut a = 0.0;
    let mut b = 0.0;
    let mut cc = 0.0;
    for (&qi, &ci) in q.iter().zip(c) {
        let d = lambda - ci;
        let s = d.sqrt();
        a += qi * s;
        b += qi / s;
        cc += qi / (d * s);
    }
    0.5 * (b * b - a * cc)
}

fn h_mod_chisq(lambda: f64, q: &[f64], c: &[f64], eps: f64) -> f64 {
    let mut sum_sq = 0.0;
    let mut sum = 0.0;
    for (&qi, &ci) in q.iter().zip(c) {
        let m = (ci + lambda).max(0.0);
        sum_sq += qi * m * m;
        sum += qi * m;
    }
    sum_sq - (1.0 + eps) * sum * sum
}

/// One-sided derivative of the modified chi-square equation:
/// `2 (sum q max(c + lambda, 0)) (1 - (1 + eps) sum_{active} q)` with the
/// active set `{i : c[i] + lambda > 0}`.
fn dh_mod_chisq(lambda: f64, q: &[f64], c: &[f64], eps: f64) -> f64 {
    let mut sum = 0.0;
    let mut active_q = 0.0;
    for (&qi, &ci) in q.iter().zip(c) {
        let v = ci + lambda;
        if v > 0.0 {
            sum += qi * v;
            active_q += qi;
        }
    }
    2.0 * sum * (1.0 - (1.0 + eps) * active_q)
}

/// Evaluate the scalar equation for `kind` at `x`, checking the domain from
/// the bracket table first (`mu > 0` for KL, `lambda > cmax` for Burg,
/// Hellinger and chi-square, `lambda >= -cmax` for modified chi-square,
/// where the equation is identically zero at the endpoint).
pub fn h_eval(kind: DivergenceKind, x: f64, inst: &DroInstance) -> Result<f64, SolveError> {
    let q = inst.q().weights();
    let c = inst.c().costs();
    let cmax = inst.c().cmax();
    let eps = inst.epsilon();
    let in_domain = match kind {
        DivergenceKind::Kl => x > 0.0,
        DivergenceKind::Burg | DivergenceKind::Hellinger | DivergenceKind::ChiSq => x > cmax,
        DivergenceKind::ModChiSq => x >= -cmax,
    };
    if !in_domain {
        let variable = if kind == DivergenceKind::Kl {
            "mu"
        } else {
            "lambda"
        };
        return Err(SolveError::DomainViolation { kind, variable, x });
    }
    Ok(match kind {
        DivergenceKind::Kl => h_kl(x, q, c, cmax, eps),
        DivergenceKind::Burg => h_burg(x, q, c, eps),
        DivergenceKind::Hellinger => h_hellinger(x, q, c, eps),
        DivergenceKind::ChiSq => h_chisq(x, q, c, eps),
        DivergenceKind::ModChiSq => h_mod_chisq(x, q, c, eps),
    })
}

/// Search bracket for the scalar equation (lower end open, upper inclusive;
/// `+inf` for the two Newton kinds).
pub fn bracket(kind: DivergenceKind, inst: &DroInstance) -> (f64, f64) {
    let cmax = inst.c().cmax();
    let spread = cmax - inst.c().cmin();
    let eps = inst.epsilon();
    match kind {
        DivergenceKind::Kl => (0.0, spread / eps),
        DivergenceKind::Burg => (cmax, cmax + spread / eps),
        DivergenceKind::Hellinger => (cmax, cmax + (2.0 - eps) * spread / eps),
        DivergenceKind::ChiSq => (cmax, f64::INFINITY),
        DivergenceKind::ModChiSq => (-cmax, f64::INFINITY),
    }
}

/// Recover the optimal distribution from the solved root: form the
/// non-normalized weights for `kind` and normalize them to sum one. The KL
/// weights are evaluated in the shifted form `q e^{(c - cmax)/mu}`, which
/// differs from the textbook form by a positive factor that cancels in the
/// normalization.
pub fn weights(
    kind: DivergenceKind,
    root: f64,
    inst: &DroInstance,
) -> Result<Vec<f64>, SolveError> {
    let q = inst.q().weights();
    let c = inst.c().costs();
    let cmax = inst.c().cmax();
    let raw: Vec<f64> = match kind {
        DivergenceKind::Kl => {
            if root <= 0.0 {
                return Err(SolveError::DomainViolation {
                    kind,
                    variable: "mu",
                    x: root,
                });
            }
            q.iter()
                .zip(c)
                .map(|(&qi, &ci)| qi * ((ci - cmax) / root).exp())
                .collect()
        }
        DivergenceKind::Burg => {
            if root <= cmax {
                return Err(SolveError::DomainViolation {
                    kind,
                    variable: "lambda",
                    x: root,
                });
            }
            q.iter().zip(c).map(|(&qi, &ci)| qi / (root - ci)).collect()
        }
        DivergenceKind::Hellinger => {
            if root <= cmax {
                return Err(SolveError::DomainViolation {
                    kind,
                    variable: "lambda",
                    x: root,
                });
            }
            q.iter()
                .zip(c)
                .map(|(&qi, &ci)| qi / ((root - ci) * (root - ci)))
                .collect()
        }
        DivergenceKind::ChiSq => {
            if root <= cmax {
                return Err(SolveError::DomainViolation {
                    kind,
                    variable: "lambda",
                    x: root,
                });
            }
            q.iter()
                .zip(c)
                .map(|(&qi, &ci)| qi / (root - ci).sqrt())
                .collect()
        }
        DivergenceKind::ModChiSq => q
            .iter()
            .zip(c)
            .map(|(&qi, &ci)| qi * (ci + root).max(0.0))
            .collect(),
    };
    let total = compensated_sum(raw.iter().copied());
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// Solve the divergence-ball instance, returning the result together with a
/// trace of the scalar solve.
pub fn solve_traced(inst: &DroInstance) -> Result<(SolverResult, PhiSolveTrace), SolveError> {
    let kind = inst
        .distance()
        .divergence()
        .ok_or(SolveError::NotADivergence)?;
    let q = inst.q().weights();
    let c = inst.c().costs();
    let cmax = inst.c().cmax();
    let eps = inst.epsilon();

    let variable = if kind == DivergenceKind::Kl {
        EquationVariable::Mu
    } else {
        EquationVariable::Lambda
    };

    if inst.c().is_constant() {
        // constant payoffs: every feasible point gives the same objective,
        // and q itself has distance zero
        let result = SolverResult {
            p: q.to_vec(),
            lambda: None,
            mu: None,
            status: SolveStatus::DegenerateObjective,
            h_evaluations: 0,
            objective: cmax,
        };
        let trace = PhiSolveTrace {
            used_trivial: false,
            equation_variable: variable,
            root: f64::NAN,
            bracket: (f64::NAN, f64::NAN),
            h_evaluations: 0,
        };
        return Ok((result, trace));
    }

    let p_hat = trivial_candidate(inst.q(), inst.c());
    if trivial_check(kind, &p_hat, inst.q(), eps) {
        let objective = dot(c, &p_hat);
        let result = SolverResult {
            p: p_hat,
            lambda: None,
            mu: None,
            status: SolveStatus::TrivialCase,
            h_evaluations: 0,
            objective,
        };
        let trace = PhiSolveTrace {
            used_trivial: true,
            equation_variable: variable,
            root: f64::NAN,
            bracket: (f64::NAN, f64::NAN),
            h_evaluations: 0,
        };
        return Ok((result, trace));
    }

    let cfg = RootConfig::default();
    let (lo, hi) = bracket(kind, inst);
    let h = match kind {
        DivergenceKind::Kl => ScalarFn::new(move |x| h_kl(x, q, c, cmax, eps)),
        DivergenceKind::Burg => ScalarFn::new(move |x| h_burg(x, q, c, eps)),
        DivergenceKind::Hellinger => ScalarFn::new(move |x| h_hellinger(x, q, c, eps)),
        DivergenceKind::ChiSq => {
            ScalarFn::with_derivative(move |x| h_chisq(x, q, c, eps), move |x| dh_chisq(x, q, c))
        }
        DivergenceKind::ModChiSq => ScalarFn::with_derivative(
            move |x| h_mod_chisq(x, q, c, eps),
            move |x| dh_mod_chisq(x, q, c, eps),
        ),
    };

    let root = match kind {
        DivergenceKind::Kl | DivergenceKind::Burg | DivergenceKind::Hellinger => {
            bisect(&h, lo, hi, &cfg)?
        }
        DivergenceKind::ChiSq => {
            // h4 blows up at the cmax barrier, so a positive point always
            // exists arbitrarily close to it
            let x0 = find_sign_point(&h, 1.0, Some(cmax), Sign::Positive)?;
            newton_guarded(&h, x0, Shape::ConvexDecreasing, &cfg)?
        }
        DivergenceKind::ModChiSq => {
            let start = f64::max(1.0, -inst.c().cmin() + 1.0);
            let x0 = find_sign_point(&h, start, None, Sign::Negative)?;
            newton_guarded(&h, x0, Shape::ConcaveDecreasing, &cfg)?
        }
    };
    let h_evaluations = h.evaluations();

    let p = weights(kind, root, inst)?;
    let objective = dot(c, &p);
    let (lambda, mu) = if kind == DivergenceKind::Kl {
        (None, Some(root))
    } else {
        (Some(root), None)
    };
    let result = SolverResult {
        p,
        lambda,
        mu,
        status: SolveStatus::RootFound,
        h_evaluations,
        objective,
    };
    let trace = PhiSolveTrace {
        used_trivial: false,
        equation_variable: variable,
        root,
        bracket: (lo, hi),
        h_evaluations,
    };
    Ok((result, trace))
}

/// Solve the divergence-ball instance.
pub fn solve(inst: &DroInstance) -> Result<SolverResult, SolveError> {
    solve_traced(inst).map(|(result, _)| result)
}
