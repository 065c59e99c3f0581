//! Problem data: validated domain types shared by every solver.
//!
//! A [`Distribution`] is a strictly positive probability vector, a
//! [`CostVector`] caches the max/min payoffs and the argmax index set, and
//! [`DroInstance`] / [`BoxSimplexInstance`] bundle validated inputs for the
//! two problem families. All types are immutable after construction, so they
//! are safe to share across threads.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util::compensated_sum;

/// Absolute tolerance on `sum(q) - 1` accepted at validation.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Input validation failures.
#[derive(Debug, Error, PartialEq)]
pub enum ValidationError {
    #[error("weight at index {index} is not strictly positive (got {value})")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("weights sum to {sum}, not 1 within {NORMALIZATION_TOL:e}")]
    NotNormalized { sum: f64 },
    #[error("need at least 2 entries, got {len}")]
    TooShort { len: usize },
    #[error("entry at index {index} is not finite")]
    NonFinite { index: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("epsilon must be strictly positive, got {value}")]
    InvalidEpsilon { value: f64 },
    #[error("Hellinger radius must satisfy 0 < epsilon < 2, got {value}")]
    HellingerEpsilonOutOfRange { value: f64 },
    #[error("lower bound exceeds upper bound at index {index}")]
    InvalidBounds { index: usize },
    #[error("infeasible bounds: need sum(l) <= 1 <= sum(u), got sum(l)={sum_l}, sum(u)={sum_u}")]
    InfeasibleBounds { sum_l: f64, sum_u: f64 },
}

/// Distance used to define the ambiguity ball around the nominal distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistanceKind {
    Kl,
    Burg,
    Hellinger,
    ChiSq,
    ModChiSq,
    L1,
    L2,
    Linf,
}

impl DistanceKind {
    /// The divergence generating this distance, if it is one of the five
    /// divergence kinds (the norms are handled by their own solvers).
    pub fn divergence(self) -> Option<crate::divergence::DivergenceKind> {
        use crate::divergence::DivergenceKind as D;
        match self {
            DistanceKind::Kl => Some(D::Kl),
            DistanceKind::Burg => Some(D::Burg),
            DistanceKind::Hellinger => Some(D::Hellinger),
            DistanceKind::ChiSq => Some(D::ChiSq),
            DistanceKind::ModChiSq => Some(D::ModChiSq),
            _ => None,
        }
    }
}

/// A strictly positive probability vector of length at least 2.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    weights: Vec<f64>,
}

impl Distribution {
    /// Validate `weights` as a probability vector: every entry strictly
    /// positive and the (compensated) sum within [`NORMALIZATION_TOL`] of 1.
    pub fn new(weights: Vec<f64>) -> Result<Self, ValidationError> {
        if weights.len() < 2 {
            return Err(ValidationError::TooShort { len: weights.len() });
        }
        for (index, &value) in weights.iter().enumerate() {
            if !value.is_finite() {
                return Err(ValidationError::NonFinite { index });
            }
            if value <= 0.0 {
                return Err(ValidationError::NonPositiveWeight { index, value });
            }
        }
        let sum = compensated_sum(weights.iter().copied());
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(ValidationError::NotNormalized { sum });
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Payoff vector with cached statistics: `cmax`, `cmin`, and the set of
/// indices attaining `cmax` (bit-exact comparison, no tolerance).
#[derive(Debug, Clone, PartialEq)]
pub struct CostVector {
    costs: Vec<f64>,
    cmax: f64,
    cmin: f64,
    argmax_set: Vec<usize>,
}

impl CostVector {
    pub fn new(costs: Vec<f64>) -> Result<Self, ValidationError> {
        if costs.len() < 2 {
            return Err(ValidationError::TooShort { len: costs.len() });
        }
        for (index, &value) in costs.iter().enumerate() {
            if !value.is_finite() {
                return Err(ValidationError::NonFinite { index });
            }
        }
        let cmax = costs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let cmin = costs.iter().copied().fold(f64::INFINITY, f64::min);
        let argmax_set = costs
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c == cmax)
            .map(|(i, _)| i)
            .collect();
        Ok(Self {
            costs,
            cmax,
            cmin,
            argmax_set,
        })
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn cmax(&self) -> f64 {
        self.cmax
    }

    pub fn cmin(&self) -> f64 {
        self.cmin
    }

    /// Indices `i` with `c[i] == cmax`, ascending. Never empty.
    pub fn argmax_set(&self) -> &[usize] {
        &self.argmax_set
    }

    /// True when every payoff is identical; the objective is then constant
    /// and the solvers short-circuit to a degenerate result. Reported as a
    /// flag rather than an error so callers decide.
    pub fn is_constant(&self) -> bool {
        self.cmax == self.cmin
    }

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }
}

/// Validate a weight vector as a [`Distribution`].
pub fn validate_distribution(weights: Vec<f64>) -> Result<Distribution, ValidationError> {
    Distribution::new(weights)
}

/// Compute payoff statistics for a cost vector.
pub fn cost_stats(costs: Vec<f64>) -> Result<CostVector, ValidationError> {
    CostVector::new(costs)
}

/// A validated worst-case-distribution instance: nominal distribution `q`,
/// payoffs `c`, ball radius `epsilon` and the distance defining the ball.
#[derive(Debug, Clone)]
pub struct DroInstance {
    q: Distribution,
    c: CostVector,
    epsilon: f64,
    distance: DistanceKind,
}

impl DroInstance {
    pub fn new(
        q: Distribution,
        c: CostVector,
        epsilon: f64,
        distance: DistanceKind,
    ) -> Result<Self, ValidationError> {
        if q.len() != c.len() {
            return Err(ValidationError::DimensionMismatch {
                left: q.len(),
                right: c.len(),
            });
        }
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(ValidationError::InvalidEpsilon { value: epsilon });
        }
        // The Hellinger distance of two distributions is below 2, so radii
        // >= 2 make the ball the whole simplex; they are rejected up front.
        if distance == DistanceKind::Hellinger && epsilon >= 2.0 {
            return Err(ValidationError::HellingerEpsilonOutOfRange { value: epsilon });
        }
        Ok(Self {
            q,
            c,
            epsilon,
            distance,
        })
    }

    pub fn q(&self) -> &Distribution {
        &self.q
    }

    pub fn c(&self) -> &CostVector {
        &self.c
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn distance(&self) -> DistanceKind {
        self.distance
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }
}

/// Projection instance: point `q` (any finite vector), box bounds `l <= u`
/// with a non-empty intersection with the unit-sum hyperplane.
#[derive(Debug, Clone)]
pub struct BoxSimplexInstance {
    q: Vec<f64>,
    l: Vec<f64>,
    u: Vec<f64>,
}

impl BoxSimplexInstance {
    pub fn new(q: Vec<f64>, l: Vec<f64>, u: Vec<f64>) -> Result<Self, ValidationError> {
        if q.len() != l.len() {
            return Err(ValidationError::DimensionMismatch {
                left: q.len(),
                right: l.len(),
            });
        }
        if q.len() != u.len() {
            return Err(ValidationError::DimensionMismatch {
                left: q.len(),
                right: u.len(),
            });
        }
        if q.is_empty() {
            return Err(ValidationError::TooShort { len: 0 });
        }
        for (index, value) in q.iter().chain(&l).chain(&u).enumerate() {
            if !value.is_finite() {
                return Err(ValidationError::NonFinite {
                    index: index % q.len(),
                });
            }
        }
        for index in 0..q.len() {
            if l[index] > u[index] {
                return Err(ValidationError::InvalidBounds { index });
            }
        }
        let sum_l = compensated_sum(l.iter().copied());
        let sum_u = compensated_sum(u.iter().copied());
        if sum_l > 1.0 || sum_u < 1.0 {
            return Err(ValidationError::InfeasibleBounds { sum_l, sum_u });
        }
        Ok(Self { q, l, u })
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn lower(&self) -> &[f64] {
        &self.l
    }

    pub fn upper(&self) -> &[f64] {
        &self.u
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }
}

/// How a solve terminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    /// The unconstrained maximizer was inside the ball; no equation solved.
    TrivialCase,
    /// The scalar equation was solved (also used by the exact sweep and
    /// kink-walk algorithms, which locate the solution directly).
    RootFound,
    /// Constant payoffs: every feasible point is optimal, `p = q` returned.
    DegenerateObjective,
}

/// Solver output: the optimal vector plus the multipliers and counters the
/// oracle and bench layers consume.
#[derive(Debug, Clone, Serialize)]
pub struct SolverResult {
    pub p: Vec<f64>,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub status: SolveStatus,
    pub h_evaluations: u64,
    pub objective: f64,
}
