//! Worst-case probability distributions and box-constrained simplex
//! projections.
//!
//! Two problem families are solved, both by reduction of their optimality
//! conditions to a single scalar equation:
//!
//! - **Worst-case distribution**: maximize `c' p` over distributions `p`
//!   within a ball of radius `epsilon` around a nominal distribution `q`.
//!   The ball is measured by one of five divergences (Kullback-Leibler,
//!   Burg entropy, Hellinger, chi-square, modified chi-square) or by an
//!   `l1`, `l2` or `l-infinity` norm.
//! - **Projection**: the Euclidean projection of an arbitrary point onto
//!   the unit-sum hyperplane intersected with box bounds `l <= p <= u`.
//!
//! Divergence balls go through a trivial-case check and then bisection or
//! guarded Newton on a bracketed scalar equation ([`dro_phi`]); `l1` and
//! `l-infinity` balls have exact sorting sweeps and `l2` an outer Newton
//! iteration around a sort-and-scan inner solve ([`dro_norm`]); the
//! projection walks the kinks of a piecewise-linear equation
//! ([`box_simplex`]). All solvers run in `O(n)` or `O(n log n)` per scalar
//! evaluation, with evaluation counts that stay flat in `n`; [`bench`]
//! measures this and [`oracle`] cross-checks every solver against
//! brute-force enumeration at small dimensions.

pub mod bench;
pub mod box_simplex;
pub mod divergence;
pub mod dro_norm;
pub mod dro_phi;
pub mod oracle;
pub mod problem;
pub mod rootfind;
pub mod util;

pub use divergence::{divergence, phi, DivergenceKind};
pub use dro_phi::SolveError;
pub use problem::{
    cost_stats, validate_distribution, BoxSimplexInstance, CostVector, DistanceKind, Distribution,
    DroInstance, SolveStatus, SolverResult, ValidationError,
};

/// Solve a worst-case-distribution instance with the solver matching its
/// distance kind.
pub fn solve_dro(inst: &DroInstance) -> Result<SolverResult, SolveError> {
    match inst.distance() {
        DistanceKind::Kl
        | DistanceKind::Burg
        | DistanceKind::Hellinger
        | DistanceKind::ChiSq
        | DistanceKind::ModChiSq => dro_phi::solve(inst),
        DistanceKind::L1 => Ok(dro_norm::solve_l1(inst)),
        DistanceKind::L2 => dro_norm::solve_l2(inst),
        DistanceKind::Linf => Ok(dro_norm::solve_linf(inst)),
    }
}

/// Project onto the box-constrained simplex.
pub fn solve_box_simplex(inst: &BoxSimplexInstance) -> SolverResult {
    box_simplex::solve(inst)
}
