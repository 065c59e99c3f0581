//! Projection onto the unit-sum hyperplane with box bounds.
//!
//! The optimality conditions reduce to the piecewise-linear, non-increasing
//! equation `h7(lambda) = sum_i clip(q[i] - lambda, [l[i], u[i]]) - 1 = 0`.
//! The solver sorts the two kink families (`q - u`, where a coordinate
//! starts to move, and `q - l`, where it saturates) and walks them in order
//! while tracking the running slope, then interpolates inside the final
//! linear piece.

use crate::problem::{BoxSimplexInstance, SolveStatus, SolverResult};
use crate::util::{clip, compensated_sum};

/// The projection residual as a function of the shift `lambda`.
pub fn h7(lambda: f64, inst: &BoxSimplexInstance) -> f64 {
    let terms = inst
        .q()
        .iter()
        .zip(inst.lower())
        .zip(inst.upper())
        .map(|((&qi, &li), &ui)| clip(qi - lambda, li, ui));
    compensated_sum(terms) - 1.0
}

/// Projection of `q` onto `{p : sum p = 1, l <= p <= u}` by the kink walk.
pub fn solve(inst: &BoxSimplexInstance) -> SolverResult {
    let q = inst.q();
    let l = inst.lower();
    let u = inst.upper();

    // ascending kink positions: r where coordinates leave their upper
    // bound, s where they reach their lower bound
    let mut r: Vec<f64> = q.iter().zip(u).map(|(&qi, &ui)| qi - ui).collect();
    let mut s: Vec<f64> = q.iter().zip(l).map(|(&qi, &li)| qi - li).collect();
    r.sort_unstable_by(f64::total_cmp);
    s.sort_unstable_by(f64::total_cmp);

    let g0 = compensated_sum(u.iter().copied()) - 1.0;
    let lambda = if g0 <= 0.0 {
        // sum(u) = 1 up to rounding: the bounds pin the solution already
        r[0]
    } else {
        walk(&r, &s, g0)
    };

    let p: Vec<f64> = q
        .iter()
        .zip(l)
        .zip(u)
        .map(|((&qi, &li), &ui)| clip(qi - lambda, li, ui))
        .collect();
    let objective = 0.5
        * p.iter()
            .zip(q)
            .map(|(&pi, &qi)| (pi - qi) * (pi - qi))
            .sum::<f64>();
    SolverResult {
        p,
        lambda: Some(lambda),
        mu: None,
        status: SolveStatus::RootFound,
        h_evaluations: 0,
        objective,
    }
}

fn walk(r: &[f64], s: &[f64], g0: f64) -> f64 {
    let n = r.len();
    let mut slope: i64 = 1; // coordinates currently strictly between bounds
    let mut lambda = r[0];
    let mut g = g0;
    let mut comp = 0.0; // Neumaier compensation for g
    let mut i = 0; // next s kink
    let mut j = 1; // next r kink

    loop {
        let next_r = if j < n { r[j] } else { f64::INFINITY };
        // an r kink ties before an s kink at equal positions
        let (kink, is_r) = if next_r <= s[i] {
            (next_r, true)
        } else {
            (s[i], false)
        };
        let g_prev = g + comp;
        let lambda_prev = lambda;

        let delta = -(slope as f64) * (kink - lambda);
        let t = g + delta;
        if g.abs() >= delta.abs() {
            comp += (g - t) + delta;
        } else {
            comp += (delta - t) + g;
        }
        g = t;
        if is_r {
            slope += 1;
            j += 1;
        } else {
            slope -= 1;
            i += 1;
        }
        lambda = kink;

        let g_now = g + comp;
        if g_now <= 0.0 {
            // zero of the linear piece between the last two kinks
            return lambda_prev + g_prev * (lambda - lambda_prev) / (g_prev - g_now);
        }
        if i >= n {
            // all lower bounds active; only reachable when sum(l) = 1 up to
            // rounding, so the last kink is the answer
            return lambda;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::BoxSimplexInstance;

    fn inst(q: &[f64], l: &[f64], u: &[f64]) -> BoxSimplexInstance {
        BoxSimplexInstance::new(q.to_vec(), l.to_vec(), u.to_vec()).unwrap()
    }

    #[test]
    fn h7_hand_values() {
        let inst = inst(&[0.8, 0.6], &[0.0, 0.0], &[0.7, 1.0]);
        assert!(h7(0.2, &inst).abs() < 1e-15);
        // at lambda = min(q - u) every coordinate clips at its upper bound
        let lam0 = (0.8 - 0.7f64).min(0.6 - 1.0);
        assert!((h7(lam0, &inst) - 0.7).abs() < 1e-15);
        // far right: all lower bounds
        assert!((h7(1e9, &inst) - (-1.0)).abs() < 1e-15);
    }

    #[test]
    fn h7_nonincreasing() {
        let inst = inst(
            &[0.9, -0.2, 0.4, 0.1],
            &[0.0, 0.0, 0.05, 0.0],
            &[0.6, 0.5, 0.5, 0.9],
        );
        let mut prev = f64::INFINITY;
        let mut lam = -2.0;
        while lam <= 2.0 {
            let v = h7(lam, &inst);
            assert!(v <= prev + 1e-12, "h7 increased at {lam}");
            prev = v;
            lam += 0.01;
        }
    }

    #[test]
    fn interior_shift() {
        let inst = inst(&[0.8, 0.6], &[0.0, 0.0], &[0.7, 1.0]);
        let r = solve(&inst);
        assert!((r.lambda.unwrap() - 0.2).abs() < 1e-12);
        assert!((r.p[0] - 0.6).abs() < 1e-12);
        assert!((r.p[1] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn upper_bound_active() {
        let inst = inst(&[1.0, 0.0], &[0.0, 0.0], &[0.7, 1.0]);
        let r = solve(&inst);
        assert!((r.lambda.unwrap() + 0.3).abs() < 1e-12);
        assert!((r.p[0] - 0.7).abs() < 1e-12);
        assert!((r.p[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn singleton_feasible_set() {
        let inst = inst(&[0.25, 0.25], &[0.5, 0.5], &[0.5, 0.5]);
        let r = solve(&inst);
        assert_eq!(r.p, vec![0.5, 0.5]);
    }

    #[test]
    fn root_consistency_and_feasibility() {
        let cases = [
            (
                vec![0.9, -0.2, 0.4, 0.1],
                vec![0.0, 0.0, 0.05, 0.0],
                vec![0.6, 0.5, 0.5, 0.9],
            ),
            (
                vec![2.0, 1.0, -1.0],
                vec![0.1, 0.0, 0.0],
                vec![0.8, 0.9, 0.4],
            ),
        ];
        for (q, l, u) in cases {
            let inst = inst(&q, &l, &u);
            let r = solve(&inst);
            let lam = r.lambda.unwrap();
            assert!(h7(lam, &inst).abs() <= 1e-10, "residual {}", h7(lam, &inst));
            let sum = compensated_sum(r.p.iter().copied());
            assert!((sum - 1.0).abs() <= 1e-10, "sum {sum}");
            for ((pi, li), ui) in r.p.iter().zip(&l).zip(&u) {
                assert!(pi >= li && pi <= ui, "bounds violated");
            }
        }
    }

    #[test]
    fn projection_beats_random_feasible_points() {
        let q = vec![0.9, -0.2, 0.4, 0.1];
        let l = vec![0.0, 0.0, 0.05, 0.0];
        let u = vec![0.6, 0.5, 0.5, 0.9];
        let inst = inst(&q, &l, &u);
        let r = solve(&inst);

        // random exchange walk through the feasible polytope, started at p
        let mut z = r.p.clone();
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..10_000 {
            let a = (next() * 4.0) as usize % 4;
            let b = (next() * 4.0) as usize % 4;
            if a == b {
                continue;
            }
            let room = (u[a] - z[a]).min(z[b] - l[b]);
            let d = room * next();
            z[a] += d;
            z[b] -= d;
            let dist_z: f64 = z.iter().zip(&q).map(|(zi, qi)| (zi - qi) * (zi - qi)).sum();
            assert!(
                r.objective * 2.0 <= dist_z + 1e-9,
                "found better feasible point"
            );
        }
    }
}
