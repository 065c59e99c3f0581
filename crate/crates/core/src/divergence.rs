//! The five divergence generating functions and full-vector divergence
//! evaluation.
//!
//! Each kind is a convex function `phi` with `phi(1) = 0`; the divergence of
//! `p` from `q` is `sum_i q_i * phi(p_i / q_i)`. Values may be `+inf` (Burg
//! and chi-square at any `p_i = 0`) but never NaN: `0 * log 0` is defined as
//! `0` per the usual information-theoretic convention.

use thiserror::Error;

use crate::problem::Distribution;

#[derive(Debug, Error, PartialEq)]
pub enum DivergenceError {
    #[error("phi is only defined for t >= 0, got {t}")]
    NegativeArgument { t: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

/// Generating function selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceKind {
    /// `t log t` (Kullback-Leibler)
    Kl,
    /// `-log t` (Burg entropy)
    Burg,
    /// `(sqrt(t) - 1)^2` (Hellinger)
    Hellinger,
    /// `(t - 1)^2 / t` (chi-square)
    ChiSq,
    /// `(t - 1)^2` (modified chi-square)
    ModChiSq,
}

impl DivergenceKind {
    pub const ALL: [DivergenceKind; 5] = [
        DivergenceKind::Kl,
        DivergenceKind::Burg,
        DivergenceKind::Hellinger,
        DivergenceKind::ChiSq,
        DivergenceKind::ModChiSq,
    ];
}

/// Evaluate the generating function `phi` at `t >= 0`.
///
/// Boundary conventions at `t = 0`: KL gives 0 (the limit of `t log t`),
/// Burg and chi-square give `+inf`, Hellinger and modified chi-square give 1.
pub fn phi(kind: DivergenceKind, t: f64) -> Result<f64, DivergenceError> {
    if t < 0.0 || t.is_nan() {
        return Err(DivergenceError::NegativeArgument { t });
    }
    Ok(phi_unchecked(kind, t))
}

fn phi_unchecked(kind: DivergenceKind, t: f64) -> f64 {
    match kind {
        DivergenceKind::Kl => {
            if t == 0.0 {
                0.0
            } else {
                t * t.ln()
            }
        }
        DivergenceKind::Burg => {
            if t == 0.0 {
                f64::INFINITY
            } else {
                -t.ln()
            }
        }
        DivergenceKind::Hellinger => {
            let s = t.sqrt() - 1.0;
            s * s
        }
        DivergenceKind::ChiSq => {
            if t == 0.0 {
                f64::INFINITY
            } else {
                let s = t - 1.0;
                s * s / t
            }
        }
        DivergenceKind::ModChiSq => {
            let s = t - 1.0;
            s * s
        }
    }
}

/// Full-vector divergence `sum_i q_i phi(p_i / q_i)`, propagating `+inf`.
///
/// `p` must be entrywise nonnegative and the same length as `q`; it does not
/// need to sum to one (the trivial-case candidates carry zeros).
pub fn divergence(
    kind: DivergenceKind,
    p: &[f64],
    q: &Distribution,
) -> Result<f64, DivergenceError> {
    let qs = q.weights();
    if p.len() != qs.len() {
        return Err(DivergenceError::DimensionMismatch {
            left: p.len(),
            right: qs.len(),
        });
    }
    let mut total = 0.0;
    for (&pi, &qi) in p.iter().zip(qs) {
        if pi < 0.0 || pi.is_nan() {
            return Err(DivergenceError::NegativeArgument { t: pi });
        }
        total += qi * phi_unchecked(kind, pi / qi);
        if total == f64::INFINITY {
            return Ok(f64::INFINITY);
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::validate_distribution;
    use proptest::prelude::*;

    #[test]
    fn phi_is_zero_at_one_for_every_kind() {
        for kind in DivergenceKind::ALL {
            assert_eq!(phi(kind, 1.0).unwrap(), 0.0, "{kind:?}");
        }
    }

    #[test]
    fn phi_table_values() {
        // Hellinger: (sqrt(4) - 1)^2 = 1
        assert!((phi(DivergenceKind::Hellinger, 4.0).unwrap() - 1.0).abs() < 1e-15);
        // modified chi-square: (3 - 1)^2 = 4
        assert!((phi(DivergenceKind::ModChiSq, 3.0).unwrap() - 4.0).abs() < 1e-15);
        // KL at e: e * 1
        assert!(
            (phi(DivergenceKind::Kl, std::f64::consts::E).unwrap() - std::f64::consts::E).abs()
                < 1e-15
        );
    }

    #[test]
    fn phi_boundary_conventions() {
        assert_eq!(phi(DivergenceKind::Kl, 0.0).unwrap(), 0.0);
        assert_eq!(phi(DivergenceKind::Burg, 0.0).unwrap(), f64::INFINITY);
        assert_eq!(phi(DivergenceKind::ChiSq, 0.0).unwrap(), f64::INFINITY);
        assert_eq!(phi(DivergenceKind::Hellinger, 0.0).unwrap(), 1.0);
        assert_eq!(phi(DivergenceKind::ModChiSq, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn phi_rejects_negative() {
        for kind in DivergenceKind::ALL {
            assert!(matches!(
                phi(kind, -0.5).unwrap_err(),
                DivergenceError::NegativeArgument { .. }
            ));
        }
    }

    #[test]
    fn divergence_of_q_from_itself_is_zero() {
        let q = validate_distribution(vec![0.2, 0.3, 0.5]).unwrap();
        for kind in DivergenceKind::ALL {
            let d = divergence(kind, q.weights(), &q).unwrap();
            assert!(d.abs() < 1e-15, "{kind:?}: {d}");
        }
    }

    #[test]
    fn kl_divergence_of_point_mass() {
        let q = validate_distribution(vec![0.5, 0.5]).unwrap();
        let d = divergence(DivergenceKind::Kl, &[1.0, 0.0], &q).unwrap();
        assert!((d - std::f64::consts::LN_2).abs() < 1e-12, "got {d}");
    }

    #[test]
    fn burg_divergence_of_point_mass_is_infinite() {
        let q = validate_distribution(vec![0.5, 0.5]).unwrap();
        let d = divergence(DivergenceKind::Burg, &[1.0, 0.0], &q).unwrap();
        assert_eq!(d, f64::INFINITY);
    }

    #[test]
    fn divergence_dimension_mismatch() {
        let q = validate_distribution(vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            divergence(DivergenceKind::Kl, &[1.0], &q).unwrap_err(),
            DivergenceError::DimensionMismatch { .. }
        ));
    }

    /// Textbook per-coordinate formulas, used as an independent route to
    /// the same number as `q * phi(p/q)`.
    fn table_formula(kind: DivergenceKind, p: f64, q: f64) -> f64 {
        match kind {
            DivergenceKind::Kl => {
                if p == 0.0 {
                    0.0
                } else {
                    p * (p / q).ln()
                }
            }
            DivergenceKind::Burg => q * (q / p).ln(),
            DivergenceKind::Hellinger => {
                let s = p.sqrt() - q.sqrt();
                s * s
            }
            DivergenceKind::ChiSq => (p - q) * (p - q) / p,
            DivergenceKind::ModChiSq => (p - q) * (p - q) / q,
        }
    }

    fn simplex_3(a: f64, b: f64) -> Vec<f64> {
        // map two uniforms to a strictly interior point of the 3-simplex
        let x = 0.01 + 0.98 * a;
        let y = (1.0 - x) * (0.01 + 0.98 * b);
        vec![x, y, 1.0 - x - y]
    }

    proptest! {
        #[test]
        fn phi_is_convex_on_samples(
            a in 0.0f64..5.0,
            gap in 1e-6f64..5.0,
            theta in 1e-6f64..1.0,
        ) {
            let b = a + gap;
            for kind in DivergenceKind::ALL {
                let lhs = phi(kind, theta * a + (1.0 - theta) * b).unwrap();
                let rhs = theta * phi(kind, a).unwrap() + (1.0 - theta) * phi(kind, b).unwrap();
                if rhs.is_finite() {
                    prop_assert!(lhs <= rhs + 1e-12, "{kind:?}: phi({a},{b},{theta})");
                }
            }
        }

        #[test]
        fn divergence_nonnegative_and_zero_iff_equal(
            a in 0.0f64..1.0, b in 0.0f64..1.0,
            c in 0.0f64..1.0, d in 0.0f64..1.0,
        ) {
            let q = validate_distribution(simplex_3(a, b)).unwrap();
            let p = simplex_3(c, d);
            for kind in DivergenceKind::ALL {
                let dv = divergence(kind, &p, &q).unwrap();
                prop_assert!(dv >= -1e-15, "{kind:?}: {dv}");
                let max_gap = p
                    .iter()
                    .zip(q.weights())
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0f64, f64::max);
                if max_gap > 1e-6 {
                    prop_assert!(dv > 0.0, "{kind:?} zero at p != q");
                }
            }
        }

        #[test]
        fn divergence_matches_table_formula(
            a in 0.0f64..1.0, b in 0.0f64..1.0,
            c in 0.0f64..1.0, d in 0.0f64..1.0,
        ) {
            let q = validate_distribution(simplex_3(a, b)).unwrap();
            let p = simplex_3(c, d);
            for kind in DivergenceKind::ALL {
                let via_phi = divergence(kind, &p, &q).unwrap();
                let via_d: f64 = p
                    .iter()
                    .zip(q.weights())
                    .map(|(&pi, &qi)| table_formula(kind, pi, qi))
                    .sum();
                if via_phi.is_finite() && via_d.is_finite() {
                    prop_assert!(
                        (via_phi - via_d).abs() <= 1e-10 * (1.0 + via_phi.abs()),
                        "{kind:?}: {via_phi} vs {via_d}"
                    );
                }
            }
        }
    }
}
