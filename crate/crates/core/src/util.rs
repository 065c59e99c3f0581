//! Small numeric helpers shared across the solvers.

/// Compensated (Neumaier) summation.
///
/// Used wherever a sum feeds a tight invariant (distribution normalization,
/// `sum(p) = 1` residuals, the initial value of the kink walk) so that the
/// check tolerance is not eaten by naive accumulation at large `n`.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Dot product `c' p`.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    compensated_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

/// Clamp `x` into `[lo, hi]`.
pub fn clip(x: f64, lo: f64, hi: f64) -> f64 {
    x.max(lo).min(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancellation() {
        // 1 + 1e-16 repeated: naive summation loses the small terms entirely.
        let mut values = vec![1.0];
        values.extend(std::iter::repeat_n(1e-16, 10_000));
        let s = compensated_sum(values.iter().copied());
        assert!((s - (1.0 + 1e-12)).abs() < 1e-15, "got {s}");
    }

    #[test]
    fn clip_bounds() {
        assert_eq!(clip(0.5, 0.0, 1.0), 0.5);
        assert_eq!(clip(-1.0, 0.0, 1.0), 0.0);
        assert_eq!(clip(2.0, 0.0, 1.0), 1.0);
    }
}
