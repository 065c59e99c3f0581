//! Scalar root-finding kernels: bracketed bisection, guarded Newton for
//! convex/concave decreasing functions, and a geometric sign search used to
//! initialize Newton.
//!
//! Bisection is driven purely by the bracket geometry, so for a fixed
//! bracket it performs an identical number of function evaluations on every
//! problem; this is what makes the benchmark evaluation counts exactly
//! reproducible. Guarded Newton stops on the scaled residual and is
//! monotone by construction when started on the correct side of the root.

use std::cell::Cell;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RootError {
    #[error("no sign change over [{lo}, {hi}]: h({lo}) and h({hi}) have the same sign")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("exceeded {max_iter} iterations (last x = {last_x})")]
    MaxIterExceeded { max_iter: usize, last_x: f64 },
    #[error("Newton start x0 = {x0} has h = {h0}, wrong sign for {shape:?}")]
    WrongStartSign { x0: f64, h0: f64, shape: Shape },
    #[error("derivative vanished at x = {x} with no bracket to fall back on")]
    ZeroDerivative { x: f64 },
    #[error("no point with the requested sign found after {probes} probes")]
    MaxProbesExceeded { probes: usize },
    #[error("h evaluated to a non-finite value at x = {x}")]
    NonFinite { x: f64 },
}

/// Curvature/monotonicity class assumed by the guarded Newton iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    /// Decreasing and convex; start left of the root where `h > 0`.
    ConvexDecreasing,
    /// Decreasing and concave; start right of the root where `h < 0`.
    ConcaveDecreasing,
}

/// Sign requested from [`find_sign_point`]. Zero matches neither.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    fn matches(self, value: f64) -> bool {
        match self {
            Sign::Positive => value > 0.0,
            Sign::Negative => value < 0.0,
        }
    }
}

/// Tolerances and iteration limits for the kernels.
#[derive(Debug, Clone, Copy)]
pub struct RootConfig {
    /// Relative x tolerance. Bisection stops once the bracket width drops
    /// below `tol_x * (1 + s)` where `s` is the magnitude of the initial
    /// bracket; Newton stops once a step does.
    pub tol_x: f64,
    /// Residual tolerance for Newton, scaled by `max(1, |h(x0)|)`.
    pub tol_f: f64,
    pub max_iter: usize,
}

impl Default for RootConfig {
    fn default() -> Self {
        Self {
            tol_x: 1e-12,
            tol_f: 1e-10,
            max_iter: 200,
        }
    }
}

/// A scalar function handle with an optional derivative and an evaluation
/// counter. The counter increments exactly once per `eval` call (derivative
/// evaluations are not counted), which is what the benchmark reports.
///
/// The counter is a plain `Cell`, so one instance belongs to one solve on
/// one thread; distinct solves run concurrently with their own instances.
pub struct ScalarFn<'a> {
    f: Box<dyn Fn(f64) -> f64 + 'a>,
    df: Option<Box<dyn Fn(f64) -> f64 + 'a>>,
    evals: Cell<u64>,
}

impl<'a> ScalarFn<'a> {
    pub fn new(f: impl Fn(f64) -> f64 + 'a) -> Self {
        Self {
            f: Box::new(f),
            df: None,
            evals: Cell::new(0),
        }
    }

    pub fn with_derivative(f: impl Fn(f64) -> f64 + 'a, df: impl Fn(f64) -> f64 + 'a) -> Self {
        Self {
            f: Box::new(f),
            df: Some(Box::new(df)),
            evals: Cell::new(0),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.evals.set(self.evals.get() + 1);
        (self.f)(x)
    }

    /// One-sided derivative where the function is only piecewise smooth.
    ///
    /// # Panics
    /// Panics if the handle was built without a derivative.
    pub fn eval_derivative(&self, x: f64) -> f64 {
        let df = self
            .df
            .as_ref()
            .expect("ScalarFn built without a derivative");
        df(x)
    }

    pub fn has_derivative(&self) -> bool {
        self.df.is_some()
    }

    pub fn evaluations(&self) -> u64 {
        self.evals.get()
    }
}

fn opposite_signs(a: f64, b: f64) -> bool {
    (a > 0.0 && b < 0.0) || (a < 0.0 && b > 0.0)
}

/// Bracketed bisection on `(lo, hi]`.
///
/// The lower endpoint is treated as open: the first evaluation happens at
/// `lo + max(tol_x, tol_x * |lo|)`, which keeps functions that diverge at
/// `lo` (several of the solver equations do) out of the singularity.
///
/// Iteration stops when the bracket width falls below
/// `tol_x * (1 + max(|lo|, |hi|))` (with the endpoint magnitudes taken from
/// the initial bracket) and the midpoint residual clears a coarse sanity
/// level, or when a midpoint evaluates to exactly zero. The width criterion
/// depends only on the bracket, never on the function values, so for
/// well-scaled brackets the evaluation count is a pure function of
/// `(lo, hi, tol_x)`. The residual gate only delays termination when the
/// bracket is wildly larger than the root, where the width criterion alone
/// would accept a point far from it.
pub fn bisect(h: &ScalarFn, lo: f64, hi: f64, cfg: &RootConfig) -> Result<f64, RootError> {
    assert!(lo < hi, "bisect requires lo < hi, got [{lo}, {hi}]");
    const RESIDUAL_SANITY: f64 = 1e-6;
    let guard = f64::max(cfg.tol_x, cfg.tol_x * lo.abs());
    let mut lo = lo + guard;
    let mut hi = hi;
    let width_tol = cfg.tol_x * (1.0 + f64::max(lo.abs(), hi.abs()));

    let f_lo = h.eval(lo);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    let f_hi = h.eval(hi);
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.is_nan() {
        return Err(RootError::NonFinite { x: lo });
    }
    if f_hi.is_nan() {
        return Err(RootError::NonFinite { x: hi });
    }
    if !opposite_signs(f_lo, f_hi) {
        return Err(RootError::NoSignChange { lo, hi });
    }

    let mut f_lo = f_lo;
    let mut f_scale = None;
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..cfg.max_iter {
        mid = 0.5 * (lo + hi);
        let f_mid = h.eval(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.is_nan() {
            return Err(RootError::NonFinite { x: mid });
        }
        let scale = *f_scale.get_or_insert(f64::max(1.0, f_mid.abs()));
        // bracket invariant: endpoints keep opposite signs
        if opposite_signs(f_lo, f_mid) {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
        if hi - lo <= width_tol && f_mid.abs() <= RESIDUAL_SANITY * scale {
            return Ok(mid);
        }
    }
    Err(RootError::MaxIterExceeded {
        max_iter: cfg.max_iter,
        last_x: mid,
    })
}

/// Guarded Newton iteration for a decreasing convex or concave function.
///
/// For `ConcaveDecreasing` the start must satisfy `h(x0) < 0` (right of the
/// root); the iterates then decrease monotonically to the root. For
/// `ConvexDecreasing` the mirror condition `h(x0) > 0` gives an increasing
/// sequence. Stops when `|h| <= tol_f * max(1, |h(x0)|)` or when the step
/// falls below `tol_x * (1 + |x|)`.
///
/// If the derivative vanishes, or a step lands on the far side of the root
/// (possible at the kinks of piecewise-smooth functions), the method
/// finishes by bisection on the sign-changing bracket collected so far.
pub fn newton_guarded(
    h: &ScalarFn,
    x0: f64,
    shape: Shape,
    cfg: &RootConfig,
) -> Result<f64, RootError> {
    assert!(h.has_derivative(), "newton_guarded requires a derivative");
    let f0 = h.eval(x0);
    if f0.is_nan() {
        return Err(RootError::NonFinite { x: x0 });
    }
    let start_ok = match shape {
        Shape::ConcaveDecreasing => f0 < 0.0,
        Shape::ConvexDecreasing => f0 > 0.0,
    };
    if f0 == 0.0 {
        return Ok(x0);
    }
    if !start_ok {
        return Err(RootError::WrongStartSign { x0, h0: f0, shape });
    }
    let f_scale = f64::max(1.0, f0.abs());

    // Track the best point of each sign seen so far; it gives the bisection
    // fallback a valid bracket.
    let mut pos_at: Option<f64> = None;
    let mut neg_at: Option<f64> = None;
    fn record(pos_at: &mut Option<f64>, neg_at: &mut Option<f64>, x: f64, f: f64) {
        if f > 0.0 {
            *pos_at = Some(pos_at.map_or(x, |p| if x > p { x } else { p }));
        } else if f < 0.0 {
            *neg_at = Some(neg_at.map_or(x, |n| if x < n { x } else { n }));
        }
    }
    record(&mut pos_at, &mut neg_at, x0, f0);

    let mut x = x0;
    let mut f = f0;
    for _ in 0..cfg.max_iter {
        if f.abs() <= cfg.tol_f * f_scale {
            return Ok(x);
        }
        let d = h.eval_derivative(x);
        if !d.is_finite() || d.abs() < 1e-300 {
            // fall back to bisection on the recorded bracket if we have one
            if let (Some(p), Some(n)) = (pos_at, neg_at) {
                let (lo, hi) = if p < n { (p, n) } else { (n, p) };
                return bisect(h, lo, hi, cfg);
            }
            return Err(RootError::ZeroDerivative { x });
        }
        let step = f / d;
        let x_new = x - step;
        if !x_new.is_finite() {
            return Err(RootError::NonFinite { x: x_new });
        }
        if step.abs() <= cfg.tol_x * (1.0 + x.abs()) {
            return Ok(x_new);
        }
        let f_new = h.eval(x_new);
        if f_new.abs() <= cfg.tol_f * f_scale {
            return Ok(x_new);
        }
        if f_new.is_nan() {
            return Err(RootError::NonFinite { x: x_new });
        }
        record(&mut pos_at, &mut neg_at, x_new, f_new);
        if opposite_signs(f_new, f0) {
            // stepped across the root (possible at a kink or from rounding);
            // finish on the bracket [x_new, x] / [x, x_new]
            let (lo, hi) = if x_new < x { (x_new, x) } else { (x, x_new) };
            return match bisect(h, lo, hi, cfg) {
                // the bracket can be so tight that the open-endpoint guard
                // steps over the root; either end is then converged
                Err(RootError::NoSignChange { .. }) => {
                    Ok(if f_new.abs() < f.abs() { x_new } else { x })
                }
                other => other,
            };
        }
        x = x_new;
        f = f_new;
    }
    Err(RootError::MaxIterExceeded {
        max_iter: cfg.max_iter,
        last_x: x,
    })
}

/// Probe for a point where `h` has the wanted sign.
///
/// With `lower_barrier = Some(b)` (a pole of `h`), probes `b + delta` with
/// `delta` halving from 1, walking toward the barrier where the function
/// diverges. Otherwise probes `start * 2^k`, doubling away from the origin.
/// Gives up after 200 probes.
pub fn find_sign_point(
    h: &ScalarFn,
    start: f64,
    lower_barrier: Option<f64>,
    want: Sign,
) -> Result<f64, RootError> {
    const MAX_PROBES: usize = 200;
    match lower_barrier {
        Some(b) => {
            let mut delta = 1.0;
            for _ in 0..MAX_PROBES {
                let x = b + delta;
                if want.matches(h.eval(x)) {
                    return Ok(x);
                }
                delta *= 0.5;
            }
        }
        None => {
            assert!(start > 0.0, "doubling search requires a positive start");
            let mut x = start;
            for _ in 0..MAX_PROBES {
                if want.matches(h.eval(x)) {
                    return Ok(x);
                }
                x *= 2.0;
            }
        }
    }
    Err(RootError::MaxProbesExceeded { probes: MAX_PROBES })
}
