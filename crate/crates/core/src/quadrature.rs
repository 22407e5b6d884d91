//! One-dimensional quadrature rules used by the ring-function evaluators.
//!
//! Two rules are provided:
//!
//! * [`half_period_trapezoid`] integrates an even, `2π`-periodic function over
//!   `[0, π]` with the trapezoidal rule, halving the step until successive
//!   estimates agree. For analytic periodic integrands this converges
//!   geometrically, so the difference between two levels is a safe upper
//!   bound on the error of the finer one.
//! * [`exp_sinh`] integrates a positive function over `[0, ∞)` given its
//!   logarithm, using the double-exponential map `t = exp(π/2 · sinh u)`.
//!   Working with `ln f` keeps integrands such as `cosh(mt) / w(t)^k` finite
//!   far into the tail.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{NptError, Result};

/// Result of an adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// Difference between the last two refinement levels.
    pub abs_error: f64,
    pub evaluations: usize,
}

/// Stopping rule shared by the adaptive rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Relative tolerance on the integral.
    pub rel: f64,
    /// Refinement cap (number of step halvings).
    pub max_levels: u32,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rel: 1e-12,
            max_levels: 18,
        }
    }
}

// Round-off floor, in units of the integral of |f|, below which two
// refinement levels are considered equal.
const NOISE_FLOOR: f64 = 64.0 * f64::EPSILON;

/// `∫_0^π f(θ) dθ` for an even `2π`-periodic `f`.
pub fn half_period_trapezoid<F>(f: F, tol: Tolerance, what: &str) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
{
    let mut intervals: usize = 8;
    let mut h = PI / intervals as f64;
    let (f0, fpi) = (f(0.0), f(PI));
    let mut sum = 0.5 * (f0 + fpi);
    let mut abs_sum = 0.5 * (f0.abs() + fpi.abs());
    for k in 1..intervals {
        let v = f(k as f64 * h);
        sum += v;
        abs_sum += v.abs();
    }
    let mut evaluations = intervals + 1;
    let mut estimate = h * sum;

    for _ in 0..tol.max_levels {
        let h_new = 0.5 * h;
        let mut odd = 0.0;
        for k in 0..intervals {
            let v = f((2 * k + 1) as f64 * h_new);
            odd += v;
            abs_sum += v.abs();
        }
        evaluations += intervals;
        intervals *= 2;
        h = h_new;
        sum += odd;
        let refined = h * sum;
        let diff = (refined - estimate).abs();
        estimate = refined;
        let scale = h * abs_sum;
        if diff <= tol.rel * refined.abs() || diff <= NOISE_FLOOR * scale {
            return Ok(Estimate {
                value: refined,
                abs_error: diff,
                evaluations,
            });
        }
        if !refined.is_finite() {
            break;
        }
    }
    Err(NptError::Convergence {
        what: what.to_string(),
        estimate: estimate.abs(),
    })
}

/// `∫_0^∞ exp(log_f(t)) dt` by the exp-sinh double-exponential rule.
///
/// Terms are dropped once they fall below `1e-18` of the running sum.
pub fn exp_sinh<F>(log_f: F, tol: Tolerance, what: &str) -> Result<Estimate>
where
    F: Fn(f64) -> f64,
{
    const TAIL: f64 = 1e-18;
    // ln t beyond which the map overflows; any decaying integrand is zero there.
    const LN_T_MAX: f64 = 700.0;

    let term = |u: f64| -> f64 {
        let ln_t = FRAC_PI_2 * u.sinh();
        if ln_t > LN_T_MAX {
            return 0.0;
        }
        let t = ln_t.exp();
        (log_f(t) + ln_t + (FRAC_PI_2 * u.cosh()).ln()).exp()
    };

    // Sum of terms at u = offset + j*step for j >= 0 and j < 0, truncated.
    let sweep = |offset: f64, step: f64, reference: f64| -> (f64, usize) {
        let mut total = 0.0;
        let mut count = 0;
        for dir in [1.0, -1.0] {
            let start = if dir > 0.0 { 0 } else { 1 };
            let mut j = start;
            let mut quiet = 0;
            loop {
                let u = offset + dir * j as f64 * step;
                let v = term(u);
                count += 1;
                total += v;
                let scale = reference.max(total.abs());
                if v.abs() <= TAIL * scale || v == 0.0 {
                    quiet += 1;
                    if quiet >= 3 {
                        break;
                    }
                } else {
                    quiet = 0;
                }
                if u.abs() > 8.0 {
                    break;
                }
                j += 1;
            }
        }
        (total, count)
    };

    let mut h = 1.0;
    let (mut sum, mut evaluations) = sweep(0.0, h, 0.0);
    let mut estimate = h * sum;
    for _ in 0..tol.max_levels.min(10) {
        // New nodes sit at the midpoints of the previous level.
        let (mid, n) = sweep(0.5 * h, h, sum.abs());
        evaluations += n;
        sum += mid;
        h *= 0.5;
        let refined = h * sum;
        let diff = (refined - estimate).abs();
        estimate = refined;
        if !refined.is_finite() {
            break;
        }
        if diff <= tol.rel * refined.abs() || diff <= NOISE_FLOOR * refined.abs() {
            return Ok(Estimate {
                value: refined,
                abs_error: diff,
                evaluations,
            });
        }
    }
    Err(NptError::Convergence {
        what: what.to_string(),
        estimate: estimate.abs(),
    })
}

/// Gauss-Legendre nodes and weights mapped onto `[a, b]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    reference: Vec<(f64, f64)>,
}

impl GaussRule {
    pub fn new(points: usize) -> Self {
        let degree = std::num::NonZeroUsize::new(points.max(1)).expect("nonzero");
        let rule = gauss_quad::legendre::GaussLegendre::new(degree);
        Self {
            reference: rule.as_node_weight_pairs().to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.reference.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reference.is_empty()
    }

    /// Iterator over `(node, weight)` on `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.reference
            .iter()
            .map(move |&(x, w)| (mid + half * x, half * w))
    }
}
