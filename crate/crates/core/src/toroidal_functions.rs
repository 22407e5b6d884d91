//! Ring (toroidal) Legendre functions `P^m_{n-1/2}(z)` and `Q^m_{n-1/2}(z)`
//! for integer `m`, `n` and real `z > 1`.
//!
//! Conventions follow Hobson's real-valued functions on `z > 1`:
//! `P^m = (z²-1)^{m/2} d^m P / dz^m` and `Q^m` carries the `(-1)^m` phase,
//! so that both satisfy
//!
//! ```text
//! Q^m P^m' - P^m Q^m' = (-1)^m Γ(n+m+1/2) / (Γ(n-m+1/2) (z²-1)).
//! ```
//!
//! Every value comes from a quadrature:
//!
//! * `P` from the periodic Laplace-type integral
//!   `(-1)^m Γ(n+1/2)/Γ(n-m+1/2) · (1/2π) ∫_0^{2π} cos mθ (z + √(z²-1) cos θ)^{-(n+1/2)} dθ`,
//!   valid for all integers.
//! * `Q` from the semi-infinite integral
//!   `(-1)^m Γ(n+1/2)/Γ(n-m+1/2) ∫_0^∞ cosh mt (z + √(z²-1) cosh t)^{-(n+1/2)} dt`
//!   when it converges (`n + 1/2 > |m|`), and otherwise from the compact
//!   cosine form
//!   `Γ(n+m+1/2)/Γ(n-m+1/2) / (√2 Γ(m+1/2)/Γ(1/2)) · (z²-1)^{-m/2} ∫_0^π (z - cos θ)^{m-1/2} cos nθ dθ`
//!   obtained from Whipple's formula.
//!
//! Gamma ratios at half-integers are evaluated as finite products, never
//! through a gamma function.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{NptError, Result};
use crate::quadrature::{exp_sinh, half_period_trapezoid, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RingKind {
    P,
    Q,
}

impl std::str::FromStr for RingKind {
    type Err = NptError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P" | "p" => Ok(RingKind::P),
            "Q" | "q" => Ok(RingKind::Q),
            other => Err(NptError::InvalidArgument(format!(
                "unknown ring function kind {other:?} (expected P or Q)"
            ))),
        }
    }
}

/// One evaluated ring function, `P^m_{n-1/2}(z)` or `Q^m_{n-1/2}(z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingFunctionValue {
    pub kind: RingKind,
    pub order: i64,
    pub degree_index: i64,
    pub z: f64,
    pub value: f64,
    pub est_abs_error: f64,
}

/// Which integral representation `ring_q` uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QRoute {
    /// Semi-infinite integral when it converges, cosine form otherwise.
    #[default]
    Auto,
    /// Semi-infinite integral only; fails with `OverflowGuard` when divergent.
    SemiInfinite,
    /// Compact cosine form only.
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RingConfig {
    pub tolerance: Tolerance,
}

/// `(-1)^k` for any integer `k`.
pub fn parity_sign(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `Γ(a + 1/2) / Γ(b + 1/2)` as a product of half-integers.
pub fn half_integer_gamma_quotient(a: i64, b: i64) -> f64 {
    let product = |lo: i64, hi: i64| -> f64 { (lo..hi).map(|k| k as f64 + 0.5).product() };
    if a >= b {
        product(b, a)
    } else {
        1.0 / product(a, b)
    }
}

/// `Γ(n+m+1/2) / Γ(n-m+1/2)`.
pub fn gamma_half_ratio(n: i64, m: i64) -> f64 {
    half_integer_gamma_quotient(n + m, n - m)
}

fn check_argument(z: f64) -> Result<()> {
    if z > 1.0 && z.is_finite() {
        Ok(())
    } else {
        Err(NptError::Domain(format!(
            "ring functions need a finite argument z > 1, got {z}"
        )))
    }
}

// √(z²-1) without cancellation near z = 1.
fn sqrt_z2m1(z: f64) -> f64 {
    ((z - 1.0) * (z + 1.0)).sqrt()
}

/// `P^m_{n-1/2}(z)` with the default configuration.
pub fn ring_p(m: i64, n: i64, z: f64) -> Result<RingFunctionValue> {
    ring_p_with(m, n, z, &RingConfig::default())
}

pub fn ring_p_with(m: i64, n: i64, z: f64, cfg: &RingConfig) -> Result<RingFunctionValue> {
    check_argument(z)?;
    let s = sqrt_z2m1(z);
    let exponent = n as f64 + 0.5;
    let mf = m as f64;
    let integral = half_period_trapezoid(
        |theta| (mf * theta).cos() * (-exponent * (z + s * theta.cos()).ln()).exp(),
        cfg.tolerance,
        "ring P integral",
    )?;
    // (1/2π) ∫_0^{2π} = (1/π) ∫_0^π for the even integrand.
    let prefactor = parity_sign(m) * half_integer_gamma_quotient(n, n - m) / PI;
    Ok(RingFunctionValue {
        kind: RingKind::P,
        order: m,
        degree_index: n,
        z,
        value: prefactor * integral.value,
        est_abs_error: (prefactor * integral.abs_error).abs(),
    })
}

/// `Q^m_{n-1/2}(z)` with the default configuration and route.
pub fn ring_q(m: i64, n: i64, z: f64) -> Result<RingFunctionValue> {
    ring_q_with(m, n, z, QRoute::Auto, &RingConfig::default())
}

pub fn ring_q_with(
    m: i64,
    n: i64,
    z: f64,
    route: QRoute,
    cfg: &RingConfig,
) -> Result<RingFunctionValue> {
    check_argument(z)?;
    let (value, err) = match route {
        QRoute::SemiInfinite => q_semi_infinite(m, n, z, cfg)?,
        QRoute::Cosine => q_cosine(m, n, z, cfg)?,
        QRoute::Auto => {
            // Q_{ν} = Q_{-ν-1} at half-integer degree, so the index can be
            // reflected to n >= 0 before choosing a representation.
            let reflected = n.abs();
            if semi_infinite_converges(m, reflected) {
                q_semi_infinite(m, reflected, z, cfg)?
            } else {
                q_cosine(m, n, z, cfg)?
            }
        }
    };
    Ok(RingFunctionValue {
        kind: RingKind::Q,
        order: m,
        degree_index: n,
        z,
        value,
        est_abs_error: err,
    })
}

fn semi_infinite_converges(m: i64, n: i64) -> bool {
    n as f64 + 0.5 > m.abs() as f64
}

fn q_semi_infinite(m: i64, n: i64, z: f64, cfg: &RingConfig) -> Result<(f64, f64)> {
    if !semi_infinite_converges(m, n) {
        return Err(NptError::OverflowGuard { m, n });
    }
    let s = sqrt_z2m1(z);
    let exponent = n as f64 + 0.5;
    let mu = m.unsigned_abs() as f64;
    let ln_half_s = (0.5 * s).ln();
    let log_integrand = |t: f64| -> f64 {
        let x = mu * t;
        let ln_cosh = x + (-2.0 * x).exp().ln_1p() - std::f64::consts::LN_2;
        // ln(z + s cosh t) = t + ln(s/2 + z e^{-t} + (s/2) e^{-2t})
        let e = (-t).exp();
        let ln_base = t + ln_half_s + (2.0 * z / s * e + e * e).ln_1p();
        ln_cosh - exponent * ln_base
    };
    let integral = exp_sinh(
        log_integrand,
        cfg.tolerance,
        "ring Q semi-infinite integral",
    )?;
    let prefactor = parity_sign(m) * half_integer_gamma_quotient(n, n - m);
    Ok((
        prefactor * integral.value,
        (prefactor * integral.abs_error).abs(),
    ))
}

fn q_cosine(m: i64, n: i64, z: f64, cfg: &RingConfig) -> Result<(f64, f64)> {
    let power = m as f64 - 0.5;
    let nf = n as f64;
    let ln_s2 = ((z - 1.0) * (z + 1.0)).ln();
    let integral = half_period_trapezoid(
        |theta| (power * (z - theta.cos()).ln()).exp() * (nf * theta).cos(),
        cfg.tolerance,
        "ring Q cosine integral",
    )?;
    let prefactor = gamma_half_ratio(n, m) / (SQRT_2 * half_integer_gamma_quotient(m, 0))
        * (-0.5 * m as f64 * ln_s2).exp();
    Ok((
        prefactor * integral.value,
        (prefactor * integral.abs_error).abs(),
    ))
}

/// `d/dz P^{order}_{n-1/2}(z)` via `(z²-1) f' = (n+1/2-order) f_{n+1/2} - (n+1/2) z f_{n-1/2}`.
pub fn p_derivative(order: i64, n: i64, z: f64) -> Result<f64> {
    check_argument(z)?;
    let lower = ring_p(order, n, z)?.value;
    let upper = ring_p(order, n + 1, z)?.value;
    Ok(recurrence_numerator(order, n, z, lower, upper) / ((z - 1.0) * (z + 1.0)))
}

/// `d/dz Q^{order}_{n-1/2}(z)`, same recurrence as [`p_derivative`].
pub fn q_derivative(order: i64, n: i64, z: f64) -> Result<f64> {
    check_argument(z)?;
    let lower = ring_q(order, n, z)?.value;
    let upper = ring_q(order, n + 1, z)?.value;
    Ok(recurrence_numerator(order, n, z, lower, upper) / ((z - 1.0) * (z + 1.0)))
}

fn recurrence_numerator(order: i64, n: i64, z: f64, lower: f64, upper: f64) -> f64 {
    let half = n as f64 + 0.5;
    (half - order as f64) * upper - half * z * lower
}

/// Derivative of `P^{-m}_{n-1/2}` (kind `P`) or `Q^m_{n-1/2}` (kind `Q`).
///
/// The sign pairing matches the derivative identity used to eliminate
/// derivatives from the diagonal of the NP matrix: `+m` for `P^{-m}`,
/// `-m` for `Q^m` in the `(n + 1/2 ± m)` coefficient.
pub fn ring_deriv(kind: RingKind, m: i64, n: i64, z: f64) -> Result<f64> {
    match kind {
        RingKind::P => p_derivative(-m, n, z),
        RingKind::Q => q_derivative(m, n, z),
    }
}

/// The derivative identity as it is often stated, i.e. the right-hand
/// side without the `1/(z²-1)` factor. Kept only to show that it fails the
/// Wronskian check.
pub fn ring_deriv_uncorrected(kind: RingKind, m: i64, n: i64, z: f64) -> Result<f64> {
    check_argument(z)?;
    let (order, lower, upper) = match kind {
        RingKind::P => (-m, ring_p(-m, n, z)?.value, ring_p(-m, n + 1, z)?.value),
        RingKind::Q => (m, ring_q(m, n, z)?.value, ring_q(m, n + 1, z)?.value),
    };
    Ok(recurrence_numerator(order, n, z, lower, upper))
}

/// Residual of the Wronskian identity for same-order `P^m`, `Q^m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WronskianResidual {
    pub m: i64,
    pub n: i64,
    pub z: f64,
    /// `(-1)^m Γ(n+m+1/2) / (Γ(n-m+1/2) (z²-1))`
    pub target: f64,
    pub absolute: f64,
    /// `absolute / |target|`
    pub relative: f64,
}

pub fn wronskian_residual(m: i64, n: i64, z: f64) -> Result<WronskianResidual> {
    check_argument(z)?;
    let p = ring_p(m, n, z)?.value;
    let q = ring_q(m, n, z)?.value;
    let dp = p_derivative(m, n, z)?;
    let dq = q_derivative(m, n, z)?;
    Ok(wronskian_from_parts(m, n, z, p, q, dp, dq))
}

/// Wronskian residual when the derivatives come from the uncorrected identity.
pub fn wronskian_residual_uncorrected(m: i64, n: i64, z: f64) -> Result<WronskianResidual> {
    check_argument(z)?;
    let p = ring_p(m, n, z)?.value;
    let q = ring_q(m, n, z)?.value;
    let dp = recurrence_numerator(m, n, z, p, ring_p(m, n + 1, z)?.value);
    let dq = recurrence_numerator(m, n, z, q, ring_q(m, n + 1, z)?.value);
    Ok(wronskian_from_parts(m, n, z, p, q, dp, dq))
}

fn wronskian_from_parts(
    m: i64,
    n: i64,
    z: f64,
    p: f64,
    q: f64,
    dp: f64,
    dq: f64,
) -> WronskianResidual {
    let target = parity_sign(m) * gamma_half_ratio(n, m) / ((z - 1.0) * (z + 1.0));
    let absolute = (q * dp - p * dq - target).abs();
    WronskianResidual {
        m,
        n,
        z,
        target,
        absolute,
        relative: absolute / target.abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn gamma_ratios_at_half_integers() {
        assert_eq!(gamma_half_ratio(5, 0), 1.0);
        assert_eq!(gamma_half_ratio(1, 1), 0.75);
        assert_eq!(gamma_half_ratio(0, 1), -0.25);
        // reciprocal for negative order
        assert_eq!(gamma_half_ratio(0, -1), -4.0);
        // Γ(9/2)/Γ(1/2) = 105/16
        assert_eq!(half_integer_gamma_quotient(4, 0), 105.0 / 16.0);
    }

    #[test]
    fn gamma_ratio_is_symmetric_under_degree_reflection() {
        for n in -8..=8 {
            for m in -5..=5 {
                assert!(rel(gamma_half_ratio(-n, m), gamma_half_ratio(n, m)) < 1e-15);
            }
        }
    }

    #[test]
    fn p_tends_to_one_at_z_one() {
        let v = ring_p(0, 3, 1.0 + 1e-12).unwrap();
        assert!((v.value - 1.0).abs() < 1e-9, "{}", v.value);
    }

    #[test]
    fn p_degree_symmetry() {
        let a = ring_p(0, 2, 1.5).unwrap().value;
        let b = ring_p(0, -2, 1.5).unwrap().value;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn q_routes_agree_where_both_apply() {
        let cfg = RingConfig::default();
        for (m, n, z) in [
            (0, 0, 1.25),
            (0, 2, 2.0),
            (1, 3, 1.5),
            (-2, 4, 3.0),
            (3, 5, 1.1),
        ] {
            let a = ring_q_with(m, n, z, QRoute::SemiInfinite, &cfg)
                .unwrap()
                .value;
            let b = ring_q_with(m, n, z, QRoute::Cosine, &cfg).unwrap().value;
            assert!(rel(a, b) < 1e-12, "m={m} n={n} z={z}: {a} vs {b}");
        }
    }

    #[test]
    fn q_degree_symmetry_across_routes() {
        let cfg = RingConfig::default();
        let a = ring_q_with(0, 2, 2.0, QRoute::SemiInfinite, &cfg)
            .unwrap()
            .value;
        let b = ring_q_with(0, -2, 2.0, QRoute::Cosine, &cfg).unwrap().value;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn semi_infinite_route_guards_divergence() {
        let cfg = RingConfig::default();
        let err = ring_q_with(2, 1, 3.0, QRoute::SemiInfinite, &cfg).unwrap_err();
        assert_eq!(err, NptError::OverflowGuard { m: 2, n: 1 });
        assert!(ring_q_with(0, -1, 3.0, QRoute::SemiInfinite, &cfg).is_err());
        // Auto falls back to the cosine form.
        assert!(ring_q(2, 1, 3.0).unwrap().value.is_finite());
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(ring_p(0, 0, 1.0), Err(NptError::Domain(_))));
        assert!(matches!(ring_q(0, 0, 0.5), Err(NptError::Domain(_))));
        assert!(matches!(ring_q(0, 0, f64::NAN), Err(NptError::Domain(_))));
        assert!(ring_deriv(RingKind::P, 0, 0, 1.0).is_err());
        assert!(wronskian_residual(0, 0, -3.0).is_err());
    }

    #[test]
    fn wronskian_examples() {
        let w = wronskian_residual(0, 0, 2.0).unwrap();
        assert!((w.target - 1.0 / 3.0).abs() < 1e-15);
        assert!(w.absolute < 1e-10);
        let w = wronskian_residual(1, 0, 2.0).unwrap();
        assert!((w.target - 1.0 / 12.0).abs() < 1e-15);
        assert!(w.absolute < 1e-10);
        assert!(wronskian_residual(2, 3, 1.1).unwrap().relative < 1e-9);
        assert!(wronskian_residual(1, 1, 1.5).unwrap().relative < 1e-10);
    }

    #[test]
    fn uncorrected_derivative_fails_wronskian() {
        let w = wronskian_residual_uncorrected(1, 1, 1.5).unwrap();
        assert!(w.relative > 1e-2, "{w:?}");
    }

    #[test]
    fn evaluation_is_deterministic() {
        let a = ring_q(3, 1, 1.05).unwrap();
        let b = ring_q(3, 1, 1.05).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        let a = ring_p(-2, 5, 4.0).unwrap();
        let b = ring_p(-2, 5, 4.0).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }
}
