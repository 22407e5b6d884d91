//! Toroidal coordinates `(τ, φ, σ)` around a focal ring of radius `a`, the
//! torus `τ = τ₀`, toroidal harmonics, and the density basis `φ_n^m`.
//!
//! ```text
//! x = a sinh τ cos φ / (cosh τ - cos σ)
//! y = a sinh τ sin φ / (cosh τ - cos σ)
//! z = a sin σ        / (cosh τ - cos σ)
//! ```
//!
//! The surface normal used everywhere in this crate points along `+τ`, which
//! is *into* the solid torus `{τ > τ₀}`.

use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{NptError, Result};
use crate::toroidal_functions::{gamma_half_ratio, parity_sign, ring_p, ring_q};

/// The torus `τ = τ₀` around the focal ring of radius `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusShape {
    a: f64,
    tau0: f64,
}

impl TorusShape {
    pub fn new(a: f64, tau0: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(NptError::InvalidArgument(format!(
                "focal radius must be > 0, got {a}"
            )));
        }
        if !(tau0 > 0.0 && tau0.is_finite()) {
            return Err(NptError::InvalidArgument(format!(
                "tau0 must be > 0, got {tau0}"
            )));
        }
        Ok(Self { a, tau0 })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    /// `cosh τ₀`
    pub fn z0(&self) -> f64 {
        self.tau0.cosh()
    }

    pub fn sinh_tau0(&self) -> f64 {
        self.tau0.sinh()
    }

    /// Distance from the axis to the tube centre of the equivalent ring torus.
    pub fn major_radius(&self) -> f64 {
        self.a / self.tau0.tanh()
    }

    /// Tube radius of the equivalent ring torus.
    pub fn minor_radius(&self) -> f64 {
        self.a / self.tau0.sinh()
    }

    pub fn area(&self) -> f64 {
        4.0 * PI * PI * self.major_radius() * self.minor_radius()
    }

    /// `Γ_mn = (-1)^m Γ(n+m+1/2) / (a sinh τ₀ Γ(n-m+1/2))`
    pub fn density_constant(&self, m: i64, n: i64) -> f64 {
        parity_sign(m) * gamma_half_ratio(n, m) / (self.a * self.sinh_tau0())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToroidalPoint {
    pub tau: f64,
    pub phi: f64,
    pub sigma: f64,
}

impl ToroidalPoint {
    pub fn new(tau: f64, phi: f64, sigma: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(NptError::Domain(format!(
                "tau must be finite and > 0, got {tau}"
            )));
        }
        Ok(Self {
            tau,
            phi: wrap_angle(phi),
            sigma: wrap_angle(sigma),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeIndex {
    pub m: i64,
    pub n: i64,
}

impl ModeIndex {
    pub fn new(m: i64, n: i64) -> Self {
        Self { m, n }
    }
}

/// Position, `+τ` unit normal, and area density `dA / (dσ dφ)` on `τ = τ₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceFrame {
    pub position: Vector3<f64>,
    pub normal: Vector3<f64>,
    pub measure_density: f64,
}

/// Map an angle into `[0, 2π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

pub fn toroidal_to_cartesian(p: &ToroidalPoint, shape: &TorusShape) -> Vector3<f64> {
    coordinates_to_cartesian(p.tau, p.phi, p.sigma, shape.a)
}

pub(crate) fn coordinates_to_cartesian(tau: f64, phi: f64, sigma: f64, a: f64) -> Vector3<f64> {
    let denom = tau.cosh() - sigma.cos();
    let rho = a * tau.sinh() / denom;
    Vector3::new(rho * phi.cos(), rho * phi.sin(), a * sigma.sin() / denom)
}

/// Inverse of [`toroidal_to_cartesian`], with `φ, σ ∈ [0, 2π)`.
pub fn cartesian_to_toroidal(v: &Vector3<f64>, shape: &TorusShape) -> Result<ToroidalPoint> {
    let a = shape.a;
    let rho = v.x.hypot(v.y);
    let scale = a.max(v.norm());
    if rho <= 1e-14 * scale {
        return Err(NptError::SingularLocus("z-axis"));
    }
    let d_far = (rho + a).hypot(v.z);
    let d_near = (rho - a).hypot(v.z);
    if d_near <= 1e-14 * scale {
        return Err(NptError::SingularLocus("focal ring"));
    }
    let tau = (d_far / d_near).ln();
    let sigma = wrap_angle((2.0 * a * v.z).atan2(rho * rho + v.z * v.z - a * a));
    let phi = wrap_angle(v.y.atan2(v.x));
    Ok(ToroidalPoint { tau, phi, sigma })
}

/// Scale factors `(h_τ = h_σ, h_φ)` of the toroidal metric at `(τ, σ)`.
pub fn scale_factors(tau: f64, sigma: f64, a: f64) -> (f64, f64) {
    let denom = tau.cosh() - sigma.cos();
    (a / denom, a * tau.sinh() / denom)
}

/// Unit vector along `+τ` at `(τ, φ, σ)`.
pub fn tau_direction(tau: f64, phi: f64, sigma: f64) -> Vector3<f64> {
    let (ch, sh) = (tau.cosh(), tau.sinh());
    let c = sigma.cos();
    // ∂/∂τ of (sinh τ/(cosh τ - cos σ), sin σ/(cosh τ - cos σ)), up to a common positive factor.
    let radial = 1.0 - c * ch;
    let axial = -sigma.sin() * sh;
    let len = radial.hypot(axial);
    Vector3::new(
        radial * phi.cos() / len,
        radial * phi.sin() / len,
        axial / len,
    )
}

pub fn surface_frame(phi: f64, sigma: f64, shape: &TorusShape) -> SurfaceFrame {
    let tau0 = shape.tau0;
    let denom = shape.z0() - sigma.cos();
    SurfaceFrame {
        position: coordinates_to_cartesian(tau0, phi, sigma, shape.a),
        normal: tau_direction(tau0, phi, sigma),
        measure_density: shape.a * shape.a * shape.sinh_tau0() / (denom * denom),
    }
}

/// `φ_n^m(φ, σ) = Γ_mn (cosh τ₀ - cos σ)^{3/2} e^{imφ} e^{inσ}`
pub fn density_basis(idx: ModeIndex, phi: f64, sigma: f64, shape: &TorusShape) -> Complex64 {
    let weight = (shape.z0() - sigma.cos()).powf(1.5);
    let amplitude = shape.density_constant(idx.m, idx.n) * weight;
    Complex64::from_polar(amplitude, idx.m as f64 * phi + idx.n as f64 * sigma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HarmonicKind {
    /// `(cosh τ - cos σ)^{1/2} Q^m_{n-1/2}(cosh τ) e^{imφ} e^{inσ}`
    G,
    /// `(cosh τ - cos σ)^{1/2} P^m_{n-1/2}(cosh τ) e^{imφ} e^{inσ}`
    H,
    /// `P^m_{n-1/2}(z₀) G_mn`, the single-layer potential inside (`τ ≥ τ₀`)
    UIn,
    /// `Q^m_{n-1/2}(z₀) H_mn`, the single-layer potential outside (`τ ≤ τ₀`)
    UOut,
}

pub fn harmonic_eval(
    kind: HarmonicKind,
    idx: ModeIndex,
    p: &ToroidalPoint,
    shape: &TorusShape,
) -> Result<Complex64> {
    let ModeIndex { m, n } = idx;
    let z = p.tau.cosh();
    let phase = Complex64::from_polar(1.0, m as f64 * p.phi + n as f64 * p.sigma);
    let root = (z - p.sigma.cos()).sqrt();
    let value = match kind {
        HarmonicKind::G => root * ring_q(m, n, z)?.value,
        HarmonicKind::H => root * ring_p(m, n, z)?.value,
        HarmonicKind::UIn => {
            if p.tau < shape.tau0 {
                return Err(NptError::Domain(format!(
                    "interior solution needs tau >= tau0 ({} < {})",
                    p.tau, shape.tau0
                )));
            }
            ring_p(m, n, shape.z0())?.value * root * ring_q(m, n, z)?.value
        }
        HarmonicKind::UOut => {
            if p.tau > shape.tau0 {
                return Err(NptError::Domain(format!(
                    "exterior solution needs tau <= tau0 ({} > {})",
                    p.tau, shape.tau0
                )));
            }
            ring_q(m, n, shape.z0())?.value * root * ring_p(m, n, z)?.value
        }
    };
    Ok(phase * value)
}
