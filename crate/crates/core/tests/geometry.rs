use std::f64::consts::{PI, TAU};

use nalgebra::Vector3;
use npt_core::torus_geometry::{
    cartesian_to_toroidal, harmonic_eval, surface_frame, toroidal_to_cartesian, HarmonicKind,
    ModeIndex, ToroidalPoint, TorusShape,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn u_out_at(v: Vector3<f64>, idx: ModeIndex, shape: &TorusShape) -> Complex64 {
    let p = cartesian_to_toroidal(&v, shape).unwrap();
    harmonic_eval(HarmonicKind::UOut, idx, &p, shape).unwrap()
}

fn seven_point_laplacian(v: Vector3<f64>, h: f64, idx: ModeIndex, shape: &TorusShape) -> Complex64 {
    let centre = u_out_at(v, idx, shape);
    let mut acc = -6.0 * centre;
    for axis in 0..3 {
        let mut e = Vector3::zeros();
        e[axis] = h;
        acc += u_out_at(v + e, idx, shape) + u_out_at(v - e, idx, shape);
    }
    acc / (h * h)
}

#[test]
fn total_area_matches_ring_torus() {
    for (a, tau0) in [(1.0, 0.5), (1.0, 1.0), (2.5, 2.0)] {
        let shape = TorusShape::new(a, tau0).unwrap();
        let n = 256;
        let h = TAU / n as f64;
        // The measure does not depend on φ, so the φ integral is a factor 2π.
        let area: f64 = (0..n)
            .map(|j| surface_frame(0.0, j as f64 * h, &shape).measure_density * h * TAU)
            .sum();
        let rel = (area - shape.area()).abs() / shape.area();
        assert!(rel < 1e-10, "a={a} tau0={tau0}: rel {rel:e}");
        let classical = 4.0 * PI * PI * (a / tau0.tanh()) * (a / tau0.sinh());
        assert!((shape.area() - classical).abs() < 1e-12 * classical);
    }
}

#[test]
fn normal_is_unit_and_orthogonal_to_tangents() {
    let shape = TorusShape::new(1.2, 0.8).unwrap();
    let h = 1e-3;
    // Fourth-order central difference.
    let diff = |f: &dyn Fn(f64) -> Vector3<f64>, x: f64| {
        (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
    };
    for j in 0..12 {
        let phi = 0.37 * j as f64;
        let sigma = 0.53 * j as f64 + 0.1;
        let frame = surface_frame(phi, sigma, &shape);
        assert!((frame.normal.norm() - 1.0).abs() < 1e-14);
        let t_sigma = diff(&|s| surface_frame(phi, s, &shape).position, sigma).normalize();
        let t_phi = diff(&|p| surface_frame(p, sigma, &shape).position, phi).normalize();
        assert!(frame.normal.dot(&t_sigma).abs() < 1e-10);
        assert!(frame.normal.dot(&t_phi).abs() < 1e-10);
    }
}

#[test]
fn exterior_solution_is_harmonic() {
    let shape = TorusShape::new(1.0, 1.0).unwrap();
    let p = ToroidalPoint::new(0.5, 0.3, 1.9).unwrap();
    let v = toroidal_to_cartesian(&p, &shape);
    for (m, n) in [(0, 0), (1, 2), (2, -1), (-3, 3)] {
        let idx = ModeIndex::new(m, n);
        let scale = u_out_at(v, idx, &shape).norm().max(1e-300);
        let coarse = seven_point_laplacian(v, 1e-2, idx, &shape).norm() / scale;
        let fine = seven_point_laplacian(v, 5e-3, idx, &shape).norm() / scale;
        // Second-order truncation error: halving h should cut it by about 4.
        assert!(fine < coarse / 3.0, "m={m} n={n}: {coarse:e} -> {fine:e}");
        assert!(fine < 1e-2, "m={m} n={n}: {fine:e}");
    }
}

#[test]
fn exterior_solution_decay_rates() {
    let shape = TorusShape::new(1.0, 1.0).unwrap();
    let rate = |m: i64, n: i64| {
        let idx = ModeIndex::new(m, n);
        let near = u_out_at(Vector3::new(1e3, 0.0, 0.0), idx, &shape).norm();
        let far = u_out_at(Vector3::new(2e3, 0.0, 0.0), idx, &shape).norm();
        (near / far).log2()
    };
    for n in -2..=2 {
        let r0 = rate(0, n);
        let r1 = rate(1, n);
        eprintln!("decay exponent n={n}: m=0 {r0:.6}, m=1 {r1:.6}");
        assert!((r0 - 1.0).abs() < 1e-3, "m=0 n={n}: {r0}");
        assert!((r1 - 2.0).abs() < 1e-3, "m=1 n={n}: {r1}");
    }
}

#[test]
fn harmonics_stay_bounded_near_the_opposite_locus() {
    let shape = TorusShape::new(1.0, 1.0).unwrap();
    for (m, n) in [(0, 0), (1, 1), (2, -3)] {
        let idx = ModeIndex::new(m, n);
        // G is regular at the focal ring (τ → ∞), H on the z-axis (τ → 0).
        for tau in [5.0, 10.0, 20.0] {
            let p = ToroidalPoint::new(tau, 0.2, 1.0).unwrap();
            let g = harmonic_eval(HarmonicKind::G, idx, &p, &shape).unwrap();
            assert!(
                g.norm().is_finite() && g.norm() < 10.0,
                "G m={m} n={n} tau={tau}"
            );
        }
        for tau in [1e-2, 1e-4, 1e-6] {
            let p = ToroidalPoint::new(tau, 0.2, 1.0).unwrap();
            let h = harmonic_eval(HarmonicKind::H, idx, &p, &shape).unwrap();
            assert!(
                h.norm().is_finite() && h.norm() < 10.0,
                "H m={m} n={n} tau={tau}"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn cartesian_round_trip(
        a in 0.2f64..5.0,
        rho in 0.05f64..20.0,
        angle in 0.0f64..TAU,
        z in -20.0f64..20.0,
    ) {
        let shape = TorusShape::new(a, 1.0).unwrap();
        let v = Vector3::new(rho * angle.cos(), rho * angle.sin(), z);
        prop_assume!(((rho - a).powi(2) + z * z).sqrt() > 1e-3 * a);
        let p = cartesian_to_toroidal(&v, &shape).unwrap();
        prop_assert!((0.0..TAU).contains(&p.phi) && (0.0..TAU).contains(&p.sigma));
        let back = toroidal_to_cartesian(&p, &shape);
        prop_assert!((back - v).norm() <= 1e-12 * v.norm(), "{:?} -> {:?}", v, back);
    }
}
