//! Named validation suites. Each suite runs a fixed set of numerical checks
//! and returns a serialisable report. Reports contain no timings or other
//! run-dependent data, so identical configurations give identical reports
//! whatever the thread count.

use std::f64::consts::TAU;

use nalgebra::Vector3;
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bem_oracle::{oracle_matrix, two_sided_normal_derivative, OracleConfig, QuadratureGrid};
use crate::error::{NptError, Result};
use crate::np_assembly::{
    assemble_block, consistency_delta, consistency_delta_with, np_image_ratio, Convention,
};
use crate::spectral_solver::{balance_block, block_spectrum, convergence_study, eigen_spectrum};
use crate::toroidal_functions::{
    gamma_half_ratio, parity_sign, ring_deriv, ring_p, ring_q, wronskian_residual,
    wronskian_residual_uncorrected, RingKind,
};
use crate::torus_geometry::{
    cartesian_to_toroidal, density_basis, harmonic_eval, surface_frame, toroidal_to_cartesian,
    HarmonicKind, ModeIndex, ToroidalPoint, TorusShape,
};

/// Argument grid shared by the ring-function suites.
pub const Z_GRID: [f64; 5] = [1.05, 1.5, 2.0, 5.0, 10.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Wronskian,
    Symmetry,
    Deriv,
    Geometry,
    Assembly,
    TheoremDelta,
    Spectrum,
    Convergence,
    Jump,
    Oracle,
}

impl Suite {
    pub const ALL: [Suite; 10] = [
        Suite::Wronskian,
        Suite::Symmetry,
        Suite::Deriv,
        Suite::Geometry,
        Suite::Assembly,
        Suite::TheoremDelta,
        Suite::Spectrum,
        Suite::Convergence,
        Suite::Jump,
        Suite::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Wronskian => "wronskian",
            Suite::Symmetry => "symmetry",
            Suite::Deriv => "deriv",
            Suite::Geometry => "geometry",
            Suite::Assembly => "assembly",
            Suite::TheoremDelta => "theorem-delta",
            Suite::Spectrum => "spectrum",
            Suite::Convergence => "convergence",
            Suite::Jump => "jump",
            Suite::Oracle => "oracle",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = NptError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| NptError::InvalidArgument(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationConfig {
    pub a: f64,
    /// Torus used by the single-shape suites (jump, geometry).
    pub tau0: f64,
    pub n_sigma: usize,
    pub n_phi: usize,
    pub oracle_tau0: Vec<f64>,
    pub oracle_n: usize,
    pub oracle_m_max: i64,
    pub spectrum_tau0: Vec<f64>,
    pub spectrum_n: usize,
    pub jump_points: usize,
    pub seed: u64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            a: 1.0,
            tau0: 1.0,
            n_sigma: 256,
            n_phi: 128,
            oracle_tau0: vec![0.8, 1.5],
            oracle_n: 6,
            oracle_m_max: 3,
            spectrum_tau0: vec![0.5, 1.0, 2.0],
            spectrum_n: 12,
            jump_points: 20,
            seed: 20_240_917,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// `value < threshold` is required, or `value > threshold` when `above`.
    pub above: bool,
    /// Recorded checks are reported but do not decide the suite outcome.
    pub gating: bool,
    pub passed: bool,
    pub note: Option<String>,
}

impl Check {
    fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            above: false,
            gating: true,
            passed: value < threshold,
            note: None,
        }
    }

    fn exceeds(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            above: true,
            passed: value > threshold,
            ..Self::below(name, value, threshold)
        }
    }

    fn record(mut self) -> Self {
        self.gating = false;
        self
    }

    fn note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    fn new(suite: Suite, checks: Vec<Check>) -> Self {
        let passed = checks.iter().filter(|c| c.gating).all(|c| c.passed);
        Self {
            suite,
            passed,
            checks,
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub config: ValidationConfig,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

pub fn run_suites(suites: &[Suite], cfg: &ValidationConfig) -> Result<ValidationReport> {
    let reports = suites
        .iter()
        .map(|&s| run_suite(s, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(ValidationReport {
        config: cfg.clone(),
        passed: reports.iter().all(|r| r.passed),
        suites: reports,
    })
}

pub fn run_suite(suite: Suite, cfg: &ValidationConfig) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::Wronskian => wronskian(),
        Suite::Symmetry => symmetry(),
        Suite::Deriv => deriv(),
        Suite::Geometry => geometry(cfg),
        Suite::Assembly => assembly(cfg),
        Suite::TheoremDelta => theorem_delta(cfg),
        Suite::Spectrum => spectrum(cfg),
        Suite::Convergence => convergence(cfg),
        Suite::Jump => jump(cfg),
        Suite::Oracle => oracle(cfg),
    }?;
    Ok(SuiteReport::new(suite, checks))
}

fn index_grid() -> Vec<(i64, i64, f64)> {
    let mut v = Vec::new();
    for m in -4..=4 {
        for n in -6..=6 {
            for z in Z_GRID {
                v.push((m, n, z));
            }
        }
    }
    v
}

fn max_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, f64::max)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn shape(cfg: &ValidationConfig, tau0: f64) -> Result<TorusShape> {
    TorusShape::new(cfg.a, tau0)
}

fn wronskian() -> Result<Vec<Check>> {
    let residuals = index_grid()
        .par_iter()
        .map(|&(m, n, z)| wronskian_residual(m, n, z))
        .collect::<Result<Vec<_>>>()?;
    Ok(vec![
        Check::below(
            "max relative residual",
            max_of(residuals.iter().map(|w| w.relative)),
            1e-9,
        ),
        Check::below(
            "max absolute residual",
            max_of(residuals.iter().map(|w| w.absolute)),
            1e-9,
        )
        .record()
        .note("the right-hand side reaches ~1e7 on this grid; the relative residual gates"),
    ])
}

fn symmetry() -> Result<Vec<Check>> {
    let errors = index_grid()
        .par_iter()
        .map(|&(m, n, z)| {
            let p = ring_p(m, n, z)?.value;
            let negative_order = rel(ring_p(-m, n, z)?.value, p / gamma_half_ratio(n, m));
            let p_mirror = rel(ring_p(m, -n, z)?.value, p);
            let q_mirror = rel(ring_q(m, -n, z)?.value, ring_q(m, n, z)?.value);
            Ok((negative_order, p_mirror.max(q_mirror)))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    Ok(vec![
        Check::below(
            "negative-order relation",
            max_of(errors.iter().map(|e| e.0)),
            1e-11,
        ),
        Check::below("degree symmetry", max_of(errors.iter().map(|e| e.1)), 1e-11),
    ])
}

fn deriv() -> Result<Vec<Check>> {
    let grid = index_grid();
    let fd_errors = grid
        .par_iter()
        .map(|&(m, n, z)| {
            let h = 1e-3 * (z - 1.0);
            let mut worst = 0.0f64;
            for kind in [RingKind::P, RingKind::Q] {
                let f = |x: f64| match kind {
                    RingKind::P => ring_p(-m, n, x).map(|v| v.value),
                    RingKind::Q => ring_q(m, n, x).map(|v| v.value),
                };
                let fd = (f(z - 2.0 * h)? - 8.0 * f(z - h)? + 8.0 * f(z + h)? - f(z + 2.0 * h)?)
                    / (12.0 * h);
                worst = worst.max(rel(ring_deriv(kind, m, n, z)?, fd));
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>>>()?;
    let uncorrected = grid
        .par_iter()
        .map(|&(m, n, z)| wronskian_residual_uncorrected(m, n, z).map(|w| w.relative))
        .collect::<Result<Vec<f64>>>()?;
    Ok(vec![
        Check::below("recurrence vs finite differences", max_of(fd_errors), 1e-7),
        Check::exceeds(
            "uncorrected form, Wronskian relative residual",
            max_of(uncorrected),
            1e-9,
        )
        .record()
        .note("derivative identity without the (z^2-1) d/dz factor"),
    ])
}

fn geometry(cfg: &ValidationConfig) -> Result<Vec<Check>> {
    let s = shape(cfg, cfg.tau0)?;
    let mut rng = StdRng::seed_from_u64(cfg.seed);
    let mut round_trip = 0.0f64;
    for _ in 0..1000 {
        let rho = rng.random_range(0.05..10.0) * s.a();
        let angle = rng.random_range(0.0..TAU);
        let z = rng.random_range(-10.0..10.0) * s.a();
        let v = Vector3::new(rho * angle.cos(), rho * angle.sin(), z);
        if ((rho - s.a()).powi(2) + z * z).sqrt() < 1e-3 * s.a() {
            continue;
        }
        let back = toroidal_to_cartesian(&cartesian_to_toroidal(&v, &s)?, &s);
        round_trip = round_trip.max((back - v).norm() / v.norm());
    }

    let n = 256;
    let h = TAU / n as f64;
    let area: f64 = (0..n)
        .map(|j| surface_frame(0.0, j as f64 * h, &s).measure_density * h * TAU)
        .sum();

    let mut orthogonality = 0.0f64;
    let d = 1e-3;
    for j in 0..16 {
        let (phi, sigma) = (0.41 * j as f64, 0.39 * j as f64 + 0.05);
        let pos = |p: f64, q: f64| surface_frame(p, q, &s).position;
        let diff4 = |f: &dyn Fn(f64) -> Vector3<f64>, x: f64| {
            (f(x - 2.0 * d) - 8.0 * f(x - d) + 8.0 * f(x + d) - f(x + 2.0 * d)) / (12.0 * d)
        };
        let normal = surface_frame(phi, sigma, &s).normal;
        let t_sigma = diff4(&|q| pos(phi, q), sigma).normalize();
        let t_phi = diff4(&|p| pos(p, sigma), phi).normalize();
        orthogonality = orthogonality
            .max(normal.dot(&t_sigma).abs())
            .max(normal.dot(&t_phi).abs());
    }

    let mut continuity = 0.0f64;
    for m in -3..=3 {
        for n in -3..=3 {
            let p = ToroidalPoint::new(s.tau0(), 0.4, 2.2)?;
            let idx = ModeIndex::new(m, n);
            let u_in = harmonic_eval(HarmonicKind::UIn, idx, &p, &s)?;
            let u_out = harmonic_eval(HarmonicKind::UOut, idx, &p, &s)?;
            continuity = continuity.max((u_in - u_out).norm() / u_in.norm().max(1.0));
        }
    }

    // Surface integral of φ_n^0, which does not vanish.
    let means: Vec<f64> = (-2..=2)
        .map(|n| {
            (0..256)
                .map(|j| {
                    let sigma = (j as f64 + 0.5) * TAU / 256.0;
                    let w = surface_frame(0.0, sigma, &s).measure_density * TAU * TAU / 256.0;
                    density_basis(ModeIndex::new(0, n), 0.0, sigma, &s).re * w
                })
                .sum::<f64>()
        })
        .collect();
    let smallest_mean = means.iter().fold(f64::INFINITY, |a, b| a.min(b.abs()));

    Ok(vec![
        Check::below("cartesian round trip", round_trip, 1e-12),
        Check::below("area vs ring torus", rel(area, s.area()), 1e-10),
        Check::below("normal vs tangents", orthogonality, 1e-10),
        Check::below("interior/exterior continuity", continuity, 1e-12),
        Check::exceeds(
            "smallest |surface integral| of phi_n^0, n in [-2,2]",
            smallest_mean,
            0.0,
        )
        .record(),
    ])
}

fn assembly(cfg: &ValidationConfig) -> Result<Vec<Check>> {
    let mut entrywise = 0.0f64;
    let mut transpose = 0.0f64;
    let mut asymmetry = 0.0f64;
    let mut similarity = 0.0f64;
    for tau0 in cfg.spectrum_tau0.iter().copied() {
        let s = shape(cfg, tau0)?;
        let z0 = s.z0();
        for m in -3..=3i64 {
            let block = assemble_block(m, 6, &s, Convention::OperatorForm)?;
            for n in -6..=6i64 {
                for l in -6..=6i64 {
                    // g_l recovered as P^m / P^{-m}, avoiding the finite product.
                    let g = |k: i64| -> Result<f64> {
                        Ok(ring_p(m, k, z0)?.value / ring_p(-m, k, z0)?.value)
                    };
                    let q = |k: i64| ring_q(m, k, z0).map(|v| v.value);
                    let p = |k: i64| ring_p(-m, k, z0).map(|v| v.value);
                    let mut want = 0.5
                        * parity_sign(m)
                        * s.sinh_tau0()
                        * (-((l - n).abs() as f64) * tau0).exp()
                        * q(n)?
                        * p(n)?
                        * g(n)?
                        / g(l)?;
                    if n == l {
                        let (nf, mf) = (n as f64, m as f64);
                        want += 0.5
                            * parity_sign(m)
                            * ((nf - mf + 0.5) * q(n + 1)? * p(n)?
                                + (nf + mf + 0.5) * q(n)? * p(n + 1)?
                                - (2.0 * nf + 1.0) * z0 * q(n)? * p(n)?);
                    }
                    let got = block.entries[(block.position(n), block.position(l))];
                    entrywise = entrywise.max((got - want).abs() / want.abs().max(1.0));
                }
            }
            let op = eigen_spectrum(&block)?.real_parts();
            let co =
                eigen_spectrum(&block.with_convention(Convention::CoefficientForm))?.real_parts();
            transpose = transpose.max(max_of(op.iter().zip(&co).map(|(a, b)| (a - b).abs())));
            let balanced = balance_block(&block);
            if balanced.applied() {
                asymmetry = asymmetry.max(balanced.asymmetry());
                let mut raw: Vec<f64> = block
                    .entries
                    .clone()
                    .complex_eigenvalues()
                    .iter()
                    .map(|c| c.re)
                    .collect();
                let mut bal: Vec<f64> = balanced
                    .matrix
                    .clone()
                    .complex_eigenvalues()
                    .iter()
                    .map(|c| c.re)
                    .collect();
                raw.sort_by(f64::total_cmp);
                bal.sort_by(f64::total_cmp);
                similarity =
                    similarity.max(max_of(raw.iter().zip(&bal).map(|(a, b)| (a - b).abs())));
            }
        }
    }
    Ok(vec![
        Check::below("entrywise vs independent re-evaluation", entrywise, 1e-13),
        Check::below("operator vs coefficient form spectra", transpose, 1e-12),
        Check::below("balanced off-diagonal asymmetry", asymmetry, 1e-12),
        Check::below("balanced vs raw spectra", similarity, 1e-11),
    ])
}

fn theorem_delta(cfg: &ValidationConfig) -> Result<Vec<Check>> {
    let mut off = 0.0f64;
    let mut diag = 0.0f64;
    let mut patched = 0.0f64;
    for tau0 in cfg.spectrum_tau0.iter().copied() {
        let s = shape(cfg, tau0)?;
        for m in -3..=3 {
            let d = consistency_delta(m, 4, &s)?;
            off = off.max(d.max_offdiagonal);
            diag = diag.max(d.max_diagonal_error);
            let p = consistency_delta_with(m, 4, &s, 1.0)?;
            patched = patched.max(max_of(p.delta.iter().flatten().map(|v| v.abs())));
        }
    }

    // Adjudicate with the quadrature oracle on a small block.
    let s = shape(cfg, cfg.tau0)?;
    let grid = QuadratureGrid::new(cfg.n_sigma, cfg.n_phi, &s)?;
    let mut prop_diag = 0.0f64;
    let mut predicted_offset = 0.0f64;
    let mut theorem_diag = 0.0f64;
    let mut unweighted_off = 0.0f64;
    for m in [0, 1] {
        let report = oracle_matrix(m, 3, &grid, &OracleConfig::default())?;
        let delta = consistency_delta(m, 3, &s)?;
        for e in report.entries.iter().filter(|e| e.n == e.l) {
            prop_diag = prop_diag.max((e.oracle.re - e.analytic).abs());
            if let Some(t) = e.theorem_diagonal {
                let k = delta
                    .indices
                    .iter()
                    .position(|&i| i == e.n)
                    .expect("interior index");
                predicted_offset =
                    predicted_offset.max((t - e.oracle.re - delta.predicted_diagonal[k]).abs());
                theorem_diag = theorem_diag.max((t - e.oracle.re).abs());
            }
        }
        unweighted_off = unweighted_off.max(report.max_abs_error_unweighted_offdiagonal);
    }

    Ok(vec![
        Check::below("delta off-diagonal", off, 1e-12),
        Check::below("delta diagonal vs closed form", diag, 1e-12),
        Check::below("delta with halved fourth term", patched, 1e-12),
        Check::below("oracle vs assembled diagonal", prop_diag, 1e-4),
        Check::below(
            "theorem diagonal minus oracle vs predicted offset",
            predicted_offset,
            1e-4,
        ),
        Check::exceeds("theorem diagonal vs oracle", theorem_diag, 1e-2),
        Check::exceeds("unweighted off-diagonal vs oracle", unweighted_off, 1e-2)
            .record()
            .note("q_n p_l in place of q_n p_n g_n / g_l"),
    ])
}

fn spectrum(cfg: &ValidationConfig) -> Result<Vec<Check>> {
    let mut cases = Vec::new();
    for &tau0 in &cfg.spectrum_tau0 {
        for m in -4..=4 {
            cases.push((tau0, m));
        }
    }
    let reports = cases
        .par_iter()
        .map(|&(tau0, m)| block_spectrum(m, cfg.spectrum_n, &shape(cfg, tau0)?))
        .collect::<Result<Vec<_>>>()?;
    let mut excess = f64::NEG_INFINITY;
    let mut imag = 0.0f64;
    let mut fewest_sign = usize::MAX;
    for r in &reports {
        for e in &r.eigenvalues {
            excess = excess.max(e.re.abs() - 0.5);
        }
        imag = imag.max(r.max_imag_residual);
        fewest_sign = fewest_sign.min(r.sign_counts.positive.min(r.sign_counts.negative));
    }
    let mut mirror = 0.0f64;
    for (i, &(_, m)) in cases.iter().enumerate() {
        if m > 0 {
            let j = cases
                .iter()
                .position(|&c| c == (cases[i].0, -m))
                .expect("mirror case");
            let pairs = reports[i].eigenvalues.iter().zip(&reports[j].eigenvalues);
            mirror = mirror.max(max_of(pairs.map(|(a, b)| (a.re - b.re).abs())));
        }
    }
    let top = block_spectrum(0, 16, &shape(cfg, 1.0)?)?.eigenvalues[0].re;
    Ok(vec![
        Check::below("max |Re lambda| - 1/2", excess, 1e-6),
        Check::below("max |Im lambda|", imag, 1e-8),
        Check::exceeds(
            "fewest eigenvalues of one sign per block",
            fewest_sign as f64,
            0.5,
        ),
        Check::below("spectrum(m) vs spectrum(-m)", mirror, 1e-10),
        Check::below(
            "1/2 - top axisymmetric eigenvalue, N=16, tau0=1",
            0.5 - top,
            1e-8,
        )
        .record(),
    ])
}

fn convergence(cfg: &ValidationConfig) -> Result<Vec<Check>> {
    let s = shape(cfg, 1.0)?;
    let mut checks = Vec::new();
    for m in 0..=3 {
        let study = convergence_study(m, &s, &[8, 12, 16, 20])?;
        checks.push(Check::exceeds(
            format!("m={m}: deltas decrease"),
            f64::from(u8::from(study.monotone)),
            0.5,
        ));
        let step = study
            .steps
            .iter()
            .find(|st| st.from == 12)
            .expect("12 -> 16 step");
        checks.push(
            Check::below(
                format!("m={m}: top-10 delta N=12->16"),
                step.max_delta,
                1e-8,
            )
            .record()
            .note(format!(
                "fitted rate {:.4}",
                study.fitted_rate.unwrap_or(f64::NAN)
            )),
        );
    }
    Ok(checks)
}

fn jump(cfg: &ValidationConfig) -> Result<Vec<Check>> {
    let s = shape(cfg, cfg.tau0)?;
    let grid = QuadratureGrid::new(cfg.n_sigma, cfg.n_phi, &s)?;
    let oc = OracleConfig::default();
    let mut rng = StdRng::seed_from_u64(cfg.seed ^ 0x6a75_6d70);
    let mut cases = Vec::new();
    for m in 0..=3 {
        for n in -3..=3 {
            for _ in 0..cfg.jump_points {
                cases.push((m, n, rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)));
            }
        }
    }
    let errors = cases
        .par_iter()
        .map(|&(m, n, phi, sigma)| {
            let idx = ModeIndex::new(m, n);
            let limits = two_sided_normal_derivative(idx, phi, sigma, &grid, &oc)?;
            let density = density_basis(idx, phi, sigma, &s);
            let analytic = density * np_image_ratio(m, n, sigma, &s)?;
            Ok((
                (limits.jump() - density).norm() / density.norm(),
                (limits.average() - analytic).norm() / density.norm(),
                (limits.interior - limits.exterior - density).norm() / density.norm(),
            ))
        })
        .collect::<Result<Vec<(f64, f64, f64)>>>()?;
    let reversed = errors.iter().fold(f64::INFINITY, |a, e| a.min(e.2));
    Ok(vec![
        Check::below(
            "jump (exterior - interior) vs density",
            max_of(errors.iter().map(|e| e.0)),
            1e-4,
        ),
        Check::below(
            "average vs closed-form K*",
            max_of(errors.iter().map(|e| e.1)),
            1e-5,
        ),
        Check::exceeds("jump with sides swapped vs density", reversed, 1.0)
            .record()
            .note("exterior is tau < tau0; the normal points along +tau"),
    ])
}

fn oracle(cfg: &ValidationConfig) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for &tau0 in &cfg.oracle_tau0 {
        let s = shape(cfg, tau0)?;
        let grid = QuadratureGrid::new(cfg.n_sigma, cfg.n_phi, &s)?;
        for m in 0..=cfg.oracle_m_max {
            let report = oracle_matrix(m, cfg.oracle_n, &grid, &OracleConfig::default())?;
            checks.push(Check::below(
                format!("tau0={tau0} m={m}: oracle vs block"),
                report.max_abs_error,
                1e-4,
            ));
        }
    }
    Ok(checks)
}
