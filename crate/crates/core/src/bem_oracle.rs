//! Brute-force surface quadrature for the single-layer potential and the
//! Neumann-Poincaré operator, used to check the analytic blocks.
//!
//! Layer integrals over the torus are split with a smooth cutoff `χ` centred
//! on the target's foot point `(φ₀, σ₀)`:
//!
//! * `(1 - χ) f` vanishes to all orders at the target, so the periodic
//!   trapezoidal rule on the tensor grid converges rapidly;
//! * `χ f` is integrated in polar coordinates around the foot point, where the
//!   Jacobian `r` cancels the `1/r` kernel singularity. Off-surface targets at
//!   height `δ` get radial panels refined geometrically towards `r ≈ δ`.
//!
//! Normal derivatives are taken along the `+τ` unit normal of the foot point,
//! matching `torus_geometry`. With this orientation the limit from `τ < τ₀`
//! minus the limit from `τ > τ₀` is the density, and their mean is `K*`.

use std::f64::consts::{PI, TAU};
use std::ops::RangeInclusive;

use nalgebra::Vector3;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NptError, Result};
use crate::np_assembly::{assemble_block, assemble_theorem_form, offdiag_r_unweighted, Convention};
use crate::quadrature::GaussRule;
use crate::torus_geometry::{
    coordinates_to_cartesian, scale_factors, surface_frame, tau_direction, ModeIndex, SurfaceFrame,
    TorusShape,
};

const FOUR_PI: f64 = 4.0 * PI;

/// Tunables of the near/far split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Patch radius in units of the smaller metric scale factor at the foot point.
    pub patch_scale: f64,
    pub radial_order: usize,
    pub angular_nodes: usize,
    /// Boundary-limit ladder `δ_k = δ₀ 2^{-k}`, `k < ladder_len`.
    pub ladder_len: usize,
    /// `δ₀` in units of the tube radius `a / sinh τ₀`.
    pub ladder_start: f64,
    /// Largest accepted change between the last two Richardson diagonals,
    /// relative to the density scale.
    pub ladder_tolerance: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            patch_scale: 1.2,
            radial_order: 20,
            angular_nodes: 96,
            ladder_len: 7,
            ladder_start: 0.1,
            ladder_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridNode {
    pub phi: f64,
    pub sigma: f64,
    pub frame: SurfaceFrame,
    /// `measure_density · (2π/n_sigma) · (2π/n_phi)`
    pub weight: f64,
}

/// Tensor trapezoidal grid on `τ = τ₀`, nodes at `σ_j = 2πj/n_sigma`,
/// `φ_k = 2πk/n_phi`, stored σ-major.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    pub n_sigma: usize,
    pub n_phi: usize,
    pub shape: TorusShape,
    pub nodes: Vec<GridNode>,
}

impl QuadratureGrid {
    pub fn new(n_sigma: usize, n_phi: usize, shape: &TorusShape) -> Result<Self> {
        if n_sigma < 8 || n_phi < 8 {
            return Err(NptError::InvalidArgument(format!(
                "grid {n_sigma}x{n_phi} is too coarse (need at least 8 nodes per direction)"
            )));
        }
        let (hs, hp) = (TAU / n_sigma as f64, TAU / n_phi as f64);
        let mut nodes = Vec::with_capacity(n_sigma * n_phi);
        for j in 0..n_sigma {
            let sigma = j as f64 * hs;
            for k in 0..n_phi {
                let phi = k as f64 * hp;
                let frame = surface_frame(phi, sigma, shape);
                nodes.push(GridNode {
                    phi,
                    sigma,
                    frame,
                    weight: frame.measure_density * hs * hp,
                });
            }
        }
        Ok(Self {
            n_sigma,
            n_phi,
            shape: *shape,
            nodes,
        })
    }

    pub fn total_weight(&self) -> f64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }

    /// Larger of the two physical node spacings at poloidal angle `sigma`.
    pub fn spacing_at(&self, sigma: f64) -> f64 {
        let s = &self.shape;
        let (h_sigma, h_phi) = scale_factors(s.tau0(), sigma, s.a());
        (h_sigma * TAU / self.n_sigma as f64).max(h_phi * TAU / self.n_phi as f64)
    }

    /// Targets `σ_j + π/n_sigma` midway between σ-nodes.
    pub fn offset_sigmas(&self) -> Vec<f64> {
        (0..self.n_sigma)
            .map(|j| (j as f64 + 0.5) * TAU / self.n_sigma as f64)
            .collect()
    }
}

/// Cutoff equal to 1 at `u = 0` and vanishing with all derivatives at `u = 1`.
fn cutoff(u: f64) -> f64 {
    if u <= 0.0 {
        1.0
    } else if u >= 1.0 {
        0.0
    } else {
        (2.0 * (-1.0 / u).exp() / (u - 1.0)).exp()
    }
}

fn wrap_pm_pi(x: f64) -> f64 {
    let r = (x + PI).rem_euclid(TAU) - PI;
    if r < -PI {
        r + TAU
    } else {
        r
    }
}

/// Densities `φ_n^m` for a contiguous range of `n`, evaluated together.
#[derive(Debug, Clone)]
struct ModeBatch {
    m: i64,
    lo: i64,
    constants: Vec<f64>,
    z0: f64,
}

impl ModeBatch {
    fn new(m: i64, modes: RangeInclusive<i64>, shape: &TorusShape) -> Self {
        let lo = *modes.start();
        let constants = modes.map(|n| shape.density_constant(m, n)).collect();
        Self {
            m,
            lo,
            constants,
            z0: shape.z0(),
        }
    }

    fn len(&self) -> usize {
        self.constants.len()
    }

    /// `acc[k] += w φ_{lo+k}^m(φ, σ)`
    fn accumulate(&self, acc: &mut [Complex64], w: f64, phi: f64, sigma: f64) {
        let base = w * (self.z0 - sigma.cos()).powf(1.5);
        let step = Complex64::from_polar(1.0, sigma);
        let mut phase = Complex64::from_polar(base, self.m as f64 * phi + self.lo as f64 * sigma);
        for (a, c) in acc.iter_mut().zip(&self.constants) {
            *a += phase * *c;
            phase *= step;
        }
    }
}

/// Evaluation point `x = foot + height·ν` for `∫ K(x, y) φ(y) dA(y)` with
/// `K = -⟨x - y, ν⟩ / (4π|x - y|³)` and `ν` the `+τ` normal at the foot point.
struct Target {
    x: Vector3<f64>,
    nu: Vector3<f64>,
    phi0: f64,
    sigma0: f64,
    height: f64,
}

fn normal_kernel(x: &Vector3<f64>, nu: &Vector3<f64>, y: &Vector3<f64>) -> f64 {
    let d = x - y;
    let r2 = d.norm_squared();
    -d.dot(nu) / (FOUR_PI * r2 * r2.sqrt())
}

struct Integrator<'g> {
    grid: &'g QuadratureGrid,
    cfg: OracleConfig,
    rule: GaussRule,
}

impl<'g> Integrator<'g> {
    fn new(grid: &'g QuadratureGrid, cfg: OracleConfig) -> Self {
        Self {
            grid,
            cfg,
            rule: GaussRule::new(cfg.radial_order),
        }
    }

    fn shape(&self) -> &TorusShape {
        &self.grid.shape
    }

    /// Metric scale factors at the foot point and the patch radius.
    fn patch(&self, sigma0: f64) -> (f64, f64, f64) {
        let s = self.shape();
        let (h_sigma, h_phi) = scale_factors(s.tau0(), sigma0, s.a());
        (h_sigma, h_phi, self.cfg.patch_scale * h_sigma.min(h_phi))
    }

    fn radial_breaks(&self, r0: f64, height: f64) -> Vec<f64> {
        let mut breaks = vec![0.0];
        if height > 0.0 {
            let mut r = 0.25 * height;
            while r < 0.5 * r0 {
                breaks.push(r);
                r *= 2.0;
            }
        } else {
            breaks.extend([0.125 * r0, 0.25 * r0, 0.5 * r0]);
        }
        breaks.push(r0);
        breaks
    }

    fn integrate(&self, t: &Target, batch: &ModeBatch) -> Vec<Complex64> {
        let s = *self.shape();
        let (h_sigma, h_phi, r0) = self.patch(t.sigma0);
        let mut far = vec![Complex64::new(0.0, 0.0); batch.len()];
        for node in &self.grid.nodes {
            let dphi = wrap_pm_pi(node.phi - t.phi0) * h_phi;
            let dsig = wrap_pm_pi(node.sigma - t.sigma0) * h_sigma;
            let chi = cutoff(dphi.hypot(dsig) / r0);
            if chi >= 1.0 {
                continue;
            }
            let k = normal_kernel(&t.x, &t.nu, &node.frame.position);
            batch.accumulate(
                &mut far,
                (1.0 - chi) * k * node.weight,
                node.phi,
                node.sigma,
            );
        }

        let mut near = vec![Complex64::new(0.0, 0.0); batch.len()];
        let n_theta = self.cfg.angular_nodes;
        let dtheta = TAU / n_theta as f64;
        let breaks = self.radial_breaks(r0, t.height.abs());
        let jac0 = 1.0 / (h_phi * h_sigma);
        let sh = s.sinh_tau0();
        for i in 0..n_theta {
            let theta = (i as f64 + 0.5) * dtheta;
            let (st, ct) = theta.sin_cos();
            for w in breaks.windows(2) {
                for (r, wr) in self.rule.on(w[0], w[1]) {
                    let phi = t.phi0 + r * ct / h_phi;
                    let sigma = t.sigma0 + r * st / h_sigma;
                    let y = coordinates_to_cartesian(s.tau0(), phi, sigma, s.a());
                    let denom = s.z0() - sigma.cos();
                    let measure = s.a() * s.a() * sh / (denom * denom);
                    let k = normal_kernel(&t.x, &t.nu, &y);
                    let weight = wr * dtheta * r * jac0 * cutoff(r / r0) * measure;
                    batch.accumulate(&mut near, k * weight, phi, sigma);
                }
            }
        }
        far.iter().zip(&near).map(|(a, b)| a + b).collect()
    }

    fn target(&self, phi0: f64, sigma0: f64, height: f64) -> Target {
        let s = self.shape();
        let foot = coordinates_to_cartesian(s.tau0(), phi0, sigma0, s.a());
        let nu = tau_direction(s.tau0(), phi0, sigma0);
        Target {
            x: foot + nu * height,
            nu,
            phi0,
            sigma0,
            height,
        }
    }
}

/// `K*[φ_n^m]` on the surface, sampled on `phis × sigmas`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledField {
    pub m: i64,
    pub n: i64,
    pub phis: Vec<f64>,
    pub sigmas: Vec<f64>,
    /// Row-major over `phis`, then `sigmas`.
    pub values: Vec<Complex64>,
}

impl SampledField {
    pub fn at(&self, i_phi: usize, j_sigma: usize) -> Complex64 {
        self.values[i_phi * self.sigmas.len() + j_sigma]
    }
}

/// `K*[φ_n^m]` for every `n` in `modes`, at each `(φ, σ)` in `phis × sigmas`.
pub fn np_apply_modes(
    m: i64,
    modes: RangeInclusive<i64>,
    phis: &[f64],
    sigmas: &[f64],
    grid: &QuadratureGrid,
    cfg: &OracleConfig,
) -> Vec<SampledField> {
    let integ = Integrator::new(grid, *cfg);
    let batch = ModeBatch::new(m, modes.clone(), &grid.shape);
    let targets: Vec<(f64, f64)> = phis
        .iter()
        .flat_map(|&p| sigmas.iter().map(move |&s| (p, s)))
        .collect();
    let per_target: Vec<Vec<Complex64>> = targets
        .par_iter()
        .map(|&(p, s)| integ.integrate(&integ.target(p, s, 0.0), &batch))
        .collect();
    modes
        .enumerate()
        .map(|(k, n)| SampledField {
            m,
            n,
            phis: phis.to_vec(),
            sigmas: sigmas.to_vec(),
            values: per_target.iter().map(|v| v[k]).collect(),
        })
        .collect()
}

/// `K*[φ_n^m]` along `φ = 0` at the half-offset σ targets of `grid`.
pub fn np_apply(idx: ModeIndex, grid: &QuadratureGrid, cfg: &OracleConfig) -> SampledField {
    np_apply_modes(
        idx.m,
        idx.n..=idx.n,
        &[0.0],
        &grid.offset_sigmas(),
        grid,
        cfg,
    )
    .pop()
    .expect("one mode requested")
}

/// `e^{ilσ}` coefficient of `field / (Γ_ml (cosh τ₀ - cos σ)^{3/2} e^{imφ})`,
/// averaged over the sampled `φ` rows. The σ samples must be uniform.
pub fn project_basis(field: &SampledField, m: i64, l: i64, shape: &TorusShape) -> Complex64 {
    let gamma = shape.density_constant(m, l);
    let ns = field.sigmas.len() as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for (i, &phi) in field.phis.iter().enumerate() {
        let azimuth = Complex64::from_polar(1.0, -(m as f64) * phi);
        let mut row = Complex64::new(0.0, 0.0);
        for (j, &sigma) in field.sigmas.iter().enumerate() {
            let weight = gamma * (shape.z0() - sigma.cos()).powf(1.5);
            row += field.at(i, j) / weight * Complex64::from_polar(1.0, -(l as f64) * sigma);
        }
        total += row * azimuth / ns;
    }
    total / field.phis.len() as f64
}

/// `S[φ_n^m](x)` by the plain tensor trapezoidal rule.
pub fn single_layer_eval(
    idx: ModeIndex,
    point: &Vector3<f64>,
    grid: &QuadratureGrid,
) -> Result<Complex64> {
    let (distance, nearest) = grid
        .nodes
        .iter()
        .map(|n| ((n.frame.position - point).norm(), n))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("grid is non-empty");
    let limit = 4.0 * grid.spacing_at(nearest.sigma);
    if distance < limit {
        return Err(NptError::TooClose { distance, limit });
    }
    let batch = ModeBatch::new(idx.m, idx.n..=idx.n, &grid.shape);
    let mut acc = [Complex64::new(0.0, 0.0)];
    for node in &grid.nodes {
        let g = 1.0 / (FOUR_PI * (point - node.frame.position).norm());
        batch.accumulate(&mut acc, g * node.weight, node.phi, node.sigma);
    }
    Ok(acc[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneSidedLimits {
    /// Limit of `∂_ν S` from `τ < τ₀`, outside the solid torus.
    pub exterior: Complex64,
    /// Limit of `∂_ν S` from `τ > τ₀`, inside the solid torus.
    pub interior: Complex64,
    /// Change between the last two Richardson diagonals, worst side.
    pub spread: f64,
}

impl OneSidedLimits {
    pub fn jump(&self) -> Complex64 {
        self.exterior - self.interior
    }

    pub fn average(&self) -> Complex64 {
        0.5 * (self.exterior + self.interior)
    }
}

fn richardson(values: &[Complex64]) -> (Complex64, f64) {
    // values[k] sampled at δ₀ 2^{-k}; eliminate δ, δ², ... in turn.
    let mut table: Vec<Vec<Complex64>> = vec![values.to_vec()];
    for j in 1..values.len() {
        let prev = &table[j - 1];
        let factor = f64::powi(2.0, j as i32);
        let next: Vec<Complex64> = prev
            .windows(2)
            .map(|w| (w[1] * factor - w[0]) / (factor - 1.0))
            .collect();
        table.push(next);
    }
    let last = table[values.len() - 1][0];
    let before = *table[values.len() - 2]
        .last()
        .expect("ladder has at least two rungs");
    (last, (last - before).norm())
}

/// One-sided limits of `∂_ν S[φ_n^m]` at `(φ, σ)` by Richardson extrapolation
/// of off-surface values along the straight normal line.
pub fn two_sided_normal_derivative(
    idx: ModeIndex,
    phi: f64,
    sigma: f64,
    grid: &QuadratureGrid,
    cfg: &OracleConfig,
) -> Result<OneSidedLimits> {
    if cfg.ladder_len < 2 {
        return Err(NptError::InvalidArgument(
            "boundary ladder needs at least two rungs".into(),
        ));
    }
    let integ = Integrator::new(grid, *cfg);
    let batch = ModeBatch::new(idx.m, idx.n..=idx.n, &grid.shape);
    let delta0 = cfg.ladder_start * grid.shape.a() / grid.shape.sinh_tau0();
    let heights: Vec<f64> = (0..cfg.ladder_len)
        .flat_map(|k| {
            let d = delta0 * 0.5f64.powi(k as i32);
            [-d, d]
        })
        .collect();
    let values: Vec<Complex64> = heights
        .par_iter()
        .map(|&h| integ.integrate(&integ.target(phi, sigma, h), &batch)[0])
        .collect();
    let exterior: Vec<Complex64> = values.iter().step_by(2).copied().collect();
    let interior: Vec<Complex64> = values.iter().skip(1).step_by(2).copied().collect();
    let (ext, s_ext) = richardson(&exterior);
    let (int, s_int) = richardson(&interior);
    let spread = s_ext.max(s_int);
    let scale =
        grid.shape.density_constant(idx.m, idx.n).abs() * (grid.shape.z0() - sigma.cos()).powf(1.5);
    if !(spread <= cfg.ladder_tolerance * scale) {
        return Err(NptError::ExtrapolationDiverged { spread });
    }
    Ok(OneSidedLimits {
        exterior: ext,
        interior: int,
        spread,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEntry {
    pub n: i64,
    pub l: i64,
    pub analytic: f64,
    pub oracle: Complex64,
    pub abs_error: f64,
    pub rel_error: f64,
    /// Same entry from [`offdiag_r_unweighted`].
    pub unweighted_offdiagonal: Option<f64>,
    /// Diagonal entry of the four-term structural form, on interior rows.
    pub theorem_diagonal: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub m: i64,
    #[serde(rename = "N")]
    pub n_trunc: usize,
    pub a: f64,
    pub tau0: f64,
    pub n_sigma: usize,
    pub n_phi: usize,
    pub config: OracleConfig,
    pub entries: Vec<OracleEntry>,
    pub max_abs_error: f64,
    pub max_abs_error_unweighted_offdiagonal: f64,
    pub max_abs_error_theorem_diagonal: f64,
}

/// Oracle block `project_basis(np_apply(φ_n^m), m, l)` against `assemble_block`.
pub fn oracle_matrix(
    m: i64,
    n_trunc: usize,
    grid: &QuadratureGrid,
    cfg: &OracleConfig,
) -> Result<OracleReport> {
    let shape = grid.shape;
    let block = assemble_block(m, n_trunc, &shape, Convention::OperatorForm)?;
    let theorem = assemble_theorem_form(m, n_trunc, &shape)?;
    let big_n = n_trunc as i64;
    let fields = np_apply_modes(m, -big_n..=big_n, &[0.0], &grid.offset_sigmas(), grid, cfg);
    let mut entries = Vec::new();
    for field in &fields {
        let n = field.n;
        for l in -big_n..=big_n {
            let oracle = project_basis(field, m, l, &shape);
            let analytic = block.entries[(block.position(n), block.position(l))];
            let abs_error = (oracle - analytic).norm();
            let unweighted_offdiagonal = if n != l {
                Some(offdiag_r_unweighted(m, n, l, &shape)?)
            } else {
                None
            };
            let theorem_diagonal = (n == l && !theorem.truncated_rows.contains(&n))
                .then(|| theorem.matrix[(block.position(n), block.position(n))]);
            entries.push(OracleEntry {
                n,
                l,
                analytic,
                oracle,
                abs_error,
                rel_error: abs_error / analytic.abs().max(f64::MIN_POSITIVE),
                unweighted_offdiagonal,
                theorem_diagonal,
            });
        }
    }
    let worst = |f: &dyn Fn(&OracleEntry) -> Option<f64>| {
        entries.iter().filter_map(f).fold(0.0f64, f64::max)
    };
    Ok(OracleReport {
        m,
        n_trunc,
        a: shape.a(),
        tau0: shape.tau0(),
        n_sigma: grid.n_sigma,
        n_phi: grid.n_phi,
        config: *cfg,
        max_abs_error: worst(&|e| Some(e.abs_error)),
        max_abs_error_unweighted_offdiagonal: worst(&|e| {
            e.unweighted_offdiagonal.map(|p| (e.oracle - p).norm())
        }),
        max_abs_error_theorem_diagonal: worst(&|e| {
            e.theorem_diagonal.map(|t| (e.oracle - t).norm())
        }),
        entries,
    })
}
