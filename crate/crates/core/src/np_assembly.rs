//! Per-`m` blocks of the Neumann-Poincaré operator `K*` in the density basis
//! `{φ_n^m}`.
//!
//! `K*[φ_n^m] = D_nn φ_n^m + Σ_l R_nl φ_l^m`. The operator-form block stores
//! `D_nn δ_nl + R_nl` at row `n`, column `l`; the coefficient form is its
//! transpose. Indices run over `[-N, N]` in ascending order.
//!
//! Writing `q_n = Q^m_{n-1/2}(z₀)`, `p_n = P^{-m}_{n-1/2}(z₀)` and
//! `g_n = Γ(n+m+1/2)/Γ(n-m+1/2)`:
//!
//! ```text
//! D_nn = (-1)^m/2 [(n-m+1/2) q_{n+1} p_n + (n+m+1/2) q_n p_{n+1} - (2n+1) z₀ q_n p_n]
//! R_nl = (-1)^m sinh τ₀/2 · e^{-|l-n|τ₀} · q_n p_n · g_n / g_l
//! ```
//!
//! The unweighted form `R_nl ∝ q_n p_l` differs from the second line
//! by the diagonal similarity `diag(p_n g_n)`. It has the same spectrum but the
//! wrong entries; it is kept as [`offdiag_r_unweighted`] for comparison only.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NptError, Result};
use crate::toroidal_functions::{
    gamma_half_ratio, p_derivative, parity_sign, q_derivative, ring_p, ring_q,
};
use crate::torus_geometry::TorusShape;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// Row `n` holds the expansion coefficients of `K*[φ_n^m]`.
    #[default]
    OperatorForm,
    /// Transpose of the operator form; acts on coefficient vectors.
    CoefficientForm,
}

impl std::str::FromStr for Convention {
    type Err = NptError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "operator" | "operator_form" => Ok(Self::OperatorForm),
            "coefficient" | "coefficient_form" => Ok(Self::CoefficientForm),
            other => Err(NptError::InvalidArgument(format!(
                "unknown convention {other:?}"
            ))),
        }
    }
}

/// `Q^m_{n-1/2}(z₀)`, `P^{-m}_{n-1/2}(z₀)` for `n ∈ [lo, hi]`.
#[derive(Debug, Clone)]
pub struct RingTable {
    pub m: i64,
    pub lo: i64,
    pub q: Vec<f64>,
    pub p_neg: Vec<f64>,
}

impl RingTable {
    pub fn new(m: i64, lo: i64, hi: i64, shape: &TorusShape) -> Result<Self> {
        let z0 = shape.z0();
        let pairs: Vec<(f64, f64)> = (lo..=hi)
            .into_par_iter()
            .map(|n| Ok((ring_q(m, n, z0)?.value, ring_p(-m, n, z0)?.value)))
            .collect::<Result<_>>()?;
        let (q, p_neg) = pairs.into_iter().unzip();
        Ok(Self { m, lo, q, p_neg })
    }

    pub fn q(&self, n: i64) -> f64 {
        self.q[(n - self.lo) as usize]
    }

    pub fn p_neg(&self, n: i64) -> f64 {
        self.p_neg[(n - self.lo) as usize]
    }

    fn diag_d(&self, n: i64, z0: f64) -> f64 {
        let (m, nf) = (self.m as f64, n as f64);
        let (q0, q1, p0, p1) = (self.q(n), self.q(n + 1), self.p_neg(n), self.p_neg(n + 1));
        0.5 * parity_sign(self.m)
            * ((nf - m + 0.5) * q1 * p0 + (nf + m + 0.5) * q0 * p1
                - (2.0 * nf + 1.0) * z0 * q0 * p0)
    }

    fn offdiag_r(&self, n: i64, l: i64, shape: &TorusShape) -> f64 {
        0.5 * parity_sign(self.m)
            * shape.sinh_tau0()
            * (-((l - n).abs() as f64) * shape.tau0()).exp()
            * self.q(n)
            * self.p_neg(n)
            * (gamma_half_ratio(n, self.m) / gamma_half_ratio(l, self.m))
    }
}

/// Diagonal coefficient `D_nn^{(m)}`.
pub fn diag_d(m: i64, n: i64, shape: &TorusShape) -> Result<f64> {
    let z0 = shape.z0();
    let (nf, mf) = (n as f64, m as f64);
    let q0 = ring_q(m, n, z0)?.value;
    let q1 = ring_q(m, n + 1, z0)?.value;
    let p0 = ring_p(-m, n, z0)?.value;
    let p1 = ring_p(-m, n + 1, z0)?.value;
    Ok(0.5
        * parity_sign(m)
        * ((nf - mf + 0.5) * q1 * p0 + (nf + mf + 0.5) * q0 * p1 - (2.0 * nf + 1.0) * z0 * q0 * p0))
}

/// `D_nn^{(m)}` from its definition in terms of `z`-derivatives of `P^m` and `Q^m`.
pub fn diag_d_derivative_form(m: i64, n: i64, shape: &TorusShape) -> Result<f64> {
    let z0 = shape.z0();
    let sh = shape.sinh_tau0();
    let wronskian_like = ring_q(m, n, z0)?.value * p_derivative(m, n, z0)?
        + ring_p(m, n, z0)?.value * q_derivative(m, n, z0)?;
    Ok(0.5 * parity_sign(m) * sh * sh * wronskian_like / gamma_half_ratio(n, m))
}

/// Off-diagonal coefficient `R_nl^{(m)}` (also contributes on the diagonal).
pub fn offdiag_r(m: i64, n: i64, l: i64, shape: &TorusShape) -> Result<f64> {
    let z0 = shape.z0();
    let qp = ring_q(m, n, z0)?.value * ring_p(-m, n, z0)?.value;
    Ok(0.5
        * parity_sign(m)
        * shape.sinh_tau0()
        * (-((l - n).abs() as f64) * shape.tau0()).exp()
        * qp
        * (gamma_half_ratio(n, m) / gamma_half_ratio(l, m)))
}

/// `(-1)^m sinh τ₀ / (2 e^{|l-n|τ₀}) · Q^m_{n-1/2}(z₀) P^{-m}_{l-1/2}(z₀)`, the
/// unweighted variant. Agrees with [`offdiag_r`] only at `l = n`.
pub fn offdiag_r_unweighted(m: i64, n: i64, l: i64, shape: &TorusShape) -> Result<f64> {
    let z0 = shape.z0();
    Ok(0.5
        * parity_sign(m)
        * shape.sinh_tau0()
        * (-((l - n).abs() as f64) * shape.tau0()).exp()
        * ring_q(m, n, z0)?.value
        * ring_p(-m, l, z0)?.value)
}

/// `K*[φ_n^m](φ, σ) / φ_n^m(φ, σ)`, obtained before expanding
/// `sinh τ₀ / (cosh τ₀ - cos σ)` in Fourier modes.
pub fn np_image_ratio(m: i64, n: i64, sigma: f64, shape: &TorusShape) -> Result<f64> {
    let z0 = shape.z0();
    let sh = shape.sinh_tau0();
    let qp = ring_q(m, n, z0)?.value * ring_p(-m, n, z0)?.value;
    Ok(diag_d(m, n, shape)? + 0.5 * parity_sign(m) * sh * sh * qp / (z0 - sigma.cos()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NpBlock {
    pub m: i64,
    /// Truncation half-width `N`; the block is `(2N+1) × (2N+1)`.
    pub n_trunc: usize,
    pub shape: TorusShape,
    pub entries: DMatrix<f64>,
    pub convention: Convention,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockExport {
    pub m: i64,
    #[serde(rename = "N")]
    pub n_trunc: usize,
    pub a: f64,
    pub tau0: f64,
    pub convention: Convention,
    pub entries: Vec<Vec<f64>>,
}

impl NpBlock {
    pub fn dim(&self) -> usize {
        2 * self.n_trunc + 1
    }

    /// Poloidal indices in storage order.
    pub fn indices(&self) -> impl Iterator<Item = i64> {
        let n = self.n_trunc as i64;
        -n..=n
    }

    pub fn position(&self, n: i64) -> usize {
        (n + self.n_trunc as i64) as usize
    }

    /// Entries in operator form regardless of the stored convention.
    pub fn operator_entries(&self) -> DMatrix<f64> {
        match self.convention {
            Convention::OperatorForm => self.entries.clone(),
            Convention::CoefficientForm => self.entries.transpose(),
        }
    }

    pub fn with_convention(&self, convention: Convention) -> Self {
        let entries = if convention == self.convention {
            self.entries.clone()
        } else {
            self.entries.transpose()
        };
        Self {
            entries,
            convention,
            ..self.clone()
        }
    }

    pub fn export(&self) -> BlockExport {
        BlockExport {
            m: self.m,
            n_trunc: self.n_trunc,
            a: self.shape.a(),
            tau0: self.shape.tau0(),
            convention: self.convention,
            entries: self
                .entries
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.export()).expect("block export is plain data")
    }
}

fn check_truncation(n_trunc: usize) -> Result<i64> {
    if n_trunc == 0 {
        return Err(NptError::InvalidArgument(
            "truncation N must be >= 1".into(),
        ));
    }
    Ok(n_trunc as i64)
}

pub fn assemble_block(
    m: i64,
    n_trunc: usize,
    shape: &TorusShape,
    convention: Convention,
) -> Result<NpBlock> {
    let big_n = check_truncation(n_trunc)?;
    let table = RingTable::new(m, -big_n, big_n + 1, shape)?;
    let dim = 2 * n_trunc + 1;
    let z0 = shape.z0();
    let mut entries = DMatrix::from_fn(dim, dim, |i, j| {
        let (n, l) = (i as i64 - big_n, j as i64 - big_n);
        table.offdiag_r(n, l, shape)
    });
    for i in 0..dim {
        entries[(i, i)] += table.diag_d(i as i64 - big_n, z0);
    }
    if convention == Convention::CoefficientForm {
        entries.transpose_mut();
    }
    Ok(NpBlock {
        m,
        n_trunc,
        shape: *shape,
        entries,
        convention,
    })
}

/// `D + R` with `R` replaced by [`offdiag_r_unweighted`], in operator form.
pub fn proposition_form_unweighted(
    m: i64,
    n_trunc: usize,
    shape: &TorusShape,
) -> Result<DMatrix<f64>> {
    let big_n = check_truncation(n_trunc)?;
    let table = RingTable::new(m, -big_n, big_n + 1, shape)?;
    let dim = 2 * n_trunc + 1;
    let sgn = parity_sign(m);
    let mut out = DMatrix::from_fn(dim, dim, |i, j| {
        let (n, l) = (i as i64 - big_n, j as i64 - big_n);
        0.5 * sgn
            * shape.sinh_tau0()
            * (-((l - n).abs() as f64) * shape.tau0()).exp()
            * table.q(n)
            * table.p_neg(l)
    });
    for i in 0..dim {
        out[(i, i)] += table.diag_d(i as i64 - big_n, shape.z0());
    }
    Ok(out)
}

/// Truncated shift, exponential, index and ring-value matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralMatrices {
    pub s: DMatrix<f64>,
    pub e: DMatrix<f64>,
    pub z: DMatrix<f64>,
    pub qm: DMatrix<f64>,
    pub pm_neg: DMatrix<f64>,
}

impl StructuralMatrices {
    pub fn new(m: i64, n_trunc: usize, shape: &TorusShape) -> Result<Self> {
        let big_n = check_truncation(n_trunc)?;
        let table = RingTable::new(m, -big_n, big_n, shape)?;
        let dim = 2 * n_trunc + 1;
        let idx = |i: usize| i as i64 - big_n;
        Ok(Self {
            s: DMatrix::from_fn(dim, dim, |i, j| if j == i + 1 { 1.0 } else { 0.0 }),
            e: DMatrix::from_fn(dim, dim, |i, j| {
                (-((idx(i) - idx(j)).abs() as f64) * shape.tau0()).exp()
            }),
            z: DMatrix::from_fn(dim, dim, |i, j| if i == j { idx(i) as f64 } else { 0.0 }),
            qm: DMatrix::from_diagonal(&nalgebra::DVector::from_vec(table.q.clone())),
            pm_neg: DMatrix::from_diagonal(&nalgebra::DVector::from_vec(table.p_neg.clone())),
        })
    }
}

/// The four-term structural composition, with the factor in front of the
/// `cosh τ₀ (2Z+I) Q P` term exposed.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoremForm {
    pub m: i64,
    pub n_trunc: usize,
    pub matrix: DMatrix<f64>,
    /// Rows whose shift products reach outside `[-N, N]`.
    pub truncated_rows: Vec<i64>,
}

/// Factor in front of `cosh τ₀ (2Z+I) Q P` as the four-term form is usually
/// stated. A factor of 1 reproduces the quadrature diagonal.
pub const DOUBLED_FOURTH_TERM_FACTOR: f64 = 2.0;

pub fn assemble_theorem_form(m: i64, n_trunc: usize, shape: &TorusShape) -> Result<TheoremForm> {
    assemble_theorem_form_with(m, n_trunc, shape, DOUBLED_FOURTH_TERM_FACTOR)
}

pub fn assemble_theorem_form_with(
    m: i64,
    n_trunc: usize,
    shape: &TorusShape,
    fourth_term_factor: f64,
) -> Result<TheoremForm> {
    let sm = StructuralMatrices::new(m, n_trunc, shape)?;
    let dim = 2 * n_trunc + 1;
    let id = DMatrix::<f64>::identity(dim, dim);
    let mf = m as f64;
    let st = sm.s.transpose();
    let first = (&sm.z + &id * (0.5 - mf)) * &sm.s * &sm.qm * &st * &sm.pm_neg;
    let second = (&sm.z + &id * (0.5 + mf)) * &sm.qm * &sm.s * &sm.pm_neg * &st;
    let third = &sm.qm * &sm.e * &sm.pm_neg * shape.sinh_tau0();
    let fourth = (&sm.z * 2.0 + &id) * &sm.qm * &sm.pm_neg * (fourth_term_factor * shape.z0());
    let matrix = (first + second + third - fourth) * (0.5 * parity_sign(m));
    Ok(TheoremForm {
        m,
        n_trunc,
        matrix,
        truncated_rows: vec![n_trunc as i64],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyDelta {
    pub m: i64,
    #[serde(rename = "N")]
    pub n_trunc: usize,
    pub tau0: f64,
    pub fourth_term_factor: f64,
    /// Interior indices, i.e. those not flagged by the truncation.
    pub indices: Vec<i64>,
    /// Row-major `(four-term form) - (D + unweighted R)` on interior indices.
    pub delta: Vec<Vec<f64>>,
    /// `-(-1)^m/2 · z₀ (2n+1) q_n p_n`
    pub predicted_diagonal: Vec<f64>,
    pub max_offdiagonal: f64,
    pub max_diagonal_error: f64,
}

impl ConsistencyDelta {
    pub fn is_diagonal(&self, tol: f64) -> bool {
        self.max_offdiagonal < tol
    }
}

/// Four-term form (with the doubled factor) minus `D + R_unweighted`.
pub fn consistency_delta(m: i64, n_trunc: usize, shape: &TorusShape) -> Result<ConsistencyDelta> {
    consistency_delta_with(m, n_trunc, shape, DOUBLED_FOURTH_TERM_FACTOR)
}

pub fn consistency_delta_with(
    m: i64,
    n_trunc: usize,
    shape: &TorusShape,
    fourth_term_factor: f64,
) -> Result<ConsistencyDelta> {
    let theorem = assemble_theorem_form_with(m, n_trunc, shape, fourth_term_factor)?;
    let proposition = proposition_form_unweighted(m, n_trunc, shape)?;
    let big_n = n_trunc as i64;
    let table = RingTable::new(m, -big_n, big_n, shape)?;
    let indices: Vec<i64> = (-big_n..=big_n)
        .filter(|n| !theorem.truncated_rows.contains(n))
        .collect();
    let pos = |n: i64| (n + big_n) as usize;
    let mut delta = Vec::with_capacity(indices.len());
    let mut max_offdiagonal = 0.0f64;
    let mut max_diagonal_error = 0.0f64;
    let mut predicted_diagonal = Vec::with_capacity(indices.len());
    for &n in &indices {
        let predicted =
            -0.5 * parity_sign(m) * shape.z0() * (2 * n + 1) as f64 * table.q(n) * table.p_neg(n);
        predicted_diagonal.push(predicted);
        let row: Vec<f64> = indices
            .iter()
            .map(|&l| theorem.matrix[(pos(n), pos(l))] - proposition[(pos(n), pos(l))])
            .collect();
        for (&l, &v) in indices.iter().zip(&row) {
            if l == n {
                max_diagonal_error = max_diagonal_error.max((v - predicted).abs());
            } else {
                max_offdiagonal = max_offdiagonal.max(v.abs());
            }
        }
        delta.push(row);
    }
    Ok(ConsistencyDelta {
        m,
        n_trunc,
        tau0: shape.tau0(),
        fourth_term_factor,
        indices,
        delta,
        predicted_diagonal,
        max_offdiagonal,
        max_diagonal_error,
    })
}
