//! Eigenvalues of truncated blocks, realness and convergence diagnostics, and
//! the sign census.
//!
//! Every block `A = D + R` is diagonally similar to a symmetric matrix: with
//! `Δ_l² / Δ_n² = A_ln / A_nl`, the matrix `Δ⁻¹ A Δ` is symmetric. The scaling
//! is read off neighbouring entries, so it works for either convention.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{NptError, Result};
use crate::np_assembly::{assemble_block, Convention, NpBlock};
use crate::torus_geometry::TorusShape;

/// Real parts within this distance of zero count as neither sign.
pub const SIGN_THRESHOLD: f64 = 1e-12;

const SOLVER_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum BalanceStatus {
    Applied,
    /// The neighbour product `A_{n,n+1} A_{n+1,n}` is not positive at `n`.
    Unavailable {
        n: i64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalancedBlock {
    pub matrix: DMatrix<f64>,
    pub status: BalanceStatus,
    /// `Δ_nn`, normalised so the largest is 1; all ones when unavailable.
    pub scaling: Vec<f64>,
}

impl BalancedBlock {
    pub fn applied(&self) -> bool {
        self.status == BalanceStatus::Applied
    }

    /// Largest `|B_nl - B_ln|` relative to `max |B|`.
    pub fn asymmetry(&self) -> f64 {
        let b = &self.matrix;
        let scale = b.amax().max(f64::MIN_POSITIVE);
        (b - b.transpose()).amax() / scale
    }
}

pub fn balance_block(block: &NpBlock) -> BalancedBlock {
    let a = &block.entries;
    let dim = a.nrows();
    let mut log_scale = vec![0.0f64; dim];
    for i in 0..dim.saturating_sub(1) {
        let (up, down) = (a[(i, i + 1)], a[(i + 1, i)]);
        if !(up * down > 0.0) {
            return BalancedBlock {
                matrix: a.clone(),
                status: BalanceStatus::Unavailable {
                    n: i as i64 - block.n_trunc as i64,
                },
                scaling: vec![1.0; dim],
            };
        }
        log_scale[i + 1] = log_scale[i] + 0.5 * (down / up).ln();
    }
    let top = log_scale.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scaling: Vec<f64> = log_scale.iter().map(|s| (s - top).exp()).collect();
    let matrix = DMatrix::from_fn(dim, dim, |i, j| a[(i, j)] * scaling[j] / scaling[i]);
    BalancedBlock {
        matrix,
        status: BalanceStatus::Applied,
        scaling,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverPath {
    Symmetric,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignCounts {
    pub positive: usize,
    pub negative: usize,
    pub near_zero: usize,
}

impl SignCounts {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let mut c = Self {
            positive: 0,
            negative: 0,
            near_zero: 0,
        };
        for v in values {
            if v > SIGN_THRESHOLD {
                c.positive += 1;
            } else if v < -SIGN_THRESHOLD {
                c.negative += 1;
            } else {
                c.near_zero += 1;
            }
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub m: i64,
    #[serde(rename = "N")]
    pub n_trunc: usize,
    pub a: f64,
    pub tau0: f64,
    pub path: SolverPath,
    pub balance: BalanceStatus,
    /// Sorted by descending real part.
    pub eigenvalues: Vec<Eigenvalue>,
    /// `max |Im λ|` from a general (non-symmetric) solve of the block.
    pub max_imag_residual: f64,
    /// Largest distance between the symmetric-path and general-path spectra.
    pub path_disagreement: Option<f64>,
    /// Top-10 matching delta against the `N-2` truncation, when requested.
    pub convergence_delta: Option<f64>,
    pub sign_counts: SignCounts,
}

pub const SPECTRUM_CSV_HEADER: &str = "m,N,index,re,im";

impl SpectrumReport {
    pub fn real_parts(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|e| e.re).collect()
    }

    pub fn write_csv_rows(&self, out: &mut String) {
        use std::fmt::Write;
        for (k, e) in self.eigenvalues.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{:.16e},{:.16e}",
                self.m, self.n_trunc, k, e.re, e.im
            )
            .expect("writing to a String");
        }
    }
}

/// Real Schur eigenvalues after the generic Parlett-Reinsch balancing, which
/// knows nothing about the block structure.
fn general_eigenvalues(mut matrix: DMatrix<f64>) -> Result<Vec<Eigenvalue>> {
    nalgebra::linalg::balancing::balance_parlett_reinsch(&mut matrix);
    let schur = nalgebra::linalg::Schur::try_new(matrix, f64::EPSILON, SOLVER_MAX_ITER)
        .ok_or_else(|| NptError::SolverFailure("real Schur iteration did not converge".into()))?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|c| Eigenvalue { re: c.re, im: c.im })
        .collect())
}

fn sort_descending(values: &mut [Eigenvalue]) {
    values.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
}

/// Eigenvalues of `block`. The general solver always runs so that imaginary
/// parts are measured rather than assumed away; when balancing applies the
/// reported values come from the symmetric solver on the balanced matrix.
pub fn eigen_spectrum(block: &NpBlock) -> Result<SpectrumReport> {
    let balanced = balance_block(block);
    let mut general = general_eigenvalues(block.entries.clone())?;
    sort_descending(&mut general);
    let max_imag_residual = general.iter().fold(0.0f64, |acc, e| acc.max(e.im.abs()));

    let (path, eigenvalues, path_disagreement) = if balanced.applied() {
        let sym = balanced.matrix.symmetric_part();
        let eig = SymmetricEigen::try_new(sym, f64::EPSILON, SOLVER_MAX_ITER).ok_or_else(|| {
            NptError::SolverFailure("symmetric eigensolver did not converge".into())
        })?;
        let mut values: Vec<Eigenvalue> = eig
            .eigenvalues
            .iter()
            .map(|&re| Eigenvalue { re, im: 0.0 })
            .collect();
        sort_descending(&mut values);
        let gap = values
            .iter()
            .zip(&general)
            .fold(0.0f64, |acc, (s, g)| acc.max((s.re - g.re).hypot(g.im)));
        (SolverPath::Symmetric, values, Some(gap))
    } else {
        (SolverPath::General, general, None)
    };

    Ok(SpectrumReport {
        m: block.m,
        n_trunc: block.n_trunc,
        a: block.shape.a(),
        tau0: block.shape.tau0(),
        path,
        balance: balanced.status,
        sign_counts: SignCounts::of(eigenvalues.iter().map(|e| e.re)),
        eigenvalues,
        max_imag_residual,
        path_disagreement,
        convergence_delta: None,
    })
}

/// Assemble and solve one block.
pub fn block_spectrum(m: i64, n_trunc: usize, shape: &TorusShape) -> Result<SpectrumReport> {
    eigen_spectrum(&assemble_block(
        m,
        n_trunc,
        shape,
        Convention::OperatorForm,
    )?)
}

/// [`block_spectrum`] with `convergence_delta` filled in against `N - 2`.
pub fn block_spectrum_with_convergence(
    m: i64,
    n_trunc: usize,
    shape: &TorusShape,
) -> Result<SpectrumReport> {
    let mut report = block_spectrum(m, n_trunc, shape)?;
    if n_trunc > 2 {
        let coarse = block_spectrum(m, n_trunc - 2, shape)?;
        report.convergence_delta =
            Some(match_top_k(&coarse.real_parts(), &report.real_parts(), TOP_K).max_delta);
    }
    Ok(report)
}

pub const TOP_K: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pub max_delta: f64,
    /// Pairs whose nearest partner was already taken.
    pub collisions: usize,
}

/// Pair the `k` largest-magnitude values of `coarse` with distinct nearest
/// values of `fine`.
pub fn match_top_k(coarse: &[f64], fine: &[f64], k: usize) -> Matching {
    let mut order: Vec<usize> = (0..coarse.len()).collect();
    order.sort_by(|&i, &j| coarse[j].abs().total_cmp(&coarse[i].abs()).then(i.cmp(&j)));
    let mut taken = vec![false; fine.len()];
    let mut max_delta = 0.0f64;
    let mut collisions = 0;
    for &i in order.iter().take(k) {
        let target = coarse[i];
        let mut candidates: Vec<usize> = (0..fine.len()).collect();
        candidates.sort_by(|&x, &y| {
            (fine[x] - target)
                .abs()
                .total_cmp(&(fine[y] - target).abs())
                .then(fine[y].abs().total_cmp(&fine[x].abs()))
        });
        let Some(&nearest) = candidates.first() else {
            break;
        };
        let pick = if taken[nearest] {
            collisions += 1;
            candidates.into_iter().find(|&c| !taken[c])
        } else {
            Some(nearest)
        };
        if let Some(c) = pick {
            taken[c] = true;
            max_delta = max_delta.max((fine[c] - target).abs());
        }
    }
    Matching {
        max_delta,
        collisions,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStep {
    pub from: usize,
    pub to: usize,
    pub max_delta: f64,
    pub collisions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub m: i64,
    pub tau0: f64,
    pub steps: Vec<ConvergenceStep>,
    pub monotone: bool,
    /// `c` in a least-squares fit `delta ≈ C e^{-cN}` over the step targets.
    pub fitted_rate: Option<f64>,
}

pub fn convergence_study(
    m: i64,
    shape: &TorusShape,
    n_list: &[usize],
) -> Result<ConvergenceReport> {
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(NptError::InvalidArgument(
            "N list must be strictly ascending".into(),
        ));
    }
    let spectra: Vec<Vec<f64>> = n_list
        .par_iter()
        .map(|&n| block_spectrum(m, n, shape).map(|r| r.real_parts()))
        .collect::<Result<_>>()?;
    let steps: Vec<ConvergenceStep> = n_list
        .windows(2)
        .zip(spectra.windows(2))
        .map(|(ns, sp)| {
            let mt = match_top_k(&sp[0], &sp[1], TOP_K);
            ConvergenceStep {
                from: ns[0],
                to: ns[1],
                max_delta: mt.max_delta,
                collisions: mt.collisions,
            }
        })
        .collect();
    let monotone = steps.windows(2).all(|w| w[1].max_delta < w[0].max_delta);
    let points: Vec<(f64, f64)> = steps
        .iter()
        .filter(|s| s.max_delta > 0.0)
        .map(|s| (s.to as f64, s.max_delta.ln()))
        .collect();
    let fitted_rate = (points.len() >= 2).then(|| {
        let k = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
        let my = points.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        -sxy / sxx
    });
    Ok(ConvergenceReport {
        m,
        tau0: shape.tau0(),
        steps,
        monotone,
        fitted_rate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusRow {
    pub m: i64,
    #[serde(rename = "N")]
    pub n_trunc: usize,
    pub tau0: f64,
    pub positive: usize,
    pub negative: usize,
    pub near_zero: usize,
}

pub fn sign_census(reports: &[SpectrumReport]) -> Result<Vec<CensusRow>> {
    if reports.is_empty() {
        return Err(NptError::InvalidArgument(
            "sign census needs at least one spectrum".into(),
        ));
    }
    Ok(reports
        .iter()
        .map(|r| CensusRow {
            m: r.m,
            n_trunc: r.n_trunc,
            tau0: r.tau0,
            positive: r.sign_counts.positive,
            negative: r.sign_counts.negative,
            near_zero: r.sign_counts.near_zero,
        })
        .collect())
}
