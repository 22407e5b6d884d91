use npt_core::np_assembly::{assemble_block, Convention};
use npt_core::spectral_solver::{
    balance_block, block_spectrum, convergence_study, eigen_spectrum, sign_census, BalanceStatus,
    SolverPath,
};
use npt_core::torus_geometry::TorusShape;

fn shape(tau0: f64) -> TorusShape {
    TorusShape::new(1.0, tau0).unwrap()
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn containment_realness_and_both_signs() {
    let mut worst_imag = 0.0f64;
    let mut extreme = (0.0f64, 0.0f64);
    for tau0 in [0.5, 1.0, 2.0] {
        for m in -4..=4 {
            let r = block_spectrum(m, 12, &shape(tau0)).unwrap();
            assert_eq!(r.eigenvalues.len(), 25);
            assert_eq!(r.path, SolverPath::Symmetric, "m={m} tau0={tau0}");
            for e in &r.eigenvalues {
                assert!(
                    e.re > -0.5 - 1e-6 && e.re < 0.5 + 1e-6,
                    "m={m} tau0={tau0}: {}",
                    e.re
                );
                extreme = (extreme.0.min(e.re), extreme.1.max(e.re));
            }
            assert!(
                r.max_imag_residual < 1e-8,
                "m={m} tau0={tau0}: {:e}",
                r.max_imag_residual
            );
            assert!(r.path_disagreement.unwrap() < 1e-8);
            assert!(
                r.sign_counts.positive >= 1 && r.sign_counts.negative >= 1,
                "m={m} tau0={tau0}"
            );
            worst_imag = worst_imag.max(r.max_imag_residual);
        }
    }
    eprintln!("range of real parts {extreme:?}, worst |Im| {worst_imag:e}");
}

#[test]
fn balancing_symmetrises_and_preserves_the_spectrum() {
    for (m, tau0) in [(0, 1.0), (1, 0.5), (3, 2.0), (-2, 1.0)] {
        let block = assemble_block(m, 8, &shape(tau0), Convention::OperatorForm).unwrap();
        let b = balance_block(&block);
        assert_eq!(b.status, BalanceStatus::Applied);
        assert!(b.asymmetry() < 1e-12, "m={m}: {:e}", b.asymmetry());
        let raw: Vec<f64> = block
            .entries
            .clone()
            .complex_eigenvalues()
            .iter()
            .map(|c| c.re)
            .collect();
        let bal: Vec<f64> = b
            .matrix
            .clone()
            .complex_eigenvalues()
            .iter()
            .map(|c| c.re)
            .collect();
        for (x, y) in sorted(raw).iter().zip(sorted(bal)) {
            assert!((x - y).abs() < 1e-11, "m={m}: {x} vs {y}");
        }
    }
}

#[test]
fn conventions_share_a_spectrum() {
    let s = shape(0.8);
    for m in [0, 2] {
        let op =
            eigen_spectrum(&assemble_block(m, 10, &s, Convention::OperatorForm).unwrap()).unwrap();
        let co = eigen_spectrum(&assemble_block(m, 10, &s, Convention::CoefficientForm).unwrap())
            .unwrap();
        for (x, y) in op.real_parts().iter().zip(co.real_parts()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn opposite_orders_share_a_spectrum() {
    let s = shape(1.0);
    for m in 1..=4 {
        let plus = block_spectrum(m, 12, &s).unwrap().real_parts();
        let minus = block_spectrum(-m, 12, &s).unwrap().real_parts();
        for (x, y) in plus.iter().zip(&minus) {
            assert!((x - y).abs() < 1e-10, "m={m}: {x} vs {y}");
        }
    }
}

#[test]
fn axisymmetric_top_eigenvalue_approaches_one_half() {
    let s = shape(1.0);
    let gaps: Vec<f64> = [4, 8, 12, 16]
        .iter()
        .map(|&n| 0.5 - block_spectrum(0, n, &s).unwrap().eigenvalues[0].re)
        .collect();
    eprintln!("1/2 - lambda_max for N = 4, 8, 12, 16: {gaps:?}");
    assert!(gaps.windows(2).all(|w| w[1].abs() < w[0].abs()));
    assert!(gaps[3].abs() < 1e-4);
}

#[test]
fn convergence_deltas_decrease() {
    let s = shape(1.0);
    for m in [0, 3] {
        let report = convergence_study(m, &s, &[8, 12, 16, 20]).unwrap();
        eprintln!("m={m}: {:?} rate {:?}", report.steps, report.fitted_rate);
        assert!(report.monotone, "m={m}");
        assert!(report.fitted_rate.unwrap() > 0.0);
    }
}

#[test]
fn census_rows_have_both_signs() {
    let s = shape(1.0);
    let reports: Vec<_> = (0..=4)
        .map(|m| block_spectrum(m, 12, &s).unwrap())
        .collect();
    for row in sign_census(&reports).unwrap() {
        assert!(row.positive >= 1 && row.negative >= 1, "{row:?}");
    }
    let grid: Vec<_> = [8, 16, 24]
        .iter()
        .map(|&n| block_spectrum(0, n, &s).unwrap())
        .collect();
    let near_zero: Vec<usize> = sign_census(&grid)
        .unwrap()
        .iter()
        .map(|r| r.near_zero)
        .collect();
    eprintln!("near-zero bucket for N = 8, 16, 24: {near_zero:?}");
    assert!(sign_census(&[]).is_err());
}
