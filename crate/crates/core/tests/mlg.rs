mod common;

use common::{average_of_two_density, cmlg_slice_density, log_gamma_pdf, mean_se, NumericCdf};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wapmc_core::calibration::ks_test;
use wapmc_core::mlg::{
    collapse_decompose, gaussian_limit_params, logpdf_mlg, null_basis, null_basis_via_projector,
    sample_cmlg_collapsed, sample_log_gamma, sample_mlg, MlgParams,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn scalar_params(a: f64, k: f64) -> MlgParams {
    MlgParams::new(
        DVector::zeros(1),
        DMatrix::identity(1, 1),
        DVector::from_element(1, a),
        DVector::from_element(1, k),
    )
    .unwrap()
}

#[test]
fn exp_of_unit_log_gamma_is_exponential() {
    let mut r = rng(1);
    let xs: Vec<f64> = (0..5000)
        .map(|_| sample_log_gamma(1.0, 1.0, &mut r).unwrap().exp())
        .collect();
    let ks = ks_test(&xs, |x| 1.0 - (-x).exp()).unwrap();
    assert!(ks.passes(0.01), "{ks:?}");
}

#[test]
fn scalar_logpdf_integrates_to_one() {
    for (a, k) in [(1.0, 1.0), (2.5, 0.7), (0.5, 3.0)] {
        let p = scalar_params(a, k);
        let (lo, hi, n) = (-30.0, 10.0, 40_000);
        let h = (hi - lo) / n as f64;
        let total: f64 = (0..=n)
            .map(|i| {
                let x = lo + i as f64 * h;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * logpdf_mlg(&DVector::from_element(1, x), &p).unwrap().exp()
            })
            .sum::<f64>()
            * h;
        assert!((total - 1.0).abs() < 1e-4, "a={a} k={k}: {total}");
    }
}

#[test]
fn logpdf_matches_independent_formula() {
    let p = scalar_params(2.0, 1.5);
    for x in [-3.0, -0.2, 0.0, 0.9] {
        let got = logpdf_mlg(&DVector::from_element(1, x), &p).unwrap();
        assert!((got - log_gamma_pdf(x, 2.0, 1.5).ln()).abs() < 1e-12);
    }
}

#[test]
fn scalar_draws_match_numeric_cdf() {
    let p = scalar_params(1.0, 1.0);
    let cdf = NumericCdf::new(|x| log_gamma_pdf(x, 1.0, 1.0), -30.0, 10.0, 40_000);
    let mut passes = 0;
    for seed in 0..10 {
        let mut r = rng(100 + seed);
        let xs: Vec<f64> = (0..2000).map(|_| sample_mlg(&p, &mut r)[0]).collect();
        if ks_test(&xs, |x| cdf.cdf(x)).unwrap().passes(0.01) {
            passes += 1;
        }
    }
    assert!(passes >= 9, "{passes}/10");
}

#[test]
fn shifted_location_mean() {
    let p = MlgParams::new(
        DVector::from_element(2, 5.0),
        DMatrix::identity(2, 2),
        DVector::from_element(2, 1.0),
        DVector::from_element(2, 1.0),
    )
    .unwrap();
    let mut r = rng(7);
    let draws: Vec<DVector<f64>> = (0..20_000).map(|_| sample_mlg(&p, &mut r)).collect();
    for j in 0..2 {
        let xs: Vec<f64> = draws.iter().map(|d| d[j]).collect();
        let (m, se) = mean_se(&xs);
        assert!((m - (5.0 - 0.577_215_664_9)).abs() < 3.0 * se, "{m} ± {se}");
    }
}

#[test]
fn location_equivariance_with_paired_streams() {
    let base = scalar_params(2.0, 2.0);
    let shifted = MlgParams::new(
        DVector::from_element(1, 3.25),
        DMatrix::identity(1, 1),
        DVector::from_element(1, 2.0),
        DVector::from_element(1, 2.0),
    )
    .unwrap();
    let (mut r1, mut r2) = (rng(9), rng(9));
    for _ in 0..200 {
        let a = sample_mlg(&base, &mut r1)[0];
        let b = sample_mlg(&shifted, &mut r2)[0];
        assert!((b - a - 3.25).abs() < 1e-12);
    }
}

#[test]
fn diagonal_mixing_gives_uncorrelated_coordinates() {
    let p = MlgParams::new(
        DVector::zeros(2),
        DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.5])),
        DVector::from_element(2, 1.5),
        DVector::from_element(2, 1.0),
    )
    .unwrap();
    let mut r = rng(11);
    let n = 20_000;
    let draws: Vec<DVector<f64>> = (0..n).map(|_| sample_mlg(&p, &mut r)).collect();
    let x: Vec<f64> = draws.iter().map(|d| d[0]).collect();
    let y: Vec<f64> = draws.iter().map(|d| d[1]).collect();
    let (mx, _) = mean_se(&x);
    let (my, _) = mean_se(&y);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let rho = sxy / (sxx * syy).sqrt();
    assert!(rho.abs() < 3.0 / (n as f64).sqrt(), "{rho}");
}

#[test]
fn gaussian_limit_moments_converge() {
    // Third central moment of sqrt(a) w with w ~ LG(a, a) is a^1.5 psi''(a),
    // about -1 / sqrt(a); the first two moments are (0, 1 + O(1/a)).
    for (alpha, seed) in [(1e2, 1), (1e3, 2), (1e4, 3)] {
        let p = gaussian_limit_params(DVector::zeros(1), &DMatrix::identity(1, 1), alpha).unwrap();
        let mut r = rng(seed);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_mlg(&p, &mut r)[0]).collect();
        let (m, se) = mean_se(&xs);
        assert!(m.abs() < 3.0 * se, "alpha {alpha}: mean {m}");
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 1.0).abs() < 0.02 + 1.0 / alpha, "alpha {alpha}: var {var}");
        let m3 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n as f64;
        let se3 = (15.0 / n as f64).sqrt();
        assert!((m3 + 1.0 / alpha.sqrt()).abs() < 4.0 * se3, "alpha {alpha}: m3 {m3}");
    }
}

#[test]
fn gaussian_limit_variance_and_shift() {
    let c = DVector::from_vec(vec![1.5, -2.0]);
    let p = gaussian_limit_params(c, &DMatrix::identity(2, 2), 1e4).unwrap();
    let mut r = rng(21);
    let n = 200_000;
    let draws: Vec<DVector<f64>> = (0..n).map(|_| sample_mlg(&p, &mut r)).collect();
    for (j, target) in [(0, 1.5), (1, -2.0)] {
        let xs: Vec<f64> = draws.iter().map(|d| d[j]).collect();
        let (m, se) = mean_se(&xs);
        assert!((m - target).abs() < 3.0 * se, "coordinate {j}: {m}");
        let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 1.0).abs() < 0.02, "coordinate {j}: var {var}");
    }
}

#[test]
fn null_basis_examples() {
    let q = null_basis(&DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
    assert!((q.matrix()[(0, 0)]).abs() < 1e-12);
    assert!((q.matrix()[(1, 0)].abs() - 1.0).abs() < 1e-12);

    let s = std::f64::consts::FRAC_1_SQRT_2;
    let q = null_basis(&DMatrix::from_column_slice(2, 1, &[s, s])).unwrap();
    let m = q.matrix();
    assert!((m[(0, 0)] + m[(1, 0)]).abs() < 1e-12);
    assert!((m[(0, 0)].abs() - s).abs() < 1e-12);
}

#[test]
fn null_basis_random_full_rank() {
    let mut r = rng(5);
    use rand::Rng;
    let h = DMatrix::from_fn(20, 5, |_, _| r.random::<f64>() - 0.5);
    let q = null_basis(&h).unwrap().into_matrix();
    assert_eq!(q.ncols(), 15);
    assert!((h.transpose() * &q).amax() < 1e-8);
    assert!((q.transpose() * &q - DMatrix::identity(15, 15)).amax() < 1e-10);
    let p = null_basis_via_projector(&h).unwrap().into_matrix();
    // Same span: projecting one basis onto the other loses nothing.
    let proj = &q * (q.transpose() * &p);
    assert!((proj - &p).amax() < 1e-8);
}

#[test]
fn collapse_with_identity_returns_log_gamma_draws() {
    let h = DMatrix::identity(3, 3);
    let a = DVector::from_vec(vec![1.0, 2.0, 0.5]);
    let k = DVector::from_vec(vec![1.0, 0.5, 2.0]);
    let (mut r1, mut r2) = (rng(8), rng(8));
    for _ in 0..50 {
        let y = sample_cmlg_collapsed(&h, &a, &k, &mut r1).unwrap();
        for i in 0..3 {
            let w = sample_log_gamma(a[i], k[i], &mut r2).unwrap();
            assert!((y[i] - w).abs() < 1e-12);
        }
    }
}

#[test]
fn separable_collapse_is_the_first_coordinate_marginal() {
    let h = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
    let a = DVector::from_vec(vec![1.5, 1.0, 1.0]);
    let k = DVector::from_vec(vec![0.8, 1.0, 1.0]);
    let cdf = NumericCdf::new(|x| log_gamma_pdf(x, 1.5, 0.8), -30.0, 12.0, 40_000);
    let mut r = rng(31);
    let ys: Vec<f64> = (0..4000)
        .map(|_| sample_cmlg_collapsed(&h, &a, &k, &mut r).unwrap()[0])
        .collect();
    assert!(ks_test(&ys, |x| cdf.cdf(x)).unwrap().passes(0.01));
}

#[test]
fn two_row_collapse_matches_augmented_marginal() {
    let h = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
    let a = DVector::from_vec(vec![1.0, 1.0]);
    let k = DVector::from_vec(vec![1.0, 1.0]);
    let cdf = NumericCdf::new(
        |y| average_of_two_density([1.0, 1.0], [1.0, 1.0], y),
        -25.0,
        8.0,
        3300,
    );
    let mut r = rng(41);
    let ys: Vec<f64> = (0..4000)
        .map(|_| sample_cmlg_collapsed(&h, &a, &k, &mut r).unwrap()[0])
        .collect();
    let ks = ks_test(&ys, |x| cdf.cdf(x)).unwrap();
    assert!(ks.passes(0.01), "{ks:?}");
}

#[test]
fn two_row_collapse_differs_from_the_zero_slice() {
    // The collapse targets the augmented marginal; for non-separable H the
    // q = 0 conditional density is a different law.
    let h = DMatrix::from_column_slice(2, 1, &[1.0, 1.0]);
    let a = DVector::from_vec(vec![1.0, 1.0]);
    let k = DVector::from_vec(vec![1.0, 1.0]);
    let cdf = NumericCdf::new(
        |y| cmlg_slice_density(&[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0], y),
        -30.0,
        8.0,
        40_000,
    );
    let mut r = rng(43);
    let ys: Vec<f64> = (0..4000)
        .map(|_| sample_cmlg_collapsed(&h, &a, &k, &mut r).unwrap()[0])
        .collect();
    assert!(ks_test(&ys, |x| cdf.cdf(x)).unwrap().p_value < 1e-6);
}

#[test]
fn collapse_reconstructs_w() {
    use rand::Rng;
    let mut r = rng(13);
    for (n, g) in [(2, 1), (3, 1), (12, 4), (40, 7)] {
        let h = DMatrix::from_fn(n, g, |_, _| r.random::<f64>() * 2.0 - 1.0);
        let w = DVector::from_fn(n, |_, _| sample_log_gamma(1.3, 0.9, &mut r).unwrap());
        let (y, q, basis) = collapse_decompose(&h, &w).unwrap();
        let back = &h * y + basis.matrix() * q;
        assert!((back - &w).amax() < 1e-8);
    }
}

#[test]
fn construction_errors() {
    assert!(MlgParams::new(
        DVector::zeros(1),
        DMatrix::zeros(1, 1),
        DVector::from_element(1, 1.0),
        DVector::from_element(1, 1.0),
    )
    .is_err());
    let rank_deficient = DMatrix::from_column_slice(3, 2, &[1.0, 1.0, 1.0, 2.0, 2.0, 2.0]);
    let ones = DVector::from_element(3, 1.0);
    assert!(sample_cmlg_collapsed(&rank_deficient, &ones, &ones, &mut rng(1)).is_err());
    assert!(null_basis(&rank_deficient).is_err());
}
