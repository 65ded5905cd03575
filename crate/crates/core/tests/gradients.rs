//! Analytic gradients against central finite differences.

mod common;

use common::{central_differences, gaussian, max_relative_error, rng};
use itrd_core::losses::{correlation_loss_and_grad, mi_loss_and_grad};
use itrd_core::{
    correlation_loss, correlation_loss_grad, cross_correlation_diag, itrd_loss, itrd_loss_and_grad,
    mi_loss, mi_loss_grad, Alpha, EmbeddingLayer, ItrdConfig, Linear, Matrix, MiVariant,
};

const H: f64 = 1e-5;
const REL_TOL: f64 = 1e-4;
const FLOOR: f64 = 1e-6;

fn corr_value(zs: &Matrix, zt: &Matrix, cfg: &ItrdConfig) -> f64 {
    let v = cross_correlation_diag(zs, zt, cfg.std_eps).unwrap();
    correlation_loss(&v, cfg.alpha_corr, cfg.corr_log_floor)
}

fn check_corr(alpha: f64, seed: u64) -> f64 {
    let mut r = rng(seed);
    let zs = gaussian(8, 5, &mut r);
    let zt = gaussian(8, 5, &mut r);
    let cfg = ItrdConfig {
        alpha_corr: alpha,
        ..ItrdConfig::default()
    };
    let analytic = correlation_loss_grad(&zs, &zt, &cfg).unwrap();
    let numeric = central_differences(&zs, H, |z| corr_value(z, &zt, &cfg));
    max_relative_error(&analytic, &numeric, FLOOR)
}

fn check_mi(variant: MiVariant, n: usize, d: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let zs = gaussian(n, d, &mut r);
    let zt = gaussian(n, d, &mut r);
    let analytic = mi_loss_grad(&zs, &zt, variant).unwrap();
    let numeric = central_differences(&zs, H, |z| mi_loss(z, &zt, variant).unwrap());
    max_relative_error(&analytic, &numeric, FLOOR)
}

#[test]
fn correlation_gradient_alpha_1_01() {
    for seed in 0..50 {
        let err = check_corr(1.01, seed);
        assert!(err < REL_TOL, "seed {seed}: rel err {err:e}");
    }
}

#[test]
fn correlation_gradient_alpha_1_5() {
    for seed in 100..150 {
        let err = check_corr(1.5, seed);
        assert!(err < REL_TOL, "seed {seed}: rel err {err:e}");
    }
}

#[test]
fn correlation_gradient_sample_std() {
    let mut r = rng(7);
    let zs = gaussian(8, 5, &mut r);
    let zt = gaussian(8, 5, &mut r);
    let cfg = ItrdConfig {
        std_convention: itrd_core::StdConvention::Sample,
        ..ItrdConfig::default()
    };
    let (_, analytic) = correlation_loss_and_grad(&zs, &zt, &cfg).unwrap();
    let numeric = central_differences(&zs, H, |z| {
        correlation_loss_and_grad(z, &zt, &cfg).unwrap().0
    });
    assert!(max_relative_error(&analytic, &numeric, FLOOR) < REL_TOL);
}

#[test]
fn correlation_gradient_with_constant_column() {
    let mut r = rng(11);
    let mut zs = gaussian(8, 5, &mut r);
    let zt = gaussian(8, 5, &mut r);
    for b in 0..8 {
        zs[(b, 2)] = 0.7;
    }
    let cfg = ItrdConfig::default();
    let analytic = correlation_loss_grad(&zs, &zt, &cfg).unwrap();
    // Perturbing a constant column by h keeps std below eps, so the
    // guarded branch is what finite differences see.
    let numeric = central_differences(&zs, 1e-7, |z| corr_value(z, &zt, &cfg));
    assert!(max_relative_error(&analytic, &numeric, 1e-4) < 1e-3);
}

#[test]
fn correlation_gradient_zero_at_floor() {
    let zs = gaussian(8, 5, &mut rng(3));
    let g = correlation_loss_grad(&zs, &zs, &ItrdConfig::default()).unwrap();
    assert!(g.as_slice().iter().all(|&x| x == 0.0));
}

#[test]
fn mi_gradient_no_log() {
    for seed in 200..250 {
        let err = check_mi(MiVariant::NoLog, 8, 5, seed);
        assert!(err < REL_TOL, "seed {seed}: rel err {err:e}");
    }
}

#[test]
fn mi_gradient_log_potential() {
    for seed in 300..350 {
        let err = check_mi(MiVariant::LogPotential, 8, 5, seed);
        assert!(err < REL_TOL, "seed {seed}: rel err {err:e}");
    }
}

#[test]
fn mi_gradient_6x4() {
    for seed in 0..10 {
        assert!(check_mi(MiVariant::NoLog, 6, 4, seed) < REL_TOL);
        assert!(check_mi(MiVariant::LogPotential, 6, 4, seed) < REL_TOL);
    }
}

#[test]
fn mi_gradient_eigen_exact() {
    for (i, alpha) in [2.0, 1.5, 3.0].into_iter().enumerate() {
        for seed in 0..5 {
            // n <= d keeps both Gram matrices full rank and the spectrum smooth.
            let v = MiVariant::EigenExact(Alpha::new(alpha).unwrap());
            let err = check_mi(v, 5, 8, 400 + 10 * i as u64 + seed);
            assert!(err < 1e-4, "alpha {alpha} seed {seed}: rel err {err:e}");
        }
    }
}

#[test]
fn mi_gradient_constant_teacher_point() {
    // The loss is zero at a constant teacher, but it is not identically
    // zero around it in the student, so check the gradient numerically.
    let zs = gaussian(6, 4, &mut rng(5));
    let zt = Matrix::filled(6, 4, 1.0);
    let analytic = mi_loss_grad(&zs, &zt, MiVariant::NoLog).unwrap();
    let numeric = central_differences(&zs, H, |z| mi_loss(z, &zt, MiVariant::NoLog).unwrap());
    assert!(max_relative_error(&analytic, &numeric, FLOOR) < REL_TOL);
}

#[test]
fn teacher_perturbation_changes_value_not_gradient_path() {
    let mut r = rng(9);
    let zs = gaussian(8, 5, &mut r);
    let zt = gaussian(8, 5, &mut r);
    let zt2 = zt.add(&gaussian(8, 5, &mut r).scale(0.1)).unwrap();
    let (a, ga) = mi_loss_and_grad(&zs, &zt, MiVariant::NoLog).unwrap();
    let (b, gb) = mi_loss_and_grad(&zs, &zt2, MiVariant::NoLog).unwrap();
    assert_ne!(a, b);
    // Gradients only ever have the student's shape.
    assert_eq!(ga.shape(), zs.shape());
    assert_eq!(gb.shape(), zs.shape());
}

#[test]
fn combined_gradient_through_embedding() {
    let mut r = rng(21);
    let zs_raw = gaussian(8, 3, &mut r);
    let zt = gaussian(8, 5, &mut r);
    let embed = EmbeddingLayer::new(
        Linear::new(gaussian(3, 5, &mut r), vec![0.1, -0.2, 0.0, 0.3, 0.05]).unwrap(),
        true,
    );
    let cfg = ItrdConfig::default();
    let out = itrd_loss_and_grad(&zs_raw, &zt, Some(&embed), 0.0, &cfg).unwrap();
    let loss =
        |z: &Matrix, e: &EmbeddingLayer| itrd_loss(z, &zt, Some(e), 0.0, &cfg).unwrap().total;

    let numeric = central_differences(&zs_raw, H, |z| loss(z, &embed));
    assert!(max_relative_error(&out.student, &numeric, FLOOR) < REL_TOL);

    let g = out.embedding.unwrap();
    let numeric_w = central_differences(&embed.linear.weight, H, |w| {
        let mut e = embed.clone();
        e.linear.weight = w.clone();
        loss(&zs_raw, &e)
    });
    assert!(max_relative_error(&g.weight, &numeric_w, FLOOR) < REL_TOL);

    let bias = Matrix::new(1, 5, embed.linear.bias.clone()).unwrap();
    let numeric_b = central_differences(&bias, H, |b| {
        let mut e = embed.clone();
        e.linear.bias = b.as_slice().to_vec();
        loss(&zs_raw, &e)
    });
    let analytic_b = Matrix::new(1, 5, g.bias).unwrap();
    assert!(max_relative_error(&analytic_b, &numeric_b, FLOOR) < REL_TOL);
}
