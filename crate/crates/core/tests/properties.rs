use lrmc_core::diagnostics::{deviation_bound, hessian_form_with, sampling_deviation};
use lrmc_core::linalg::{
    orthogonality_gap, procrustes, sign_matrix, singular_values, spectral_norm, top_r_svd, DenseMatrix,
};
use lrmc_core::problem::{
    project_omega, project_omega_restricted, sample_mask, Axis, ObservationSet, Restriction, SamplingMask,
};
use lrmc_core::rng;
use lrmc_core::solver::{gradient_with, objective_with, spectral_init, FactorPair};
use proptest::prelude::*;

fn gaussian(seed: u64, rows: usize, cols: usize) -> DenseMatrix {
    rng::gaussian_matrix(&mut rng::seeded(seed), rows, cols)
}

fn orthogonal(seed: u64, r: usize) -> DenseMatrix {
    sign_matrix(&gaussian(seed, r, r)).unwrap().into_matrix()
}

fn pair(seed: u64, n1: usize, n2: usize, r: usize) -> FactorPair {
    let mut g = rng::seeded(seed);
    FactorPair::new(rng::gaussian_matrix(&mut g, n1, r), rng::gaussian_matrix(&mut g, n2, r)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn procrustes_beats_random_orthogonal(seed in any::<u64>(), n in 2usize..20, r in 1usize..5) {
        prop_assume!(r <= n);
        let a = gaussian(seed, n, r);
        let b = gaussian(seed ^ 1, n, r);
        let q = procrustes(&a, &b).unwrap();
        prop_assert!(orthogonality_gap(&q) < 1e-12);
        let best = (&a.matmul(&q).unwrap() - &b).frobenius_norm();
        for k in 0..10 {
            let other = orthogonal(seed.wrapping_add(k), r);
            prop_assert!(best <= (&a.matmul(&other).unwrap() - &b).frobenius_norm() + 1e-12);
        }
    }

    #[test]
    fn sign_matrix_ignores_positive_scaling(seed in any::<u64>(), r in 1usize..6, c in 1e-3f64..1e3) {
        let m = gaussian(seed, r, r);
        let s = sign_matrix(&m).unwrap();
        let t = sign_matrix(&m.scale(c)).unwrap();
        prop_assert!((&*s - &*t).max_abs() < 1e-10);
        // sgn(C) is the orthogonal polar factor: sgn(C)ᵀC is symmetric.
        let p = s.tr_matmul(&m).unwrap();
        prop_assert!((&p - &p.transpose()).max_abs() < 1e-10 * m.max_abs());
    }

    #[test]
    fn truncated_svd_is_best_rank_r(seed in any::<u64>(), n1 in 2usize..15, n2 in 2usize..15, r in 1usize..4) {
        prop_assume!(r <= n1.min(n2));
        let a = gaussian(seed, n1, n2);
        let svd = top_r_svd(&a, r).unwrap();
        let all = singular_values(&a);
        let tail: f64 = all[r..].iter().map(|s| s * s).sum();
        let resid = (&a - &svd.reconstruct()).frobenius_norm_sq();
        prop_assert!((resid - tail).abs() <= 1e-9 * a.frobenius_norm_sq());
        prop_assert!(orthogonality_gap(&svd.left) < 1e-10);
        prop_assert!(orthogonality_gap(&svd.right) < 1e-10);
    }

    #[test]
    fn power_iteration_matches_svd(seed in any::<u64>(), n1 in 1usize..20, n2 in 1usize..20) {
        let a = gaussian(seed, n1, n2);
        let est = spectral_norm(&a, 1e-10);
        let exact = singular_values(&a)[0];
        prop_assert!(est.value <= exact * (1.0 + 1e-12));
        prop_assert!((est.value - exact).abs() <= 1e-6 * exact);
    }

    #[test]
    fn masks_nest_in_p(seed in any::<u64>(), p1 in 0.05f64..1.0, p2 in 0.05f64..1.0) {
        let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
        let small = sample_mask(17, 13, lo, seed).unwrap();
        let big = sample_mask(17, 13, hi, seed).unwrap();
        for &(i, j) in small.observed() {
            prop_assert!(big.contains(i, j));
        }
    }

    #[test]
    fn restricted_projections_partition(seed in any::<u64>(), l in 0usize..12, rows in any::<bool>()) {
        let (n1, n2) = (12, 9);
        let axis = if rows { Axis::Row } else { Axis::Column };
        let l = if rows { l } else { l % n2 };
        let m = gaussian(seed, n1, n2);
        let mask = sample_mask(n1, n2, 0.4, seed).unwrap();
        let ex = project_omega_restricted(&m, &mask, axis, l, Restriction::Exclude).unwrap();
        let only = project_omega_restricted(&m, &mask, axis, l, Restriction::Only).unwrap();
        prop_assert_eq!(&ex + &only, project_omega(&m, &mask).unwrap());
    }

    #[test]
    fn objective_is_rotation_invariant(seed in any::<u64>(), r in 1usize..4) {
        let (n1, n2) = (11, 9);
        let m = gaussian(seed, n1, r).matmul_tr(&gaussian(seed ^ 2, n2, r)).unwrap();
        let mask = sample_mask(n1, n2, 0.5, seed).unwrap();
        let obs = ObservationSet::from_projected(&project_omega(&m, &mask).unwrap(), &mask).unwrap();
        let fp = pair(seed ^ 3, n1, n2, r);
        let q = orthogonal(seed ^ 4, r);
        let rot = FactorPair::new(fp.x.matmul(&q).unwrap(), fp.y.matmul(&q).unwrap()).unwrap();
        let (f0, f1) = (objective_with(&obs, &fp).unwrap(), objective_with(&obs, &rot).unwrap());
        prop_assert!((f0 - f1).abs() <= 1e-10 * f0.max(1.0));
        // ∇f(XQ, YQ) = ∇f(X, Y)Q.
        let g = gradient_with(&obs, &fp).unwrap();
        let gr = gradient_with(&obs, &rot).unwrap();
        prop_assert!((&g.x.matmul(&q).unwrap() - &gr.x).max_abs() <= 1e-9 * g.x.max_abs().max(1.0));
        prop_assert!((&g.y.matmul(&q).unwrap() - &gr.y).max_abs() <= 1e-9 * g.y.max_abs().max(1.0));
    }

    #[test]
    fn spectral_init_is_balanced(seed in any::<u64>(), p in 0.2f64..1.0, r in 1usize..4) {
        let (n1, n2) = (16, 12);
        let m = gaussian(seed, n1, r).matmul_tr(&gaussian(seed ^ 5, n2, r)).unwrap();
        let mask = sample_mask(n1, n2, p, seed).unwrap();
        let init = spectral_init(&project_omega(&m, &mask).unwrap(), &mask, r).unwrap();
        let scale = init.x.frobenius_norm_sq().max(1e-300);
        prop_assert!(init.balance().frobenius_norm() <= 1e-9 * scale);
    }

    #[test]
    fn deviation_bound_holds(seed in any::<u64>(), p in 0.1f64..1.0, ra in 1usize..4, rb in 1usize..4) {
        let (n1, n2) = (14, 11);
        let mask = sample_mask(n1, n2, p, seed).unwrap();
        let (a, c) = (gaussian(seed, n1, ra), gaussian(seed ^ 6, n2, ra));
        let (b, d) = (gaussian(seed ^ 7, n1, rb), gaussian(seed ^ 8, n2, rb));
        let lhs = sampling_deviation(&a, &c, &b, &d, &mask).unwrap().abs();
        let rhs = deviation_bound(&a, &c, &b, &d, &mask).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-9) + 1e-12, "{} > {}", lhs, rhs);
    }

    #[test]
    fn hessian_form_is_quadratic(seed in any::<u64>(), alpha in -5.0f64..5.0) {
        let (n1, n2, r) = (9, 8, 2);
        let m = gaussian(seed, n1, n2);
        let mask = sample_mask(n1, n2, 0.6, seed).unwrap();
        let obs = ObservationSet::from_projected(&project_omega(&m, &mask).unwrap(), &mask).unwrap();
        let fp = pair(seed ^ 9, n1, n2, r);
        let d = pair(seed ^ 10, n1, n2, r);
        let base = hessian_form_with(&obs, &fp, &d).unwrap();
        let scaled = hessian_form_with(&obs, &fp, &d.scale(alpha)).unwrap();
        prop_assert!((scaled - alpha * alpha * base).abs() <= 1e-10 * (base.abs() * alpha * alpha).max(1e-12));
    }
}

#[test]
fn full_mask_observation_sets_agree() {
    let m = gaussian(3, 7, 6);
    let full = SamplingMask::full(7, 6);
    let main = ObservationSet::from_projected(&m, &full).unwrap();
    for l in 0..7 {
        assert_eq!(ObservationSet::leave_one_out(&m, &full, Axis::Row, l).unwrap(), main);
    }
}
