use proptest::prelude::*;

use super::*;
use crate::connections::{gauge_pullback_connection, intertwining_residual, ConnectionFormField};
use crate::kernels::pull_back_kernel;
use crate::numerics::{c64, vec_distance};
use crate::random::{random_anti_hermitian, random_unitary, random_unitary_with, seeded_rng};

fn unit(n: usize, j: usize, k: usize) -> ComplexMatrix {
    let mut e = ComplexMatrix::zeros(n, n);
    e[(j, k)] = c64(1.0, 0.0);
    e
}

fn kernel_gap(a: &Kernel, b: &Kernel, points: &[BasePoint]) -> f64 {
    let mut worst = 0.0f64;
    for s in points {
        for t in points {
            worst = worst.max((&a.eval(s, t).unwrap() - &b.eval(s, t).unwrap()).norm());
        }
    }
    worst
}

fn unitary_points(seed: u64, n: usize, count: usize) -> Vec<BasePoint> {
    let mut rng = seeded_rng(seed);
    (0..count)
        .map(|_| BasePoint::Unitary(random_unitary_with(&mut rng, n)))
        .collect()
}

#[test]
fn identity_channel_has_rank_one_and_trivial_dilation() {
    let psi = CpMap::from_kraus(vec![ComplexMatrix::identity(3)]).unwrap();
    assert_eq!(psi.choi_rank().unwrap(), 1);
    let s = stinespring_dilate(&psi).unwrap();
    assert_eq!(s.rank(), 1);
    assert!((s.isometry() - &ComplexMatrix::identity(3)).norm() < 1e-14);
    assert!(verify_dilation(&psi, &s).unwrap() < 1e-14);
}

#[test]
fn choi_of_identity_is_rank_one_projection_onto_vec_identity() {
    let psi = CpMap::from_kraus(vec![ComplexMatrix::identity(2)]).unwrap();
    let c = psi.choi();
    for (r, row) in [0usize, 3].iter().enumerate() {
        for col in [0usize, 3] {
            assert!((c[(*row, col)] - c64(1.0, 0.0)).norm() < 1e-15, "{r}");
        }
    }
    assert!((c.trace() - c64(2.0, 0.0)).norm() < 1e-15);
}

#[test]
fn duplicate_kraus_operators_collapse_to_minimal_rank() {
    let half = ComplexMatrix::identity(2).scale_real(0.5f64.sqrt());
    let psi = CpMap::from_kraus(vec![half.clone(), half]).unwrap();
    assert_eq!(psi.choi_rank().unwrap(), 1);
    let rebuilt = CpMap::from_choi(psi.choi().clone(), 2, 2).unwrap();
    assert_eq!(rebuilt.kraus().len(), 1);
    let s = stinespring_dilate(&rebuilt).unwrap();
    assert_eq!(s.rank(), 1);
    assert!(verify_dilation(&psi, &s).unwrap() < 1e-12);
}

#[test]
fn depolarizing_map_on_two_by_two() {
    let psi = depolarizing(2).unwrap();
    assert!((psi.choi() - &ComplexMatrix::identity(4).scale_real(0.5)).norm() < 1e-15);
    assert_eq!(psi.choi_rank().unwrap(), 4);
    let s = stinespring_dilate(&psi).unwrap();
    assert_eq!(s.rank(), 4);
    assert!(verify_dilation(&psi, &s).unwrap() < 1e-12);
    let a = ComplexMatrix::from_real_diag(&[1.0, 3.0]);
    let out = psi.apply(&a).unwrap();
    assert!((&out - &ComplexMatrix::identity(2).scale_real(2.0)).norm() < 1e-14);
}

#[test]
fn depolarizing_connection_kills_traceless_directions() {
    let psi = depolarizing(2).unwrap();
    let a =
        ComplexMatrix::from_rows(&[vec![c64(0.0, 0.3), c64(0.2, 0.1)], vec![c64(-0.2, 0.1), c64(0.0, -0.3)]]).unwrap();
    assert!(psi.apply(&a).unwrap().norm() < 1e-15);
    let u = random_unitary(2, 5);
    let sigma = Section::constant(vec![c64(1.0, 0.0), c64(0.0, 1.0)]);
    let d = cp_covariant_derivative(&psi, &sigma, &u, &a).unwrap();
    assert!(d.iter().all(|z| z.norm() < 1e-12));
}

#[test]
fn round_trip_kraus_choi_kraus() {
    let mut rng = seeded_rng(11);
    for (n, m, r) in [(2, 2, 3), (3, 2, 2), (2, 3, 4), (3, 3, 1)] {
        let psi = random_unital_cp_map(&mut rng, n, m, r).unwrap();
        assert!(psi.unital_residual() < 1e-12);
        let rebuilt = CpMap::from_choi(psi.choi().clone(), n, m).unwrap();
        assert_eq!(rebuilt.kraus().len(), r);
        assert!((rebuilt.choi() - psi.choi()).norm() < 1e-10);
        for j in 0..n {
            for k in 0..n {
                let e = unit(n, j, k);
                let gap = (&psi.apply(&e).unwrap() - &rebuilt.apply(&e).unwrap()).norm();
                assert!(gap < 1e-10, "({n},{m},{r}) gap {gap:e}");
            }
        }
    }
}

#[test]
fn random_dilations_reproduce_the_map() {
    let mut rng = seeded_rng(3);
    for _ in 0..10 {
        let psi = random_unital_cp_map(&mut rng, 3, 2, 3).unwrap();
        let s = stinespring_dilate(&psi).unwrap();
        assert_eq!(s.rank(), 3);
        assert!(s.isometry_residual() < 1e-12);
        assert!(verify_dilation(&psi, &s).unwrap() < 1e-10);
    }
}

#[test]
fn corrupted_isometry_is_detected() {
    let mut rng = seeded_rng(4);
    let psi = random_unital_cp_map(&mut rng, 2, 2, 2).unwrap();
    let s = stinespring_dilate(&psi).unwrap();
    let mut v = s.isometry().clone();
    v[(0, 0)] += c64(1e-3, 0.0);
    let bad = StinespringTriple::new(v, s.input_dim(), s.rank()).unwrap();
    assert!(verify_dilation(&psi, &bad).unwrap() > 1e-6);
}

#[test]
fn non_unital_maps_are_rejected_by_dilation_and_kernel() {
    let psi = CpMap::from_kraus(vec![ComplexMatrix::identity(2).scale_real(2.0)]).unwrap();
    assert!(matches!(stinespring_dilate(&psi), Err(Error::NonUnital { .. })));
    assert!(matches!(cp_kernel(&psi), Err(Error::NonUnital { .. })));
}

#[test]
fn choi_validation() {
    let mut c = ComplexMatrix::identity(4);
    c[(0, 1)] = c64(0.5, 0.0);
    assert!(matches!(CpMap::from_choi(c, 2, 2), Err(Error::NotHermitian { .. })));
    let neg = ComplexMatrix::from_real_diag(&[1.0, -0.5, 0.5, 1.0]);
    assert!(matches!(CpMap::from_choi(neg, 2, 2), Err(Error::NotPsd { .. })));
    assert!(matches!(
        CpMap::from_choi(ComplexMatrix::identity(4), 3, 2),
        Err(Error::DimensionMismatch(_))
    ));
}

#[test]
fn dimensions_are_inferred_from_unitality() {
    let psi = CpMap::from_choi_inferred(ComplexMatrix::identity(4).scale_real(0.5), None).unwrap();
    assert_eq!((psi.input_dim(), psi.output_dim()), (2, 2));
    let mut rng = seeded_rng(9);
    let q = random_unital_cp_map(&mut rng, 3, 2, 2).unwrap();
    let inferred = CpMap::from_choi_inferred(q.choi().clone(), None).unwrap();
    assert_eq!((inferred.input_dim(), inferred.output_dim()), (3, 2));
    let explicit = CpMap::from_choi_inferred(q.choi().clone(), Some(3)).unwrap();
    assert_eq!(explicit.output_dim(), 2);
    assert!(CpMap::from_choi_inferred(q.choi().clone(), Some(4)).is_err());
    assert!(CpMap::from_choi_inferred(ComplexMatrix::identity(4).scale_real(3.0), None).is_err());
}

#[test]
fn cp_kernel_is_positive_and_matches_the_map() {
    let mut rng = seeded_rng(21);
    let psi = random_unital_cp_map(&mut rng, 2, 3, 2).unwrap();
    let k = cp_kernel(&psi).unwrap();
    let pts = unitary_points(22, 2, 6);
    let g = crate::kernels::gram_matrix(&k, &pts).unwrap();
    let cert = crate::kernels::positivity_certificate(&g, 1e-9).unwrap();
    assert!(cert.is_psd, "min eigenvalue {:e}", cert.min_eigenvalue);
    let u = pts[0].as_unitary().unwrap();
    assert!((&k.eval(&pts[0], &pts[0]).unwrap() - &ComplexMatrix::identity(3)).norm() < 1e-12);
    let a = random_anti_hermitian(&mut rng, 2);
    let x = TangentVector::AntiHermitian(a.clone());
    let analytic = k.partial_second(&pts[0], &pts[1], &x).unwrap();
    let numeric = k.partial_second_numeric(&pts[0], &pts[1], &x, 1e-3).unwrap();
    assert!((&analytic - &numeric).norm() < 1e-8);
    assert!(u.unitarity_residual() < 1e-12);
}

#[test]
fn cp_derivative_matches_the_generic_pipeline() {
    let mut rng = seeded_rng(31);
    let psi = random_unital_cp_map(&mut rng, 2, 2, 3).unwrap();
    let f0 = vec![c64(0.4, -0.1), c64(1.0, 0.2)];
    let sigma = Section::new(move |s| {
        let u = s.as_unitary().ok_or_else(|| Error::Precondition("unitary".into()))?;
        u.mat_vec(&f0)
    });
    for _ in 0..5 {
        let u = random_unitary_with(&mut rng, 2);
        let a = random_anti_hermitian(&mut rng, 2);
        let ours = cp_covariant_derivative(&psi, &sigma, &u, &a).unwrap();
        let generic = generic_cp_covariant_derivative(&psi, &sigma, &u, &a).unwrap();
        assert!(vec_distance(&ours, &generic) < 1e-8);
    }
}

#[test]
fn cp_derivative_rejects_hermitian_directions() {
    let psi = depolarizing(2).unwrap();
    let sigma = Section::constant(vec![c64(1.0, 0.0); 2]);
    let h = ComplexMatrix::from_real_diag(&[1.0, 0.0]);
    assert!(cp_covariant_derivative(&psi, &sigma, &ComplexMatrix::identity(2), &h).is_err());
}

#[test]
fn kernel_pulls_back_along_the_dilation() {
    let mut rng = seeded_rng(41);
    let psi = random_unital_cp_map(&mut rng, 2, 2, 3).unwrap();
    let s = stinespring_dilate(&psi).unwrap();
    let target = cp_kernel(&psi).unwrap();
    let pts = unitary_points(42, 2, 5);

    let ambient = pull_back_kernel(&theta_v(&s), &lambda_kernel(&s)).unwrap();
    assert!(kernel_gap(&ambient, &target, &pts) < 1e-12);

    let compressed = compressed_lambda_kernel(&s).unwrap();
    assert_eq!(compressed.fiber_dim(), 2);
    let pulled = pull_back_kernel(&theta_v_compressed(&s).unwrap(), &compressed).unwrap();
    assert!(kernel_gap(&pulled, &target, &pts) < 1e-12);
}

#[test]
fn dilation_intertwines_the_connections() {
    let mut rng = seeded_rng(51);
    let psi = random_unital_cp_map(&mut rng, 2, 2, 2).unwrap();
    let s = stinespring_dilate(&psi).unwrap();
    let theta = theta_v_compressed(&s).unwrap();
    let delta = theta.fiber(&BasePoint::Unitary(ComplexMatrix::identity(2))).unwrap();
    assert!(delta.unitarity_residual() < 1e-10);

    let nabla = ConnectionFormField::from_kernel(&cp_kernel(&psi).unwrap());
    let nabla0 = ConnectionFormField::from_kernel(&compressed_lambda_kernel(&s).unwrap());

    let f0 = vec![c64(0.7, 0.1), c64(-0.3, 0.5)];
    let sigma = Section::new(move |p| p.as_unitary().unwrap().mat_vec(&f0));
    let (d2, sig2) = (delta.clone(), sigma.clone());
    let sigma0 = Section::new(move |p| d2.mat_vec(&sig2.value(p)?));

    let probes: Vec<_> = (0..5)
        .map(|_| {
            (
                BasePoint::Unitary(random_unitary_with(&mut rng, 2)),
                TangentVector::AntiHermitian(random_anti_hermitian(&mut rng, 2)),
            )
        })
        .collect();
    let residual = intertwining_residual(&theta, &nabla, &nabla0, &sigma, &sigma0, &probes).unwrap();
    assert!(residual < 1e-8, "residual {residual:e}");

    let pulled = gauge_pullback_connection(&theta, &nabla0).unwrap();
    for (p, x) in &probes {
        let gap = (&pulled.eval(p, x).unwrap() - &nabla.eval(p, x).unwrap()).norm();
        assert!(gap < 1e-8, "gap {gap:e}");
    }
}

#[test]
fn compression_ignores_the_off_diagonal_part() {
    let mut rng = seeded_rng(61);
    let p = HermitianProjector::from_basis(&crate::random::orthonormalize_columns(&gaussian_matrix(&mut rng, 4, 2)))
        .unwrap();
    let xs: Vec<_> = (0..5).map(|_| gaussian_matrix(&mut rng, 4, 4)).collect();
    assert!(compression_expectation_residual(&p, &xs).unwrap() < 1e-12);
    assert!(compression_map(&p).unwrap().is_unital());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn choi_is_psd_with_rank_at_most_kraus_count(seed in 0u64..10_000, r in 1usize..5) {
        let mut rng = seeded_rng(seed);
        let psi = random_unital_cp_map(&mut rng, 2, 2, r).unwrap();
        let eig = hermitian_eigh(psi.choi()).unwrap();
        prop_assert!(eig.min_value() > -1e-12);
        prop_assert!(psi.choi_rank().unwrap() <= r);
    }

    #[test]
    fn unital_maps_send_identity_to_identity(seed in 0u64..10_000) {
        let mut rng = seeded_rng(seed);
        let psi = random_unital_cp_map(&mut rng, 3, 2, 2).unwrap();
        let out = psi.apply(&ComplexMatrix::identity(3)).unwrap();
        prop_assert!((&out - &ComplexMatrix::identity(2)).norm() < 1e-12);
    }
}
