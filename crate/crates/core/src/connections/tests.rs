use proptest::prelude::*;

use super::*;
use crate::kernels::{bergman_disk, bergman_halfplane, fock_standard};
use crate::numerics::c64;

fn scalar_probe(s: C64, x: C64) -> (BasePoint, TangentVector) {
    (BasePoint::scalar(s), TangentVector::scalar(x))
}

fn one() -> Section {
    Section::constant(vec![c64(1.0, 0.0)])
}

/// `σ(z) = z₁` with its differential.
fn first_coordinate() -> Section {
    Section::new(|s| Ok(vec![s.as_vector().unwrap()[0]])).with_differential(|_, x| {
        let TangentVector::Vector(v) = x else { unreachable!() };
        Ok(vec![v[0]])
    })
}

#[test]
fn fock_form_is_the_standard_pairing() {
    let k = fock_standard(3).unwrap();
    let z = vec![c64(0.3, -0.1), c64(1.0, 0.5), c64(-0.2, 0.7)];
    let l = vec![c64(0.5, 0.5), c64(-1.0, 0.0), c64(0.1, -0.3)];
    let alpha = connection_form(&k, &BasePoint::Vector(z.clone()))
        .unwrap()
        .apply(&TangentVector::Vector(l.clone()))
        .unwrap();
    let expected: C64 = z.iter().zip(&l).map(|(a, b)| a * b.conj()).sum();
    assert!((alpha[(0, 0)] - expected).norm() < 1e-14);

    let zero = BasePoint::Vector(vec![c64(0.0, 0.0); 3]);
    let alpha0 = connection_form(&k, &zero)
        .unwrap()
        .apply(&TangentVector::Vector(l))
        .unwrap();
    assert_eq!(alpha0[(0, 0)], c64(0.0, 0.0));
}

#[test]
fn disk_example_is_four_thirds_for_every_backend() {
    let k = bergman_disk(2.0).unwrap();
    let (s, x) = scalar_probe(c64(0.5, 0.0), c64(1.0, 0.0));
    for backend in Backend::ALL {
        let v = ConnectionEvaluator::new(&k, backend)
            .covariant_derivative(&one(), &s, &x)
            .unwrap();
        assert!((v[0] - c64(4.0 / 3.0, 0.0)).norm() < 1e-9, "{backend}: {:?}", v[0]);
    }
    let r = build_rkhs(&k, stencil_points(&s, &x, 1e-3).unwrap(), 0.0).unwrap();
    let v = covariant_derivative_sampled(&r, &one(), &s, &x, 1e-3).unwrap();
    assert!((v[0] - c64(4.0 / 3.0, 0.0)).norm() < 1e-6);
}

#[test]
fn disk_example_against_richardson_oracle() {
    // Independent of the stencil module: central differences of t ↦ κ(s, s + t)
    // at h and h/2, combined by Richardson extrapolation.
    let (s, nu) = (0.5f64, 2.0);
    let f = |t: f64| (1.0 - (s + t) * s).powf(-nu);
    let central = |h: f64| (f(h) - f(-h)) / (2.0 * h);
    let h = 1e-4;
    let rich = (4.0 * central(h / 2.0) - central(h)) / 3.0;
    let oracle = rich / f(0.0);
    assert!((oracle - 4.0 / 3.0).abs() < 1e-6);
    let direct = covariant_derivative_direct(
        &bergman_disk(nu).unwrap(),
        &one(),
        &BasePoint::scalar(c64(s, 0.0)),
        &TangentVector::scalar(c64(1.0, 0.0)),
    )
    .unwrap();
    assert!((direct[0].re - oracle).abs() < 1e-6 && direct[0].im.abs() < 1e-12);
}

#[test]
fn fock_first_coordinate_example() {
    let k = fock_standard(2).unwrap();
    let s = BasePoint::Vector(vec![c64(1.0, 0.0), c64(0.0, 0.0)]);
    let x = TangentVector::Vector(vec![c64(1.0, 0.0), c64(0.0, 0.0)]);
    for backend in Backend::ALL {
        let v = ConnectionEvaluator::new(&k, backend)
            .covariant_derivative(&first_coordinate(), &s, &x)
            .unwrap();
        assert!((v[0] - c64(2.0, 0.0)).norm() < 1e-6, "{backend}");
    }
}

#[test]
fn constant_section_at_fock_origin_is_parallel() {
    let k = fock_standard(2).unwrap();
    let s = BasePoint::Vector(vec![c64(0.0, 0.0); 2]);
    let x = TangentVector::Vector(vec![c64(0.3, 1.0), c64(-2.0, 0.5)]);
    for backend in Backend::ALL {
        let v = ConnectionEvaluator::new(&k, backend)
            .covariant_derivative(&one(), &s, &x)
            .unwrap();
        assert!(v[0].norm() < 1e-9, "{backend}");
    }
    let zero = Section::constant(vec![c64(0.0, 0.0)]);
    let v = ConnectionEvaluator::new(&k, Backend::Sampled)
        .covariant_derivative(&zero, &s, &x)
        .unwrap();
    assert_eq!(v[0], c64(0.0, 0.0));
}

#[test]
fn halfplane_form_matches_direct_derivative() {
    // κ⁻¹∂₂κ at z in direction λ works out to ν λ̄ / (2i Im z).
    for nu in [1.0, 2.0] {
        let k = bergman_halfplane(nu).unwrap();
        let z = c64(0.4, 0.3);
        let l = c64(0.7, -0.2);
        let (s, x) = scalar_probe(z, l);
        let alpha = connection_form(&k, &s).unwrap().apply(&x).unwrap()[(0, 0)];
        let expected = nu * l.conj() / (c64(0.0, 2.0) * z.im);
        assert!((alpha - expected).norm() < 1e-13);
        let direct = covariant_derivative_direct(&k, &one(), &s, &x).unwrap();
        assert!((direct[0] - expected).norm() < 1e-9);
    }
}

#[test]
fn boundary_probe_needs_the_local_step() {
    let k = bergman_disk(3.0).unwrap();
    let (s, x) = scalar_probe(c64(0.0, 0.9), c64(0.6, -0.8));
    let closed = covariant_derivative_closed(&k, &one(), &s, &x).unwrap();
    let direct = covariant_derivative_direct(&k, &one(), &s, &x).unwrap();
    assert!(vec_distance(&closed, &direct) < 1e-8);
}

#[test]
fn transport_along_constant_curve_is_identity() {
    let k = bergman_disk(2.0).unwrap();
    let gamma = Curve::constant(BasePoint::scalar(c64(0.3, 0.2)));
    let v = parallel_transport(&k, &gamma, &[c64(1.5, -0.5)], 8).unwrap();
    assert_eq!(v, vec![c64(1.5, -0.5)]);
    assert!(parallel_transport(&k, &gamma, &[c64(1.0, 0.0)], 0).is_err());
}

#[test]
fn bergman_radial_transport_matches_closed_form() {
    let k = bergman_disk(1.0).unwrap();
    let gamma = Curve::line(vec![c64(0.0, 0.0)], vec![c64(0.5, 0.0)]).unwrap();
    let quad = scalar_transport_quadrature(&k, &gamma, c64(1.0, 0.0), 200).unwrap();
    // α_{0.5t}(0.5) = 0.25 t / (1 − 0.25 t²), so v(1) = √0.75.
    assert!((quad - c64(0.75f64.sqrt(), 0.0)).norm() < 1e-14);
    let rk = parallel_transport(&k, &gamma, &[c64(1.0, 0.0)], 64).unwrap();
    assert!((rk[0] - quad).norm() < 1e-8);
}

#[test]
fn transport_converges_at_fourth_order() {
    let k = bergman_disk(1.0).unwrap();
    let gamma = Curve::line(vec![c64(0.0, 0.0)], vec![c64(0.9, 0.0)]).unwrap();
    let reference = scalar_transport_quadrature(&k, &gamma, c64(1.0, 0.0), 400).unwrap();
    let rows = transport_convergence(&k, &gamma, &[c64(1.0, 0.0)], &[64, 128, 256, 512], &[reference]).unwrap();
    for row in &rows[1..] {
        assert!(row.order.unwrap() >= 3.7, "{row:?}");
    }
}

#[test]
fn leibniz_examples() {
    let k = fock_standard(2).unwrap();
    let probes: Vec<_> = [(0.3, 0.1), (-0.5, 0.8), (1.0, -0.2)]
        .iter()
        .map(|&(a, b)| {
            (
                BasePoint::Vector(vec![c64(a, b), c64(b, a)]),
                TangentVector::Vector(vec![c64(1.0, -0.5), c64(0.2, 0.4)]),
            )
        })
        .collect();
    let sigma = Section::constant(vec![c64(2.0, 1.0)]);
    for backend in Backend::ALL {
        let ev = ConnectionEvaluator::new(&k, backend);
        let r = leibniz_residual(&ev, &ScalarFunction::constant(c64(1.0, 0.0)), &sigma, &probes, 1e-3).unwrap();
        assert!(r < 1e-12, "{backend}: {r:e}");
        let linear = ScalarFunction::new(|s| {
            let v = s.as_vector().unwrap();
            Ok(c64(2.0, 0.0) * v[0] - c64(0.0, 1.0) * v[1])
        });
        let r = leibniz_residual(&ev, &linear, &sigma, &probes, 1e-3).unwrap();
        assert!(r < 1e-8, "{backend}: {r:e}");
    }

    let k = bergman_disk(2.0).unwrap();
    let poly = ScalarFunction::new(|s| {
        let z = s.scalar_value()?;
        Ok(z * z * z - c64(0.5, 1.0) * z.conj() * z + c64(0.2, 0.0))
    });
    let sigma = Section::new(|s| Ok(vec![s.scalar_value()?.exp()]));
    let probes = vec![
        scalar_probe(c64(0.5, 0.0), c64(1.0, 0.0)),
        scalar_probe(c64(-0.3, 0.6), c64(0.0, 1.0)),
        scalar_probe(c64(0.1, -0.85), c64(0.6, 0.8)),
    ];
    for backend in Backend::ALL {
        let r = leibniz_residual(&ConnectionEvaluator::new(&k, backend), &poly, &sigma, &probes, 1e-3).unwrap();
        assert!(r < 1e-6, "{backend}: {r:e}");
    }
}

#[test]
fn identity_gauge_pullback_is_trivial() {
    let k = bergman_disk(2.0).unwrap();
    let field = ConnectionFormField::from_kernel(&k);
    let pulled = gauge_pullback_connection(&BundleMorphism::identity(1), &field).unwrap();
    let (s, x) = scalar_probe(c64(0.2, -0.4), c64(0.3, 0.9));
    let a = field.eval(&s, &x).unwrap();
    let b = pulled.eval(&s, &x).unwrap();
    assert!((&a - &b).norm() < 1e-14);
}

#[test]
fn scalar_gauge_gives_logarithmic_derivative() {
    // δ_s = g(s) = 1 + s², α̃ = 0  ⇒  α(X) = g'(s) X / g(s).
    let theta = BundleMorphism::new(
        1,
        1,
        |s| Ok(s.clone()),
        |s| {
            let z = s.scalar_value()?;
            ComplexMatrix::from_vec(1, 1, vec![1.0 + z * z])
        },
    )
    .with_tangent_map(|_, x| Ok(x.clone()));
    let pulled = gauge_pullback_connection(&theta, &ConnectionFormField::zero(1)).unwrap();
    let (s, x) = scalar_probe(c64(0.4, 0.3), c64(1.0, -2.0));
    let z = c64(0.4, 0.3);
    let expected = 2.0 * z * c64(1.0, -2.0) / (1.0 + z * z);
    assert!((pulled.eval(&s, &x).unwrap()[(0, 0)] - expected).norm() < 1e-10);

    // δ ∘ ∇σ = ∇̃σ̃ ∘ Tζ for σ̃ = δσ.
    let sigma = Section::new(|s| Ok(vec![s.scalar_value()?.sin()]));
    let sigma_t = Section::new(|s| {
        let z = s.scalar_value()?;
        Ok(vec![(1.0 + z * z) * z.sin()])
    });
    let probes = vec![
        (s.clone(), x.clone()),
        scalar_probe(c64(-0.7, 0.1), c64(0.0, 1.0)),
        scalar_probe(c64(0.0, 0.0), c64(1.0, 1.0)),
    ];
    let r = intertwining_residual(
        &theta,
        &pulled,
        &ConnectionFormField::zero(1),
        &sigma,
        &sigma_t,
        &probes,
    )
    .unwrap();
    assert!(r < 1e-6, "{r:e}");

    let wrong = Section::new(|s| Ok(vec![s.scalar_value()?.cos()]));
    assert!(intertwining_residual(&theta, &pulled, &ConnectionFormField::zero(1), &sigma, &wrong, &probes).is_err());
}

#[test]
fn kernel_pullback_connection_intertwines() {
    // Θ = (δ, id) with δ_s = e^{s}; pulled-back connection of the disk kernel.
    let k = bergman_disk(2.0).unwrap();
    let theta = BundleMorphism::new(
        1,
        1,
        |s| Ok(s.clone()),
        |s| ComplexMatrix::from_vec(1, 1, vec![s.scalar_value()?.exp()]),
    )
    .with_tangent_map(|_, x| Ok(x.clone()));
    let target = ConnectionFormField::from_kernel(&k);
    let pulled = gauge_pullback_connection(&theta, &target).unwrap();
    let sigma = Section::new(|s| Ok(vec![s.scalar_value()? * 2.0 + 1.0]));
    let sigma_t = Section::new(|s| {
        let z = s.scalar_value()?;
        Ok(vec![z.exp() * (z * 2.0 + 1.0)])
    });
    let probes = vec![
        scalar_probe(c64(0.5, 0.0), c64(1.0, 0.0)),
        scalar_probe(c64(-0.2, 0.4), c64(0.3, -0.7)),
    ];
    let r = intertwining_residual(&theta, &pulled, &target, &sigma, &sigma_t, &probes).unwrap();
    assert!(r < 1e-6, "{r:e}");
}

#[test]
fn identity_morphism_intertwines_exactly() {
    let k = fock_standard(1).unwrap();
    let ev = ConnectionEvaluator::new(&k, Backend::Direct);
    let sigma = first_coordinate();
    let probes = vec![scalar_probe(c64(0.1, 0.2), c64(1.0, 0.0))];
    let r = intertwining_residual(&BundleMorphism::identity(1), &ev, &ev, &sigma, &sigma, &probes).unwrap();
    assert_eq!(r, 0.0);
}

#[test]
fn sampled_backend_needs_stencil_points() {
    let k = bergman_disk(2.0).unwrap();
    let (s, x) = scalar_probe(c64(0.5, 0.0), c64(1.0, 0.0));
    let r = build_rkhs(&k, vec![s.clone()], 0.0).unwrap();
    assert!(covariant_derivative_sampled(&r, &one(), &s, &x, 1e-3).is_err());
}

#[test]
fn singular_diagonal_fails_loudly() {
    let k = Kernel::new("degenerate", 2, Domain::Complex { dim: 1 }, |s, t| {
        let a = ComplexMatrix::column_vector(&[c64(1.0, 0.0), s.scalar_value()?]);
        let b = ComplexMatrix::column_vector(&[c64(1.0, 0.0), t.scalar_value()?]);
        Ok(&a * &b.adjoint())
    });
    let s = BasePoint::scalar(c64(0.5, 0.0));
    assert!(matches!(connection_form(&k, &s), Err(Error::Singular(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn connection_form_is_real_linear(
        re in -0.6f64..0.6, im in -0.6f64..0.6,
        x in (-2.0f64..2.0, -2.0f64..2.0), y in (-2.0f64..2.0, -2.0f64..2.0),
        a in -3.0f64..3.0, b in -3.0f64..3.0,
    ) {
        let k = bergman_disk(2.5).unwrap();
        let form = connection_form(&k, &BasePoint::scalar(c64(re, im))).unwrap();
        let (x, y) = (TangentVector::scalar(c64(x.0, x.1)), TangentVector::scalar(c64(y.0, y.1)));
        let lhs = form.apply(&x.scale(a).add(&y.scale(b)).unwrap()).unwrap();
        let rhs = &form.apply(&x).unwrap().scale_real(a) + &form.apply(&y).unwrap().scale_real(b);
        prop_assert!((&lhs - &rhs).norm() < 1e-10 * rhs.norm().max(1.0));
    }

    #[test]
    fn closed_and_direct_agree_on_the_disk(
        r in 0.0f64..0.9, theta in 0.0f64..std::f64::consts::TAU,
        phi in 0.0f64..std::f64::consts::TAU, nu in 1.0f64..3.0,
    ) {
        let k = bergman_disk(nu).unwrap();
        let s = BasePoint::scalar(C64::from_polar(r, theta));
        let x = TangentVector::scalar(C64::from_polar(1.0, phi));
        let sigma = Section::new(|s| Ok(vec![s.scalar_value()?.exp()]));
        let closed = covariant_derivative_closed(&k, &sigma, &s, &x).unwrap();
        let direct = covariant_derivative_direct(&k, &sigma, &s, &x).unwrap();
        prop_assert!(vec_distance(&closed, &direct) < 1e-8);
    }
}
