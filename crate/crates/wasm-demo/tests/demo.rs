use kernel_connect_wasm::{backend_agreement, connection_field, transport_path};

#[test]
fn field_matches_disk_formula() {
    let n = 21;
    let nu = 2.0;
    let f = connection_field(nu, n).unwrap();
    assert_eq!(f.len(), 2 * n * n);
    assert!(f[0].is_nan(), "corner lies outside the disk");
    // Centre of the grid is s = 0, where the form vanishes.
    let c = 2 * (10 * n + 10);
    assert!(f[c].abs() < 1e-12 && f[c + 1].abs() < 1e-12);
    // Column 15 of the middle row is s = 0.5: α = ν s / (1 − |s|²) = 4/3.
    let idx = 2 * (10 * n + 15);
    assert!((f[idx] - 4.0 / 3.0).abs() < 1e-9, "{}", f[idx]);
    assert!(f[idx + 1].abs() < 1e-12);
}

#[test]
fn transport_ends_at_known_value() {
    let path = transport_path(1.0, 0.5, 0.0, 8).unwrap();
    assert_eq!(path.len(), 4 * 9);
    assert_eq!(&path[..4], &[0.0, 0.0, 1.0, 0.0]);
    let last = &path[path.len() - 4..];
    assert!((last[0] - 0.5).abs() < 1e-15);
    assert!((last[2] - 0.75f64.sqrt()).abs() < 1e-8, "{last:?}");
    // Along a radius the transported value is real and decreasing.
    let mags: Vec<f64> = path.chunks(4).map(|c| c[2]).collect();
    assert!(mags.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn transport_rotation_invariant_modulus() {
    let a = transport_path(2.0, 0.6, 0.0, 4).unwrap();
    let b = transport_path(2.0, 0.0, 0.6, 4).unwrap();
    let m = |p: &[f64]| (p[p.len() - 2].powi(2) + p[p.len() - 1].powi(2)).sqrt();
    assert!((m(&a) - m(&b)).abs() < 1e-10);
}

#[test]
fn backends_agree() {
    for (s, x) in [
        ((0.3, -0.2), (1.0, 0.0)),
        ((-0.7, 0.1), (0.2, 0.9)),
        ((0.0, 0.0), (0.0, 1.0)),
    ] {
        let r = backend_agreement(3.0, s.0, s.1, x.0, x.1).unwrap();
        assert_eq!(r.len(), 7);
        assert!(r[6] < 1e-6, "{r:?}");
    }
}

#[test]
fn rejects_points_near_boundary() {
    assert!(transport_path(1.0, 0.99, 0.0, 4).is_err());
    assert!(backend_agreement(1.0, 0.0, 1.2, 1.0, 0.0).is_err());
    assert!(connection_field(0.5, 10).is_err());
    assert!(connection_field(1.0, 1).is_err());
}
