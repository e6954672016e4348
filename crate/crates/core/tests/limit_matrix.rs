//! Eigenvalues of the limit variational matrix, with nalgebra as the oracle.

use nalgebra::SMatrix;

use ks_er3bp::dynamics::{origin_exponent, variational_matrix, variational_matrix_origin};
use ks_er3bp::SystemParams;

fn eigenvalues(x: [[f64; 8]; 8]) -> Vec<(f64, f64)> {
    let m = SMatrix::<f64, 8, 8>::from_fn(|i, j| x[i][j]);
    let mut ev: Vec<(f64, f64)> = m.complex_eigenvalues().iter().map(|c| (c.re, c.im)).collect();
    ev.sort_by(|a, b| a.0.total_cmp(&b.0));
    ev
}

#[test]
fn limit_eigenvalues_are_plus_minus_sqrt_half_gamma() {
    for gamma in [0.046012, 0.19364, 1.4282186] {
        let k = origin_exponent(gamma).unwrap();
        let ev = eigenvalues(variational_matrix_origin(gamma));
        for (n, (re, im)) in ev.iter().enumerate() {
            let want = if n < 4 { -k } else { k };
            assert!((re - want).abs() < 1e-6 && im.abs() < 1e-6, "gamma {gamma}: {ev:?}");
        }
    }
}

#[test]
fn negative_gamma_gives_rotation() {
    assert!(origin_exponent(-0.1).is_none());
    let ev = eigenvalues(variational_matrix_origin(-0.1));
    for (re, im) in ev {
        assert!(re.abs() < 1e-6);
        assert!((im.abs() - 0.05f64.sqrt()).abs() < 1e-6);
    }
}

#[test]
fn variational_matrix_tends_to_the_limit() {
    let p = SystemParams::preset("sun-jupiter").unwrap();
    let (phi, action) = (0.3, 1.2);
    let gamma = ks_er3bp::dynamics::gamma(phi, action, &p);
    let x0 = variational_matrix_origin(gamma);
    let mut prev = f64::INFINITY;
    for scale in [1e-2, 1e-3, 1e-4] {
        let y = [scale, -0.5 * scale, 0.3 * scale, 0.2 * scale, phi, 0.1 * scale, 0.2 * scale, -scale, 0.0, action];
        let x = variational_matrix(&y, &p).unwrap();
        let err = (0..8)
            .flat_map(|i| (0..8).map(move |j| (i, j)))
            .map(|(i, j)| (x[i][j] - x0[i][j]).abs())
            .fold(0.0, f64::max);
        assert!(err < prev, "{err} at scale {scale}");
        prev = err;
    }
    assert!(prev < 1e-3, "{prev}");
}
