use proptest::prelude::*;
use riesz_lab::kernels::{dimensional_constant, gradient_fd_error, lipschitz_condition_ratio, sphere_l1_norm_mc};
use riesz_lab::{Error, KernelKind, KernelSpec, McOptions};

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn kernel_strategy() -> impl Strategy<Value = KernelSpec> {
    (1usize..=6, 0usize..3, 1usize..=6, 1usize..=6).prop_filter_map("valid kernel", |(n, kind, i, j)| {
        let (i, j) = (1 + (i - 1) % n, 1 + (j - 1) % n);
        match kind {
            0 => KernelSpec::riesz(n, j).ok(),
            1 => KernelSpec::second_order_riesz(n, i, j).ok(),
            _ => Some(KernelSpec::hilbert()),
        }
    })
}

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, n).prop_filter("away from the origin", |x| norm2(x) > 1e-4)
}

fn kernel_and_point() -> impl Strategy<Value = (KernelSpec, Vec<f64>)> {
    kernel_strategy().prop_flat_map(|k| {
        let n = k.dim();
        (Just(k), point(n))
    })
}

proptest! {
    #[test]
    fn kernel_is_homogeneous_of_degree_minus_n((spec, x) in kernel_and_point(), t in 0.1f64..10.0) {
        let n = spec.dim() as i32;
        let tx: Vec<f64> = x.iter().map(|v| v * t).collect();
        let lhs = t.powi(n) * spec.eval(&tx).unwrap();
        let rhs = spec.eval(&x).unwrap();
        let scale = spec.sphere_sup() / norm2(&x).sqrt().powi(n);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
    }

    #[test]
    fn parity((spec, x) in kernel_and_point()) {
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let a = spec.eval(&x).unwrap();
        let b = spec.eval(&neg).unwrap();
        if spec.is_odd() {
            prop_assert_eq!(a, -b);
        } else {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn gradient_matches_central_differences((spec, x) in kernel_and_point()) {
        let g = spec.omega_gradient(&x).unwrap();
        let h = 1e-6 * norm2(&x).sqrt();
        for k in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += h;
            xm[k] -= h;
            let fd = (spec.profile(&xp) - spec.profile(&xm)) / (2.0 * h);
            prop_assert!((fd - g[k]).abs() <= 1e-5 * (1.0 + g[k].abs()) / norm2(&x).sqrt().min(1.0));
        }
    }

    #[test]
    fn squared_gradient_identities((spec, x) in kernel_and_point()) {
        let r2 = norm2(&x);
        let g2 = norm2(&spec.omega_gradient(&x).unwrap());
        let (expected, c) = match spec.kind() {
            KernelKind::Hilbert => (0.0, 0.0),
            KernelKind::Riesz { j } => {
                let xj = x[j - 1];
                (1.0 / r2 - xj * xj / (r2 * r2), 1.0)
            }
            KernelKind::SecondOrderRiesz { i, j } if i == j => {
                let xi2 = x[i - 1] * x[i - 1];
                (4.0 * xi2 / (r2 * r2) - 4.0 * xi2 * xi2 / (r2 * r2 * r2), 2.0)
            }
            KernelKind::SecondOrderRiesz { i, j } => {
                let (xi2, xj2) = (x[i - 1] * x[i - 1], x[j - 1] * x[j - 1]);
                ((xi2 + xj2) / (r2 * r2) - 4.0 * xi2 * xj2 / (r2 * r2 * r2), 5f64.sqrt())
            }
        };
        prop_assert!((g2 - expected).abs() <= 1e-12 * (1.0 + expected.abs()) / r2);
        // |∇| ≤ c/|x| with c = 1 (first order), √5 (off-diagonal), 2 (diagonal).
        prop_assert!(g2.sqrt() <= c / r2.sqrt() * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn omega_bounded_by_sphere_sup((spec, x) in kernel_and_point()) {
        prop_assert!(spec.omega(&x).abs() <= spec.sphere_sup() * (1.0 + 1e-12));
    }
}

#[test]
fn finite_difference_check_over_many_points() {
    for spec in [
        KernelSpec::riesz(4, 3).unwrap(),
        KernelSpec::second_order_riesz(5, 2, 2).unwrap(),
        KernelSpec::second_order_riesz(3, 1, 3).unwrap(),
    ] {
        assert!(gradient_fd_error(&spec, 1000, 1).unwrap() <= 1e-6);
    }
}

#[test]
fn dimensional_constant_values() {
    assert!((dimensional_constant(1).unwrap() - 2.0 / std::f64::consts::PI).abs() < 1e-14);
    // 2Γ(3/2)/(2Γ(1)√π) = 1/2
    assert!((dimensional_constant(2).unwrap() - 0.5).abs() < 1e-14);
    assert!(matches!(dimensional_constant(0), Err(Error::Domain(_))));
    let large = dimensional_constant(10_000).unwrap() * 100.0;
    assert!((large - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-4);
}

#[test]
fn riesz_sphere_norm_is_two_over_pi() {
    for n in [2usize, 3, 5] {
        let spec = KernelSpec::riesz(n, 1).unwrap();
        let est = sphere_l1_norm_mc(&spec, McOptions::new(200_000, n as u64)).unwrap();
        assert!(est.within(2.0 / std::f64::consts::PI, 3.0), "{est:?}");
    }
}

#[test]
fn lipschitz_domain() {
    let spec = KernelSpec::riesz(3, 1).unwrap();
    let xi = [1.0, 0.0, 0.0];
    let opts = McOptions::new(10_000, 1);
    assert!(matches!(lipschitz_condition_ratio(&spec, &xi, 0.34, opts), Err(Error::Domain(_))));
    assert!(matches!(lipschitz_condition_ratio(&spec, &xi, 0.0, opts), Err(Error::Domain(_))));
    assert!(matches!(lipschitz_condition_ratio(&spec, &[1.0, 1.0, 0.0], 0.1, opts), Err(Error::Domain(_))));
    let r = lipschitz_condition_ratio(&spec, &xi, 0.1, opts).unwrap();
    assert!(r.is_finite() && r > 0.0);
}

#[test]
fn invalid_kernels() {
    assert!(matches!(KernelSpec::riesz(3, 4), Err(Error::Construction(_))));
    assert!(KernelSpec::riesz(0, 1).is_err());
    assert!(KernelSpec::new(2, KernelKind::Hilbert).is_err());
}
