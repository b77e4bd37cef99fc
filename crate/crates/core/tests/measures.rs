use proptest::prelude::*;
use riesz_lab::measures::PointMass;
use riesz_lab::{Error, KernelSpec, PointMassMeasure};

fn kernel(n: usize, pick: usize) -> KernelSpec {
    match (n, pick % 3) {
        (1, 0) => KernelSpec::hilbert(),
        (_, 0) => KernelSpec::riesz(n, n).unwrap(),
        (_, 1) => KernelSpec::second_order_riesz(n, 1, 1).unwrap(),
        _ => KernelSpec::second_order_riesz(n, 1, n).unwrap(),
    }
}

fn measure(n: usize) -> impl Strategy<Value = PointMassMeasure> {
    prop::collection::vec((0.1f64..2.0, prop::collection::vec(-2.0f64..2.0, n)), 1..5).prop_map(move |pairs| {
        PointMassMeasure::new(
            n,
            pairs.into_iter().map(|(mass, center)| PointMass { mass, center }).collect(),
        )
        .unwrap()
        .merged()
    })
}

fn case() -> impl Strategy<Value = (KernelSpec, PointMassMeasure, Vec<f64>)> {
    (1usize..=3, 0usize..3).prop_flat_map(|(n, pick)| {
        (
            Just(kernel(n, pick)),
            measure(n),
            prop::collection::vec(-3.0f64..3.0, n),
        )
    })
    .prop_filter("x away from the centers", |(_, nu, x)| {
        nu.masses().iter().all(|m| dist(x, &m.center) > 1e-2)
    })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn truncated(spec: &KernelSpec, nu: &PointMassMeasure, x: &[f64], eps: f64) -> f64 {
    nu.masses()
        .iter()
        .filter(|m| dist(x, &m.center) > eps)
        .map(|m| {
            let d: Vec<f64> = x.iter().zip(&m.center).map(|(a, b)| a - b).collect();
            m.mass * spec.eval(&d).unwrap()
        })
        .sum()
}

proptest! {
    #[test]
    fn translation_invariance((spec, nu, x) in case(), v in prop::collection::vec(-1.0f64..1.0, 3)) {
        let v = &v[..spec.dim()];
        let xv: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + b).collect();
        let a = nu.translated(v).transform(&spec, &xv).unwrap();
        let b = nu.transform(&spec, &x).unwrap();
        let scale: f64 = nu.masses().iter().map(|m| m.mass / dist(&x, &m.center).powi(spec.dim() as i32)).sum();
        prop_assert!((a - b).abs() <= 1e-9 * scale * spec.sphere_sup());
    }

    #[test]
    fn dilation_law((spec, nu, x) in case(), delta in 0.2f64..5.0) {
        let n = spec.dim() as i32;
        let dx: Vec<f64> = x.iter().map(|v| v * delta).collect();
        let a = nu.dilated(delta).transform(&spec, &dx).unwrap();
        let b = delta.powi(-n) * nu.transform(&spec, &x).unwrap();
        let scale: f64 = nu.masses().iter().map(|m| m.mass / (delta * dist(&x, &m.center)).powi(n)).sum();
        prop_assert!((a - b).abs() <= 1e-10 * scale * spec.sphere_sup());
    }

    #[test]
    fn linear_in_mass((spec, nu, x) in case(), t in 0.1f64..10.0) {
        let a = nu.scaled(t).unwrap().transform(&spec, &x).unwrap();
        let b = t * nu.transform(&spec, &x).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()) * t);
    }

    #[test]
    fn max_truncation_matches_epsilon_grid((spec, nu, x) in case()) {
        let sharp = nu.max_truncation(&spec, &x).unwrap();
        let far = nu.masses().iter().map(|m| dist(&x, &m.center)).fold(0.0, f64::max);
        let steps = 10_000;
        let h = 1.1 * far / steps as f64;
        let mut grid = 0.0f64;
        for k in 0..steps {
            grid = grid.max(truncated(&spec, &nu, &x, k as f64 * h).abs());
        }
        let tol = 1e-12 * (1.0 + sharp);
        prop_assert!(grid <= sharp + tol);
        let mut d: Vec<f64> = nu.masses().iter().map(|m| dist(&x, &m.center)).collect();
        d.sort_by(f64::total_cmp);
        let gaps_resolved = d.windows(2).all(|w| w[1] - w[0] > 2.0 * h || w[1] == w[0]) && d[0] > 2.0 * h;
        if gaps_resolved {
            prop_assert!(sharp <= grid + tol);
        }
    }

    #[test]
    fn max_truncation_dominates_transform((spec, nu, x) in case()) {
        let full = nu.transform(&spec, &x).unwrap().abs();
        let sharp = nu.max_truncation(&spec, &x).unwrap();
        prop_assert!(full <= sharp * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn json_round_trip(nu in (1usize..=4).prop_flat_map(measure)) {
        let back = PointMassMeasure::from_json(&nu.to_json()).unwrap();
        prop_assert_eq!(back, nu);
    }
}

#[test]
fn construction_errors() {
    let m = |a: f64| PointMass { mass: a, center: vec![0.0] };
    assert!(matches!(PointMassMeasure::new(1, vec![m(-1.0)]), Err(Error::Construction(_))));
    assert!(matches!(PointMassMeasure::new(1, vec![m(0.0)]), Err(Error::Construction(_))));
    assert!(matches!(PointMassMeasure::new(1, vec![m(f64::NAN)]), Err(Error::Construction(_))));
    assert!(PointMassMeasure::new(1, vec![]).is_err());
    assert!(PointMassMeasure::new(2, vec![m(1.0)]).is_err());
    assert!(PointMassMeasure::from_json(r#"{"n":1,"masses":[{"a":-2.0,"c":[0.0]}]}"#).is_err());
}

#[test]
fn poles_and_dimension_mismatch() {
    let nu = PointMassMeasure::dirac(vec![1.0, 2.0]);
    let spec = KernelSpec::riesz(2, 1).unwrap();
    assert!(matches!(nu.transform(&spec, &[1.0, 2.0]), Err(Error::Pole { index: 0, .. })));
    assert!(matches!(nu.max_truncation(&spec, &[1.0, 2.0]), Err(Error::Pole { .. })));
    assert!(matches!(nu.transform(&KernelSpec::hilbert(), &[0.0]), Err(Error::Domain(_))));
    assert!(matches!(nu.transform(&spec, &[0.0]), Err(Error::Domain(_))));
}

#[test]
fn hilbert_dirac_value() {
    let nu = PointMassMeasure::dirac(vec![0.0]);
    let v = nu.transform(&KernelSpec::hilbert(), &[2.0]).unwrap();
    assert!((v - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-16);
}

#[test]
fn merged_sums_duplicates() {
    let nu = PointMassMeasure::from_pairs(1, [(1.0, vec![0.0]), (2.0, vec![1.0]), (0.5, vec![0.0])]);
    let m = nu.unwrap().merged();
    assert_eq!(m.len(), 2);
    assert_eq!(m.masses()[0].mass, 1.5);
    assert_eq!(m.total_variation(), 3.5);
}
