use proptest::prelude::*;
use riesz_lab::decomposition::{
    cz_decompose, separation_holds, whitney_decompose, CellSet, DyadicCube, GridFunction,
};
use riesz_lab::Error;

/// `dist(Q, ℝ^n∖U)` in floating point, scanning the complement cells of a
/// box that contains `U` with a one-cell margin.
fn float_dist_to_complement(u: &CellSet, q: &DyadicCube) -> f64 {
    let n = u.dim();
    let h = 2f64.powi(-u.level());
    let mut lo = vec![i64::MAX; n];
    let mut hi = vec![i64::MIN; n];
    for c in u.cells() {
        for k in 0..n {
            lo[k] = lo[k].min(c[k] - 1);
            hi[k] = hi[k].max(c[k] + 1);
        }
    }
    let qlo = q.lower_corner();
    let side = q.side();
    let mut best = f64::INFINITY;
    let mut idx = lo.clone();
    loop {
        if !u.contains_cell(&idx) {
            let d2: f64 = (0..n)
                .map(|k| {
                    let (a0, a1) = (qlo[k], qlo[k] + side);
                    let (b0, b1) = (idx[k] as f64 * h, (idx[k] + 1) as f64 * h);
                    let gap = (b0 - a1).max(a0 - b1).max(0.0);
                    gap * gap
                })
                .sum();
            best = best.min(d2.sqrt());
        }
        let mut k = 0;
        loop {
            if k == n {
                return best;
            }
            idx[k] += 1;
            if idx[k] <= hi[k] {
                break;
            }
            idx[k] = lo[k];
            k += 1;
        }
    }
}

fn cell_set() -> impl Strategy<Value = CellSet> {
    (1usize..=3).prop_flat_map(|n| {
        let side = [0, 8, 4, 3][n] as i64;
        prop::collection::btree_set(prop::collection::vec(0..side, n), 1..12)
            .prop_map(move |cells| CellSet::new(n, 0, cells).unwrap())
    })
}

fn grid() -> impl Strategy<Value = GridFunction> {
    (1usize..=2).prop_flat_map(|n| {
        let side: usize = if n == 1 { 16 } else { 4 };
        let len = side.pow(n as u32);
        prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..10.0], len).prop_map(move |values| {
            GridFunction::new(n, 2, vec![-1; n], vec![side; n], values).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn whitney_partitions_and_separates(u in cell_set()) {
        let depth = if u.dim() == 1 { 6 } else { 3 };
        let w = whitney_decompose(&u, depth).unwrap();
        prop_assert!(w.is_partition_of(&u));
        let n = u.dim() as f64;
        for q in &w.cubes {
            prop_assert!(separation_holds(&u, q));
            let d = float_dist_to_complement(&u, q);
            prop_assert!(d >= (2.0 * n - 1.0) * q.diam() * (1.0 - 1e-12), "{q:?}: {d}");
            prop_assert!(q.level <= depth);
        }
        for r in &w.residual {
            prop_assert_eq!(r.level, depth);
        }
        prop_assert!(w.cube_measure() + w.residual_measure() == u.measure());
    }

    #[test]
    fn cz_properties_hold(f in grid(), lambda in 0.5f64..8.0) {
        let cz = cz_decompose(&f, lambda, 5).unwrap();
        let report = cz.verify(&f);
        prop_assert!(report.all(), "{report:?}");
        if let Some(nu) = &cz.measure {
            prop_assert_eq!(nu.len(), cz.pieces.len());
        } else {
            prop_assert!(cz.pieces.is_empty());
        }
    }

    #[test]
    fn cell_set_json_round_trip(u in cell_set()) {
        let back = CellSet::from_json(&serde_json::to_string(&u).unwrap()).unwrap();
        prop_assert_eq!(back, u);
    }

    #[test]
    fn grid_json_round_trip(f in grid()) {
        prop_assert_eq!(GridFunction::from_json(&f.to_json()).unwrap(), f);
    }
}

#[test]
fn residual_shrinks_with_depth() {
    let u = CellSet::new(2, 0, vec![vec![0, 0]]).unwrap();
    let shallow = whitney_decompose(&u, 4).unwrap();
    let deep = whitney_decompose(&u, 8).unwrap();
    assert!(deep.residual_measure() < shallow.residual_measure());
    assert!(deep.cube_measure() > shallow.cube_measure());
    assert!(shallow.is_partition_of(&u) && deep.is_partition_of(&u));
}

#[test]
fn whitney_errors() {
    let empty = CellSet::new(1, 0, Vec::<Vec<i64>>::new()).unwrap();
    assert!(matches!(whitney_decompose(&empty, 3), Err(Error::Domain(_))));
    let fine = CellSet::new(2, 5, vec![vec![0, 0]]).unwrap();
    assert!(matches!(whitney_decompose(&fine, 4), Err(Error::Domain(_))));
    assert!(CellSet::new(2, 0, vec![vec![0]]).is_err());
    assert!(CellSet::from_json(r#"{"n":2,"level":0,"cells":[[1]]}"#).is_err());
}

#[test]
fn cz_of_an_indicator() {
    // f = 3 on [0,1)^2 at grid level 1, λ = 1.
    let f = GridFunction::new(2, 1, vec![0, 0], vec![2, 2], vec![3.0; 4]).unwrap();
    let cz = cz_decompose(&f, 1.0, 5).unwrap();
    assert!(cz.verify(&f).all());
    assert_eq!(cz.exceptional_set.measure(), 1.0);
    assert_eq!(cz.good.sup(), 0.0);
    let nu = cz.measure.as_ref().unwrap();
    assert!((nu.total_variation() - 3.0).abs() < 1e-14);
    for p in &cz.pieces {
        assert!(p.cube.volume() * 3.0 - p.mass == 0.0);
    }
}

#[test]
fn cz_below_lambda_is_all_good() {
    let f = GridFunction::new(1, 0, vec![0], vec![3], vec![0.2, 0.9, 0.5]).unwrap();
    let cz = cz_decompose(&f, 1.0, 4).unwrap();
    assert!(cz.measure.is_none());
    assert_eq!(cz.good, f);
    assert!(cz.verify(&f).all());
    assert!(matches!(cz_decompose(&f, -1.0, 4), Err(Error::Domain(_))));
}

#[test]
fn cz_rejects_negative_values() {
    assert!(GridFunction::new(1, 0, vec![0], vec![2], vec![1.0, -0.5]).is_err());
    assert!(GridFunction::from_json(r#"{"n":1,"L":0,"box":{"origin":[0],"shape":[2]},"values":[1.0]}"#).is_err());
    assert!(GridFunction::from_json(r#"{"n":1,"L":0,"box":{"origin":[0],"shape":[2]},"values":[1.0,2.0]}"#).is_ok());
}
