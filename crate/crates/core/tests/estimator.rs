mod common;

use glpen::estimator::{grid_l2_sq, kde_on_grid, pairwise_l2_sq_unpruned, EvaluationGrid};
use glpen::{make_density, pairwise_l2_sq, Kernel, Sample};
use proptest::prelude::*;

fn compact_kernel() -> impl Strategy<Value = Kernel> {
    prop::sample::select(vec![
        Kernel::Rectangular,
        Kernel::Epanechnikov,
        Kernel::Biweight,
    ])
}

fn any_kernel() -> impl Strategy<Value = Kernel> {
    prop::sample::select(Kernel::ALL.to_vec())
}

proptest! {
    #![proptest_config(common::cases(40))]

    #[test]
    fn pruned_equals_unpruned(
        k in compact_kernel(),
        xs in prop::collection::vec(-3.0f64..3.0, 1..200),
        a in 1e-3f64..1.0,
        b in 1e-3f64..1.0,
    ) {
        let s = Sample::new(xs).unwrap();
        let p = pairwise_l2_sq(&s, a, b, k).unwrap();
        let u = pairwise_l2_sq_unpruned(&s, a, b, k).unwrap();
        prop_assert!((p - u).abs() <= 1e-12 * u.abs().max(1.0), "{} vs {}", p, u);
    }

    #[test]
    fn symmetric_in_bandwidths(
        k in any_kernel(),
        xs in prop::collection::vec(-3.0f64..3.0, 1..100),
        a in 1e-3f64..1.0,
        b in 1e-3f64..1.0,
    ) {
        let s = Sample::new(xs).unwrap();
        prop_assert_eq!(pairwise_l2_sq(&s, a, b, k).unwrap(), pairwise_l2_sq(&s, b, a, k).unwrap());
    }

    #[test]
    fn one_point_scaling(k in any_kernel(), x in -5.0f64..5.0, a in 1e-3f64..1.0, b in 1e-3f64..1.0) {
        let (hp, h) = if a <= b { (a, b) } else { (b, a) };
        let s = Sample::new(vec![x]).unwrap();
        let got = pairwise_l2_sq(&s, hp, h, k).unwrap();
        let want = k.norm_sq() / hp * k.phi(h / hp).unwrap();
        prop_assert!((got - want).abs() < 1e-10 * want.max(1.0), "{} vs {}", got, want);
    }
}

#[test]
fn gaussian_exact_matches_fine_grid() {
    let s = make_density(4).unwrap().sample(200, 11).unwrap();
    for &(h1, h2) in &[(0.1, 0.3), (0.05, 1.0), (0.3, 0.7)] {
        let exact = pairwise_l2_sq(&s, h1, h2, Kernel::Gaussian).unwrap();
        let grid = EvaluationGrid::default_for(&s, Kernel::Gaussian, h2).unwrap();
        let grid = EvaluationGrid::new(grid.start(), grid.end(), 1 << 20).unwrap();
        let f1 = kde_on_grid(&s, h1, Kernel::Gaussian, &grid).unwrap();
        let f2 = kde_on_grid(&s, h2, Kernel::Gaussian, &grid).unwrap();
        let approx = grid_l2_sq(&f1, &f2, &grid).unwrap();
        assert!(
            (exact - approx).abs() < 1e-6 * exact,
            "({h1},{h2}): {exact} vs {approx}"
        );
    }
}

#[test]
fn compact_exact_matches_direct_integral() {
    let s = make_density(2).unwrap().sample(60, 5).unwrap();
    for k in [Kernel::Epanechnikov, Kernel::Biweight] {
        let (h1, h2) = (0.08, 0.2);
        let exact = pairwise_l2_sq(&s, h1, h2, k).unwrap();
        let f = |x: f64| {
            let d =
                common::kde(s.observations(), h1, k, x) - common::kde(s.observations(), h2, k, x);
            d * d
        };
        let mut cuts: Vec<f64> = s
            .observations()
            .iter()
            .flat_map(|&x| [x - h2, x - h1, x + h1, x + h2])
            .collect();
        cuts.sort_by(f64::total_cmp);
        let q = common::simpson_pieces(&f, &cuts, 1e-13);
        assert!((exact - q).abs() < 1e-9 * exact, "{k}: {exact} vs {q}");
    }
}

#[test]
fn tiny_bandwidth_on_degenerate_sample() {
    let h = (-10f64).exp();
    let s = Sample::new(vec![0.25; 30]).unwrap();
    for k in Kernel::ALL {
        let got = pairwise_l2_sq(&s, h, 3.0 * h, k).unwrap();
        let want = k.norm_sq() / h * k.phi(3.0).unwrap();
        assert!(got.is_finite());
        assert!((got - want).abs() < 1e-10 * want, "{k}");
    }
}

#[test]
fn kde_on_grid_matches_direct_sum() {
    let s = make_density(3).unwrap().sample(300, 2).unwrap();
    let grid = EvaluationGrid::new(-1.0, 6.0, 701).unwrap();
    for k in Kernel::ALL {
        let v = kde_on_grid(&s, 0.3, k, &grid).unwrap();
        for (i, x) in grid.points().enumerate() {
            assert!(
                (v[i] - common::kde(s.observations(), 0.3, k, x)).abs() < 1e-12,
                "{k} {x}"
            );
        }
    }
}
