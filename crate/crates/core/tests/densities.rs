mod common;

use glpen::densities::{Shape, CAUCHY_DOMAIN};
use glpen::{make_density, BandwidthGrid, Kernel, Sample};

fn ks_distance(d: &glpen::TestDensity, s: &Sample) -> f64 {
    let n = s.len() as f64;
    s.sorted()
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = d.cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn samplers_match_their_cdfs() {
    for id in 1..=6 {
        let d = make_density(id).unwrap();
        let s = d.sample(100_000, 17).unwrap();
        let ks = ks_distance(&d, &s);
        assert!(ks < 0.01, "density {id}: KS = {ks}");
    }
}

#[test]
fn samplers_are_deterministic() {
    for id in 1..=6 {
        let d = make_density(id).unwrap();
        assert_eq!(d.sample(500, 4).unwrap(), d.sample(500, 4).unwrap());
        assert_ne!(d.sample(500, 4).unwrap(), d.sample(500, 5).unwrap());
    }
}

#[test]
fn pdfs_integrate_to_one() {
    for id in 1..=6 {
        let d = make_density(id).unwrap();
        let (lo, hi) = d.quad_domain;
        let mut cuts = d.quadrature_breakpoints();
        cuts.retain(|&c| c > lo && c < hi);
        cuts.insert(0, lo);
        cuts.push(hi);
        let f = |x: f64| d.pdf(x);
        let mass = common::simpson_pieces(&f, &cuts, 1e-12);
        assert!(
            (1.0 - 1e-6..=1.0 + 1e-9).contains(&mass),
            "density {id}: {mass}"
        );
        assert!(d.excluded_mass() < 1e-8, "density {id}");
    }
    assert_eq!(
        make_density(1).unwrap().quad_domain,
        (-CAUCHY_DOMAIN, CAUCHY_DOMAIN)
    );
}

#[test]
fn norms_match_independent_quadrature() {
    for id in 2..=6 {
        let d = make_density(id).unwrap();
        let (lo, hi) = d.quad_domain;
        let mut cuts = d.quadrature_breakpoints();
        cuts.retain(|&c| c > lo && c < hi);
        cuts.insert(0, lo);
        cuts.push(hi);
        let f = |x: f64| d.pdf(x).powi(2);
        let q = common::simpson_pieces(&f, &cuts, 1e-12);
        assert!(
            (q - d.l2_norm_sq()).abs() < 1e-8 * q,
            "density {id}: {q} vs {}",
            d.l2_norm_sq()
        );
    }
    // normal mixture closed form: Σ wᵢwⱼ φ(mᵢ − mⱼ; sᵢ² + sⱼ²)
    let d = make_density(5).unwrap();
    let Shape::NormalMixture(parts) = &d.shape else {
        panic!()
    };
    let mut want = 0.0;
    for &(wi, mi, si) in parts {
        for &(wj, mj, sj) in parts {
            let v = si * si + sj * sj;
            want += wi * wj * (-(mi - mj).powi(2) / (2.0 * v)).exp()
                / (2.0 * std::f64::consts::PI * v).sqrt();
        }
    }
    assert!((d.l2_norm_sq() - want).abs() < 1e-10);
}

#[test]
fn sample_means() {
    let m = |id: u8| {
        let s = make_density(id).unwrap().sample(100_000, 1).unwrap();
        s.observations().iter().sum::<f64>() / s.len() as f64
    };
    let u = m(2);
    assert!((0.497..=0.503).contains(&u), "{u}");
    let e = m(3);
    assert!((0.99..=1.01).contains(&e), "{e}");
}

#[test]
fn closed_form_matches_quadrature_for_mixtures() {
    for id in [4, 5] {
        let d = make_density(id).unwrap();
        let s = d.sample(200, 9).unwrap();
        for h in [(-10f64).exp(), 0.01, 0.1, 0.482] {
            let closed = d.cross_term(&s, h, Kernel::Gaussian).unwrap();
            let quad = s
                .observations()
                .iter()
                .map(|&x| {
                    d.smoothed_density_by_quadrature(h, Kernel::Gaussian, x)
                        .unwrap()
                })
                .sum::<f64>()
                / s.len() as f64;
            assert!(
                (closed - quad).abs() < 1e-8,
                "density {id} h={h}: {closed} vs {quad}"
            );
        }
    }
}

fn risk_oracle(d: &glpen::TestDensity, s: &Sample, h: f64, k: Kernel) -> f64 {
    let r = k.effective_radius() * h;
    let (lo, hi) = d.quad_domain;
    let mut cuts: Vec<f64> = s
        .observations()
        .iter()
        .flat_map(|&x| [x - r, x + r])
        .collect();
    cuts.extend(d.quadrature_breakpoints());
    cuts.retain(|&c| c > lo && c < hi);
    cuts.extend([lo, hi]);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let f = |x: f64| (common::kde(s.observations(), h, k, x) - d.pdf(x)).powi(2);
    common::simpson_pieces(&f, &cuts, 1e-13)
}

#[test]
fn risk_matches_grid_quadrature() {
    let d = make_density(4).unwrap();
    let s = d.sample(150, 21).unwrap();
    for (k, h) in [
        (Kernel::Gaussian, 0.3),
        (Kernel::Gaussian, 0.8),
        (Kernel::Epanechnikov, 0.5),
        (Kernel::Biweight, 1.0),
    ] {
        let exact = d.true_risk(&s, h, k).unwrap();
        let oracle = risk_oracle(&d, &s, h, k);
        assert!(
            (exact - oracle).abs() < 1e-5 * oracle,
            "{k} h={h}: {exact} vs {oracle}"
        );
    }
}

#[test]
fn risk_is_nonnegative() {
    for id in 1..=6 {
        let d = make_density(id).unwrap();
        let s = d.sample(100, 3).unwrap();
        for k in Kernel::ALL {
            for h in [0.01, 0.2, 2.0] {
                assert!(d.true_risk(&s, h, k).unwrap() >= 0.0, "{id} {k} {h}");
            }
        }
    }
}

#[test]
fn uniform_risk_at_large_n() {
    let d = make_density(2).unwrap();
    let s = d.sample(50_000, 8).unwrap();
    let r = d.true_risk(&s, 0.05, Kernel::Gaussian).unwrap();
    assert!(r < 0.05, "{r}");
    assert!((r - 0.023_048_795_862).abs() < 1e-9, "{r}");
}

#[test]
fn bias_diagnostic_is_monotone_on_mixture() {
    let d = make_density(4).unwrap();
    let g = BandwidthGrid::simulation();
    let values: Vec<f64> = g
        .bandwidths()
        .iter()
        .map(|&h| d.bias_d(h, Kernel::Gaussian, &g).unwrap())
        .collect();
    for w in values.windows(2) {
        assert!(w[1] >= w[0] - 1e-6, "{values:?}");
    }
    let first = d.bias_sq(g.h_min(), Kernel::Gaussian).unwrap().sqrt();
    assert_eq!(values[0], first);
}

#[test]
fn bias_diagnostic_regression() {
    let d = make_density(2).unwrap();
    let g = BandwidthGrid::simulation();
    let v = d.bias_d(0.002, Kernel::Gaussian, &g).unwrap();
    assert!(v > 0.0);
    assert!((v - 0.030_574_170_619).abs() < 1e-9, "{v}");
}
