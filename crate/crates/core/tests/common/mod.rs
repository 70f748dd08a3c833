#![allow(dead_code)]

/// Adaptive Simpson on `[a, b]`, independent of the crate's quadrature.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Simpson over consecutive pieces of a sorted breakpoint list.
pub fn simpson_pieces(f: &dyn Fn(f64) -> f64, cuts: &[f64], tol: f64) -> f64 {
    cuts.windows(2).map(|w| simpson(f, w[0], w[1], tol)).sum()
}

pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (a.ln() + (b.ln() - a.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Direct KDE at `x`, no truncation.
pub fn kde(obs: &[f64], h: f64, kernel: glpen::Kernel, x: f64) -> f64 {
    obs.iter().map(|&xi| kernel.eval((x - xi) / h)).sum::<f64>() / (obs.len() as f64 * h)
}

/// `⟨K, K(x·)⟩ / ‖K‖²` by adaptive Simpson on the support of the product.
pub fn overlap_oracle(kernel: glpen::Kernel, x: f64) -> f64 {
    let r = if kernel.is_compact() {
        1.0f64.min(1.0 / x)
    } else {
        12.0 / x.max(1.0)
    };
    let f = |u: f64| kernel.eval(u) * kernel.eval(x * u);
    let cuts = [-r, -0.5 * r, 0.0, 0.5 * r, r];
    simpson_pieces(&f, &cuts, 1e-14) / kernel.norm_sq()
}

/// Proptest settings without on-disk failure persistence.
pub fn cases(n: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases: n,
        failure_persistence: None,
        ..Default::default()
    }
}
