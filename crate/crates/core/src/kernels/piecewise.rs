//! Piecewise polynomials with exact products and correlations.
//!
//! Each cell `[x_k, x_{k+1}]` carries a Chebyshev series in the local
//! coordinate `t = (2x - x_k - x_{k+1}) / (x_{k+1} - x_k)`, which keeps the
//! representation well conditioned at any scale. Outside the outermost
//! breakpoints the function is zero.
//!
//! The correlation `(p ⋆ q)(δ) = ∫ p(u) q(u - δ) du` of two piecewise
//! polynomials is again piecewise polynomial in `δ`, with breakpoints at the
//! differences of the input breakpoints and degree `deg p + deg q + 1`.
//! Point values are integrated cell by cell with a Gauss-Legendre rule of
//! sufficient order, which is exact for the polynomial integrands; the
//! resulting piecewise function is then recovered exactly by Chebyshev
//! interpolation on each output cell.

use std::f64::consts::PI;

use crate::quad::gauss_legendre;

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePolynomial {
    breakpoints: Vec<f64>,
    coeffs: Vec<Vec<f64>>,
}

fn clenshaw(coeffs: &[f64], t: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in coeffs.iter().skip(1).rev() {
        let b0 = 2.0 * t * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    t * b1 - b2 + coeffs.first().copied().unwrap_or(0.0)
}

/// Chebyshev coefficients of the degree `count - 1` interpolant of `f` on
/// `[-1, 1]` through the Chebyshev points of the first kind.
fn chebyshev_fit(count: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let values: Vec<f64> = (0..count)
        .map(|k| f((PI * (k as f64 + 0.5) / count as f64).cos()))
        .collect();
    (0..count)
        .map(|j| {
            let s: f64 = values
                .iter()
                .enumerate()
                .map(|(k, v)| v * (PI * j as f64 * (k as f64 + 0.5) / count as f64).cos())
                .sum();
            let c = 2.0 * s / count as f64;
            if j == 0 {
                0.5 * c
            } else {
                c
            }
        })
        .collect()
}

impl PiecewisePolynomial {
    /// Interpolates `f` with a polynomial of the given degree on every cell.
    /// Exact (up to rounding) whenever `f` is a polynomial of at most that
    /// degree on each cell.
    ///
    /// # Panics
    /// If `breakpoints` has fewer than two entries or is not strictly increasing.
    pub fn from_fn(breakpoints: Vec<f64>, degree: usize, f: impl Fn(f64) -> f64) -> Self {
        assert!(breakpoints.len() >= 2, "need at least one cell");
        assert!(
            breakpoints.windows(2).all(|w| w[0] < w[1]),
            "breakpoints must be strictly increasing"
        );
        let coeffs = breakpoints
            .windows(2)
            .map(|w| {
                let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
                chebyshev_fit(degree + 1, |t| f(mid + half * t))
            })
            .collect();
        Self {
            breakpoints,
            coeffs,
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Chebyshev coefficients per cell, in the cell's local coordinate.
    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs
            .iter()
            .map(|c| c.len().saturating_sub(1))
            .max()
            .unwrap_or(0)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.breakpoints[0], *self.breakpoints.last().unwrap())
    }

    fn eval_cell(&self, k: usize, x: f64) -> f64 {
        let (a, b) = (self.breakpoints[k], self.breakpoints[k + 1]);
        let t = ((2.0 * x - a - b) / (b - a)).clamp(-1.0, 1.0);
        clenshaw(&self.coeffs[k], t)
    }

    /// Value at `x`; zero outside the support. At an interior breakpoint
    /// the right-hand cell is used.
    pub fn eval(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if !(lo..=hi).contains(&x) {
            return 0.0;
        }
        let k = self
            .breakpoints
            .partition_point(|&b| b <= x)
            .saturating_sub(1)
            .min(self.coeffs.len() - 1);
        self.eval_cell(k, x)
    }

    /// `x ↦ p(x / h) / h`, the unit-mass rescaling used for kernels.
    pub fn rescaled(&self, h: f64) -> Self {
        assert!(h > 0.0, "scale must be positive");
        Self {
            breakpoints: self.breakpoints.iter().map(|b| b * h).collect(),
            coeffs: self
                .coeffs
                .iter()
                .map(|c| c.iter().map(|v| v / h).collect())
                .collect(),
        }
    }

    /// Exact integral over the support.
    pub fn integral(&self) -> f64 {
        self.breakpoints
            .windows(2)
            .zip(&self.coeffs)
            .map(|(w, c)| {
                let half = 0.5 * (w[1] - w[0]);
                let s: f64 = c
                    .iter()
                    .enumerate()
                    .step_by(2)
                    .map(|(j, v)| v * 2.0 / (1.0 - (j * j) as f64))
                    .sum();
                half * s
            })
            .sum()
    }

    /// `∫ p(u) q(u - δ) du` evaluated directly.
    pub fn correlation_at(&self, other: &Self, delta: f64) -> f64 {
        let m = (self.degree() + other.degree()) / 2 + 1;
        let (nodes, weights) = gauss_legendre(m);
        self.correlation_with_rule(other, delta, &nodes, &weights)
    }

    fn correlation_with_rule(
        &self,
        other: &Self,
        delta: f64,
        nodes: &[f64],
        weights: &[f64],
    ) -> f64 {
        let mut total = 0.0;
        for (i, wi) in self.breakpoints.windows(2).enumerate() {
            for (j, wj) in other.breakpoints.windows(2).enumerate() {
                let lo = wi[0].max(wj[0] + delta);
                let hi = wi[1].min(wj[1] + delta);
                if hi <= lo {
                    continue;
                }
                let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
                let s: f64 = nodes
                    .iter()
                    .zip(weights)
                    .map(|(&t, &w)| {
                        let u = mid + half * t;
                        w * self.eval_cell(i, u) * other.eval_cell(j, u - delta)
                    })
                    .sum();
                total += half * s;
            }
        }
        total
    }

    /// The correlation `δ ↦ ∫ p(u) q(u - δ) du` as a piecewise polynomial.
    pub fn correlation(&self, other: &Self) -> Self {
        let degree = self.degree() + other.degree() + 1;
        let m = (self.degree() + other.degree()) / 2 + 1;
        let (nodes, weights) = gauss_legendre(m);

        let mut cuts: Vec<f64> = self
            .breakpoints
            .iter()
            .flat_map(|a| other.breakpoints.iter().map(move |c| a - c))
            .collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        // drop cells that are empty in floating point
        let scale = cuts.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let mut breakpoints = vec![cuts[0]];
        for &c in &cuts[1..] {
            if c - breakpoints.last().unwrap() > 4.0 * f64::EPSILON * scale {
                breakpoints.push(c);
            }
        }
        *breakpoints.last_mut().unwrap() = *cuts.last().unwrap();

        let coeffs = breakpoints
            .windows(2)
            .map(|w| {
                let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
                chebyshev_fit(degree + 1, |t| {
                    self.correlation_with_rule(other, mid + half * t, &nodes, &weights)
                })
            })
            .collect();
        Self {
            breakpoints,
            coeffs,
        }
    }
}
