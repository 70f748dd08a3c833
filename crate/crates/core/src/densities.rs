//! The six synthetic test densities and the quantities that need the true
//! density: smoothed densities `f_h = K_h ⋆ f`, true integrated squared
//! loss of an estimate, and the bias diagnostic `D(h)`.
//!
//! | id | density |
//! |----|---------|
//! | 1 | standard Cauchy |
//! | 2 | Uniform(0, 1) |
//! | 3 | Exponential(1) |
//! | 4 | ½N(0, 1) + ½N(3, 3²) |
//! | 5 | claw: ½N(0, 1) + Σ_{j=0}^{4} (1/10) N(j/2 − 1, (1/10)²) |
//! | 6 | comb: eight equal-weight uniforms on `[k/8, k/8 + 1/16]`, k = 0..7 |

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{check_bandwidth, Error, Result};
use crate::estimator::{estimate_norm_sq, Sample};
use crate::kernels::Kernel;
use crate::quad::{integrate, QuadOptions};
use crate::selection::BandwidthGrid;

/// Half-width of the Cauchy integration domain; the excluded tail mass is
/// `1 − (2/π)·atan(CAUCHY_DOMAIN)` ≈ 6.4e-9.
pub const CAUCHY_DOMAIN: f64 = 1e8;

/// Risks in `[-RISK_CLAMP, 0)` are roundoff and reported as zero.
pub const RISK_CLAMP: f64 = 1e-10;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    Cauchy,
    Exponential,
    /// `(weight, mean, standard deviation)` per component.
    NormalMixture(Vec<(f64, f64, f64)>),
    /// `(weight, lower, upper)` per component, disjoint and in increasing order.
    UniformMixture(Vec<(f64, f64, f64)>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestDensity {
    pub id: u8,
    pub name: &'static str,
    pub shape: Shape,
    pub quad_domain: (f64, f64),
    l2_norm_sq: f64,
}

fn normal_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    INV_SQRT_2PI * (-0.5 * z * z).exp() / sd
}

fn normal_cdf(x: f64, mean: f64, sd: f64) -> f64 {
    0.5 * erfc(-(x - mean) / (sd * std::f64::consts::SQRT_2))
}

pub fn make_density(id: u8) -> Result<TestDensity> {
    let (name, shape, quad_domain) = match id {
        1 => ("cauchy", Shape::Cauchy, (-CAUCHY_DOMAIN, CAUCHY_DOMAIN)),
        2 => (
            "uniform",
            Shape::UniformMixture(vec![(1.0, 0.0, 1.0)]),
            (0.0, 1.0),
        ),
        3 => ("exponential", Shape::Exponential, (0.0, 40.0)),
        4 => (
            "normal-mixture",
            Shape::NormalMixture(vec![(0.5, 0.0, 1.0), (0.5, 3.0, 3.0)]),
            (-40.0, 50.0),
        ),
        5 => {
            let mut parts = vec![(0.5, 0.0, 1.0)];
            parts.extend((0..5).map(|j| (0.1, j as f64 / 2.0 - 1.0, 0.1)));
            ("claw", Shape::NormalMixture(parts), (-12.0, 12.0))
        }
        6 => (
            "uniform-comb",
            Shape::UniformMixture(
                (0..8)
                    .map(|k| (0.125, k as f64 / 8.0, k as f64 / 8.0 + 1.0 / 16.0))
                    .collect(),
            ),
            (0.0, 1.0),
        ),
        _ => return Err(Error::InvalidDensityId(id)),
    };
    let mut density = TestDensity {
        id,
        name,
        shape,
        quad_domain,
        l2_norm_sq: f64::NAN,
    };
    let (lo, hi) = quad_domain;
    density.l2_norm_sq = integrate(
        |x| density.pdf(x).powi(2),
        lo,
        hi,
        &density.quadrature_breakpoints(),
        QuadOptions {
            abs_tol: 1e-14,
            rel_tol: 1e-13,
            ..QuadOptions::default()
        },
    )?
    .value;
    Ok(density)
}

impl TestDensity {
    pub fn pdf(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Cauchy => 1.0 / (PI * (1.0 + x * x)),
            Shape::Exponential => {
                if x < 0.0 {
                    0.0
                } else {
                    (-x).exp()
                }
            }
            Shape::NormalMixture(parts) => {
                parts.iter().map(|&(w, m, s)| w * normal_pdf(x, m, s)).sum()
            }
            Shape::UniformMixture(parts) => parts
                .iter()
                .filter(|&&(_, a, b)| x >= a && x <= b)
                .map(|&(w, a, b)| w / (b - a))
                .sum(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Cauchy => 0.5 + x.atan() / PI,
            Shape::Exponential => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x).exp_m1()
                }
            }
            Shape::NormalMixture(parts) => {
                parts.iter().map(|&(w, m, s)| w * normal_cdf(x, m, s)).sum()
            }
            Shape::UniformMixture(parts) => parts
                .iter()
                .map(|&(w, a, b)| w * ((x - a) / (b - a)).clamp(0.0, 1.0))
                .sum(),
        }
    }

    /// `‖f‖²`, computed once by quadrature over the integration domain.
    pub fn l2_norm_sq(&self) -> f64 {
        self.l2_norm_sq
    }

    /// Probability mass outside [`quad_domain`](Self::quad_domain).
    pub fn excluded_mass(&self) -> f64 {
        let (lo, hi) = self.quad_domain;
        match self.shape {
            // the two tails, without cancellation
            Shape::Cauchy => 2.0 * (1.0 / hi).atan() / PI,
            _ => (1.0 - (self.cdf(hi) - self.cdf(lo))).max(0.0),
        }
    }

    /// Points where the density jumps.
    pub fn discontinuities(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Cauchy | Shape::NormalMixture(_) => vec![],
            Shape::Exponential => vec![0.0],
            Shape::UniformMixture(parts) => parts.iter().flat_map(|&(_, a, b)| [a, b]).collect(),
        }
    }

    /// `(location, scale)` of modes and shoulders, used to seed adaptive
    /// quadrature.
    fn features(&self) -> Vec<(f64, f64)> {
        match &self.shape {
            Shape::Cauchy => vec![(0.0, 1.0)],
            Shape::Exponential => vec![(0.0, 1.0)],
            Shape::NormalMixture(parts) => parts.iter().map(|&(_, m, s)| (m, s)).collect(),
            Shape::UniformMixture(_) => vec![],
        }
    }

    pub fn quadrature_breakpoints(&self) -> Vec<f64> {
        let mut b = self.discontinuities();
        for (m, s) in self.features() {
            b.extend([m - 3.0 * s, m - s, m, m + s, m + 3.0 * s]);
        }
        if matches!(self.shape, Shape::Cauchy) {
            for k in 0..8 {
                let r = 10f64.powi(k);
                b.extend([-r, r]);
            }
        }
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// `n` i.i.d. draws; identical for identical `(id, n, seed)`.
    ///
    /// Densities 1–3 and 6 use the inverse CDF; the normal mixtures draw a
    /// component and then a normal variate.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Sample> {
        if n == 0 {
            return Err(Error::InvalidSampleSize);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draws = (0..n).map(|_| self.draw(&mut rng)).collect();
        Sample::new(draws)
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        match &self.shape {
            Shape::Cauchy => (PI * (u - 0.5)).tan(),
            Shape::Exponential => -(-u).ln_1p(),
            Shape::NormalMixture(parts) => {
                let (_, m, s) = pick(parts, u).0;
                let z: f64 = rng.sample(StandardNormal);
                m + s * z
            }
            Shape::UniformMixture(parts) => {
                let ((w, a, b), below) = pick(parts, u);
                let frac = ((u - below) / w).clamp(0.0, 1.0);
                a + frac * (b - a)
            }
        }
    }

    /// `f_h(x) = (K_h ⋆ f)(x)`. Closed form for Gaussian kernels on normal
    /// mixtures, adaptive quadrature otherwise.
    pub fn smoothed_density(&self, h: f64, kernel: Kernel, x: f64) -> Result<f64> {
        check_bandwidth(h)?;
        match (&self.shape, kernel) {
            (Shape::NormalMixture(parts), Kernel::Gaussian) => Ok(parts
                .iter()
                .map(|&(w, m, s)| w * normal_pdf(x, m, (s * s + h * h).sqrt()))
                .sum()),
            _ => self.smoothed_density_by_quadrature(h, kernel, x),
        }
    }

    /// [`smoothed_density`](Self::smoothed_density) forced through quadrature.
    pub fn smoothed_density_by_quadrature(&self, h: f64, kernel: Kernel, x: f64) -> Result<f64> {
        check_bandwidth(h)?;
        // ∫ K(s) f(x − h s) ds over the (effective) kernel support
        let r = kernel.effective_radius();
        let mut cuts: Vec<f64> = self.discontinuities().iter().map(|d| (x - d) / h).collect();
        for (m, s) in self.features() {
            for off in [-3.0 * s, -s, 0.0, s, 3.0 * s] {
                cuts.push((x - m - off) / h);
            }
        }
        let res = integrate(
            |s| kernel.eval(s) * self.pdf(x - h * s),
            -r,
            r,
            &cuts,
            QuadOptions {
                abs_tol: 1e-14,
                rel_tol: 1e-12,
                max_panels: 2000,
            },
        )?;
        Ok(res.value)
    }

    /// `n⁻¹ Σ f_h(X_i) = ⟨f̂_h, f⟩`.
    pub fn cross_term(&self, sample: &Sample, h: f64, kernel: Kernel) -> Result<f64> {
        let mut s = 0.0;
        for &x in sample.observations() {
            s += self.smoothed_density(h, kernel, x)?;
        }
        Ok(s / sample.len() as f64)
    }

    /// `‖f̂_h − f‖² = ‖f̂_h‖² − 2⟨f̂_h, f⟩ + ‖f‖²`, with `‖f̂_h‖²` exact.
    pub fn true_risk(&self, sample: &Sample, h: f64, kernel: Kernel) -> Result<f64> {
        let estimate_sq = estimate_norm_sq(sample, h, kernel)?;
        self.true_risk_given_norm(sample, h, kernel, estimate_sq)
    }

    /// As [`true_risk`](Self::true_risk) when `‖f̂_h‖²` is already known.
    pub fn true_risk_given_norm(
        &self,
        sample: &Sample,
        h: f64,
        kernel: Kernel,
        estimate_norm_sq: f64,
    ) -> Result<f64> {
        let cross = self.cross_term(sample, h, kernel)?;
        let risk = estimate_norm_sq - 2.0 * cross + self.l2_norm_sq;
        Ok(if (-RISK_CLAMP..0.0).contains(&risk) {
            0.0
        } else {
            risk
        })
    }

    fn outer_breakpoints(&self, bandwidths: &[f64], kernel: Kernel) -> Vec<f64> {
        let r = kernel.effective_radius();
        let mut b = self.quadrature_breakpoints();
        for d in self.discontinuities() {
            for &h in bandwidths {
                b.extend([d - r * h, d - h, d + h, d + r * h]);
            }
        }
        b
    }

    fn outer_domain(&self, h_max: f64, kernel: Kernel) -> (f64, f64) {
        let pad = kernel.effective_radius() * h_max;
        (self.quad_domain.0 - pad, self.quad_domain.1 + pad)
    }

    /// `‖f_{h1} − f_{h2}‖²` by quadrature.
    pub fn smoothed_distance_sq(&self, h1: f64, h2: f64, kernel: Kernel) -> Result<f64> {
        self.l2_sq_by_quadrature(&[h1, h2], kernel, |x| {
            Ok(self.smoothed_density(h1, kernel, x)? - self.smoothed_density(h2, kernel, x)?)
        })
    }

    /// `‖f − f_h‖²` by quadrature.
    pub fn bias_sq(&self, h: f64, kernel: Kernel) -> Result<f64> {
        self.l2_sq_by_quadrature(&[h], kernel, |x| {
            Ok(self.pdf(x) - self.smoothed_density(h, kernel, x)?)
        })
    }

    fn l2_sq_by_quadrature(
        &self,
        bandwidths: &[f64],
        kernel: Kernel,
        diff: impl Fn(f64) -> Result<f64>,
    ) -> Result<f64> {
        for &h in bandwidths {
            check_bandwidth(h)?;
        }
        let h_max = bandwidths.iter().copied().fold(0.0, f64::max);
        let (lo, hi) = self.outer_domain(h_max, kernel);
        let failure = std::cell::Cell::new(None);
        let res = integrate(
            |x| match diff(x) {
                Ok(v) => v * v,
                Err(e) => {
                    failure.set(Some(e));
                    0.0
                }
            },
            lo,
            hi,
            &self.outer_breakpoints(bandwidths, kernel),
            QuadOptions {
                abs_tol: 1e-12,
                rel_tol: 1e-10,
                max_panels: 4000,
            },
        )?;
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        Ok(res.value.max(0.0))
    }

    /// `D(h) = max(sup_{h' ≤ h} ‖f_{h'} − f_h‖, ‖f − f_h‖)` with the supremum
    /// over grid bandwidths.
    pub fn bias_d(&self, h: f64, kernel: Kernel, grid: &BandwidthGrid) -> Result<f64> {
        let idx = grid.index_of(h).ok_or(Error::BandwidthNotInGrid(h))?;
        let mut worst = self.bias_sq(h, kernel)?;
        for &hp in &grid.bandwidths()[..idx] {
            worst = worst.max(self.smoothed_distance_sq(hp, h, kernel)?);
        }
        Ok(worst.sqrt())
    }
}

/// Component whose cumulative-weight interval holds `u`, and the weight
/// below it.
fn pick(parts: &[(f64, f64, f64)], u: f64) -> ((f64, f64, f64), f64) {
    let mut below = 0.0;
    for (k, &p) in parts.iter().enumerate() {
        if u < below + p.0 || k + 1 == parts.len() {
            return (p, below);
        }
        below += p.0;
    }
    unreachable!("mixtures have at least one component")
}
