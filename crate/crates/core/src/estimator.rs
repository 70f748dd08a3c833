//! Kernel density estimates and exact L² distances between them.
//!
//! With `Ψ_{g,h}(δ) = ∫ K_g(u) K_h(u − δ) du`, the inner product of two
//! estimates on the same sample is
//! `⟨f̂_g, f̂_h⟩ = n⁻² Σ_{i,j} Ψ_{g,h}(X_i − X_j)`, so squared distances need
//! no spatial grid at all. Sums run over a sorted copy of the sample and stop
//! as soon as the offset leaves the support of `Ψ`.

use serde::{Deserialize, Serialize};

use crate::error::{check_bandwidth, Error, Result};
use crate::kernels::{CrossCorrelation, Kernel};

/// Squared norms below zero by at most this much are reported as zero.
pub const ROUNDOFF_CLAMP: f64 = 1e-12;

/// An i.i.d. sample, kept together with a sorted copy.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    observations: Vec<f64>,
    sorted: Vec<f64>,
}

impl Sample {
    pub fn new(observations: Vec<f64>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some((index, &value)) = observations
            .iter()
            .enumerate()
            .find(|(_, x)| !x.is_finite())
        {
            return Err(Error::NonFiniteObservation { index, value });
        }
        let mut sorted = observations.clone();
        sorted.sort_by(f64::total_cmp);
        Ok(Self {
            observations,
            sorted,
        })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn min(&self) -> f64 {
        self.sorted[0]
    }

    pub fn max(&self) -> f64 {
        self.sorted[self.sorted.len() - 1]
    }
}

/// Uniformly spaced evaluation points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationGrid {
    start: f64,
    spacing: f64,
    len: usize,
}

impl EvaluationGrid {
    pub const DEFAULT_POINTS: usize = 4096;

    pub fn new(start: f64, end: f64, len: usize) -> Result<Self> {
        if len < 2 || !start.is_finite() || !end.is_finite() || end <= start {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points on a finite nonempty interval, got {len} on [{start}, {end}]"
            )));
        }
        Ok(Self {
            start,
            spacing: (end - start) / (len - 1) as f64,
            len,
        })
    }

    /// Grid on `[min X − margin, max X + margin]`.
    pub fn covering(sample: &Sample, margin: f64, len: usize) -> Result<Self> {
        Self::new(sample.min() - margin, sample.max() + margin, len)
    }

    /// Default diagnostic grid for bandwidths up to `h_max`: 4096 points with
    /// a margin of four kernel radii (eight standard deviations for the
    /// Gaussian).
    pub fn default_for(sample: &Sample, kernel: Kernel, h_max: f64) -> Result<Self> {
        let margin = match kernel {
            Kernel::Gaussian => 8.0 * h_max,
            _ => 4.0 * h_max * kernel.support_radius(),
        };
        Self::covering(sample, margin, Self::DEFAULT_POINTS)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn point(&self, i: usize) -> f64 {
        self.start + self.spacing * i as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|i| self.point(i))
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.point(self.len - 1)
    }
}

/// `f̂_h(x) = n⁻¹ Σ K_h(x − X_i)` at every grid point.
pub fn kde_on_grid(
    sample: &Sample,
    h: f64,
    kernel: Kernel,
    grid: &EvaluationGrid,
) -> Result<Vec<f64>> {
    check_bandwidth(h)?;
    let xs = sample.sorted();
    let reach = kernel.effective_radius() * h;
    let inv_n = 1.0 / xs.len() as f64;
    let mut lo = 0;
    Ok(grid
        .points()
        .map(|x| {
            while lo < xs.len() && xs[lo] < x - reach {
                lo += 1;
            }
            let s: f64 = xs[lo..]
                .iter()
                .take_while(|&&xi| xi <= x + reach)
                .map(|&xi| kernel.eval_scaled(h, x - xi))
                .sum();
            s * inv_n
        })
        .collect())
}

/// Trapezoidal approximation of `∫ (v1 − v2)²` on the grid.
pub fn grid_l2_sq(values1: &[f64], values2: &[f64], grid: &EvaluationGrid) -> Result<f64> {
    for v in [values1, values2] {
        if v.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: v.len(),
            });
        }
    }
    let sq: Vec<f64> = values1
        .iter()
        .zip(values2)
        .map(|(a, b)| (a - b) * (a - b))
        .collect();
    let inner: f64 = sq[1..sq.len() - 1].iter().sum();
    Ok(grid.spacing() * (inner + 0.5 * (sq[0] + sq[sq.len() - 1])))
}

/// `Σ_{i,j} Ψ(X_i − X_j)` over a sorted sample, visiting only pairs closer
/// than the support radius of `Ψ`.
pub fn correlation_sum(sorted: &[f64], psi: &CrossCorrelation) -> f64 {
    let n = sorted.len();
    let off_diagonal = match psi {
        CrossCorrelation::Gaussian {
            decay,
            peak,
            radius,
            ..
        } => {
            let (decay, radius) = (*decay, *radius);
            let mut acc = 0.0;
            for (i, &xi) in sorted.iter().enumerate() {
                let mut s = 0.0;
                for &xj in &sorted[i + 1..] {
                    let d = xj - xi;
                    if d > radius {
                        break;
                    }
                    s += (-decay * d * d).exp();
                }
                acc += s;
            }
            acc * peak
        }
        CrossCorrelation::Compact(p) => {
            let radius = p.support().1;
            let mut acc = 0.0;
            for (i, &xi) in sorted.iter().enumerate() {
                for &xj in &sorted[i + 1..] {
                    let d = xj - xi;
                    if d > radius {
                        break;
                    }
                    acc += p.eval(d);
                }
            }
            acc
        }
    };
    n as f64 * psi.eval(0.0) + 2.0 * off_diagonal
}

/// The plain double sum over all ordered pairs, with no pruning and no
/// Gaussian cut-off.
pub fn correlation_sum_unpruned(observations: &[f64], psi: &CrossCorrelation) -> f64 {
    observations
        .iter()
        .map(|&xi| {
            observations
                .iter()
                .map(|&xj| psi.eval_untruncated(xi - xj))
                .sum::<f64>()
        })
        .sum()
}

fn combine(self1: f64, cross: f64, self2: f64, n: usize) -> f64 {
    let n2 = (n as f64) * (n as f64);
    let d = (self1 - 2.0 * cross + self2) / n2;
    if (-ROUNDOFF_CLAMP..0.0).contains(&d) {
        0.0
    } else {
        d
    }
}

/// `‖f̂_{h1} − f̂_{h2}‖²`, exactly (up to the Gaussian cut-off).
pub fn pairwise_l2_sq(sample: &Sample, h1: f64, h2: f64, kernel: Kernel) -> Result<f64> {
    check_bandwidth(h1)?;
    check_bandwidth(h2)?;
    if h1 == h2 {
        return Ok(0.0);
    }
    let (g, h) = if h1 < h2 { (h1, h2) } else { (h2, h1) };
    let xs = sample.sorted();
    let s_gg = correlation_sum(xs, &CrossCorrelation::new(kernel, g, g)?);
    let s_gh = correlation_sum(xs, &CrossCorrelation::new(kernel, g, h)?);
    let s_hh = correlation_sum(xs, &CrossCorrelation::new(kernel, h, h)?);
    Ok(combine(s_gg, s_gh, s_hh, xs.len()))
}

/// [`pairwise_l2_sq`] through the O(n²) double sum; a reference path.
pub fn pairwise_l2_sq_unpruned(sample: &Sample, h1: f64, h2: f64, kernel: Kernel) -> Result<f64> {
    check_bandwidth(h1)?;
    check_bandwidth(h2)?;
    if h1 == h2 {
        return Ok(0.0);
    }
    let (g, h) = if h1 < h2 { (h1, h2) } else { (h2, h1) };
    let xs = sample.observations();
    let s_gg = correlation_sum_unpruned(xs, &CrossCorrelation::new(kernel, g, g)?);
    let s_gh = correlation_sum_unpruned(xs, &CrossCorrelation::new(kernel, g, h)?);
    let s_hh = correlation_sum_unpruned(xs, &CrossCorrelation::new(kernel, h, h)?);
    Ok(combine(s_gg, s_gh, s_hh, xs.len()))
}

/// `‖f̂_h‖²`.
pub fn estimate_norm_sq(sample: &Sample, h: f64, kernel: Kernel) -> Result<f64> {
    let psi = CrossCorrelation::new(kernel, h, h)?;
    let n = sample.len() as f64;
    Ok(correlation_sum(sample.sorted(), &psi) / (n * n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_point() -> Sample {
        Sample::new(vec![0.0]).unwrap()
    }

    #[test]
    fn sample_validation() {
        assert!(matches!(Sample::new(vec![]), Err(Error::EmptySample)));
        assert!(matches!(
            Sample::new(vec![1.0, f64::NAN]),
            Err(Error::NonFiniteObservation { index: 1, .. })
        ));
        let s = Sample::new(vec![3.0, -1.0, 2.0]).unwrap();
        assert_eq!(s.sorted(), &[-1.0, 2.0, 3.0]);
        assert_eq!(s.observations(), &[3.0, -1.0, 2.0]);
    }

    #[test]
    fn kde_examples() {
        let grid = EvaluationGrid::new(-1.0, 1.0, 9).unwrap();
        let v = kde_on_grid(&one_point(), 1.0, Kernel::Rectangular, &grid).unwrap();
        assert_eq!(v[4], 0.5);

        let grid = EvaluationGrid::new(0.0, 1.0, 5).unwrap();
        let v = kde_on_grid(&one_point(), 0.5, Kernel::Rectangular, &grid).unwrap();
        assert_eq!(grid.point(3), 0.75);
        assert_eq!(v[3], 0.0);

        let two = Sample::new(vec![-1.0, 1.0]).unwrap();
        let grid = EvaluationGrid::new(-1.0, 1.0, 3).unwrap();
        let v = kde_on_grid(&two, 1.0, Kernel::Gaussian, &grid).unwrap();
        let want = (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        assert!((v[1] - want).abs() < 1e-15);
        assert!((v[1] - 0.241_971).abs() < 1e-6);
    }

    #[test]
    fn kde_rejects_bad_bandwidth() {
        let grid = EvaluationGrid::new(0.0, 1.0, 5).unwrap();
        assert!(kde_on_grid(&one_point(), 0.0, Kernel::Gaussian, &grid).is_err());
    }

    #[test]
    fn grid_l2_examples() {
        let grid = EvaluationGrid::new(0.0, 1.0, 1001).unwrap();
        let ones = vec![1.0; 1001];
        let zeros = vec![0.0; 1001];
        assert_eq!(grid_l2_sq(&ones, &ones, &grid).unwrap(), 0.0);
        assert!((grid_l2_sq(&ones, &zeros, &grid).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(
            grid_l2_sq(&ones[..10], &zeros, &grid),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn pairwise_examples() {
        let s = Sample::new(vec![0.1, 0.5, 2.0]).unwrap();
        assert_eq!(pairwise_l2_sq(&s, 0.3, 0.3, Kernel::Biweight).unwrap(), 0.0);
        let d = pairwise_l2_sq(&one_point(), 1.0, 2.0, Kernel::Rectangular).unwrap();
        assert!((d - 0.25).abs() < 1e-15);
        assert!(pairwise_l2_sq(&s, -0.3, 0.3, Kernel::Biweight).is_err());
    }

    #[test]
    fn pairwise_is_symmetric_bitwise() {
        let s = Sample::new(vec![0.1, 0.5, 2.0, -0.7, 0.45]).unwrap();
        for k in Kernel::ALL {
            let a = pairwise_l2_sq(&s, 0.2, 0.9, k).unwrap();
            let b = pairwise_l2_sq(&s, 0.9, 0.2, k).unwrap();
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn tiny_bandwidth_stays_finite_on_one_point() {
        let h = (-10.0f64).exp();
        for k in Kernel::ALL {
            let d = pairwise_l2_sq(&one_point(), h, 0.3, k).unwrap();
            let want = k.norm_sq() / h * k.phi(0.3 / h).unwrap();
            assert!(d.is_finite());
            assert!((d - want).abs() <= 1e-10 * want, "{k}: {d} vs {want}");
        }
    }

    #[test]
    fn estimate_norm_of_one_point_is_kernel_norm() {
        for k in Kernel::ALL {
            let v = estimate_norm_sq(&one_point(), 0.25, k).unwrap();
            assert!((v - k.norm_sq() / 0.25).abs() < 1e-13);
        }
    }
}
