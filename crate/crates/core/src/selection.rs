//! Goldenshluger-Lepski bandwidth selection without auxiliary estimators.
//!
//! For a finite bandwidth set `H` and penalty `V(h) = a‖K_h‖²/n`,
//!
//! ```text
//! B(h) = max_{h' ≤ h} [ ‖f̂_{h'} − f̂_h‖² − V(h') ]₊
//! ĥ    = argmin_h  B(h) + V(h)
//! ```
//!
//! The two-parameter variant keeps `a` inside `B` and uses a separate
//! constant `b` for the additive penalty. Ties in the argmin go to the
//! smallest bandwidth.
//!
//! All pairwise distances are computed once into a [`DistanceCache`];
//! selections at any number of penalty constants then cost `O(|H|²)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_bandwidth, Error, Result};
use crate::estimator::{correlation_sum, Sample, ROUNDOFF_CLAMP};
use crate::kernels::{CrossCorrelation, Kernel};

/// A finite, strictly increasing set of positive bandwidths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthGrid {
    bandwidths: Vec<f64>,
}

impl BandwidthGrid {
    /// Sorts the input; rejects empty sets, duplicates and nonpositive values.
    pub fn new(mut bandwidths: Vec<f64>) -> Result<Self> {
        if bandwidths.is_empty() {
            return Err(Error::InvalidGrid("bandwidth set is empty".into()));
        }
        for &h in &bandwidths {
            check_bandwidth(h)?;
        }
        bandwidths.sort_by(f64::total_cmp);
        if let Some(w) = bandwidths.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGrid(format!("duplicate bandwidth {}", w[0])));
        }
        Ok(Self { bandwidths })
    }

    /// `{e^{-k} : 3 ≤ k ≤ 10} ∪ {0.002 + 0.02 k : 0 ≤ k ≤ 24}`, 33 values.
    pub fn simulation() -> Self {
        let mut h: Vec<f64> = (3..=10).map(|k| (-(k as f64)).exp()).collect();
        h.extend((0..=24).map(|k| 0.002 + 0.02 * k as f64));
        Self::new(h).expect("the simulation set is valid")
    }

    /// `{e^{-k} : ⌈2 log log n⌉ ≤ k ≤ ⌊log n⌋}`.
    pub fn theorem(n: usize) -> Result<Self> {
        if n < 16 {
            // log log n must be positive and the range nonempty
            return Err(Error::InvalidGrid(format!(
                "the theorem bandwidth set needs n ≥ 16, got {n}"
            )));
        }
        let log_n = (n as f64).ln();
        let lo = (2.0 * log_n.ln()).ceil() as i64;
        let hi = log_n.floor() as i64;
        if lo > hi {
            return Err(Error::InvalidGrid(format!(
                "empty theorem bandwidth set for n = {n}"
            )));
        }
        Self::new((lo..=hi).map(|k| (-(k as f64)).exp()).collect())
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    pub fn len(&self) -> usize {
        self.bandwidths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bandwidths.is_empty()
    }

    pub fn h_min(&self) -> f64 {
        self.bandwidths[0]
    }

    pub fn h_max(&self) -> f64 {
        self.bandwidths[self.bandwidths.len() - 1]
    }

    /// `E_H`, the smallest ratio between consecutive bandwidths; `None` for
    /// a singleton.
    pub fn e_h(&self) -> Option<f64> {
        self.bandwidths
            .windows(2)
            .map(|w| w[1] / w[0])
            .min_by(f64::total_cmp)
    }

    pub fn index_of(&self, h: f64) -> Option<usize> {
        self.bandwidths.iter().position(|&b| b == h)
    }
}

/// `V(h) = a ‖K‖² / (h n)`.
pub fn penalty(h: f64, a: f64, n: usize, kernel: Kernel) -> Result<f64> {
    check_bandwidth(h)?;
    check_penalty(a)?;
    if n < 1 {
        return Err(Error::InvalidSampleSize);
    }
    Ok(a * kernel.norm_sq() / (h * n as f64))
}

fn check_penalty(a: f64) -> Result<()> {
    if a >= 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidPenalty(a))
    }
}

/// Every `‖f̂_{h_i} − f̂_{h_j}‖²` for one sample and bandwidth set, plus the
/// norms `‖f̂_{h_i}‖²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceCache {
    grid: BandwidthGrid,
    kernel: Kernel,
    n: usize,
    /// Lower triangle, row-major: entry `(i, j)` with `j ≤ i` at
    /// `i (i + 1) / 2 + j`.
    distances: Vec<f64>,
    norms: Vec<f64>,
}

fn tri(i: usize, j: usize) -> usize {
    let (i, j) = if j <= i { (i, j) } else { (j, i) };
    i * (i + 1) / 2 + j
}

impl DistanceCache {
    /// Fills the cache; pair sums run in parallel.
    pub fn build(sample: &Sample, grid: &BandwidthGrid, kernel: Kernel) -> Result<Self> {
        let h = grid.bandwidths();
        let m = h.len();
        let pairs: Vec<(usize, usize)> =
            (0..m).flat_map(|i| (0..=i).map(move |j| (i, j))).collect();
        let sums = pairs
            .par_iter()
            .map(|&(i, j)| {
                let psi = CrossCorrelation::new(kernel, h[j], h[i])?;
                Ok(correlation_sum(sample.sorted(), &psi))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self::from_sums(grid.clone(), kernel, sample.len(), &sums))
    }

    /// As [`build`](Self::build) on the calling thread only.
    pub fn build_sequential(sample: &Sample, grid: &BandwidthGrid, kernel: Kernel) -> Result<Self> {
        let h = grid.bandwidths();
        let mut sums = Vec::with_capacity(h.len() * (h.len() + 1) / 2);
        for i in 0..h.len() {
            for j in 0..=i {
                let psi = CrossCorrelation::new(kernel, h[j], h[i])?;
                sums.push(correlation_sum(sample.sorted(), &psi));
            }
        }
        Ok(Self::from_sums(grid.clone(), kernel, sample.len(), &sums))
    }

    fn from_sums(grid: BandwidthGrid, kernel: Kernel, n: usize, sums: &[f64]) -> Self {
        let m = grid.len();
        let n2 = (n as f64) * (n as f64);
        let norms: Vec<f64> = (0..m).map(|i| sums[tri(i, i)] / n2).collect();
        let mut distances = vec![0.0; sums.len()];
        for i in 0..m {
            for j in 0..i {
                let d = (sums[tri(j, j)] - 2.0 * sums[tri(i, j)] + sums[tri(i, i)]) / n2;
                distances[tri(i, j)] = if (-ROUNDOFF_CLAMP..0.0).contains(&d) {
                    0.0
                } else {
                    d
                };
            }
        }
        Self {
            grid,
            kernel,
            n,
            distances,
            norms,
        }
    }

    pub fn grid(&self) -> &BandwidthGrid {
        &self.grid
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn sample_size(&self) -> usize {
        self.n
    }

    /// `‖f̂_{h_i} − f̂_{h_j}‖²` by grid index.
    pub fn distance(&self, i: usize, j: usize) -> Result<f64> {
        let m = self.grid.len();
        if i >= m || j >= m {
            return Err(Error::MissingCacheEntry(i, j));
        }
        Ok(self.distances[tri(i, j)])
    }

    /// `‖f̂_{h_i}‖²` by grid index.
    pub fn estimate_norm_sq(&self, i: usize) -> f64 {
        self.norms[i]
    }

    fn penalty_at(&self, i: usize, a: f64) -> f64 {
        a * self.kernel.norm_sq() / (self.grid.bandwidths()[i] * self.n as f64)
    }

    /// `B(h)` for the grid bandwidth `h` with penalty constant `a`.
    pub fn compute_b(&self, a: f64, h: f64) -> Result<f64> {
        check_penalty(a)?;
        let i = self.grid.index_of(h).ok_or(Error::BandwidthNotInGrid(h))?;
        Ok(self.b_at(i, a))
    }

    fn b_at(&self, i: usize, a: f64) -> f64 {
        (0..=i)
            .map(|j| (self.distances[tri(i, j)] - self.penalty_at(j, a)).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn select(&self, a: f64) -> Result<SelectionResult> {
        self.select_two(a, a)
    }

    /// `B` uses `a`, the additive penalty uses `b`.
    pub fn select_two(&self, a: f64, b: f64) -> Result<SelectionResult> {
        check_penalty(a)?;
        check_penalty(b)?;
        let table: Vec<CriterionRow> = self
            .grid
            .bandwidths()
            .iter()
            .enumerate()
            .map(|(i, &h)| {
                let bias = self.b_at(i, a);
                let pen = self.penalty_at(i, b);
                CriterionRow {
                    h,
                    b: bias,
                    v: pen,
                    crit: bias + pen,
                }
            })
            .collect();
        let argmin_index = argmin_smallest(table.iter().map(|r| r.crit));
        Ok(SelectionResult {
            selected_h: table[argmin_index].h,
            argmin_index,
            a,
            b,
            table,
        })
    }
}

/// First index of the minimum; bandwidths are increasing, so ties resolve
/// to the smallest `h`.
pub(crate) fn argmin_smallest(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, v) in values.enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionRow {
    pub h: f64,
    /// `B(h)`
    pub b: f64,
    /// additive penalty at `h`
    pub v: f64,
    pub crit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub selected_h: f64,
    pub argmin_index: usize,
    pub a: f64,
    pub b: f64,
    pub table: Vec<CriterionRow>,
}

/// `B(h)` computed from a prepared cache.
pub fn compute_b(cache: &DistanceCache, a: f64, h: f64) -> Result<f64> {
    cache.compute_b(a, h)
}

pub fn select(
    sample: &Sample,
    grid: &BandwidthGrid,
    kernel: Kernel,
    a: f64,
) -> Result<SelectionResult> {
    DistanceCache::build(sample, grid, kernel)?.select(a)
}

pub fn select_two(
    sample: &Sample,
    grid: &BandwidthGrid,
    kernel: Kernel,
    a: f64,
    b: f64,
) -> Result<SelectionResult> {
    DistanceCache::build(sample, grid, kernel)?.select_two(a, b)
}
