//! Data-driven choice of the penalty constants.
//!
//! Selecting over a range of `a` traces a path `a ↦ ĥ(a)`. Below the
//! minimal penalty the selection sits at the smallest bandwidths; past it the
//! selected bandwidth jumps up. The jump location `â` is taken where the
//! ratio of consecutive selected bandwidths is largest, and the final
//! selection uses the two-parameter criterion with `a = â`, `b = 2â`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::Sample;
use crate::kernels::Kernel;
use crate::selection::{BandwidthGrid, DistanceCache, SelectionResult};

/// The default calibration grid: `0.05, 0.10, …, 3.00`.
pub fn default_a_grid() -> Vec<f64> {
    (1..=60).map(|k| k as f64 * 0.05).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyPath {
    pub a_values: Vec<f64>,
    pub selected_h: Vec<f64>,
    /// True losses of the selected estimates, when the density is known.
    pub losses: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PathRow {
    a: f64,
    selected_h: f64,
    loss: Option<f64>,
}

impl PenaltyPath {
    pub fn new(a_values: Vec<f64>, selected_h: Vec<f64>, losses: Option<Vec<f64>>) -> Result<Self> {
        if selected_h.len() != a_values.len() {
            return Err(Error::LengthMismatch {
                expected: a_values.len(),
                found: selected_h.len(),
            });
        }
        if let Some(l) = &losses {
            if l.len() != a_values.len() {
                return Err(Error::LengthMismatch {
                    expected: a_values.len(),
                    found: l.len(),
                });
            }
        }
        validate_a_values(&a_values)?;
        Ok(Self {
            a_values,
            selected_h,
            losses,
        })
    }

    pub fn len(&self) -> usize {
        self.a_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a_values.is_empty()
    }

    /// CSV with columns `a,selected_h,loss`; `loss` is blank when unknown.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (k, (&a, &h)) in self.a_values.iter().zip(&self.selected_h).enumerate() {
            w.serialize(PathRow {
                a,
                selected_h: h,
                loss: self.losses.as_ref().map(|l| l[k]),
            })?;
        }
        if self.is_empty() {
            w.write_record(["a", "selected_h", "loss"])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let rows: Vec<PathRow> = r.deserialize().collect::<std::result::Result<_, _>>()?;
        let known = rows.iter().filter(|r| r.loss.is_some()).count();
        let losses = if known == rows.len() && !rows.is_empty() {
            Some(rows.iter().map(|r| r.loss.unwrap()).collect())
        } else if known == 0 {
            None
        } else {
            return Err(Error::Config("loss column is only partially filled".into()));
        };
        Self::new(
            rows.iter().map(|r| r.a).collect(),
            rows.iter().map(|r| r.selected_h).collect(),
            losses,
        )
    }
}

fn validate_a_values(a_values: &[f64]) -> Result<()> {
    if let Some(&a) = a_values.iter().find(|a| !(**a >= 0.0 && a.is_finite())) {
        return Err(Error::InvalidPenalty(a));
    }
    if a_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(
            "a values must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// `ĥ(a)` for every `a`, from one shared distance cache.
pub fn bandwidth_path(
    sample: &Sample,
    grid: &BandwidthGrid,
    kernel: Kernel,
    a_values: &[f64],
) -> Result<PenaltyPath> {
    let cache = DistanceCache::build(sample, grid, kernel)?;
    path_from_cache(&cache, a_values)
}

pub fn path_from_cache(cache: &DistanceCache, a_values: &[f64]) -> Result<PenaltyPath> {
    validate_a_values(a_values)?;
    let selected_h = a_values
        .iter()
        .map(|&a| cache.select(a).map(|r| r.selected_h))
        .collect::<Result<Vec<_>>>()?;
    PenaltyPath::new(a_values.to_vec(), selected_h, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    /// `â`
    pub a_hat: f64,
    /// Index of `â` in the path.
    pub index: usize,
    /// `ĥ(a_k) / ĥ(a_{k−1})` at the jump; 1 when there is none.
    pub ratio: f64,
    /// The path never increases; `â` falls back to the smallest `a`.
    pub no_jump: bool,
}

/// Locates the largest multiplicative increase of the selected bandwidth.
pub fn detect_jump(path: &PenaltyPath) -> Result<Jump> {
    if path.len() < 2 {
        return Err(Error::PathTooShort(path.len()));
    }
    let mut best = Jump {
        a_hat: path.a_values[0],
        index: 0,
        ratio: 1.0,
        no_jump: true,
    };
    for k in 1..path.len() {
        let ratio = path.selected_h[k] / path.selected_h[k - 1];
        if ratio > best.ratio {
            best = Jump {
                a_hat: path.a_values[k],
                index: k,
                ratio,
                no_jump: false,
            };
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub a_hat: f64,
    pub b: f64,
    pub jump: Jump,
    pub path: PenaltyPath,
    pub result: SelectionResult,
}

pub fn calibrate(
    sample: &Sample,
    grid: &BandwidthGrid,
    kernel: Kernel,
    a_values: &[f64],
) -> Result<Calibration> {
    let cache = DistanceCache::build(sample, grid, kernel)?;
    calibrate_from_cache(&cache, a_values)
}

pub fn calibrate_from_cache(cache: &DistanceCache, a_values: &[f64]) -> Result<Calibration> {
    let path = path_from_cache(cache, a_values)?;
    let jump = detect_jump(&path)?;
    let b = 2.0 * jump.a_hat;
    let result = cache.select_two(jump.a_hat, b)?;
    Ok(Calibration {
        a_hat: jump.a_hat,
        b,
        jump,
        path,
        result,
    })
}
