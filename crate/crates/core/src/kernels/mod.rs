//! The four symmetric kernels and their closed-form geometry.
//!
//! For a kernel `K` and `x > 0` the overlap ratio is
//! `⟨K, K(x·)⟩ / ‖K‖²`, and
//! `φ(x) = ‖K − K_x‖² / ‖K‖² = 1 + 1/x − 2·⟨K, K(x·)⟩ / ‖K‖²`
//! measures how far a kernel is from its own rescaling. Squared distances
//! between rescaled kernels follow from it:
//! `‖K_{h'} − K_h‖² = (‖K‖² / h')·φ(h / h')`.

mod assumptions;
mod piecewise;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_bandwidth, Error, Result};

pub use assumptions::{check_assumptions, AssumptionConfig, AssumptionReport, K2Report, K3Report};
pub use piecewise::PiecewisePolynomial;

/// Gaussian evaluations are cut off this many standard deviations from the
/// centre. The neglected relative mass is below 1e-14.
pub const GAUSSIAN_TRUNCATION: f64 = 8.0;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Gaussian,
    Rectangular,
    Epanechnikov,
    Biweight,
}

impl Kernel {
    pub const ALL: [Kernel; 4] = [
        Kernel::Gaussian,
        Kernel::Rectangular,
        Kernel::Epanechnikov,
        Kernel::Biweight,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Gaussian => "gaussian",
            Kernel::Rectangular => "rectangular",
            Kernel::Epanechnikov => "epanechnikov",
            Kernel::Biweight => "biweight",
        }
    }

    /// 1 for the compact kernels, infinite for the Gaussian.
    pub fn support_radius(self) -> f64 {
        match self {
            Kernel::Gaussian => f64::INFINITY,
            _ => 1.0,
        }
    }

    /// Radius beyond which evaluations are treated as zero.
    pub fn effective_radius(self) -> f64 {
        match self {
            Kernel::Gaussian => GAUSSIAN_TRUNCATION,
            _ => 1.0,
        }
    }

    pub fn is_compact(self) -> bool {
        self != Kernel::Gaussian
    }

    pub fn eval(self, u: f64) -> f64 {
        match self {
            Kernel::Gaussian => INV_SQRT_2PI * (-0.5 * u * u).exp(),
            _ if u.abs() > 1.0 => 0.0,
            Kernel::Rectangular => 0.5,
            Kernel::Epanechnikov => 0.75 * (1.0 - u * u),
            Kernel::Biweight => {
                let s = 1.0 - u * u;
                15.0 / 16.0 * s * s
            }
        }
    }

    /// `K_h(u) = K(u / h) / h`.
    pub fn eval_scaled(self, h: f64, u: f64) -> f64 {
        self.eval(u / h) / h
    }

    /// `‖K‖² = ∫ K²`.
    pub fn norm_sq(self) -> f64 {
        match self {
            Kernel::Gaussian => 0.5 / PI.sqrt(),
            Kernel::Rectangular => 0.5,
            Kernel::Epanechnikov => 0.6,
            Kernel::Biweight => 5.0 / 7.0,
        }
    }

    /// `‖K_h‖² = ‖K‖² / h`.
    pub fn scaled_norm_sq(self, h: f64) -> Result<f64> {
        check_bandwidth(h)?;
        Ok(self.norm_sq() / h)
    }

    /// `⟨K, K(x·)⟩ / ‖K‖²` in closed form.
    pub fn overlap_ratio(self, x: f64) -> Result<f64> {
        check_ratio(x)?;
        let m = (1.0 / x).min(1.0);
        let x2 = x * x;
        Ok(match self {
            Kernel::Gaussian => (2.0 / (1.0 + x2)).sqrt(),
            Kernel::Rectangular => m,
            Kernel::Epanechnikov => 1.25 * (m - x2 / 5.0 * m.powi(5)),
            Kernel::Biweight => (21.0 * m - 6.0 * x2 * m.powi(5) + x2 * x2 * m.powi(9)) / 16.0,
        })
    }

    /// `φ(x) = 1 + 1/x − 2·⟨K, K(x·)⟩ / ‖K‖²`.
    pub fn phi(self, x: f64) -> Result<f64> {
        let rho = self.overlap_ratio(x)?;
        Ok(1.0 + 1.0 / x - 2.0 * rho)
    }

    /// The compact kernels as exact piecewise polynomials on `[-1, 1]`.
    pub fn as_piecewise(self) -> Option<PiecewisePolynomial> {
        let degree = match self {
            Kernel::Gaussian => return None,
            Kernel::Rectangular => 0,
            Kernel::Epanechnikov => 2,
            Kernel::Biweight => 4,
        };
        Some(PiecewisePolynomial::from_fn(vec![-1.0, 1.0], degree, |u| {
            self.eval(u)
        }))
    }

    /// `Ψ_{g,h}(δ) = ∫ K_g(u) K_h(u − δ) du`.
    ///
    /// Builds the correlation from scratch; use [`CrossCorrelation`] when the
    /// same pair of bandwidths is evaluated repeatedly.
    pub fn cross_correlation(self, g: f64, h: f64, delta: f64) -> Result<f64> {
        check_bandwidth(g)?;
        check_bandwidth(h)?;
        match self {
            Kernel::Gaussian => Ok(gaussian_density(delta, g * g + h * h)),
            _ => {
                let k = self.as_piecewise().expect("compact kernel");
                Ok(k.rescaled(g).correlation_at(&k.rescaled(h), delta))
            }
        }
    }
}

fn check_ratio(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveRatio(x))
    }
}

fn gaussian_density(x: f64, variance: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x / variance).exp() / variance.sqrt()
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Kernel::Gaussian),
            "rectangular" | "uniform" | "box" => Ok(Kernel::Rectangular),
            "epanechnikov" => Ok(Kernel::Epanechnikov),
            "biweight" | "quartic" => Ok(Kernel::Biweight),
            _ => Err(Error::UnknownKernel(s.to_string())),
        }
    }
}

/// `Ψ_{g,h}` prepared for repeated evaluation at many offsets.
///
/// The Gaussian form is the normal density with variance `g² + h²`; for
/// compact kernels the correlation is held as an exact piecewise polynomial.
/// The arguments are put in canonical order so that `Ψ_{g,h}` and `Ψ_{h,g}`
/// are the same object.
#[derive(Debug, Clone)]
pub enum CrossCorrelation {
    Gaussian {
        /// `1 / (2 (g² + h²))`
        decay: f64,
        /// value at zero offset
        peak: f64,
        radius: f64,
    },
    Compact(PiecewisePolynomial),
}

impl CrossCorrelation {
    pub fn new(kernel: Kernel, g: f64, h: f64) -> Result<Self> {
        check_bandwidth(g)?;
        check_bandwidth(h)?;
        let (g, h) = if g <= h { (g, h) } else { (h, g) };
        Ok(match kernel.as_piecewise() {
            None => {
                let variance = g * g + h * h;
                CrossCorrelation::Gaussian {
                    decay: 0.5 / variance,
                    peak: INV_SQRT_2PI / variance.sqrt(),
                    radius: GAUSSIAN_TRUNCATION * variance.sqrt(),
                }
            }
            Some(k) => CrossCorrelation::Compact(k.rescaled(g).correlation(&k.rescaled(h))),
        })
    }

    /// Offsets with `|δ|` above this contribute zero.
    pub fn radius(&self) -> f64 {
        match self {
            CrossCorrelation::Gaussian { radius, .. } => *radius,
            CrossCorrelation::Compact(p) => p.support().1,
        }
    }

    /// Truncated evaluation, consistent with [`radius`](Self::radius).
    #[inline]
    pub fn eval(&self, delta: f64) -> f64 {
        match self {
            CrossCorrelation::Gaussian {
                decay,
                peak,
                radius,
            } => {
                if delta.abs() > *radius {
                    0.0
                } else {
                    peak * (-decay * delta * delta).exp()
                }
            }
            CrossCorrelation::Compact(p) => p.eval(delta.abs()),
        }
    }

    /// Evaluation without the Gaussian cut-off.
    pub fn eval_untruncated(&self, delta: f64) -> f64 {
        match self {
            CrossCorrelation::Gaussian { decay, peak, .. } => peak * (-decay * delta * delta).exp(),
            CrossCorrelation::Compact(p) => p.eval(delta.abs()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        assert_eq!(Kernel::Rectangular.eval(0.0), 0.5);
        assert_eq!(Kernel::Epanechnikov.eval(1.0), 0.0);
        assert!((Kernel::Gaussian.eval(0.0) - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-16);
        assert_eq!(Kernel::Biweight.eval(-1.5), 0.0);
    }

    #[test]
    fn norm_sq_examples() {
        assert_eq!(Kernel::Rectangular.norm_sq(), 0.5);
        assert!((Kernel::Gaussian.norm_sq() - 0.282_094_791_773_878_1).abs() < 1e-15);
        assert!((Kernel::Biweight.norm_sq() - 0.714_285_714_285_714_3).abs() < 1e-15);
    }

    #[test]
    fn overlap_ratio_examples() {
        assert!((Kernel::Gaussian.overlap_ratio(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(Kernel::Rectangular.overlap_ratio(2.0).unwrap(), 0.5);
        assert!((Kernel::Epanechnikov.overlap_ratio(0.5).unwrap() - 1.1875).abs() < 1e-15);
        for k in Kernel::ALL {
            assert!(k.overlap_ratio(0.0).is_err());
            assert!(k.overlap_ratio(-1.0).is_err());
        }
    }

    #[test]
    fn phi_examples() {
        for k in Kernel::ALL {
            assert_eq!(k.phi(1.0).unwrap(), 0.0);
            assert!(k.phi(0.0).is_err());
        }
        assert!((Kernel::Rectangular.phi(2.0).unwrap() - 0.5).abs() < 1e-15);
        let want = 1.5 - 2.0 * (0.4f64).sqrt();
        assert!((Kernel::Gaussian.phi(2.0).unwrap() - want).abs() < 1e-15);
        assert!((want - 0.235_089).abs() < 1e-6);
    }

    #[test]
    fn scaled_norm_sq_examples() {
        assert_eq!(Kernel::Rectangular.scaled_norm_sq(0.5).unwrap(), 1.0);
        assert_eq!(
            Kernel::Gaussian.scaled_norm_sq(1.0).unwrap(),
            Kernel::Gaussian.norm_sq()
        );
        assert!((Kernel::Rectangular.scaled_norm_sq(0.002).unwrap() - 250.0).abs() < 1e-12);
        assert!(Kernel::Rectangular.scaled_norm_sq(0.0).is_err());
    }

    #[test]
    fn cross_correlation_examples() {
        let r = Kernel::Rectangular;
        assert!((r.cross_correlation(1.0, 1.0, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(r.cross_correlation(1.0, 1.0, 2.0).unwrap(), 0.0);
        let g = Kernel::Gaussian.cross_correlation(1.0, 1.0, 0.0).unwrap();
        assert!((g - 0.5 / PI.sqrt()).abs() < 1e-15);
        assert!(r.cross_correlation(0.0, 1.0, 0.0).is_err());
        assert!(r.cross_correlation(1.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn prepared_correlation_matches_direct() {
        for k in Kernel::ALL {
            for (g, h) in [(0.3, 0.7), (1.0, 1.0), (4.5e-5, 0.48)] {
                let c = CrossCorrelation::new(k, g, h).unwrap();
                for frac in [0.0, 0.1, 0.5, 0.9, 0.999] {
                    let d = frac * (g + h);
                    let direct = k.cross_correlation(g, h, d).unwrap();
                    let scale = k.cross_correlation(g, h, 0.0).unwrap();
                    assert!(
                        (c.eval(d) - direct).abs() <= 1e-12 * scale,
                        "{k} g={g} h={h} d={d}: {} vs {direct}",
                        c.eval(d)
                    );
                }
            }
        }
    }

    #[test]
    fn parses_names() {
        assert_eq!("Gaussian".parse::<Kernel>().unwrap(), Kernel::Gaussian);
        assert_eq!("biweight".parse::<Kernel>().unwrap(), Kernel::Biweight);
        assert!("triangle".parse::<Kernel>().is_err());
    }
}
