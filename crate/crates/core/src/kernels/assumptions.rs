//! Grid-based numerical confirmation of the kernel conditions used by the
//! minimal-penalty analysis:
//!
//! * (K0) `⟨K, K(x·)⟩ / ‖K‖² ≥ 1` for `x ∈ (0, 1]`;
//! * (K1) `φ` is bounded below by a positive constant on `[E_H, x_max]`;
//! * (K2) `φ(x) − μ/x` blows up at 0 and decreases near 0;
//! * (K3) `φ(x) + μ/x` is nondecreasing on `[2, x_max]`;
//! * the θ-condition `φ(θ₂) − φ(θ₁) ≥ 1/θ₁ − 1/θ₂`.
//!
//! None of this is a proof; the report records the grids it used.

use serde::{Deserialize, Serialize};

use super::Kernel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionConfig {
    /// Smallest ratio between distinct bandwidths (`E_H`).
    pub e_h: f64,
    pub mu: Vec<f64>,
    pub x_max: f64,
    pub theta: Option<(f64, f64)>,
    /// Points per grid.
    pub grid_points: usize,
    /// Left end of the log-spaced (K2) grid.
    pub k2_x_min: f64,
    /// Slack allowed for roundoff in the inequality checks.
    pub tolerance: f64,
}

impl Default for AssumptionConfig {
    fn default() -> Self {
        Self {
            e_h: std::f64::consts::E,
            mu: vec![0.1, 0.5, 0.9],
            x_max: 100.0,
            theta: Some((std::f64::consts::E, 3.0)),
            grid_points: 2000,
            k2_x_min: 1e-6,
            tolerance: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct K0Report {
    pub pass: bool,
    pub min_ratio: f64,
    pub argmin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct K1Report {
    pub pass: bool,
    pub inf_phi: f64,
    pub argmin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct K2Report {
    pub mu: f64,
    pub pass: bool,
    /// Largest grid point `x₀` such that `φ(x) − μ/x` decreases on `(0, x₀]`.
    pub neighborhood: f64,
    /// `φ(x) − μ/x` at the left end of the grid.
    pub value_at_min: f64,
    pub diverges: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct K3Report {
    pub mu: f64,
    pub pass: bool,
    /// Largest drop between consecutive grid points (0 when monotone).
    pub worst_decrease: f64,
    pub worst_at: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaReport {
    pub theta1: f64,
    pub theta2: f64,
    /// `φ(θ₂) − φ(θ₁)`
    pub lhs: f64,
    /// `1/θ₁ − 1/θ₂`
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub kernel: Kernel,
    pub config: AssumptionConfig,
    pub k0: K0Report,
    pub k1: K1Report,
    pub k2: Vec<K2Report>,
    pub k3: Vec<K3Report>,
    pub theta: Option<ThetaReport>,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.k0.pass
            && self.k1.pass
            && self.k2.iter().all(|r| r.pass)
            && self.k3.iter().all(|r| r.pass)
            && self.theta.as_ref().is_none_or(|t| t.pass)
    }
}

fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = (b - a) / (n - 1) as f64;
    (0..n).map(move |i| if i + 1 == n { b } else { a + step * i as f64 })
}

fn logspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    linspace(a.ln(), b.ln(), n).map(f64::exp)
}

fn validate(cfg: &AssumptionConfig) -> Result<()> {
    let bad = |msg: String| Err(Error::InvalidGrid(msg));
    if !(cfg.e_h > 1.0 && cfg.e_h.is_finite()) {
        return bad(format!("E_H must exceed 1, got {}", cfg.e_h));
    }
    if cfg.mu.is_empty() {
        return bad("at least one mu is required".into());
    }
    if let Some(mu) = cfg.mu.iter().find(|&&m| !(m > 0.0 && m < 1.0)) {
        return bad(format!("mu must lie in (0, 1), got {mu}"));
    }
    if !(cfg.x_max > cfg.e_h.max(2.0) && cfg.x_max.is_finite()) {
        return bad(format!("x_max must exceed max(E_H, 2), got {}", cfg.x_max));
    }
    if cfg.grid_points < 3 {
        return bad(format!(
            "need at least 3 grid points, got {}",
            cfg.grid_points
        ));
    }
    if !(cfg.k2_x_min > 0.0 && cfg.k2_x_min < 1.0) {
        return bad(format!("k2_x_min must lie in (0, 1), got {}", cfg.k2_x_min));
    }
    if cfg.tolerance.is_nan() || cfg.tolerance < 0.0 {
        return bad(format!(
            "tolerance must be nonnegative, got {}",
            cfg.tolerance
        ));
    }
    if let Some((t1, t2)) = cfg.theta {
        if !(t1 > 0.0 && t1 < t2 && t2 >= 2.0) {
            return bad(format!(
                "theta needs 0 < θ₁ < θ₂ and θ₂ ≥ 2, got ({t1}, {t2})"
            ));
        }
    }
    Ok(())
}

pub fn check_assumptions(kernel: Kernel, cfg: &AssumptionConfig) -> Result<AssumptionReport> {
    validate(cfg)?;
    let n = cfg.grid_points;
    let tol = cfg.tolerance;
    let phi = |x: f64| kernel.phi(x).expect("grid points are positive");

    // (K0) on (0, 1]: x = k/n, k = 1..n
    let (min_ratio, argmin) = (1..=n)
        .map(|k| k as f64 / n as f64)
        .map(|x| (kernel.overlap_ratio(x).expect("positive"), x))
        .fold(
            (f64::INFINITY, 0.0),
            |acc, v| if v.0 < acc.0 { v } else { acc },
        );
    let k0 = K0Report {
        pass: min_ratio >= 1.0 - tol,
        min_ratio,
        argmin,
    };

    let (inf_phi, argmin) = logspace(cfg.e_h, cfg.x_max, n).map(|x| (phi(x), x)).fold(
        (f64::INFINITY, 0.0),
        |acc, v| if v.0 < acc.0 { v } else { acc },
    );
    let k1 = K1Report {
        pass: inf_phi > 0.0,
        inf_phi,
        argmin,
    };

    let k2 = cfg
        .mu
        .iter()
        .map(|&mu| {
            let xs: Vec<f64> = logspace(cfg.k2_x_min, 1.0, n).collect();
            let g: Vec<f64> = xs.iter().map(|&x| phi(x) - mu / x).collect();
            let run = g.windows(2).take_while(|w| w[1] < w[0]).count();
            let neighborhood = xs[run];
            let value_at_min = g[0];
            // the (1 - μ)/x term must dominate at the left end
            let diverges = value_at_min >= 0.5 * (1.0 - mu) / xs[0];
            K2Report {
                mu,
                pass: diverges && run > 0,
                neighborhood,
                value_at_min,
                diverges,
            }
        })
        .collect();

    let k3 = cfg
        .mu
        .iter()
        .map(|&mu| {
            let xs: Vec<f64> = linspace(2.0, cfg.x_max, n).collect();
            let g: Vec<f64> = xs.iter().map(|&x| phi(x) + mu / x).collect();
            let (worst_decrease, worst_at) = g
                .windows(2)
                .zip(&xs[1..])
                .map(|(w, &x)| (w[0] - w[1], x))
                .fold((0.0, xs[0]), |acc, v| if v.0 > acc.0 { v } else { acc });
            K3Report {
                mu,
                pass: worst_decrease <= tol,
                worst_decrease,
                worst_at,
            }
        })
        .collect();

    let theta = cfg.theta.map(|(theta1, theta2)| {
        let lhs = phi(theta2) - phi(theta1);
        let rhs = 1.0 / theta1 - 1.0 / theta2;
        ThetaReport {
            theta1,
            theta2,
            lhs,
            rhs,
            pass: lhs >= rhs - tol,
        }
    });

    Ok(AssumptionReport {
        kernel,
        config: cfg.clone(),
        k0,
        k1,
        k2,
        k3,
        theta,
    })
}
