//! Observed convergence orders from error sequences.

use serde::{Deserialize, Serialize};

/// Errors below this are treated as round-off: a residual that sits at the
/// floor on every level has already converged and carries no order information.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;

pub fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `log2(e[i] / e[i+1])` for successive halvings of the spacing.
pub fn pairwise_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Least-squares slope of `log(y)` against `log(x)`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Errors measured at a sequence of spacings, coarse to fine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub spacings: Vec<f64>,
    pub errors: Vec<f64>,
}

impl ConvergenceStudy {
    pub fn new(spacings: Vec<f64>, errors: Vec<f64>) -> Self {
        assert_eq!(spacings.len(), errors.len());
        ConvergenceStudy { spacings, errors }
    }

    pub fn finest(&self) -> f64 {
        *self.errors.last().expect("empty study")
    }

    pub fn at_roundoff(&self) -> bool {
        self.errors.iter().all(|e| *e <= ROUNDOFF_FLOOR)
    }

    pub fn pairwise(&self) -> Vec<f64> {
        pairwise_orders(&self.errors)
    }

    /// Smallest pairwise order, `None` when every level is at round-off.
    pub fn min_order(&self) -> Option<f64> {
        if self.at_roundoff() {
            return None;
        }
        self.pairwise().into_iter().reduce(f64::min)
    }

    pub fn fitted_order(&self) -> Option<f64> {
        if self.at_roundoff() {
            return None;
        }
        Some(loglog_slope(&self.spacings, &self.errors))
    }

    /// Converged at `min_order` or better, or identically zero to round-off.
    pub fn converges_at(&self, min_order: f64) -> bool {
        match self.min_order() {
            None => true,
            Some(order) => order >= min_order,
        }
    }
}
