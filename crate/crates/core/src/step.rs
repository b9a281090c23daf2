use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Right-continuous, non-decreasing step function starting at zero.
///
/// `eval(t)` is 0 before the first knot and `values[k]` on
/// `[knots[k], knots[k + 1])`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StepFunction {
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "step function has {} knots but {} values",
                knots.len(),
                values.len()
            )));
        }
        if knots.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("step function"));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "step function knots must be strictly increasing".into(),
            ));
        }
        if values.windows(2).any(|w| w[0] > w[1]) || values.first().is_some_and(|&v| v < 0.0) {
            return Err(Error::InvalidArgument(
                "step function values must be non-negative and non-decreasing".into(),
            ));
        }
        Ok(StepFunction { knots, values })
    }

    /// Crate-internal constructor for values produced by monotone accumulation.
    pub(crate) fn from_sorted(knots: Vec<f64>, values: Vec<f64>) -> Self {
        debug_assert_eq!(knots.len(), values.len());
        debug_assert!(knots.windows(2).all(|w| w[0] < w[1]));
        StepFunction { knots, values }
    }

    pub fn zero() -> Self {
        StepFunction::default()
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let idx = self.knots.partition_point(|&k| k <= t);
        if idx == 0 {
            0.0
        } else {
            self.values[idx - 1]
        }
    }

    /// Evaluates at every point of an ascending grid in one merge pass.
    pub fn eval_sorted(&self, grid: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(grid.len());
        self.accumulate_sorted(grid, 1.0, |_, v| out.push(v));
        out
    }

    /// Calls `sink(i, scale * self.eval(grid[i]))` for an ascending grid.
    pub(crate) fn accumulate_sorted(&self, grid: &[f64], scale: f64, mut sink: impl FnMut(usize, f64)) {
        let mut k = 0;
        let mut current = 0.0;
        for (i, &t) in grid.iter().enumerate() {
            while k < self.knots.len() && self.knots[k] <= t {
                current = self.values[k];
                k += 1;
            }
            sink(i, scale * current);
        }
    }

    /// `exp(-H(t))` at the given points.
    pub fn survival_at(&self, grid: &[f64]) -> Vec<f64> {
        self.eval_sorted(grid).into_iter().map(|h| (-h).exp()).collect()
    }
}
