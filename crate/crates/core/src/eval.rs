//! Harrell's concordance index and the pooled two-sample t-test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Concordance over permissible pairs. A higher predicted value means a
/// worse predicted outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcordanceResult {
    /// Sum of pair scores (each 0, 0.5 or 1).
    pub concordance: f64,
    pub permissible: u64,
    pub c_index: f64,
    pub prediction_error: f64,
}

impl ConcordanceResult {
    /// `true` when the ranking is no better than random guessing.
    pub fn is_uninformative(&self) -> bool {
        self.prediction_error == 0.5
    }
}

/// Pair score in half units: 2 = concordant, 1 = half credit, 0 = discordant.
/// `None` when the pair is not permissible.
#[inline]
fn pair_half_units(ti: f64, di: bool, pi: f64, tj: f64, dj: bool, pj: f64) -> Option<u64> {
    if ti == tj {
        return match (di, dj) {
            (false, false) => None,
            (true, true) => Some(if pi == pj { 2 } else { 1 }),
            (true, false) => Some(if pi > pj { 2 } else { 1 }),
            (false, true) => Some(if pj > pi { 2 } else { 1 }),
        };
    }
    let (short_event, short_pred, long_pred) = if ti < tj { (di, pi, pj) } else { (dj, pj, pi) };
    if !short_event {
        return None;
    }
    Some(if short_pred > long_pred {
        2
    } else if short_pred == long_pred {
        1
    } else {
        0
    })
}

/// Harrell's C over all pairs of cases.
///
/// A pair is permissible unless its shorter time is censored, or both times
/// are equal and both censored. Scores: with unequal times 1 if the shorter
/// time has the larger prediction and 0.5 for tied predictions; with equal
/// times and two deaths 1 for tied predictions and 0.5 otherwise; with equal
/// times and one death 1 if the death has the larger prediction and 0.5
/// otherwise. Pair scores are accumulated in exact half units.
pub fn c_index(times: &[f64], events: &[bool], predicted: &[f64]) -> Result<ConcordanceResult> {
    let n = times.len();
    if events.len() != n || predicted.len() != n {
        return Err(Error::InvalidArgument(format!(
            "c-index inputs differ in length: {n} times, {} events, {} predictions",
            events.len(),
            predicted.len()
        )));
    }
    if n < 2 {
        return Err(Error::InvalidArgument("c-index needs at least two cases".into()));
    }
    if times.iter().chain(predicted).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("c-index input"));
    }
    let (mut half_units, mut permissible) = (0u64, 0u64);
    for i in 0..n {
        for j in i + 1..n {
            if let Some(s) = pair_half_units(times[i], events[i], predicted[i], times[j], events[j], predicted[j]) {
                half_units += s;
                permissible += 1;
            }
        }
    }
    if permissible == 0 {
        return Err(Error::UndefinedConcordance);
    }
    let concordance = half_units as f64 / 2.0;
    let c = half_units as f64 / (2 * permissible) as f64;
    Ok(ConcordanceResult {
        concordance,
        permissible,
        c_index: c,
        prediction_error: 1.0 - c,
    })
}

/// `1 - C`; 0.5 means prediction no better than random guessing.
pub fn prediction_error(result: &ConcordanceResult) -> f64 {
    1.0 - result.c_index
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    pub df: u64,
    /// Two-sided.
    pub p_value: f64,
}

impl TTestResult {
    /// Zero pooled variance with unequal means: `t` is infinite and the
    /// p-value is below any representable floor.
    pub fn is_degenerate(&self) -> bool {
        self.t.is_infinite()
    }
}

/// Equal-variance two-sample t-test with `n_a + n_b - 2` degrees of freedom.
/// `t` is positive when `mean(a) > mean(b)`.
pub fn pooled_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidArgument("t-test needs at least two values per group".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("t-test input"));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let ss = |xs: &[f64], m: f64| xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
    let df = a.len() + b.len() - 2;
    let pooled = (ss(a, ma) + ss(b, mb)) / df as f64;
    let diff = ma - mb;
    let se = (pooled * (1.0 / na + 1.0 / nb)).sqrt();

    if se == 0.0 {
        return Ok(if diff == 0.0 {
            TTestResult { t: 0.0, df: df as u64, p_value: 1.0 }
        } else {
            TTestResult {
                t: f64::INFINITY.copysign(diff),
                df: df as u64,
                p_value: 0.0,
            }
        });
    }
    let t = diff / se;
    let dist = StudentsT::new(0.0, 1.0, df as f64)
        .map_err(|e| Error::InvalidArgument(format!("t distribution: {e}")))?;
    let p_value = (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0);
    Ok(TTestResult {
        t,
        df: df as u64,
        p_value,
    })
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (divisor `n - 1`); 0 for fewer than two values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}
