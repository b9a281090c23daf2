//! Ringnorm covariates with two-rate exponential survival.
//!
//! Ringnorm draws each row from class 1, `N(0, 4 I)`, or class 2,
//! `N(a 1, I)` with `a = 2 / sqrt(d)`, with equal probability. Class `k`
//! survives `U ~ Exp(lambda_k)` and is censored by an independent
//! `V ~ Uniform[censor_low, censor_high]`; the record keeps `min(U, V)`.
//! Class labels are kept on the side and never become covariates.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::data::{SurvivalDataset, SurvivalRecord};
use crate::error::{Error, Result};
use crate::rng::{seeded, GENERATOR_NAME};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub d: usize,
    /// Rate for class 1 (the wide, mean-zero class).
    pub lambda1: f64,
    /// Rate for class 2.
    pub lambda2: f64,
    pub censor_low: f64,
    pub censor_high: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 1000,
            d: 20,
            lambda1: 0.1,
            lambda2: 0.5,
            censor_low: 5.0,
            censor_high: 10.0,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::InvalidArgument("n and d must be >= 1".into()));
        }
        for rate in [self.lambda1, self.lambda2] {
            if !(rate.is_finite() && rate > 0.0) {
                return Err(Error::InvalidArgument(format!("rate {rate} must be positive")));
            }
        }
        if !(self.censor_low.is_finite() && self.censor_high.is_finite() && self.censor_low < self.censor_high) {
            return Err(Error::InvalidArgument(format!(
                "censoring interval [{}, {}] is invalid",
                self.censor_low, self.censor_high
            )));
        }
        if self.censor_low < 0.0 {
            return Err(Error::InvalidArgument("censoring times must be >= 0".into()));
        }
        Ok(())
    }

    pub fn rate(&self, class: u8) -> f64 {
        if class == 1 {
            self.lambda1
        } else {
            self.lambda2
        }
    }
}

/// Class-2 mean offset `2 / sqrt(d)`.
pub fn ringnorm_offset(d: usize) -> f64 {
    2.0 / (d as f64).sqrt()
}

/// `n` ringnorm rows of dimension `d` with class labels in `{1, 2}`.
pub fn ringnorm<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> (Vec<Vec<f64>>, Vec<u8>) {
    let a = ringnorm_offset(d);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let class = if rng.random_bool(0.5) { 1u8 } else { 2u8 };
        let row = (0..d)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                if class == 1 {
                    2.0 * z
                } else {
                    a + z
                }
            })
            .collect();
        rows.push(row);
        labels.push(class);
    }
    (rows, labels)
}

/// Observed times and event indicators for the given class labels.
pub fn simulate_survival<R: Rng + ?Sized>(
    labels: &[u8],
    config: &SimConfig,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<bool>)> {
    config.validate()?;
    if let Some(bad) = labels.iter().find(|&&l| l != 1 && l != 2) {
        return Err(Error::InvalidArgument(format!("class label {bad} not in {{1, 2}}")));
    }
    let exp1 = Exp::new(config.lambda1).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let exp2 = Exp::new(config.lambda2).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let censor = Uniform::new_inclusive(config.censor_low, config.censor_high)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut times = Vec::with_capacity(labels.len());
    let mut events = Vec::with_capacity(labels.len());
    for &class in labels {
        let u: f64 = if class == 1 { exp1.sample(rng) } else { exp2.sample(rng) };
        let v: f64 = censor.sample(rng);
        times.push(u.min(v));
        events.push(u <= v);
    }
    Ok((times, events))
}

/// True survival `exp(-lambda t)` for a class.
pub fn true_survival(config: &SimConfig, class: u8, t: f64) -> f64 {
    (-config.rate(class) * t).exp()
}

/// Simulated dataset with its hidden class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedData {
    pub dataset: SurvivalDataset,
    pub labels: Vec<u8>,
    pub config: SimConfig,
}

/// Sidecar metadata written next to simulated CSV files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetadata {
    pub tool: String,
    pub generator: String,
    pub config: SimConfig,
    pub ringnorm_offset: f64,
    pub class_rates: [f64; 2],
    pub labels: Vec<u8>,
}

impl SimulatedData {
    pub fn metadata(&self) -> SimMetadata {
        SimMetadata {
            tool: crate::TOOL_VERSION.to_string(),
            generator: GENERATOR_NAME.to_string(),
            config: self.config,
            ringnorm_offset: ringnorm_offset(self.config.d),
            class_rates: [self.config.lambda1, self.config.lambda2],
            labels: self.labels.clone(),
        }
    }
}

/// Ringnorm covariates then survival times, from one stream seeded by `config.seed`.
pub fn make_ringnorm_survival(config: &SimConfig) -> Result<SimulatedData> {
    config.validate()?;
    let mut rng = seeded(config.seed);
    let (rows, labels) = ringnorm(config.n, config.d, &mut rng);
    let (times, events) = simulate_survival(&labels, config, &mut rng)?;
    let records = rows
        .into_iter()
        .zip(times.into_iter().zip(events))
        .map(|(x, (t, e))| SurvivalRecord::new(t, e, x))
        .collect::<Result<Vec<_>>>()?;
    let names = (1..=config.d).map(|j| format!("X{j}")).collect();
    Ok(SimulatedData {
        dataset: SurvivalDataset::new(records, names)?,
        labels,
        config: *config,
    })
}
