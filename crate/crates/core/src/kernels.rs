//! Kernel functions and kernel-induced covariates.
//!
//! Each training observation `x_i` induces a covariate `K_i(z) = K(x_i, z)`.
//! With `n` training observations every record is re-expressed by the `n`
//! values `K_1(z), ..., K_n(z)`, which replace the original covariates.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::SurvivalDataset;
use crate::error::{Error, Result};

/// Kernel family with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum KernelSpec {
    /// `<x, z>`
    Linear,
    /// `(<x, z> + c)^degree`
    Polynomial { c: f64, degree: u32 },
    /// `exp(-|x - z|^2 / (2 sigma2))`
    Gaussian { sigma2: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Polynomial { c, degree } => {
                if degree < 1 {
                    return Err(Error::InvalidArgument("polynomial degree must be >= 1".into()));
                }
                if !c.is_finite() {
                    return Err(Error::NonFinite("polynomial offset"));
                }
                Ok(())
            }
            KernelSpec::Gaussian { sigma2 } => {
                if sigma2.is_finite() && sigma2 > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument(format!("gaussian sigma2 must be positive, got {sigma2}")))
                }
            }
        }
    }

    /// Evaluation without dimension or finiteness checks.
    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], z: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => dot(x, z),
            KernelSpec::Polynomial { c, degree } => (dot(x, z) + c).powi(degree as i32),
            KernelSpec::Gaussian { sigma2 } => {
                let sq: f64 = x.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                (-sq / (2.0 * sigma2)).exp()
            }
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Linear => write!(f, "linear"),
            KernelSpec::Polynomial { c, degree } => write!(f, "polynomial(c={c}, degree={degree})"),
            KernelSpec::Gaussian { sigma2 } => write!(f, "gaussian(sigma2={sigma2})"),
        }
    }
}

#[inline]
fn dot(x: &[f64], z: &[f64]) -> f64 {
    x.iter().zip(z).map(|(a, b)| a * b).sum()
}

pub fn kernel_eval(spec: &KernelSpec, x: &[f64], z: &[f64]) -> Result<f64> {
    if x.len() != z.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: z.len(),
        });
    }
    if x.iter().chain(z).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("kernel input"));
    }
    spec.validate()?;
    Ok(spec.eval_unchecked(x, z))
}

/// Kernel selection before the standardized dimension is known.
///
/// A Gaussian kernel without an explicit `sigma2` uses the standardized
/// feature dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum KernelChoice {
    Linear,
    Polynomial { c: f64, degree: u32 },
    Gaussian { sigma2: Option<f64> },
}

impl KernelChoice {
    pub fn resolve(&self, p: usize) -> KernelSpec {
        match *self {
            KernelChoice::Linear => KernelSpec::Linear,
            KernelChoice::Polynomial { c, degree } => KernelSpec::Polynomial { c, degree },
            KernelChoice::Gaussian { sigma2 } => KernelSpec::Gaussian {
                sigma2: sigma2.unwrap_or(p.max(1) as f64),
            },
        }
    }
}

/// Training observations acting as kernel anchors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelBasis {
    anchors: Vec<Vec<f64>>,
    spec: KernelSpec,
    feature_names: Vec<String>,
}

impl KernelBasis {
    pub fn build(train_covariates: &[Vec<f64>], spec: KernelSpec) -> Result<Self> {
        spec.validate()?;
        let first = train_covariates
            .first()
            .ok_or_else(|| Error::InvalidArgument("kernel basis needs at least one anchor".into()))?;
        let p = first.len();
        for row in train_covariates {
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("kernel anchor"));
            }
        }
        let feature_names = (1..=train_covariates.len()).map(|i| format!("K_{i}")).collect();
        Ok(KernelBasis {
            anchors: train_covariates.to_vec(),
            spec,
            feature_names,
        })
    }

    pub fn anchors(&self) -> &[Vec<f64>] {
        &self.anchors
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    /// Dimension of the vectors the basis accepts.
    pub fn input_dim(&self) -> usize {
        self.anchors[0].len()
    }

    /// Row `i`, column `j` holds `K(anchor_j, x_i)`.
    pub fn transform(&self, covariates: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let p = self.input_dim();
        for row in covariates {
            if row.len() != p {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("covariates"));
            }
        }
        Ok(covariates
            .par_iter()
            .map(|x| self.anchors.iter().map(|a| self.spec.eval_unchecked(a, x)).collect())
            .collect())
    }

    pub fn transform_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.transform(std::slice::from_ref(&x.to_vec()))?.remove(0))
    }
}

/// Replaces the covariates of `data` by their kernel-induced features.
pub fn kernelize_dataset(data: &SurvivalDataset, basis: &KernelBasis) -> Result<SurvivalDataset> {
    if data.p() != basis.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.input_dim(),
            found: data.p(),
        });
    }
    let rows = basis.transform(&data.covariates())?;
    data.with_covariates(rows, basis.feature_names().to_vec())
}

/// Per-feature standardization fitted on training rows.
///
/// Features with zero sample variance are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    input_dim: usize,
    kept: Vec<usize>,
    means: Vec<f64>,
    scales: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::InvalidArgument("standardization needs at least two rows".into()));
        }
        let input_dim = rows[0].len();
        if let Some(bad) = rows.iter().find(|r| r.len() != input_dim) {
            return Err(Error::DimensionMismatch {
                expected: input_dim,
                found: bad.len(),
            });
        }
        let (mut kept, mut means, mut scales) = (Vec::new(), Vec::new(), Vec::new());
        for j in 0..input_dim {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n as f64;
            let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let sd = var.sqrt();
            if sd > 1e-12 * mean.abs().max(1.0) {
                kept.push(j);
                means.push(mean);
                scales.push(sd);
            } else {
                log::warn!("dropping zero-variance feature {j} before kernel evaluation");
            }
        }
        if kept.is_empty() {
            return Err(Error::InvalidArgument("every feature has zero variance".into()));
        }
        Ok(Standardizer {
            input_dim,
            kept,
            means,
            scales,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.kept.len()
    }

    pub fn kept_features(&self) -> &[usize] {
        &self.kept
    }

    pub fn transform(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter()
            .map(|r| {
                if r.len() != self.input_dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.input_dim,
                        found: r.len(),
                    });
                }
                Ok(self
                    .kept
                    .iter()
                    .zip(self.means.iter().zip(&self.scales))
                    .map(|(&j, (m, s))| (r[j] - m) / s)
                    .collect())
            })
            .collect()
    }
}

/// Standardization followed by the kernel basis, fitted on a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelPipeline {
    standardizer: Standardizer,
    basis: KernelBasis,
}

impl KernelPipeline {
    pub fn fit(train_covariates: &[Vec<f64>], choice: KernelChoice) -> Result<Self> {
        let standardizer = Standardizer::fit(train_covariates)?;
        let spec = choice.resolve(standardizer.output_dim());
        let basis = KernelBasis::build(&standardizer.transform(train_covariates)?, spec)?;
        Ok(KernelPipeline {
            standardizer,
            basis,
        })
    }

    pub fn basis(&self) -> &KernelBasis {
        &self.basis
    }

    pub fn standardizer(&self) -> &Standardizer {
        &self.standardizer
    }

    pub fn input_dim(&self) -> usize {
        self.standardizer.input_dim()
    }

    pub fn transform(&self, covariates: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        self.basis.transform(&self.standardizer.transform(covariates)?)
    }

    pub fn kernelize(&self, data: &SurvivalDataset) -> Result<SurvivalDataset> {
        let rows = self.transform(&data.covariates())?;
        data.with_covariates(rows, self.basis.feature_names().to_vec())
    }
}
