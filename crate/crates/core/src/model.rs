//! A forest together with the covariate transform it was trained on.
//!
//! Without a kernel the forest sees the raw covariates (plain RSF). With a
//! kernel, covariates are standardized with training statistics and mapped
//! to `(K(x_1, x), ..., K(x_n, x))` over the training records before the
//! forest sees them (KIRSF).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::SurvivalDataset;
use crate::error::{Error, Result};
use crate::eval::ConcordanceResult;
use crate::forest::{ForestConfig, SurvivalForest};
use crate::kernels::{KernelChoice, KernelPipeline};
use crate::persist;
use crate::step::StepFunction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalModel {
    feature_names: Vec<String>,
    kernel: Option<KernelPipeline>,
    forest: SurvivalForest,
    forest_config: ForestConfig,
}

impl SurvivalModel {
    pub fn fit(data: &SurvivalDataset, config: &ForestConfig, kernel: Option<KernelChoice>) -> Result<Self> {
        data.ensure_events()?;
        let (kernel, forest) = match kernel {
            None => (None, SurvivalForest::fit(data, config)?),
            Some(choice) => {
                let pipeline = KernelPipeline::fit(&data.covariates(), choice)?;
                let forest = SurvivalForest::fit(&pipeline.kernelize(data)?, config)?;
                (Some(pipeline), forest)
            }
        };
        Ok(SurvivalModel {
            feature_names: data.feature_names().to_vec(),
            kernel,
            forest,
            forest_config: *config,
        })
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn kernel(&self) -> Option<&KernelPipeline> {
        self.kernel.as_ref()
    }

    pub fn forest(&self) -> &SurvivalForest {
        &self.forest
    }

    pub fn forest_config(&self) -> &ForestConfig {
        &self.forest_config
    }

    /// Number of raw covariates expected at prediction time.
    pub fn input_dim(&self) -> usize {
        self.feature_names.len()
    }

    /// Raw covariates mapped to the space the forest was grown in.
    pub fn transform(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        if let Some(bad) = rows.iter().find(|r| r.len() != self.input_dim()) {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: bad.len(),
            });
        }
        match &self.kernel {
            None => Ok(rows.to_vec()),
            Some(k) => k.transform(rows),
        }
    }

    pub fn predict_mortality(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.forest.predict_mortality(&self.transform(rows)?)
    }

    pub fn predict_chf(&self, rows: &[Vec<f64>]) -> Result<Vec<StepFunction>> {
        self.transform(rows)?
            .iter()
            .map(|x| self.forest.ensemble_chf(x))
            .collect()
    }

    pub fn oob_concordance(&self) -> Result<ConcordanceResult> {
        self.forest.oob_concordance()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        persist::encode(persist::Kind::Model, self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let model: SurvivalModel = persist::decode(persist::Kind::Model, bytes)?;
        model.forest.check_consistency()?;
        let expected = match &model.kernel {
            None => model.forest.feature_dim(),
            Some(k) => {
                if k.basis().len() != model.forest.feature_dim() {
                    return Err(Error::CorruptPayload("kernel basis does not match forest".into()));
                }
                k.input_dim()
            }
        };
        if expected != model.feature_names.len() {
            return Err(Error::CorruptPayload("feature names do not match model input".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
    }
}
