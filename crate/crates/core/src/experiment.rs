//! Paired RSF versus KIRSF experiments and their output files.
//!
//! Realization `r` derives its data, split and forest seeds from the master
//! seed and `r`. Both arms see the same split and the same forest seed, and
//! differ only in whether covariates are kernelized. Held-out error is
//! `1 - C` with the test records ranked by ensemble mortality.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{split_indices, SurvivalDataset};
use crate::error::{Error, Result};
use crate::eval::{c_index, mean, pooled_t_test, sample_sd, TTestResult};
use crate::forest::ForestConfig;
use crate::kernels::KernelChoice;
use crate::model::SurvivalModel;
use crate::rng::{derive_seed, seeded, GENERATOR_NAME};
use crate::sim::{make_ringnorm_survival, true_survival, SimConfig};
use crate::splitrules::NodeSample;
use crate::tree::nelson_aalen;

/// Label written next to every held-out error.
pub const TEST_ERROR_SOURCE: &str = "1 - C on test records ranked by ensemble mortality";

/// Smallest share of realizations that must complete for a summary.
pub const MIN_COMPLETED_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "RSF")]
    Rsf,
    #[serde(rename = "KIRSF")]
    Kirsf,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Rsf => "RSF",
            Method::Kirsf => "KIRSF",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSettings {
    pub realizations: usize,
    pub master_seed: u64,
    /// Forest settings shared by both arms; `seed` is replaced per realization.
    pub forest: ForestConfig,
    pub train_fraction: f64,
    pub kernel: KernelChoice,
    /// Keep survival curves for the last realization.
    pub curves: bool,
}

impl ExperimentSettings {
    /// Paper ringnorm setup: 100 of 1000 records for training, Gaussian kernel.
    pub fn ringnorm() -> Self {
        ExperimentSettings {
            realizations: 50,
            master_seed: 0,
            forest: ForestConfig::default(),
            train_fraction: 0.1,
            kernel: KernelChoice::Gaussian { sigma2: None },
            curves: false,
        }
    }

    /// Paper BMT setup: 90/10 splits, linear kernel.
    pub fn bmt() -> Self {
        ExperimentSettings {
            realizations: 100,
            train_fraction: 0.9,
            kernel: KernelChoice::Linear,
            ..Self::ringnorm()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.realizations < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 realizations, got {}",
                self.realizations
            )));
        }
        self.forest.tree.validate()
    }
}

/// Seeds and errors of one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationOutcome {
    pub realization: usize,
    pub data_seed: u64,
    pub split_seed: u64,
    pub forest_seed: u64,
    pub rsf_error: f64,
    pub kirsf_error: f64,
    /// Forest seed used by each arm; equal by construction.
    pub rsf_forest_seed: u64,
    pub kirsf_forest_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub method: Method,
    pub per_realization_errors: Vec<f64>,
    pub mean_error: f64,
    pub sample_sd: f64,
}

impl ExperimentSummary {
    pub fn from_errors(method: Method, errors: Vec<f64>) -> Self {
        ExperimentSummary {
            method,
            mean_error: mean(&errors),
            sample_sd: sample_sd(&errors),
            per_realization_errors: errors,
        }
    }
}

/// One labelled curve on a shared time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSeries {
    pub series: String,
    pub subject_id: Option<usize>,
    pub values: Vec<f64>,
}

/// Survival curves for the training records of one fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveBundle {
    /// `0` followed by the positive training event times.
    pub times: Vec<f64>,
    pub series: Vec<CurveSeries>,
}

impl CurveBundle {
    /// Per-subject `exp(-H_e)`, their pointwise mean, the Nelson-Aalen
    /// survival of `train`, and the class survival curves when `truth` is given.
    pub fn build(model: &SurvivalModel, train: &SurvivalDataset, truth: Option<&SimConfig>) -> Result<Self> {
        let grid: Vec<f64> = model
            .forest()
            .event_time_grid()
            .iter()
            .copied()
            .filter(|&t| t > 0.0)
            .collect();
        let with_origin = |v: Vec<f64>| std::iter::once(1.0).chain(v).collect::<Vec<f64>>();

        let chfs = model.predict_chf(&train.covariates())?;
        let mut series: Vec<CurveSeries> = chfs
            .iter()
            .enumerate()
            .map(|(i, chf)| CurveSeries {
                series: "subject".into(),
                subject_id: Some(i),
                values: with_origin(chf.survival_at(&grid)),
            })
            .collect();

        let npoints = grid.len() + 1;
        let mut avg = vec![0.0; npoints];
        for s in &series {
            for (a, v) in avg.iter_mut().zip(&s.values) {
                *a += v;
            }
        }
        let count = series.len().max(1) as f64;
        avg.iter_mut().for_each(|a| *a /= count);
        series.push(CurveSeries {
            series: "ensemble".into(),
            subject_id: None,
            values: avg,
        });

        let na = nelson_aalen(&NodeSample::new(train.times(), train.events())?);
        series.push(CurveSeries {
            series: "nelson_aalen".into(),
            subject_id: None,
            values: with_origin(na.survival_at(&grid)),
        });

        if let Some(cfg) = truth {
            for class in [1u8, 2] {
                series.push(CurveSeries {
                    series: format!("true_class{class}"),
                    subject_id: None,
                    values: with_origin(grid.iter().map(|&t| true_survival(cfg, class, t)).collect()),
                });
            }
        }

        let mut times = vec![0.0];
        times.extend(grid);
        Ok(CurveBundle { times, series })
    }

    pub fn get(&self, name: &str) -> Option<&CurveSeries> {
        self.series.iter().find(|s| s.series == name)
    }

    /// Long CSV with columns `series,subject_id,t,value`.
    pub fn write_csv<W: Write>(&self, mut out: W, metadata: &str) -> Result<()> {
        let mut body = String::from(metadata);
        body.push_str("series,subject_id,t,value\n");
        for s in &self.series {
            let id = s.subject_id.map(|i| i.to_string()).unwrap_or_default();
            for (t, v) in self.times.iter().zip(&s.values) {
                body.push_str(&format!("{},{},{},{}\n", s.series, id, t, v));
            }
        }
        out.write_all(body.as_bytes()).map_err(|e| Error::Experiment(e.to_string()))
    }
}

/// Curves for both arms of the last realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmCurves {
    pub rsf: CurveBundle,
    pub kirsf: CurveBundle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub settings: ExperimentSettings,
    pub sim: Option<SimConfig>,
    pub outcomes: Vec<RealizationOutcome>,
    pub failures: Vec<(usize, String)>,
    pub rsf: ExperimentSummary,
    pub kirsf: ExperimentSummary,
    pub t_test: TTestResult,
    pub curves: Option<ArmCurves>,
}

struct Realization {
    outcome: RealizationOutcome,
    curves: Option<ArmCurves>,
}

fn test_error(model: &SurvivalModel, test: &SurvivalDataset) -> Result<f64> {
    let pred = model.predict_mortality(&test.covariates())?;
    Ok(c_index(&test.times(), &test.events(), &pred)?.prediction_error)
}

fn run_realization(
    settings: &ExperimentSettings,
    r: usize,
    make_data: &(dyn Fn(u64) -> Result<SurvivalDataset> + Sync),
    sim: Option<&SimConfig>,
) -> Result<Realization> {
    let base = derive_seed(settings.master_seed, r as u64);
    let data_seed = derive_seed(base, 0);
    let split_seed = derive_seed(base, 1);
    let forest_seed = derive_seed(base, 2);

    let data = make_data(data_seed)?;
    let (train_idx, test_idx) = split_indices(&data, settings.train_fraction, &mut seeded(split_seed))?;
    let train = data.subset(&train_idx);
    let test = data.subset(&test_idx);
    let config = ForestConfig {
        seed: forest_seed,
        ..settings.forest
    };
    let rsf = SurvivalModel::fit(&train, &config, None)?;
    let kirsf = SurvivalModel::fit(&train, &config, Some(settings.kernel))?;

    let curves = if settings.curves && r + 1 == settings.realizations {
        let truth = sim.map(|s| SimConfig { seed: data_seed, ..*s });
        Some(ArmCurves {
            rsf: CurveBundle::build(&rsf, &train, truth.as_ref())?,
            kirsf: CurveBundle::build(&kirsf, &train, truth.as_ref())?,
        })
    } else {
        None
    };

    Ok(Realization {
        outcome: RealizationOutcome {
            realization: r,
            data_seed,
            split_seed,
            forest_seed,
            rsf_error: test_error(&rsf, &test)?,
            kirsf_error: test_error(&kirsf, &test)?,
            rsf_forest_seed: rsf.forest_config().seed,
            kirsf_forest_seed: kirsf.forest_config().seed,
        },
        curves,
    })
}

fn run_paired(
    name: &str,
    settings: &ExperimentSettings,
    sim: Option<SimConfig>,
    make_data: &(dyn Fn(u64) -> Result<SurvivalDataset> + Sync),
) -> Result<ExperimentReport> {
    settings.validate()?;
    let results: Vec<Result<Realization>> = (0..settings.realizations)
        .into_par_iter()
        .map(|r| run_realization(settings, r, make_data, sim.as_ref()))
        .collect();

    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    let mut curves = None;
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok(real) => {
                outcomes.push(real.outcome);
                if real.curves.is_some() {
                    curves = real.curves;
                }
            }
            Err(e) => {
                log::warn!("realization {r} failed: {e}");
                failures.push((r, e.to_string()));
            }
        }
    }
    let needed = (MIN_COMPLETED_FRACTION * settings.realizations as f64).ceil() as usize;
    if outcomes.len() < needed.max(2) {
        return Err(Error::Experiment(format!(
            "only {} of {} realizations completed; at least {} required",
            outcomes.len(),
            settings.realizations,
            needed.max(2)
        )));
    }
    let rsf = ExperimentSummary::from_errors(Method::Rsf, outcomes.iter().map(|o| o.rsf_error).collect());
    let kirsf = ExperimentSummary::from_errors(Method::Kirsf, outcomes.iter().map(|o| o.kirsf_error).collect());
    let t_test = pooled_t_test(&kirsf.per_realization_errors, &rsf.per_realization_errors)?;
    Ok(ExperimentReport {
        experiment: name.to_string(),
        settings: settings.clone(),
        sim,
        outcomes,
        failures,
        rsf,
        kirsf,
        t_test,
        curves,
    })
}

/// Ringnorm experiment; `sim.seed` is replaced by each realization's data seed.
pub fn run_ringnorm(settings: &ExperimentSettings, sim: &SimConfig) -> Result<ExperimentReport> {
    sim.validate()?;
    let make = |seed: u64| make_ringnorm_survival(&SimConfig { seed, ..*sim }).map(|s| s.dataset);
    run_paired("ringnorm", settings, Some(*sim), &make)
}

/// Experiment on a fixed dataset, resplit in every realization.
pub fn run_bmt(settings: &ExperimentSettings, data: &SurvivalDataset) -> Result<ExperimentReport> {
    data.ensure_events()?;
    let make = |_seed: u64| Ok(data.clone());
    run_paired("bmt", settings, None, &make)
}

impl ExperimentReport {
    /// `#`-prefixed lines identifying the tool, generator and full settings.
    pub fn metadata_header(&self) -> String {
        let settings = serde_json::to_string(&self.settings).expect("settings serialize");
        let mut out = format!(
            "# tool: {}\n# experiment: {}\n# master_seed: {}\n# generator: {}\n# settings: {}\n",
            crate::TOOL_VERSION,
            self.experiment,
            self.settings.master_seed,
            GENERATOR_NAME,
            settings
        );
        if let Some(sim) = &self.sim {
            out.push_str(&format!("# simulation: {}\n", serde_json::to_string(sim).expect("sim serializes")));
        }
        out.push_str(&format!("# test_error: {TEST_ERROR_SOURCE}\n"));
        out
    }

    /// Per-realization seeds and errors, one row per completed realization.
    pub fn write_realizations_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut body = self.metadata_header();
        for (r, msg) in &self.failures {
            body.push_str(&format!("# failed realization {r}: {msg}\n"));
        }
        body.push_str("realization,data_seed,split_seed,forest_seed,rsf_error,kirsf_error\n");
        for o in &self.outcomes {
            body.push_str(&format!(
                "{},{},{},{},{},{}\n",
                o.realization, o.data_seed, o.split_seed, o.forest_seed, o.rsf_error, o.kirsf_error
            ));
        }
        out.write_all(body.as_bytes()).map_err(|e| Error::Experiment(e.to_string()))
    }

    /// Summary table with columns `method, mean_error_pct, sd_pct, realizations`.
    pub fn write_summary_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut body = self.metadata_header();
        body.push_str("method\tmean_error_pct\tsd_pct\trealizations\n");
        for s in [&self.rsf, &self.kirsf] {
            body.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                s.method,
                100.0 * s.mean_error,
                100.0 * s.sample_sd,
                s.per_realization_errors.len()
            ));
        }
        out.write_all(body.as_bytes()).map_err(|e| Error::Experiment(e.to_string()))
    }

    /// Pooled t-test of KIRSF errors against RSF errors: `t, df, p`.
    pub fn write_ttest_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut body = self.metadata_header();
        body.push_str("t\tdf\tp\n");
        body.push_str(&format!("{}\t{}\t{}\n", self.t_test.t, self.t_test.df, self.t_test.p_value));
        out.write_all(body.as_bytes()).map_err(|e| Error::Experiment(e.to_string()))
    }
}
