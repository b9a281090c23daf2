//! Bootstrap ensembles of survival trees.
//!
//! Tree `b` draws its bag and its feature subsets from the ChaCha stream
//! `(seed, b)`, so a forest is identical whether trees are grown on one
//! thread or many. Ensemble quantities are averaged on the grid of distinct
//! training event times, which contains every terminal-node knot.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::SurvivalDataset;
use crate::error::{Error, Result};
use crate::eval::{c_index, ConcordanceResult};
use crate::persist;
use crate::rng::stream_rng;
use crate::step::StepFunction;
use crate::tree::{SurvivalTree, TrainingView, TreeConfig};

/// Bag redraws allowed when a bootstrap sample contains no event.
const MAX_BAG_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub tree: TreeConfig,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 1000,
            tree: TreeConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalForest {
    trees: Vec<SurvivalTree>,
    /// `inbag_counts[b][i]`: times record `i` was drawn for tree `b`.
    inbag_counts: Vec<Vec<u32>>,
    event_time_grid: Vec<f64>,
    training_times: Vec<f64>,
    training_events: Vec<bool>,
    training_covariates: Vec<Vec<f64>>,
    feature_dim: usize,
}

/// Sum of `chf` over the points of `grid`.
pub fn predicted_outcome(chf: &StepFunction, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("outcome grid is empty".into()));
    }
    Ok(grid.iter().map(|&t| chf.eval(t)).sum())
}

fn event_grid(times: &[f64], events: &[bool]) -> Vec<f64> {
    let mut grid: Vec<f64> = times
        .iter()
        .zip(events)
        .filter(|(_, &e)| e)
        .map(|(&t, _)| t)
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

impl SurvivalForest {
    pub fn fit(data: &SurvivalDataset, config: &ForestConfig) -> Result<Self> {
        data.ensure_events()?;
        let n = data.len();
        if n < 2 {
            return Err(Error::InvalidArgument(format!("forest needs n >= 2 records, got {n}")));
        }
        if config.n_trees == 0 {
            return Err(Error::InvalidArgument("n_trees must be >= 1".into()));
        }
        config.tree.validate()?;

        let view = TrainingView::new(data);
        let events = data.events();
        let grown: Vec<(SurvivalTree, Vec<u32>)> = (0..config.n_trees)
            .into_par_iter()
            .map(|b| {
                let mut rng = stream_rng(config.seed, b as u64);
                let bag = draw_bag(n, &events, &mut rng)?;
                let mut counts = vec![0u32; n];
                for &i in &bag {
                    counts[i] += 1;
                }
                let tree = view.grow(&bag, &config.tree, &mut rng)?;
                Ok((tree, counts))
            })
            .collect::<Result<_>>()?;
        let (trees, inbag_counts) = grown.into_iter().unzip();

        Ok(SurvivalForest {
            trees,
            inbag_counts,
            event_time_grid: event_grid(&data.times(), &events),
            training_times: data.times(),
            training_events: events,
            training_covariates: data.covariates(),
            feature_dim: data.p(),
        })
    }

    /// Assembles a forest from already grown trees and their bags.
    pub fn from_parts(
        trees: Vec<SurvivalTree>,
        inbag_counts: Vec<Vec<u32>>,
        data: &SurvivalDataset,
    ) -> Result<Self> {
        data.ensure_events()?;
        if trees.is_empty() || trees.len() != inbag_counts.len() {
            return Err(Error::InvalidArgument(format!(
                "{} trees with {} in-bag rows",
                trees.len(),
                inbag_counts.len()
            )));
        }
        if let Some(t) = trees.iter().find(|t| t.feature_dim() != data.p()) {
            return Err(Error::DimensionMismatch {
                expected: data.p(),
                found: t.feature_dim(),
            });
        }
        if inbag_counts.iter().any(|row| row.len() != data.len()) {
            return Err(Error::InvalidArgument("in-bag rows must have one entry per record".into()));
        }
        Ok(SurvivalForest {
            trees,
            inbag_counts,
            event_time_grid: event_grid(&data.times(), &data.events()),
            training_times: data.times(),
            training_events: data.events(),
            training_covariates: data.covariates(),
            feature_dim: data.p(),
        })
    }

    pub fn trees(&self) -> &[SurvivalTree] {
        &self.trees
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn inbag_counts(&self) -> &[Vec<u32>] {
        &self.inbag_counts
    }

    /// Distinct training event times, ascending.
    pub fn event_time_grid(&self) -> &[f64] {
        &self.event_time_grid
    }

    pub fn training_times(&self) -> &[f64] {
        &self.training_times
    }

    pub fn training_events(&self) -> &[bool] {
        &self.training_events
    }

    pub fn training_len(&self) -> usize {
        self.training_times.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    fn average_on_grid<'a>(&self, trees: impl Iterator<Item = &'a SurvivalTree>, x: &[f64]) -> Option<StepFunction> {
        let grid = &self.event_time_grid;
        let mut sum = vec![0.0; grid.len()];
        let mut count = 0usize;
        for tree in trees {
            tree.terminal_chf(x)
                .accumulate_sorted(grid, 1.0, |k, v| sum[k] += v);
            count += 1;
        }
        if count == 0 {
            return None;
        }
        let scale = count as f64;
        let values = sum.into_iter().map(|s| s / scale).collect();
        Some(StepFunction::from_sorted(grid.clone(), values))
    }

    /// Ensemble cumulative hazard `(1/B) sum_b H_b(t | x)`.
    pub fn ensemble_chf(&self, x: &[f64]) -> Result<StepFunction> {
        self.check_dim(x)?;
        Ok(self
            .average_on_grid(self.trees.iter(), x)
            .expect("forest has at least one tree"))
    }

    /// Average of the tree hazards over the trees for which training record
    /// `train_index` is out of bag.
    pub fn oob_ensemble_chf(&self, train_index: usize) -> Result<StepFunction> {
        let x = self.training_covariates.get(train_index).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "training index {train_index} out of range for n = {}",
                self.training_len()
            ))
        })?;
        let oob = self
            .trees
            .iter()
            .zip(&self.inbag_counts)
            .filter(|(_, counts)| counts[train_index] == 0)
            .map(|(t, _)| t);
        self.average_on_grid(oob, x)
            .ok_or(Error::NoOobTrees(train_index))
    }

    /// Ensemble mortality `sum_j H_e(T_j | x)` over all training times.
    pub fn ensemble_mortality(&self, x: &[f64]) -> Result<f64> {
        let weights = self.mortality_weights();
        Ok(weighted_sum(&self.ensemble_chf(x)?, &weights))
    }

    pub fn predict_mortality(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        let weights = self.mortality_weights();
        rows.par_iter()
            .map(|x| Ok(weighted_sum(&self.ensemble_chf(x)?, &weights)))
            .collect()
    }

    /// Number of training times falling in each grid interval
    /// `[g_k, g_{k+1})`; mortality is the count-weighted sum of grid values.
    fn mortality_weights(&self) -> Vec<f64> {
        let grid = &self.event_time_grid;
        let mut weights = vec![0.0; grid.len()];
        for &t in &self.training_times {
            let k = grid.partition_point(|&g| g <= t);
            if k > 0 {
                weights[k - 1] += 1.0;
            }
        }
        weights
    }

    /// Out-of-bag predicted outcome per training record (sum of the OOB
    /// hazard over the event-time grid); `None` when a record is never OOB.
    pub fn oob_outcomes(&self) -> Vec<Option<f64>> {
        (0..self.training_len())
            .into_par_iter()
            .map(|i| {
                self.oob_ensemble_chf(i)
                    .ok()
                    .map(|chf| chf.values().iter().sum())
            })
            .collect()
    }

    /// Concordance of the out-of-bag outcomes over records with at least
    /// one OOB tree.
    pub fn oob_concordance(&self) -> Result<ConcordanceResult> {
        let outcomes = self.oob_outcomes();
        let defined: Vec<usize> = (0..outcomes.len()).filter(|&i| outcomes[i].is_some()).collect();
        if defined.len() < outcomes.len() {
            log::warn!(
                "{} training records have no OOB tree and are left out of the OOB error",
                outcomes.len() - defined.len()
            );
        }
        let times: Vec<f64> = defined.iter().map(|&i| self.training_times[i]).collect();
        let events: Vec<bool> = defined.iter().map(|&i| self.training_events[i]).collect();
        let pred: Vec<f64> = defined.iter().map(|&i| outcomes[i].unwrap()).collect();
        c_index(&times, &events, &pred)
    }

    /// Fraction of training records out of bag, per tree.
    pub fn oob_fractions(&self) -> Vec<f64> {
        let n = self.training_len() as f64;
        self.inbag_counts
            .iter()
            .map(|row| row.iter().filter(|&&c| c == 0).count() as f64 / n)
            .collect()
    }

    /// Number of trees for which each training record is out of bag.
    pub fn oob_tree_counts(&self) -> Vec<usize> {
        (0..self.training_len())
            .map(|i| self.inbag_counts.iter().filter(|row| row[i] == 0).count())
            .collect()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        persist::encode(persist::Kind::Forest, self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let forest: SurvivalForest = persist::decode(persist::Kind::Forest, bytes)?;
        forest.check_consistency()?;
        Ok(forest)
    }

    pub(crate) fn check_consistency(&self) -> Result<()> {
        let n = self.training_times.len();
        let ok = !self.trees.is_empty()
            && self.trees.len() == self.inbag_counts.len()
            && self.inbag_counts.iter().all(|r| r.len() == n)
            && self.training_events.len() == n
            && self.training_covariates.len() == n
            && self.training_covariates.iter().all(|r| r.len() == self.feature_dim)
            && self.trees.iter().all(|t| t.feature_dim() == self.feature_dim)
            && self.event_time_grid.windows(2).all(|w| w[0] < w[1]);
        if ok {
            Ok(())
        } else {
            Err(Error::CorruptPayload("inconsistent forest dimensions".into()))
        }
    }
}

fn weighted_sum(chf: &StepFunction, weights: &[f64]) -> f64 {
    chf.values().iter().zip(weights).map(|(v, w)| v * w).sum()
}

fn draw_bag<R: Rng + ?Sized>(n: usize, events: &[bool], rng: &mut R) -> Result<Vec<usize>> {
    for _ in 0..MAX_BAG_ATTEMPTS {
        let bag: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        if bag.iter().any(|&i| events[i]) {
            return Ok(bag);
        }
    }
    Err(Error::NoEvents)
}
