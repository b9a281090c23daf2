//! Single survival trees.
//!
//! A tree is grown on a bootstrap bag by exhaustive threshold search over a
//! random subset of `mtry` features per node. Terminal nodes store the
//! Nelson-Aalen cumulative hazard of their members, counting each member as
//! many times as it was drawn into the bag.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::SurvivalDataset;
use crate::error::{Error, Result};
use crate::splitrules::{NodeSample, NodeScan, SplitCandidate, SplitRule, MIN_SCORE};
use crate::step::StepFunction;

/// Nelson-Aalen estimate `H(t) = sum_{t_i <= t} d_i / r_i` over distinct
/// event times; the zero function when the sample has no events.
pub fn nelson_aalen(sample: &NodeSample) -> StepFunction {
    let (times, events, weights) = (sample.times(), sample.events(), sample.weights());
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));

    let mut at_risk: f64 = weights.iter().sum();
    let (mut knots, mut values) = (Vec::new(), Vec::new());
    let mut cumulative = 0.0;
    let mut i = 0;
    while i < order.len() {
        let t = times[order[i]];
        let (mut deaths, mut leaving) = (0.0, 0.0);
        while i < order.len() && times[order[i]] == t {
            let j = order[i];
            leaving += weights[j];
            if events[j] {
                deaths += weights[j];
            }
            i += 1;
        }
        if deaths > 0.0 {
            cumulative += deaths / at_risk;
            knots.push(t);
            values.push(cumulative);
        }
        at_risk -= leaving;
    }
    StepFunction::from_sorted(knots, values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    /// Features tried per node; `None` means `ceil(sqrt(p))`.
    pub mtry: Option<usize>,
    pub min_node_events: usize,
    pub min_node_size: usize,
    pub split_rule: SplitRule,
    pub max_depth: Option<usize>,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            mtry: None,
            min_node_events: 3,
            min_node_size: 3,
            split_rule: SplitRule::Logrank,
            max_depth: None,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mtry == Some(0) {
            return Err(Error::InvalidArgument("mtry must be >= 1".into()));
        }
        if self.min_node_events == 0 || self.min_node_size == 0 {
            return Err(Error::InvalidArgument(
                "min_node_events and min_node_size must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// `mtry` clamped to `1..=p`.
    pub fn resolved_mtry(&self, p: usize) -> usize {
        let default = (p as f64).sqrt().ceil() as usize;
        self.mtry.unwrap_or(default).clamp(1, p.max(1))
    }
}

/// Node of a tree stored in a flat arena; children are arena indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Internal {
        feature_index: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Terminal {
        chf: StepFunction,
        member_count: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalTree {
    nodes: Vec<TreeNode>,
    feature_dim: usize,
}

impl SurvivalTree {
    /// Assembles a tree from nodes with the root at index 0.
    pub fn from_nodes(nodes: Vec<TreeNode>, feature_dim: usize) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidArgument("tree needs a root node".into()));
        }
        for (i, node) in nodes.iter().enumerate() {
            if let TreeNode::Internal {
                feature_index,
                threshold,
                left,
                right,
            } = *node
            {
                if feature_index >= feature_dim || !threshold.is_finite() {
                    return Err(Error::InvalidArgument(format!("node {i} has an invalid split")));
                }
                if left <= i || right <= i || left >= nodes.len() || right >= nodes.len() {
                    return Err(Error::InvalidArgument(format!("node {i} has invalid children")));
                }
            }
        }
        Ok(SurvivalTree { nodes, feature_dim })
    }

    /// A tree with a single terminal node.
    pub fn leaf(chf: StepFunction, member_count: u32, feature_dim: usize) -> Self {
        SurvivalTree {
            nodes: vec![TreeNode::Terminal { chf, member_count }],
            feature_dim,
        }
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn terminal_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Terminal { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Terminal { .. } => 0,
                TreeNode::Internal { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Arena index of the terminal node reached by `x` (`<=` goes left).
    pub(crate) fn terminal_index(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Terminal { .. } => return i,
                TreeNode::Internal {
                    feature_index,
                    threshold,
                    left,
                    right,
                } => i = if x[feature_index] <= threshold { left } else { right },
            }
        }
    }

    pub(crate) fn terminal_chf(&self, x: &[f64]) -> &StepFunction {
        match &self.nodes[self.terminal_index(x)] {
            TreeNode::Terminal { chf, .. } => chf,
            TreeNode::Internal { .. } => unreachable!("routing ends at a terminal node"),
        }
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                found: x.len(),
            });
        }
        Ok(())
    }
}

/// Cumulative hazard predicted by `tree` for covariates `x`.
pub fn tree_chf<'a>(tree: &'a SurvivalTree, x: &[f64]) -> Result<&'a StepFunction> {
    tree.check_dim(x)?;
    Ok(tree.terminal_chf(x))
}

/// Column-major view of a training set shared by all trees of a forest.
pub(crate) struct TrainingView {
    columns: Vec<Vec<f64>>,
    times: Vec<f64>,
    events: Vec<bool>,
}

impl TrainingView {
    pub(crate) fn new(data: &SurvivalDataset) -> Self {
        let columns = (0..data.p())
            .map(|j| data.records().iter().map(|r| r.covariates[j]).collect())
            .collect();
        TrainingView {
            columns,
            times: data.times(),
            events: data.events(),
        }
    }

    fn p(&self) -> usize {
        self.columns.len()
    }

    pub(crate) fn grow<R: Rng + ?Sized>(
        &self,
        bag: &[usize],
        config: &TreeConfig,
        rng: &mut R,
    ) -> Result<SurvivalTree> {
        config.validate()?;
        let n = self.times.len();
        if bag.is_empty() {
            return Err(Error::InvalidArgument("bootstrap bag is empty".into()));
        }
        let mut counts = vec![0u32; n];
        for &i in bag {
            if i >= n {
                return Err(Error::InvalidArgument(format!("bag index {i} out of range for n = {n}")));
            }
            counts[i] += 1;
        }
        if !(0..n).any(|i| counts[i] > 0 && self.events[i]) {
            return Err(Error::NoEvents);
        }
        let members: Vec<(usize, f64)> = (0..n)
            .filter(|&i| counts[i] > 0)
            .map(|i| (i, f64::from(counts[i])))
            .collect();

        let mut grower = Grower {
            view: self,
            config,
            mtry: config.resolved_mtry(self.p()),
            nodes: Vec::new(),
        };
        grower.build(members, 0, rng);
        Ok(SurvivalTree {
            nodes: grower.nodes,
            feature_dim: self.p(),
        })
    }
}

struct Grower<'a> {
    view: &'a TrainingView,
    config: &'a TreeConfig,
    mtry: usize,
    nodes: Vec<TreeNode>,
}

impl Grower<'_> {
    fn sample(&self, members: &[(usize, f64)]) -> NodeSample {
        NodeSample::with_weights(
            members.iter().map(|&(i, _)| self.view.times[i]).collect(),
            members.iter().map(|&(i, _)| self.view.events[i]).collect(),
            members.iter().map(|&(_, w)| w).collect(),
        )
        .expect("training view holds valid survival records")
    }

    fn build<R: Rng + ?Sized>(&mut self, members: Vec<(usize, f64)>, depth: usize, rng: &mut R) -> usize {
        let id = self.nodes.len();
        let sample = self.sample(&members);
        match self.choose_split(&members, &sample, depth, rng) {
            Some(split) => {
                self.nodes.push(TreeNode::Internal {
                    feature_index: split.feature_index,
                    threshold: split.threshold,
                    left: 0,
                    right: 0,
                });
                let column = &self.view.columns[split.feature_index];
                let (left, right): (Vec<_>, Vec<_>) =
                    members.into_iter().partition(|&(i, _)| column[i] <= split.threshold);
                let l = self.build(left, depth + 1, rng);
                let r = self.build(right, depth + 1, rng);
                if let TreeNode::Internal { left, right, .. } = &mut self.nodes[id] {
                    *left = l;
                    *right = r;
                }
            }
            None => {
                let member_count = sample.weights().iter().sum::<f64>() as u32;
                self.nodes.push(TreeNode::Terminal {
                    chf: nelson_aalen(&sample),
                    member_count,
                });
            }
        }
        id
    }

    fn choose_split<R: Rng + ?Sized>(
        &self,
        members: &[(usize, f64)],
        sample: &NodeSample,
        depth: usize,
        rng: &mut R,
    ) -> Option<SplitCandidate> {
        let size: f64 = sample.weights().iter().sum();
        let events = sample.event_weight();
        if size < self.config.min_node_size as f64
            || events < self.config.min_node_events as f64
            || size < 2.0
            || self.config.max_depth.is_some_and(|d| depth >= d)
        {
            return None;
        }
        let mut features = index::sample(rng, self.view.p(), self.mtry).into_vec();
        features.sort_unstable();

        let scan = NodeScan::new(sample, self.config.split_rule);
        let mut best: Option<SplitCandidate> = None;
        let mut values = vec![0.0; members.len()];
        for &f in &features {
            let column = &self.view.columns[f];
            for (v, &(i, _)) in values.iter_mut().zip(members) {
                *v = column[i];
            }
            if let Some((threshold, score)) = scan.best_threshold(&values) {
                if score > MIN_SCORE && best.is_none_or(|b| score > b.score) {
                    best = Some(SplitCandidate {
                        feature_index: f,
                        threshold,
                        score,
                        rule: self.config.split_rule,
                    });
                }
            }
        }
        best
    }
}

/// Grows one tree on the bag `row_indices` (indices into `data`, repeats allowed).
pub fn grow_tree<R: Rng + ?Sized>(
    data: &SurvivalDataset,
    row_indices: &[usize],
    config: &TreeConfig,
    rng: &mut R,
) -> Result<SurvivalTree> {
    TrainingView::new(data).grow(row_indices, config, rng)
}
