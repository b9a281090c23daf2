//! Split scores for survival trees.
//!
//! Two rules are available:
//!
//! * two-sample log-rank statistic `|O - E| / sqrt(V)` with the
//!   hypergeometric variance, summed over distinct event times;
//! * relative-risk deviance reduction. The baseline cumulative hazard is
//!   the Nelson-Aalen estimate on the parent node and stays fixed while the
//!   child splits are scored; each child gets its own `theta` estimate.
//!
//! Samples carry multiplicities so bootstrap duplicates count once per draw.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::step::StepFunction;
use crate::tree::nelson_aalen;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitRule {
    #[default]
    Logrank,
    Deviance,
}

impl fmt::Display for SplitRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitRule::Logrank => "logrank",
            SplitRule::Deviance => "deviance",
        })
    }
}

impl FromStr for SplitRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logrank" => Ok(SplitRule::Logrank),
            "deviance" => Ok(SplitRule::Deviance),
            other => Err(Error::InvalidArgument(format!(
                "unknown split rule '{other}' (expected logrank or deviance)"
            ))),
        }
    }
}

/// `(time, event)` pairs of the observations in one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSample {
    times: Vec<f64>,
    events: Vec<bool>,
    weights: Vec<f64>,
}

impl NodeSample {
    pub fn new(times: Vec<f64>, events: Vec<bool>) -> Result<Self> {
        let weights = vec![1.0; times.len()];
        Self::with_weights(times, events, weights)
    }

    /// Each observation counts `weights[i]` times (bootstrap multiplicity).
    pub fn with_weights(times: Vec<f64>, events: Vec<bool>, weights: Vec<f64>) -> Result<Self> {
        if times.len() != events.len() || times.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "node sample lengths differ: {} times, {} events, {} weights",
                times.len(),
                events.len(),
                weights.len()
            )));
        }
        if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::InvalidArgument("node sample times must be finite and >= 0".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::InvalidArgument("node sample weights must be positive".into()));
        }
        Ok(NodeSample {
            times,
            events,
            weights,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn events(&self) -> &[bool] {
        &self.events
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn event_weight(&self) -> f64 {
        self.events
            .iter()
            .zip(&self.weights)
            .filter(|(e, _)| **e)
            .map(|(_, w)| w)
            .sum()
    }

    fn concat(a: &NodeSample, b: &NodeSample) -> NodeSample {
        NodeSample {
            times: [a.times.as_slice(), &b.times].concat(),
            events: [a.events.as_slice(), &b.events].concat(),
            weights: [a.weights.as_slice(), &b.weights].concat(),
        }
    }

    /// Sorted `(time bits, event, weight bits)` triples, for multiset comparison.
    fn canonical(&self) -> Vec<(u64, bool, u64)> {
        let mut v: Vec<_> = (0..self.len())
            .map(|i| (self.times[i].to_bits(), self.events[i], self.weights[i].to_bits()))
            .collect();
        v.sort_unstable();
        v
    }
}

/// Best split found for a node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitCandidate {
    pub feature_index: usize,
    pub threshold: f64,
    pub score: f64,
    pub rule: SplitRule,
}

/// Two-sample log-rank statistic in absolute value form.
///
/// Returns 0 when the variance vanishes.
pub fn logrank_statistic(left: &NodeSample, right: &NodeSample) -> Result<f64> {
    if left.is_empty() || right.is_empty() {
        return Err(Error::InvalidArgument("log-rank groups must be nonempty".into()));
    }
    if left.event_weight() + right.event_weight() <= 0.0 {
        return Err(Error::InvalidArgument("log-rank needs at least one event".into()));
    }
    let combined = NodeSample::concat(left, right);
    let scan = NodeScan::new(&combined, SplitRule::Logrank);
    let mut left_w = vec![0.0; scan.distinct_times()];
    let mut left_d = vec![0.0; scan.distinct_times()];
    for i in 0..left.len() {
        let k = scan.rank[i];
        left_w[k] += scan.weight[i];
        if scan.event[i] {
            left_d[k] += scan.weight[i];
        }
    }
    Ok(scan.logrank(&left_w, &left_d))
}

/// Nelson-Aalen estimate of the baseline cumulative hazard on `sample`.
pub fn estimate_baseline_chf(sample: &NodeSample) -> Result<StepFunction> {
    if sample.is_empty() {
        return Err(Error::InvalidArgument("baseline estimate needs a nonempty sample".into()));
    }
    Ok(nelson_aalen(sample))
}

/// Maximum likelihood relative risk `sum(delta) / sum(Lambda0(t))`.
pub fn estimate_theta(sample: &NodeSample, baseline: &StepFunction) -> Result<f64> {
    let events = sample.event_weight();
    let exposure: f64 = sample
        .times
        .iter()
        .zip(&sample.weights)
        .map(|(&t, w)| w * baseline.eval(t))
        .sum();
    if exposure > 0.0 {
        Ok(events / exposure)
    } else if events == 0.0 {
        Ok(0.0)
    } else {
        Err(Error::ZeroBaseline { events })
    }
}

/// Relative-risk deviance of a node:
/// `sum 2 { delta log(delta / (Lambda0(t) theta)) - (delta - Lambda0(t) theta) }`.
///
/// Censored terms use `0 log 0 = 0`; terms with `Lambda0(t) = 0` are skipped.
pub fn node_deviance(sample: &NodeSample, baseline: &StepFunction, theta: f64) -> Result<f64> {
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(Error::InvalidArgument(format!("theta must be finite and >= 0, got {theta}")));
    }
    let mut total = 0.0;
    for i in 0..sample.len() {
        let cumhaz = baseline.eval(sample.times[i]);
        if cumhaz == 0.0 {
            continue;
        }
        let expected = cumhaz * theta;
        let delta = if sample.events[i] { 1.0 } else { 0.0 };
        let log_term = if delta > 0.0 { delta * (delta / expected).ln() } else { 0.0 };
        total += sample.weights[i] * 2.0 * (log_term - (delta - expected));
    }
    Ok(total)
}

/// `D(parent) - D(left) - D(right)` against the parent's Nelson-Aalen baseline.
pub fn deviance_reduction(parent: &NodeSample, left: &NodeSample, right: &NodeSample) -> Result<f64> {
    if left.is_empty() || right.is_empty() {
        return Err(Error::InvalidArgument("both children must be nonempty".into()));
    }
    if NodeSample::concat(left, right).canonical() != parent.canonical() {
        return Err(Error::InvalidArgument("children do not partition the parent".into()));
    }
    let baseline = estimate_baseline_chf(parent)?;
    let deviance = |s: &NodeSample| -> Result<f64> {
        let theta = estimate_theta(s, &baseline)?;
        node_deviance(s, &baseline, theta)
    };
    Ok(deviance(parent)? - deviance(left)? - deviance(right)?)
}

/// Scores below this are treated as no improvement.
pub(crate) const MIN_SCORE: f64 = 1e-12;

/// Node-level precomputation for scoring many candidate splits.
///
/// Members are indexed as given; `rank[i]` is the position of member `i`'s
/// time among the node's distinct times.
pub(crate) struct NodeScan {
    rule: SplitRule,
    rank: Vec<usize>,
    event: Vec<bool>,
    weight: Vec<f64>,
    /// Event weight at each distinct time.
    deaths: Vec<f64>,
    /// Weight with time >= each distinct time.
    at_risk: Vec<f64>,
    /// Parent Nelson-Aalen value at each member's time (deviance rule).
    cumhaz: Vec<f64>,
    total_events: f64,
    total_exposure: f64,
}

impl NodeScan {
    pub(crate) fn new(sample: &NodeSample, rule: SplitRule) -> NodeScan {
        let n = sample.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| sample.times[a].total_cmp(&sample.times[b]));
        let mut rank = vec![0; n];
        let mut time_weight = Vec::new();
        let mut deaths = Vec::new();
        let mut prev = f64::NAN;
        for &i in &order {
            if sample.times[i] != prev {
                prev = sample.times[i];
                time_weight.push(0.0);
                deaths.push(0.0);
            }
            let k = time_weight.len() - 1;
            rank[i] = k;
            time_weight[k] += sample.weights[i];
            if sample.events[i] {
                deaths[k] += sample.weights[i];
            }
        }
        let mut at_risk = vec![0.0; time_weight.len()];
        let mut acc = 0.0;
        for k in (0..time_weight.len()).rev() {
            acc += time_weight[k];
            at_risk[k] = acc;
        }

        let (mut cumhaz, mut total_events, mut total_exposure) = (Vec::new(), 0.0, 0.0);
        if rule == SplitRule::Deviance {
            let mut by_rank = vec![0.0; deaths.len()];
            let mut h = 0.0;
            for k in 0..deaths.len() {
                if deaths[k] > 0.0 {
                    h += deaths[k] / at_risk[k];
                }
                by_rank[k] = h;
            }
            cumhaz = rank.iter().map(|&k| by_rank[k]).collect();
            for ((&w, &h), &event) in sample.weights.iter().zip(&cumhaz).zip(&sample.events) {
                total_exposure += w * h;
                if event {
                    total_events += w;
                }
            }
        }
        NodeScan {
            rule,
            rank,
            event: sample.events.clone(),
            weight: sample.weights.clone(),
            deaths,
            at_risk,
            cumhaz,
            total_events,
            total_exposure,
        }
    }

    pub(crate) fn distinct_times(&self) -> usize {
        self.deaths.len()
    }

    fn logrank(&self, left_w: &[f64], left_d: &[f64]) -> f64 {
        let mut r_left = 0.0;
        let (mut num, mut var) = (0.0, 0.0);
        for k in (0..self.deaths.len()).rev() {
            r_left += left_w[k];
            let d = self.deaths[k];
            if d > 0.0 {
                let r = self.at_risk[k];
                let frac = r_left / r;
                num += left_d[k] - frac * d;
                if r > 1.0 {
                    var += frac * (1.0 - frac) * ((r - d) / (r - 1.0)) * d;
                }
            }
        }
        if var > 0.0 {
            num.abs() / var.sqrt()
        } else {
            0.0
        }
    }

    /// `2 [E_L ln(E_L/S_L) + E_R ln(E_R/S_R) - E_P ln(E_P/S_P)]`, which is the
    /// deviance reduction once the `log Lambda0` terms cancel between parent
    /// and children.
    fn deviance(&self, left_events: f64, left_exposure: f64) -> Option<f64> {
        fn term(events: f64, exposure: f64) -> Option<f64> {
            if events <= 0.0 {
                Some(0.0)
            } else if exposure > 0.0 {
                Some(events * (events / exposure).ln())
            } else {
                None
            }
        }
        let right_events = self.total_events - left_events;
        let right_exposure = (self.total_exposure - left_exposure).max(0.0);
        Some(
            2.0 * (term(left_events, left_exposure)? + term(right_events, right_exposure)?
                - term(self.total_events, self.total_exposure)?),
        )
    }

    /// Best `(threshold, score)` for one feature, `values[i]` being member
    /// `i`'s value. Children satisfy `value <= threshold` (left) and
    /// `value > threshold` (right); ties in score keep the smaller threshold.
    pub(crate) fn best_threshold(&self, values: &[f64]) -> Option<(f64, f64)> {
        let n = values.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        if values[order[0]] == values[order[n - 1]] {
            return None;
        }

        let mut left_w = vec![0.0; self.deaths.len()];
        let mut left_d = vec![0.0; self.deaths.len()];
        let (mut left_events, mut left_exposure) = (0.0, 0.0);
        let total_events: f64 = self.deaths.iter().sum();
        let mut best: Option<(f64, f64)> = None;

        for pos in 0..n - 1 {
            let i = order[pos];
            let w = self.weight[i];
            match self.rule {
                SplitRule::Logrank => {
                    left_w[self.rank[i]] += w;
                    if self.event[i] {
                        left_d[self.rank[i]] += w;
                        left_events += w;
                    }
                }
                SplitRule::Deviance => {
                    if self.event[i] {
                        left_events += w;
                    }
                    left_exposure += w * self.cumhaz[i];
                }
            }
            let (lo, hi) = (values[i], values[order[pos + 1]]);
            if lo == hi {
                continue;
            }
            let score = match self.rule {
                SplitRule::Logrank => {
                    if left_events <= 0.0 || total_events - left_events <= 0.0 {
                        continue;
                    }
                    self.logrank(&left_w, &left_d)
                }
                SplitRule::Deviance => match self.deviance(left_events, left_exposure) {
                    Some(s) => s,
                    None => continue,
                },
            };
            if score.is_finite() && best.is_none_or(|(_, b)| score > b) {
                let mid = lo + (hi - lo) / 2.0;
                let threshold = if mid < hi { mid } else { lo };
                best = Some((threshold, score));
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(pairs: &[(f64, bool)]) -> NodeSample {
        NodeSample::new(pairs.iter().map(|p| p.0).collect(), pairs.iter().map(|p| p.1).collect())
            .unwrap()
    }

    /// Direct log-rank: at each distinct event time count deaths and risk
    /// sets by filtering each group.
    fn logrank_oracle(left: &[(f64, bool)], right: &[(f64, bool)]) -> f64 {
        let mut event_times: Vec<f64> = left
            .iter()
            .chain(right)
            .filter(|p| p.1)
            .map(|p| p.0)
            .collect();
        event_times.sort_by(f64::total_cmp);
        event_times.dedup();
        let (mut o_minus_e, mut v) = (0.0, 0.0);
        for &t in &event_times {
            let at_risk = |g: &[(f64, bool)]| g.iter().filter(|p| p.0 >= t).count() as f64;
            let dead = |g: &[(f64, bool)]| g.iter().filter(|p| p.0 == t && p.1).count() as f64;
            let (r1, r2) = (at_risk(left), at_risk(right));
            let (d1, d2) = (dead(left), dead(right));
            let (r, d) = (r1 + r2, d1 + d2);
            o_minus_e += d1 - d * r1 / r;
            if r > 1.0 {
                v += d * (r1 / r) * (r2 / r) * (r - d) / (r - 1.0);
            }
        }
        if v > 0.0 {
            o_minus_e.abs() / v.sqrt()
        } else {
            0.0
        }
    }

    #[test]
    fn logrank_hand_example() {
        // Left {1,2}, right {3,4}, all deaths.
        // t=1: r=4, rL=2, d=1 -> O-E = 1 - 0.5, V = 0.5*0.5*1*1 = 0.25
        // t=2: r=3, rL=1, d=1 -> O-E = 1 - 1/3, V = (1/3)(2/3) = 2/9
        // t=3: r=2, rL=0 -> O-E = -0, V = 0
        // t=4: r=1 -> no variance term
        // O-E = 0.5 + 2/3 = 7/6, V = 1/4 + 2/9 = 17/36
        let left = sample(&[(1.0, true), (2.0, true)]);
        let right = sample(&[(3.0, true), (4.0, true)]);
        let expected = (7.0 / 6.0) / (17.0f64 / 36.0).sqrt();
        let got = logrank_statistic(&left, &right).unwrap();
        assert!((got - expected).abs() < 1e-14, "{got} vs {expected}");
    }

    #[test]
    fn logrank_identical_groups_near_zero() {
        // Each group holds one copy of every observation.
        let pairs: Vec<(f64, bool)> = (1..=5).map(|i| (i as f64, i % 3 != 0)).collect();
        let s = logrank_statistic(&sample(&pairs), &sample(&pairs)).unwrap();
        assert!(s < 1e-12, "{s}");
    }

    #[test]
    fn logrank_zero_variance_is_zero() {
        // Single event at the last time with one subject at risk.
        let left = sample(&[(1.0, false)]);
        let right = sample(&[(2.0, true)]);
        assert_eq!(logrank_statistic(&left, &right).unwrap(), 0.0);
    }

    #[test]
    fn logrank_preconditions() {
        let empty = NodeSample::new(vec![], vec![]).unwrap();
        let s = sample(&[(1.0, true)]);
        assert!(logrank_statistic(&empty, &s).is_err());
        let c = sample(&[(1.0, false)]);
        assert!(logrank_statistic(&c, &c).is_err());
    }

    #[test]
    fn logrank_with_weights_equals_duplicates() {
        let left = NodeSample::with_weights(vec![1.0, 3.0], vec![true, false], vec![2.0, 1.0]).unwrap();
        let right = sample(&[(2.0, true), (4.0, true)]);
        let dup = sample(&[(1.0, true), (1.0, true), (3.0, false)]);
        assert_eq!(
            logrank_statistic(&left, &right).unwrap(),
            logrank_statistic(&dup, &right).unwrap()
        );
    }

    #[test]
    fn baseline_examples() {
        let h = estimate_baseline_chf(&sample(&[(1.0, true), (2.0, false), (3.0, true)])).unwrap();
        assert_eq!(h.knots(), [1.0, 3.0]);
        assert_eq!(h.values(), [1.0 / 3.0, 1.0 / 3.0 + 1.0]);
        let zero = estimate_baseline_chf(&sample(&[(1.0, false), (2.0, false)])).unwrap();
        assert!(zero.is_zero());
        let one = estimate_baseline_chf(&sample(&[(5.0, true)])).unwrap();
        assert_eq!(one.eval(5.0), 1.0);
        assert!(estimate_baseline_chf(&NodeSample::new(vec![], vec![]).unwrap()).is_err());
    }

    #[test]
    fn theta_examples() {
        // baseline 1 at t>=1, 3 at t>=2: exposures 1 + 3 = 4 with 2 events.
        let base = StepFunction::new(vec![1.0, 2.0], vec![1.0, 3.0]).unwrap();
        let s = sample(&[(1.0, true), (2.0, true)]);
        assert_eq!(estimate_theta(&s, &base).unwrap(), 0.5);
        let censored = sample(&[(1.0, false), (2.0, false)]);
        assert_eq!(estimate_theta(&censored, &base).unwrap(), 0.0);
        let early = sample(&[(0.5, true)]);
        assert!(matches!(estimate_theta(&early, &base), Err(Error::ZeroBaseline { .. })));
        assert_eq!(estimate_theta(&sample(&[(0.5, false)]), &base).unwrap(), 0.0);
    }

    #[test]
    fn deviance_hand_example() {
        // baseline Lambda(1) = 0.5, Lambda(2) = 2, theta = 0.8
        // t=1: 2{ ln(1/0.4) - (1 - 0.4) }, t=2: 2{ ln(1/1.6) - (1 - 1.6) }
        let base = StepFunction::new(vec![1.0, 2.0], vec![0.5, 2.0]).unwrap();
        let s = sample(&[(1.0, true), (2.0, true)]);
        let expected = 2.0 * ((1.0f64 / 0.4).ln() - 0.6) + 2.0 * ((1.0f64 / 1.6).ln() + 0.6);
        let got = node_deviance(&s, &base, 0.8).unwrap();
        assert!((got - expected).abs() < 1e-14);
        let censored = sample(&[(1.0, false), (3.0, false)]);
        assert_eq!(node_deviance(&censored, &base, 0.0).unwrap(), 0.0);
        assert!(node_deviance(&s, &base, -1.0).is_err());
    }

    #[test]
    fn deviance_minimized_at_theta_hat() {
        let s = sample(&[(1.0, true), (2.0, false), (3.0, true), (4.0, true), (5.0, false)]);
        let base = StepFunction::new(vec![1.0, 3.0, 4.0], vec![0.2, 0.9, 1.7]).unwrap();
        let theta = estimate_theta(&s, &base).unwrap();
        let at = node_deviance(&s, &base, theta).unwrap();
        assert!(at <= node_deviance(&s, &base, theta * 1.1).unwrap());
        assert!(at <= node_deviance(&s, &base, theta * 0.9).unwrap());
    }

    #[test]
    fn theta_is_one_against_own_baseline() {
        let s = sample(&[(1.0, true), (2.0, false), (2.0, true), (4.0, true), (7.0, false)]);
        let base = estimate_baseline_chf(&s).unwrap();
        assert!((estimate_theta(&s, &base).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reduction_preconditions_and_sign() {
        let parent = sample(&[(1.0, true), (2.0, true), (3.0, false), (4.0, false)]);
        let empty = NodeSample::new(vec![], vec![]).unwrap();
        assert!(deviance_reduction(&parent, &parent, &empty).is_err());
        let wrong = sample(&[(9.0, true)]);
        assert!(deviance_reduction(&parent, &wrong, &sample(&[(1.0, true)])).is_err());

        let events = sample(&[(1.0, true), (2.0, true)]);
        let censored = sample(&[(3.0, false), (4.0, false)]);
        assert!(deviance_reduction(&parent, &events, &censored).unwrap() > 0.0);
    }

    #[test]
    fn scanner_matches_public_functions() {
        let pairs = [
            (3.0, true),
            (1.0, false),
            (4.0, true),
            (1.0, true),
            (5.0, true),
            (9.0, false),
            (2.0, true),
            (6.0, true),
        ];
        let feature = [0.3, 0.1, 0.9, 0.1, 0.5, 0.7, 0.2, 0.8];
        let parent = sample(&pairs);
        for rule in [SplitRule::Logrank, SplitRule::Deviance] {
            let scan = NodeScan::new(&parent, rule);
            let (threshold, score) = scan.best_threshold(&feature).unwrap();
            let (l, r): (Vec<_>, Vec<_>) = (0..pairs.len()).partition(|&i| feature[i] <= threshold);
            let left = sample(&l.iter().map(|&i| pairs[i]).collect::<Vec<_>>());
            let right = sample(&r.iter().map(|&i| pairs[i]).collect::<Vec<_>>());
            let direct = match rule {
                SplitRule::Logrank => logrank_statistic(&left, &right).unwrap(),
                SplitRule::Deviance => deviance_reduction(&parent, &left, &right).unwrap(),
            };
            assert!((score - direct).abs() < 1e-10 * direct.abs().max(1.0), "{rule}: {score} vs {direct}");
        }
    }

    #[test]
    fn scanner_threshold_is_midpoint_and_constant_feature_has_none() {
        let parent = sample(&[(1.0, true), (2.0, true), (8.0, true), (9.0, true)]);
        let scan = NodeScan::new(&parent, SplitRule::Logrank);
        assert_eq!(scan.best_threshold(&[0.0, 0.0, 1.0, 1.0]).unwrap().0, 0.5);
        assert!(scan.best_threshold(&[2.0; 4]).is_none());
    }

    fn pairs_strategy(max: usize) -> impl Strategy<Value = Vec<(f64, bool)>> {
        prop::collection::vec(((1u32..8).prop_map(f64::from), any::<bool>()), 1..max)
    }

    proptest! {
        #[test]
        fn logrank_matches_oracle(left in pairs_strategy(8), right in pairs_strategy(8)) {
            prop_assume!(left.iter().chain(&right).any(|p| p.1));
            let got = logrank_statistic(&sample(&left), &sample(&right)).unwrap();
            let want = logrank_oracle(&left, &right);
            prop_assert!((got - want).abs() <= 1e-10 * want.abs().max(1e-300) || (got - want).abs() < 1e-13);
        }

        #[test]
        fn logrank_symmetric_and_monotone_invariant(left in pairs_strategy(8), right in pairs_strategy(8)) {
            prop_assume!(left.iter().chain(&right).any(|p| p.1));
            let a = logrank_statistic(&sample(&left), &sample(&right)).unwrap();
            let b = logrank_statistic(&sample(&right), &sample(&left)).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            let warp = |g: &[(f64, bool)]| g.iter().map(|&(t, e)| (t.powi(3) + 2.0 * t, e)).collect::<Vec<_>>();
            let c = logrank_statistic(&sample(&warp(&left)), &sample(&warp(&right))).unwrap();
            prop_assert!((a - c).abs() < 1e-12);
            let mut rev = left.clone();
            rev.reverse();
            let d = logrank_statistic(&sample(&rev), &sample(&right)).unwrap();
            prop_assert!((a - d).abs() < 1e-12);
        }

        #[test]
        fn deviance_reduction_nonnegative(pairs in pairs_strategy(14), mask in prop::collection::vec(any::<bool>(), 14)) {
            let (l, r): (Vec<_>, Vec<_>) = pairs.iter().enumerate().partition(|(i, _)| mask[*i]);
            prop_assume!(!l.is_empty() && !r.is_empty());
            let left = sample(&l.into_iter().map(|(_, p)| *p).collect::<Vec<_>>());
            let right = sample(&r.into_iter().map(|(_, p)| *p).collect::<Vec<_>>());
            let red = deviance_reduction(&sample(&pairs), &left, &right).unwrap();
            prop_assert!(red >= -1e-9, "{}", red);
        }
    }
}
