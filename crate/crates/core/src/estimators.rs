//! Typical sets and the typical-set estimators, by exhaustive enumeration.
//!
//! The estimators are executable definitions: they list every typical input,
//! keep the ones consistent with the observation, and answer only when exactly
//! one survives. Inputs are handled as bitmasks (bit `i` is object `i`).

use itertools::Itertools;
use serde::Serialize;

use crate::bounds::entropy;
use crate::ensemble::{mask_to_bits, OrMasks, PoolingGraph};
use crate::error::{Error, Result};

/// Default slack, in bits per symbol, for both the source and the noise.
pub const DEFAULT_EPSILON: f64 = 0.1;
/// Default largest `n` the estimators will enumerate.
pub const DEFAULT_MAX_N: usize = 24;
/// Absorbs rounding in `-(1/n) log2 Pr(x)` when it sits exactly on a window edge.
const RATE_SLACK: f64 = 1e-12;

/// `T_{n, eps}` for an i.i.d. source with the given symbol probabilities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypicalSetSpec {
    n: usize,
    probs: Vec<f64>,
    epsilon: f64,
}

impl TypicalSetSpec {
    pub fn new(n: usize, probs: Vec<f64>, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon = {epsilon} must be positive")));
        }
        if probs.is_empty() || probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config(format!("{probs:?} is not a probability vector")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { n, probs, epsilon })
    }

    /// Bernoulli(`p`) source: symbol 1 has probability `p`.
    pub fn binary(n: usize, p: f64, epsilon: f64) -> Result<Self> {
        Self::new(n, vec![1.0 - p, p], epsilon)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Per-symbol entropy `H` in bits.
    pub fn entropy(&self) -> f64 {
        entropy(&self.probs)
    }

    fn is_binary(&self) -> bool {
        self.probs.len() == 2
    }

    /// Whether an empirical rate `-(1/n) log2 Pr(x)` lies in `[H - eps, H + eps]`.
    fn rate_is_typical(&self, log2_prob: f64) -> bool {
        if log2_prob == f64::NEG_INFINITY {
            return false;
        }
        let rate = if self.n == 0 { 0.0 } else { -log2_prob / self.n as f64 };
        let h = self.entropy();
        rate >= h - self.epsilon - RATE_SLACK && rate <= h + self.epsilon + RATE_SLACK
    }

    /// Membership for a sequence given by symbol-count profile.
    pub fn is_typical_counts(&self, counts: &[usize]) -> bool {
        if counts.len() != self.probs.len() || counts.iter().sum::<usize>() != self.n {
            return false;
        }
        let mut log2_prob = 0.0;
        for (&c, &p) in counts.iter().zip(&self.probs) {
            if c > 0 {
                if p == 0.0 {
                    return false;
                }
                log2_prob += c as f64 * p.log2();
            }
        }
        self.rate_is_typical(log2_prob)
    }

    /// Membership for a sequence of symbol indices.
    pub fn is_typical(&self, x: &[usize]) -> Result<bool> {
        if x.len() != self.n {
            return Err(Error::Input(format!(
                "sequence has length {}, expected n = {}",
                x.len(),
                self.n
            )));
        }
        let mut counts = vec![0; self.probs.len()];
        for (i, &a) in x.iter().enumerate() {
            *counts
                .get_mut(a)
                .ok_or_else(|| Error::Input(format!("x[{i}] = {a} is not a symbol index")))? += 1;
        }
        Ok(self.is_typical_counts(&counts))
    }

    /// Membership for a binary sequence.
    pub fn is_typical_bits(&self, x: &[bool]) -> Result<bool> {
        if !self.is_binary() {
            return Err(Error::Input("bit vectors need a binary source".into()));
        }
        if x.len() != self.n {
            return Err(Error::Input(format!(
                "sequence has length {}, expected n = {}",
                x.len(),
                self.n
            )));
        }
        Ok(self.is_typical_weight(x.iter().filter(|&&b| b).count()))
    }

    /// Membership of any binary sequence of Hamming weight `w`.
    pub fn is_typical_weight(&self, w: usize) -> bool {
        self.is_binary() && w <= self.n && self.is_typical_counts(&[self.n - w, w])
    }

    /// `table[w]` is the membership of binary sequences of weight `w`.
    pub fn weight_table(&self) -> Vec<bool> {
        (0..=self.n).map(|w| self.is_typical_weight(w)).collect()
    }

    /// Smallest and largest Hamming weight in the typical set.
    pub fn typical_weights(&self) -> Result<(usize, usize)> {
        if !self.is_binary() {
            return Err(Error::Input("typical weights need a binary source".into()));
        }
        let mut typical = (0..=self.n).filter(|&w| self.is_typical_weight(w));
        let first = typical.next().ok_or(Error::EmptyTypicalSet {
            n: self.n,
            epsilon: self.epsilon,
        })?;
        Ok((first, typical.next_back().unwrap_or(first)))
    }
}

/// Every typical binary input of a spec, as bitmasks.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    masks: Vec<u64>,
}

impl CandidateSet {
    /// Enumerates the typical set; refuses above `max_n` (and always above 64).
    pub fn new(spec: &TypicalSetSpec, max_n: usize) -> Result<Self> {
        let n = spec.n();
        if n > max_n || n > 64 {
            return Err(Error::Guard(format!(
                "typical-set enumeration needs 2^{n} candidates; n must be at most {}",
                max_n.min(64)
            )));
        }
        if !spec.is_binary() {
            return Err(Error::Input("the estimators need a binary source".into()));
        }
        let mut masks = Vec::new();
        // an empty typical set is a valid (always failing) decision rule here
        if let Ok((w_min, w_max)) = spec.typical_weights() {
            for w in w_min..=w_max {
                if spec.is_typical_weight(w) {
                    masks.extend(
                        (0..n)
                            .combinations(w)
                            .map(|c| c.into_iter().fold(0u64, |acc, i| acc | (1u64 << i))),
                    );
                }
            }
        }
        Ok(Self { masks })
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn masks(&self) -> &[u64] {
        &self.masks
    }

    pub fn contains(&self, x: u64) -> bool {
        self.masks.contains(&x)
    }
}

/// An estimate, or the failure symbol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorOutput {
    Estimate(Vec<bool>),
    Failure,
}

impl EstimatorOutput {
    pub fn estimate(&self) -> Option<&[bool]> {
        match self {
            EstimatorOutput::Estimate(x) => Some(x),
            EstimatorOutput::Failure => None,
        }
    }
}

/// Estimator answer plus `|D(y)|`, which tells "no candidate" from "ambiguous".
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Decision {
    pub output: EstimatorOutput,
    pub decision_set_size: usize,
}

/// Bitmask-level decision: the unique surviving candidate, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaskDecision {
    pub estimate: Option<u64>,
    pub decision_set_size: usize,
}

impl MaskDecision {
    fn from_matches(mut matches: impl Iterator<Item = u64>) -> Self {
        let Some(first) = matches.next() else {
            return Self {
                estimate: None,
                decision_set_size: 0,
            };
        };
        let size = 1 + matches.count();
        Self {
            estimate: (size == 1).then_some(first),
            decision_set_size: size,
        }
    }

    fn into_decision(self, n: usize) -> Decision {
        Decision {
            output: match self.estimate {
                Some(x) => EstimatorOutput::Estimate(mask_to_bits(u128::from(x), n)),
                None => EstimatorOutput::Failure,
            },
            decision_set_size: self.decision_set_size,
        }
    }
}

/// `D(y) = { x typical : F_G(x) = y }` over precomputed candidates.
pub fn decide_noiseless(masks: &OrMasks, candidates: &CandidateSet, y: u128) -> MaskDecision {
    MaskDecision::from_matches(candidates.masks.iter().copied().filter(|&x| masks.forward(x) == y))
}

/// `D(y) = { x typical : y xor F_G(x) typical }`; noise typicality depends on
/// weight only, so it comes in as a [`TypicalSetSpec::weight_table`].
pub fn decide_noisy(masks: &OrMasks, candidates: &CandidateSet, typical_noise: &[bool], y: u128) -> MaskDecision {
    MaskDecision::from_matches(
        candidates
            .masks
            .iter()
            .copied()
            .filter(|&x| typical_noise[(y ^ masks.forward(x)).count_ones() as usize]),
    )
}

fn graph_masks(graph: &PoolingGraph, spec: &TypicalSetSpec) -> Result<OrMasks> {
    if spec.n() != graph.n() {
        return Err(Error::Input(format!(
            "spec has n = {}, graph has n = {}",
            spec.n(),
            graph.n()
        )));
    }
    graph.or_masks().ok_or_else(|| {
        Error::Guard(format!(
            "bitmask forward map needs n <= 64 and m <= 128, got n={}, m={}",
            graph.n(),
            graph.m()
        ))
    })
}

fn observation_mask(graph: &PoolingGraph, y: &[bool]) -> Result<u128> {
    if y.len() != graph.m() {
        return Err(Error::Input(format!(
            "observation has length {}, expected m = {}",
            y.len(),
            graph.m()
        )));
    }
    Ok(y.iter()
        .enumerate()
        .fold(0u128, |acc, (j, &b)| acc | (u128::from(b) << j)))
}

/// Typical-set estimator for `y = F_G(x)` with the OR test.
pub fn estimate_noiseless(graph: &PoolingGraph, spec: &TypicalSetSpec, y: &[bool], max_n: usize) -> Result<Decision> {
    let masks = graph_masks(graph, spec)?;
    let y = observation_mask(graph, y)?;
    let candidates = CandidateSet::new(spec, max_n)?;
    Ok(decide_noiseless(&masks, &candidates, y).into_decision(graph.n()))
}

/// Typical-set estimator for `y = F_G(x) xor e` with the OR test.
pub fn estimate_noisy(
    graph: &PoolingGraph,
    spec_x: &TypicalSetSpec,
    spec_e: &TypicalSetSpec,
    y: &[bool],
    max_n: usize,
) -> Result<Decision> {
    let masks = graph_masks(graph, spec_x)?;
    let y = observation_mask(graph, y)?;
    if spec_e.n() != graph.m() || !spec_e.is_binary() {
        return Err(Error::Input(format!(
            "noise spec must be binary with n = m = {}",
            graph.m()
        )));
    }
    let candidates = CandidateSet::new(spec_x, max_n)?;
    Ok(decide_noisy(&masks, &candidates, &spec_e.weight_table(), y).into_decision(graph.n()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::SystemParams;

    #[test]
    fn fair_coin_everything_typical() {
        let spec = TypicalSetSpec::binary(10, 0.5, 0.01).unwrap();
        assert_eq!(spec.typical_weights().unwrap(), (0, 10));
        assert!(spec.is_typical_bits(&[true; 10]).unwrap());
    }

    #[test]
    fn all_ones_not_typical_for_sparse_source() {
        let spec = TypicalSetSpec::binary(20, 0.1, 0.1).unwrap();
        assert!(!spec.is_typical_bits(&[true; 20]).unwrap());
        // weight exactly n p sits at the entropy for any epsilon
        let tight = TypicalSetSpec::binary(20, 0.1, 1e-9).unwrap();
        assert!(tight.is_typical_weight(2));
    }

    #[test]
    fn weight_window_for_n50() {
        let spec = TypicalSetSpec::binary(50, 0.1, 0.1).unwrap();
        let (lo, hi) = spec.typical_weights().unwrap();
        assert!(lo <= 5 && 5 <= hi);
        assert!((lo..=hi).all(|w| spec.is_typical_weight(w)));
        let wide = TypicalSetSpec::binary(50, 0.1, 100.0).unwrap();
        assert_eq!(wide.typical_weights().unwrap(), (0, 50));
    }

    #[test]
    fn empty_typical_set() {
        let spec = TypicalSetSpec::binary(18, 0.02, 0.1).unwrap();
        assert_eq!(
            spec.typical_weights().unwrap_err(),
            Error::EmptyTypicalSet { n: 18, epsilon: 0.1 }
        );
        assert!(CandidateSet::new(&spec, 24).unwrap().is_empty());
        assert!(TypicalSetSpec::binary(4, 0.1, 0.0).is_err());
    }

    #[test]
    fn degenerate_source() {
        let spec = TypicalSetSpec::binary(8, 0.0, 0.1).unwrap();
        assert_eq!(spec.typical_weights().unwrap(), (0, 0));
    }

    #[test]
    fn general_alphabet_membership() {
        let spec = TypicalSetSpec::new(4, vec![0.5, 0.25, 0.25], 0.01).unwrap();
        // Pr = 2^-6, rate 1.5 = H
        assert!(spec.is_typical(&[0, 0, 1, 2]).unwrap());
        assert!(!spec.is_typical(&[1, 1, 2, 2]).unwrap());
        assert!(spec.is_typical(&[0, 3, 0, 0]).is_err());
    }

    #[test]
    fn zero_observation_decodes_to_zero() {
        let params = SystemParams::shape(3, 6, 12).unwrap();
        let g = PoolingGraph::sample(&params, 3);
        let spec = TypicalSetSpec::binary(12, 0.1, 1.0).unwrap();
        assert!(spec.is_typical_weight(0));
        let d = estimate_noiseless(&g, &spec, &[false; 6], 24).unwrap();
        assert_eq!(d.output, EstimatorOutput::Estimate(vec![false; 12]));
        assert_eq!(d.decision_set_size, 1);
    }

    #[test]
    fn ambiguous_and_empty_decisions_fail() {
        let params = SystemParams::shape(3, 6, 12).unwrap();
        let g = PoolingGraph::sample(&params, 5);
        let spec = TypicalSetSpec::binary(12, 0.5, 0.1).unwrap();
        // every x is typical and all-ones has many preimages
        let d = estimate_noiseless(&g, &spec, &[true; 6], 24).unwrap();
        assert_eq!(d.output, EstimatorOutput::Failure);
        assert!(d.decision_set_size > 1);
        // a nonzero y is unreachable when only the zero vector is typical
        let zero_only = TypicalSetSpec::binary(12, 0.0, 0.1).unwrap();
        let d = estimate_noiseless(&g, &zero_only, &[true; 6], 24).unwrap();
        assert_eq!(d.decision_set_size, 0);
        assert_eq!(d.output, EstimatorOutput::Failure);
    }

    #[test]
    fn guard_refuses_large_n() {
        let params = SystemParams::shape(3, 6, 30).unwrap();
        let g = PoolingGraph::sample(&params, 0);
        let spec = TypicalSetSpec::binary(30, 0.1, 0.1).unwrap();
        assert!(matches!(
            estimate_noiseless(&g, &spec, &[false; 15], 24),
            Err(Error::Guard(_))
        ));
    }

    #[test]
    fn fair_noise_dissolves_constraint() {
        let params = SystemParams::shape(3, 6, 12).unwrap();
        let g = PoolingGraph::sample(&params, 9);
        let spec_x = TypicalSetSpec::binary(12, 0.1, 0.1).unwrap();
        let spec_e = TypicalSetSpec::binary(6, 0.5, 0.01).unwrap();
        let candidates = CandidateSet::new(&spec_x, 24).unwrap();
        let d = estimate_noisy(&g, &spec_x, &spec_e, &[false; 6], 24).unwrap();
        assert_eq!(d.decision_set_size, candidates.len());
        assert_eq!(d.output, EstimatorOutput::Failure);
    }

    #[test]
    fn empty_noise_set_always_fails() {
        let params = SystemParams::shape(3, 6, 12).unwrap();
        let g = PoolingGraph::sample(&params, 9);
        let spec_x = TypicalSetSpec::binary(12, 0.1, 0.1).unwrap();
        // m = 6, q = 0.02: weight 0 rate 0.029, weight 1 rate 0.94; window 0.14 +- 0.05
        let spec_e = TypicalSetSpec::binary(6, 0.02, 0.05).unwrap();
        assert!(spec_e.typical_weights().is_err());
        let d = estimate_noisy(&g, &spec_x, &spec_e, &[false; 6], 24).unwrap();
        assert_eq!(d.output, EstimatorOutput::Failure);
    }
}
