//! Seeded simulation: error rates of the typical-set estimators and z-tests of
//! the exact ensemble probabilities.
//!
//! Trial `i` draws from its own ChaCha stream `(seed, i)`, so counts do not
//! depend on how trials are split across threads. Within a trial the draws
//! come in a fixed order: the input `x` (one uniform per object, defective iff
//! below `p`), then the graph (fresh mode only), then the noise.

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::ensemble::{OrMasks, PoolingGraph, SystemParams};
use crate::error::{Error, Result};
use crate::estimators::{decide_noiseless, decide_noisy, CandidateSet, TypicalSetSpec, DEFAULT_EPSILON, DEFAULT_MAX_N};
use crate::genfunc::{ensemble_prob_noiseless, ensemble_prob_noisy};

/// Two-sided gate on the z-score of every ensemble validation.
pub const Z_GATE: f64 = 4.0;

const PROTOCOL: &str = "finite-n protocol chosen by this tool: per-trial ChaCha8 streams (seed, trial index); \
draw order x, graph (fresh mode), noise; errors are estimates != x with failure counted as error; \
events are disjoint in priority order";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphMode {
    /// One graph, drawn from the master seed, shared by every trial.
    Fixed,
    /// A new graph per trial.
    Fresh,
}

/// Everything a simulation run depends on; echoed verbatim in its report.
#[derive(Debug, Clone, Serialize)]
pub struct TrialConfig {
    pub params: SystemParams,
    /// Source slack in bits per symbol.
    pub epsilon: f64,
    /// Noise slack in bits per symbol (noisy runs only).
    pub epsilon_noise: f64,
    pub trials: u64,
    pub seed: u64,
    pub graph_mode: GraphMode,
    /// Enumeration guard on `n`.
    pub max_n: usize,
}

impl TrialConfig {
    pub fn new(params: SystemParams, trials: u64, seed: u64) -> Self {
        Self {
            params,
            epsilon: DEFAULT_EPSILON,
            epsilon_noise: DEFAULT_EPSILON,
            trials,
            seed,
            graph_mode: GraphMode::Fresh,
            max_n: DEFAULT_MAX_N,
        }
    }
}

/// Error decomposition. Noiseless: I = `x` atypical, II = `x` typical but not
/// recovered. Noisy: I = `x` atypical, II = noise atypical, III = both typical
/// but not recovered.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EventCounts {
    pub event_i: u64,
    pub event_ii: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub event_iii: Option<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialReport {
    pub trials: u64,
    pub errors: u64,
    /// `None` when there were no trials.
    pub error_rate: Option<f64>,
    /// Normal-approximation 95% half-width.
    pub confidence_halfwidth: Option<f64>,
    pub seed: u64,
    pub events: EventCounts,
    pub config: TrialConfig,
    pub protocol: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Recovered,
    EventI,
    EventII,
    EventIII,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    trials: u64,
    events: [u64; 3],
}

impl Tally {
    fn record(mut self, outcome: Outcome) -> Self {
        self.trials += 1;
        match outcome {
            Outcome::Recovered => {}
            Outcome::EventI => self.events[0] += 1,
            Outcome::EventII => self.events[1] += 1,
            Outcome::EventIII => self.events[2] += 1,
        }
        self
    }

    fn merge(self, other: Self) -> Self {
        Self {
            trials: self.trials + other.trials,
            events: [0, 1, 2].map(|k| self.events[k] + other.events[k]),
        }
    }
}

fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// The shared graph of fixed mode lives on a stream no trial uses.
fn fixed_graph(params: &SystemParams, seed: u64) -> PoolingGraph {
    PoolingGraph::sample_with(params, &mut trial_rng(seed, u64::MAX))
}

fn draw_bits<R: Rng>(rng: &mut R, len: usize, p: f64) -> u128 {
    (0..len).fold(
        0u128,
        |acc, i| if rng.gen::<f64>() < p { acc | (1u128 << i) } else { acc },
    )
}

fn masks_of(graph: &PoolingGraph) -> Result<OrMasks> {
    graph.or_masks().ok_or_else(|| {
        Error::Guard(format!(
            "bitmask forward map needs n <= 64 and m <= 128, got n={}, m={}",
            graph.n(),
            graph.m()
        ))
    })
}

struct Harness {
    config: TrialConfig,
    candidates: CandidateSet,
    source: TypicalSetSpec,
    fixed: Option<OrMasks>,
}

impl Harness {
    fn new(config: &TrialConfig) -> Result<Self> {
        let params = &config.params;
        let source = TypicalSetSpec::binary(params.n(), params.p(), config.epsilon)?;
        let candidates = CandidateSet::new(&source, config.max_n)?;
        let fixed = match config.graph_mode {
            GraphMode::Fixed => Some(masks_of(&fixed_graph(params, config.seed))?),
            GraphMode::Fresh => None,
        };
        if params.m() > 128 {
            return Err(Error::Guard(format!(
                "m = {} exceeds the 128-test bitmask limit",
                params.m()
            )));
        }
        Ok(Self {
            config: config.clone(),
            candidates,
            source,
            fixed,
        })
    }

    /// Draws `x` and the graph for trial `index`, leaving the rng ready for noise.
    fn draw(&self, index: u64) -> (ChaCha8Rng, u64, OrMasks) {
        let params = &self.config.params;
        let mut rng = trial_rng(self.config.seed, index);
        let x = draw_bits(&mut rng, params.n(), params.p()) as u64;
        let masks = match &self.fixed {
            Some(m) => m.clone(),
            None => PoolingGraph::sample_with(params, &mut rng)
                .or_masks()
                .expect("size checked at construction"),
        };
        (rng, x, masks)
    }

    fn run<F>(&self, trial: F) -> TrialReport
    where
        F: Fn(u64) -> Outcome + Sync + Send,
    {
        let tally = (0..self.config.trials)
            .into_par_iter()
            .map(&trial)
            .fold(Tally::default, Tally::record)
            .reduce(Tally::default, Tally::merge);
        let errors: u64 = tally.events.iter().sum();
        let (error_rate, confidence_halfwidth) = if tally.trials == 0 {
            (None, None)
        } else {
            let rate = errors as f64 / tally.trials as f64;
            (
                Some(rate),
                Some(1.96 * (rate * (1.0 - rate) / tally.trials as f64).sqrt()),
            )
        };
        TrialReport {
            trials: tally.trials,
            errors,
            error_rate,
            confidence_halfwidth,
            seed: self.config.seed,
            events: EventCounts {
                event_i: tally.events[0],
                event_ii: tally.events[1],
                event_iii: None,
            },
            config: self.config.clone(),
            protocol: PROTOCOL,
        }
    }
}

/// Error rate of the noiseless typical-set estimator with the OR test.
pub fn run_noiseless_trials(config: &TrialConfig) -> Result<TrialReport> {
    let harness = Harness::new(config)?;
    Ok(harness.run(|index| {
        let (_, x, masks) = harness.draw(index);
        if !harness.source.is_typical_weight(x.count_ones() as usize) {
            return Outcome::EventI;
        }
        let decision = decide_noiseless(&masks, &harness.candidates, masks.forward(x));
        if decision.estimate == Some(x) {
            Outcome::Recovered
        } else {
            Outcome::EventII
        }
    }))
}

/// Error rate of the noisy typical-set estimator, noise `Bernoulli(q)^m` from `params`.
pub fn run_noisy_trials(config: &TrialConfig) -> Result<TrialReport> {
    let harness = Harness::new(config)?;
    let params = &config.params;
    let noise = TypicalSetSpec::binary(params.m(), params.q(), config.epsilon_noise)?;
    let typical_noise = noise.weight_table();
    let mut report = harness.run(|index| {
        let (mut rng, x, masks) = harness.draw(index);
        let e = draw_bits(&mut rng, params.m(), params.q());
        if !harness.source.is_typical_weight(x.count_ones() as usize) {
            return Outcome::EventI;
        }
        if !typical_noise[e.count_ones() as usize] {
            return Outcome::EventII;
        }
        let decision = decide_noisy(&masks, &harness.candidates, &typical_noise, masks.forward(x) ^ e);
        if decision.estimate == Some(x) {
            Outcome::Recovered
        } else {
            Outcome::EventIII
        }
    });
    report.events.event_iii = Some(report.errors - report.events.event_i - report.events.event_ii);
    Ok(report)
}

/// Empirical frequency of an event against its exact ensemble probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonRecord {
    pub empirical: f64,
    pub exact: f64,
    pub z_score: f64,
    pub pass: bool,
    pub trials: u64,
    pub hits: u64,
}

impl ComparisonRecord {
    fn new(hits: u64, trials: u64, exact: f64) -> Self {
        let empirical = hits as f64 / trials as f64;
        let sd = (exact * (1.0 - exact) / trials as f64).sqrt();
        let z_score = if sd > 0.0 {
            (empirical - exact) / sd
        } else if empirical == exact {
            0.0
        } else {
            f64::INFINITY
        };
        Self {
            empirical,
            exact,
            z_score,
            pass: z_score.abs() <= Z_GATE,
            trials,
            hits,
        }
    }
}

fn check_validation(params: &SystemParams, w: usize, s: usize, trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::Config("a validation needs at least one trial".into()));
    }
    if w > params.n() || s > params.m() {
        return Err(Error::Input(format!(
            "weights (w={w}, s={s}) exceed (n={}, m={})",
            params.n(),
            params.m()
        )));
    }
    Ok(())
}

/// `x_w` has its first `w` objects defective, `y_s` its first `s` tests positive.
fn count_hits<F>(params: &SystemParams, w: usize, s: usize, trials: u64, seed: u64, noise: F) -> u64
where
    F: Fn(&mut ChaCha8Rng) -> Vec<bool> + Sync,
{
    let x: Vec<bool> = (0..params.n()).map(|i| i < w).collect();
    let target: Vec<bool> = (0..params.m()).map(|j| j < s).collect();
    (0..trials)
        .into_par_iter()
        .filter(|&index| {
            let mut rng = trial_rng(seed, index);
            let graph = PoolingGraph::sample_with(params, &mut rng);
            let y = graph.forward_or(&x).expect("lengths match");
            let e = noise(&mut rng);
            y.iter().zip(&e).map(|(a, b)| a ^ b).eq(target.iter().copied())
        })
        .count() as u64
}

/// Samples fresh graphs and compares the frequency of `F_G(x_w) = y_s` with
/// its exact ensemble probability.
pub fn validate_lemma2(params: &SystemParams, w: usize, s: usize, trials: u64, seed: u64) -> Result<ComparisonRecord> {
    check_validation(params, w, s, trials)?;
    let exact = ensemble_prob_noiseless(params, w, s)?.to_f64().unwrap_or(f64::NAN);
    let m = params.m();
    let hits = count_hits(params, w, s, trials, seed, |_| vec![false; m]);
    Ok(ComparisonRecord::new(hits, trials, exact))
}

/// As [`validate_lemma2`] for `F_G(x_w) xor e = y_s` with `e ~ Bernoulli(q)^m`.
pub fn validate_lemma4(params: &SystemParams, w: usize, s: usize, trials: u64, seed: u64) -> Result<ComparisonRecord> {
    check_validation(params, w, s, trials)?;
    let exact = ensemble_prob_noisy(params, w, s)?;
    let (m, q) = (params.m(), params.q());
    let hits = count_hits(params, w, s, trials, seed, |rng| {
        (0..m).map(|_| rng.gen::<f64>() < q).collect()
    });
    Ok(ComparisonRecord::new(hits, trials, exact))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(p: f64, q: f64, trials: u64, seed: u64) -> TrialConfig {
        TrialConfig::new(SystemParams::new(3, 6, 12, p, q).unwrap(), trials, seed)
    }

    #[test]
    fn zero_trials_has_no_rate() {
        let r = run_noiseless_trials(&config(0.1, 0.0, 0, 1)).unwrap();
        assert_eq!(r.error_rate, None);
        assert_eq!(r.errors, 0);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"error_rate\":null"));
    }

    #[test]
    fn no_defectives_no_errors() {
        let r = run_noiseless_trials(&config(0.0, 0.0, 500, 4)).unwrap();
        assert_eq!(r.errors, 0);
    }

    #[test]
    fn reproducible_and_decomposed() {
        let c = config(0.1, 0.05, 400, 11);
        let a = run_noisy_trials(&c).unwrap();
        let b = run_noisy_trials(&c).unwrap();
        assert_eq!(a.events, b.events);
        let ev = a.events;
        assert_eq!(a.errors, ev.event_i + ev.event_ii + ev.event_iii.unwrap());
    }

    #[test]
    fn noiseless_matches_noisy_at_zero_noise() {
        for mode in [GraphMode::Fresh, GraphMode::Fixed] {
            let mut c = config(0.1, 0.0, 600, 21);
            c.graph_mode = mode;
            let a = run_noiseless_trials(&c).unwrap();
            let b = run_noisy_trials(&c).unwrap();
            assert_eq!(a.errors, b.errors);
            assert_eq!(a.events.event_i, b.events.event_i);
            assert_eq!(a.events.event_ii, b.events.event_iii.unwrap());
            assert_eq!(b.events.event_ii, 0);
        }
    }

    #[test]
    fn guard_propagates() {
        let c = TrialConfig::new(SystemParams::new(3, 6, 30, 0.1, 0.0).unwrap(), 10, 0);
        assert!(matches!(run_noiseless_trials(&c), Err(Error::Guard(_))));
    }

    #[test]
    fn unreachable_output_has_zero_frequency() {
        let params = SystemParams::shape(1, 2, 4).unwrap();
        let rec = validate_lemma2(&params, 0, 1, 1000, 3).unwrap();
        assert_eq!(rec.hits, 0);
        assert!(rec.pass);
        assert!(validate_lemma2(&params, 5, 0, 10, 0).is_err());
        assert!(validate_lemma2(&params, 1, 1, 0, 0).is_err());
    }

    #[test]
    fn certain_flip_is_deterministic() {
        let params = SystemParams::new(1, 2, 2, 0.0, 1.0).unwrap();
        let rec = validate_lemma4(&params, 1, 0, 2000, 8).unwrap();
        assert!(rec.pass, "{rec:?}");
        assert_eq!(rec.exact, 1.0);
    }
}
