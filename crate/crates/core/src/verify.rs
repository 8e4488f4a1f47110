//! Self-checks behind the `verify` subcommand: exhaustive-enumeration oracles,
//! z-gated Monte Carlo comparisons, and closed-form identities.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::bounds::{alpha, beta, lambda_direct, theta, z_star};
use crate::ensemble::{enumerate_ensemble, SystemParams, TestFunction, TypeVector};
use crate::error::Result;
use crate::genfunc::{
    binary_direct_margin, ensemble_prob_general, ensemble_prob_noiseless, ensemble_prob_noisy_exact, eta,
    general_converse, noiseless_direct_exponent, noisy_direct_exponent, DEFAULT_SIGMA_STEP,
};
use crate::montecarlo::{validate_lemma2, validate_lemma4};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Exact,
    Montecarlo,
    Identities,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub pass: bool,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    fn new(suite: Suite, checks: Vec<CheckResult>) -> Self {
        Self {
            suite,
            pass: checks.iter().all(|c| c.pass),
            checks,
        }
    }
}

fn check(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> CheckResult {
    CheckResult {
        name: name.into(),
        pass,
        detail: detail.into(),
    }
}

fn factorial(k: usize) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, i| acc * i)
}

/// Noise-free hit counts over every wiring: `counts[w][s]` is the number of
/// graphs with `F_G(x_w) = y_s` for the canonical `x_w` and `y_s`.
fn enumerate_noiseless(params: &SystemParams) -> Result<Vec<Vec<BigInt>>> {
    let (n, m) = (params.n(), params.m());
    let mut counts = vec![vec![BigInt::zero(); m + 1]; n + 1];
    for graph in enumerate_ensemble(params)? {
        for (w, row) in counts.iter_mut().enumerate() {
            let x: Vec<bool> = (0..n).map(|i| i < w).collect();
            let y = graph.forward_or(&x)?;
            let s = y.iter().filter(|&&b| b).count();
            // canonical y_s is a prefix of ones
            if y.iter().take(s).all(|&b| b) {
                row[s] += 1;
            }
        }
    }
    Ok(counts)
}

/// Exact noise-averaged probabilities over every wiring and every noise vector.
fn enumerate_noisy(params: &SystemParams, q: &BigRational) -> Result<Vec<Vec<BigRational>>> {
    let (n, m) = (params.n(), params.m());
    let not_q = BigRational::one() - q;
    let mut sums = vec![vec![BigRational::zero(); m + 1]; n + 1];
    let mut graphs = 0u64;
    for graph in enumerate_ensemble(params)? {
        graphs += 1;
        for (w, row) in sums.iter_mut().enumerate() {
            let x: Vec<bool> = (0..n).map(|i| i < w).collect();
            let y = graph.forward_or(&x)?;
            for (s, cell) in row.iter_mut().enumerate() {
                // probability that the noise turns y into the canonical y_s
                let prob = (0..m).fold(BigRational::one(), |acc, j| {
                    acc * if y[j] == (j < s) { not_q.clone() } else { q.clone() }
                });
                *cell += prob;
            }
        }
    }
    let total = BigRational::from_integer(BigInt::from(graphs));
    Ok(sums
        .into_iter()
        .map(|row| row.into_iter().map(|v| v / &total).collect())
        .collect())
}

/// Per-graph hit counts for a general test function, keyed by input and output types.
fn enumerate_general(params: &SystemParams, f: &TestFunction) -> Result<Vec<(TypeVector, TypeVector, u64)>> {
    let inputs = TypeVector::all(f.input_size(), params.n());
    let outputs = TypeVector::all(f.output_size(), params.m());
    let mut hits = vec![vec![0u64; outputs.len()]; inputs.len()];
    for graph in enumerate_ensemble(params)? {
        for (a, w) in inputs.iter().enumerate() {
            let y = graph.forward_general_indices(f, &w.canonical_vector())?;
            for (b, s) in outputs.iter().enumerate() {
                if y == s.canonical_vector() {
                    hits[a][b] += 1;
                }
            }
        }
    }
    let mut out = Vec::new();
    for (a, w) in inputs.iter().enumerate() {
        for (b, s) in outputs.iter().enumerate() {
            out.push((w.clone(), s.clone(), hits[a][b]));
        }
    }
    Ok(out)
}

/// Exhaustive-enumeration oracles at sizes where every wiring can be listed.
pub fn run_exact() -> Result<SuiteReport> {
    let mut checks = Vec::new();
    for (l, r, n) in [(1, 2, 2), (1, 2, 4), (2, 4, 4)] {
        let params = SystemParams::shape(l, r, n)?;
        let counts = enumerate_noiseless(&params)?;
        let total = factorial(params.sockets());
        let mut mismatches = Vec::new();
        for (w, row) in counts.iter().enumerate() {
            for (s, c) in row.iter().enumerate() {
                let brute = BigRational::new(c.clone(), total.clone());
                if ensemble_prob_noiseless(&params, w, s)? != brute {
                    mismatches.push(format!("(w={w},s={s})"));
                }
            }
        }
        checks.push(check(
            format!("noiseless coefficient formula ({l},{r},{n})"),
            mismatches.is_empty(),
            format!("{} cells, mismatches: {:?}", (n + 1) * (params.m() + 1), mismatches),
        ));
    }
    let params = SystemParams::shape(1, 2, 2)?;
    for (num, den) in [(1, 4), (1, 2)] {
        let q = BigRational::new(num.into(), den.into());
        let brute = enumerate_noisy(&params, &q)?;
        let mut worst = 0.0f64;
        let mut exact_equal = true;
        for (w, row) in brute.iter().enumerate() {
            for (s, b) in row.iter().enumerate() {
                let formula = ensemble_prob_noisy_exact(&params, w, s, &q)?;
                exact_equal &= &formula == b;
                let noisy_params = params.with_q(num as f64 / den as f64)?;
                let float = crate::genfunc::ensemble_prob_noisy(&noisy_params, w, s)?;
                worst = worst.max((float - b.to_f64().unwrap_or(f64::NAN)).abs());
            }
        }
        checks.push(check(
            format!("noisy coefficient formula (1,2,2) q={num}/{den}"),
            exact_equal && worst <= 1e-12,
            format!("rational equality {exact_equal}, float deviation {worst:e}"),
        ));
    }
    let functions = [
        ("or", TestFunction::or(2)?, (1, 2, 4)),
        ("count", TestFunction::count(2)?, (1, 2, 4)),
        ("or", TestFunction::or(4)?, (2, 4, 4)),
        ("max-level", TestFunction::max_level(2, 3)?, (1, 2, 2)),
    ];
    for (name, f, (l, r, n)) in functions {
        let params = SystemParams::shape(l, r, n)?;
        let total = factorial(params.sockets());
        let mut mismatches = 0;
        let mut cells = 0;
        for (w, s, hits) in enumerate_general(&params, &f)? {
            cells += 1;
            if ensemble_prob_general(&params, &f, &w, &s)? != BigRational::new(hits.into(), total.clone()) {
                mismatches += 1;
            }
        }
        checks.push(check(
            format!("general coefficient formula, {name} at ({l},{r},{n})"),
            mismatches == 0,
            format!("{cells} type pairs, {mismatches} mismatches"),
        ));
    }
    Ok(SuiteReport::new(Suite::Exact, checks))
}

/// z-gated comparisons of sampled frequencies with the exact probabilities.
pub fn run_montecarlo(trials: u64, seed: u64) -> Result<SuiteReport> {
    let cases = [
        ("noiseless (1,2,4) w=2 s=1", SystemParams::shape(1, 2, 4)?, 2, 1, false),
        (
            "noiseless (3,6,12) w=2 s=2",
            SystemParams::shape(3, 6, 12)?,
            2,
            2,
            false,
        ),
        (
            "noisy (1,2,2) q=0.25 w=1 s=1",
            SystemParams::new(1, 2, 2, 0.0, 0.25)?,
            1,
            1,
            true,
        ),
    ];
    let mut checks = Vec::new();
    for (name, params, w, s, noisy) in cases {
        let rec = if noisy {
            validate_lemma4(&params, w, s, trials, seed)?
        } else {
            validate_lemma2(&params, w, s, trials, seed)?
        };
        checks.push(check(
            name,
            rec.pass,
            format!(
                "empirical {:.6}, exact {:.6}, z {:.3} over {} trials",
                rec.empirical, rec.exact, rec.z_score, rec.trials
            ),
        ));
    }
    Ok(SuiteReport::new(Suite::Montecarlo, checks))
}

fn max_deviation(pairs: impl IntoIterator<Item = Result<(f64, f64)>>) -> Result<f64> {
    pairs
        .into_iter()
        .try_fold(0.0f64, |acc, pair| pair.map(|(a, b)| acc.max((a - b).abs())))
}

fn tolerance_check(name: &str, deviation: f64, tol: f64) -> CheckResult {
    check(
        name,
        deviation <= tol,
        format!("max deviation {deviation:e} (tolerance {tol:e})"),
    )
}

/// Closed-form identities between the bound functions and their generalizations.
pub fn run_identities() -> Result<SuiteReport> {
    let mut checks = Vec::new();

    let zs = z_star(6);
    let thetas: Vec<f64> = (0..=10)
        .map(|k| theta(3, 6, 0.08, 0.05 * k as f64, zs))
        .collect::<Result<_>>()?;
    let spread =
        thetas.iter().copied().fold(f64::NEG_INFINITY, f64::max) - thetas.iter().copied().fold(f64::INFINITY, f64::min);
    checks.push(tolerance_check(
        "theta is flat in sigma at the fixed point",
        spread,
        1e-12,
    ));

    let mut worst: f64 = 0.0;
    for q in [0.0, 0.1, 0.3, 0.5] {
        for sigma in [0.0, 0.25, 0.5] {
            worst = worst.max((eta(6, q, sigma, zs)? - 1.0).abs());
        }
    }
    checks.push(tolerance_check("eta equals one at the fixed point", worst, 1e-15));

    let ps: Vec<f64> = (1..=49).map(|k| 0.01 * k as f64).collect();
    let dev = max_deviation(ps.iter().map(|&p| Ok((beta(3, 6, p, 0.0)?, alpha(3, 6, p)?))))?;
    checks.push(tolerance_check("noisy converse at q=0 equals noiseless", dev, 1e-12));

    let dev = max_deviation([0.02, 0.05, 0.08, 0.12].iter().map(|&p| {
        Ok((
            noisy_direct_exponent(3, 6, p, 0.0, DEFAULT_SIGMA_STEP)?.value,
            noiseless_direct_exponent(3, 6, p, DEFAULT_SIGMA_STEP)?.value,
        ))
    }))?;
    checks.push(tolerance_check(
        "noisy direct exponent at q=0 equals noiseless",
        dev,
        1e-12,
    ));

    let or6 = TestFunction::or(6)?;
    let dev = max_deviation(
        ps.iter()
            .map(|&p| Ok((general_converse(&or6, 3, 6, &[1.0 - p, p])?, alpha(3, 6, p)?))),
    )?;
    checks.push(tolerance_check("general converse with OR equals alpha", dev, 1e-12));

    let dev = max_deviation(
        (1..=20)
            .map(|k| 0.01 * k as f64)
            .map(|p| Ok((binary_direct_margin(&or6, 3, 6, p)?.value, lambda_direct(3, 6, p)?))),
    )?;
    checks.push(tolerance_check(
        "binary direct margin with OR equals lambda at (3,6)",
        dev,
        1e-9,
    ));

    Ok(SuiteReport::new(Suite::Identities, checks))
}

pub fn run_suite(suite: Suite, trials: u64, seed: u64) -> Result<SuiteReport> {
    match suite {
        Suite::Exact => run_exact(),
        Suite::Montecarlo => run_montecarlo(trials, seed),
        Suite::Identities => run_identities(),
    }
}
