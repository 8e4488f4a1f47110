//! Growth exponents of the ensemble averages and the direct-part margins.
//!
//! Every inner infimum is taken over `t = ln z`, where the objectives are
//! convex: a nonnegative combination of log-sum-exps (or a max of them)
//! minus a linear term. The line searches therefore only need a bracket.

use std::f64::consts::LN_2;

use serde::Serialize;

use super::alpha_polys;
use crate::bounds::{entropy, h, z_star};
use crate::ensemble::TestFunction;
use crate::error::{Error, Result};
use crate::numeric::{golden_section, ln_expm1, log_add_exp, minimize_convex, LineMinimum};

pub const DEFAULT_SIGMA_STEP: f64 = 1e-3;
const LINE_TOL: f64 = 1e-10;
const MARGIN_LINE_TOL: f64 = 1e-12;
const T_LIMIT: f64 = 600.0;
const SIGMA_TOL: f64 = 1e-9;
const OUTER_TOL: f64 = 1e-8;
const MAX_SWEEPS: usize = 500;
const SLOPE_TOL: f64 = 1e-12;

/// Result of an infimum over `z > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Infimum {
    /// Minimum attained at a finite `z`.
    Attained { value: f64, z: f64 },
    /// Approached as `z -> 0` or `z -> inf` but not attained; `z` is `0`, `inf`,
    /// or the last probe when the search ran off the end of its range.
    Limit { value: f64, z: f64 },
    /// The objective is unbounded below.
    NegInfinity,
}

impl Infimum {
    pub fn value(&self) -> Option<f64> {
        match *self {
            Infimum::Attained { value, .. } | Infimum::Limit { value, .. } => Some(value),
            Infimum::NegInfinity => None,
        }
    }

    pub fn z(&self) -> Option<f64> {
        match *self {
            Infimum::Attained { z, .. } | Infimum::Limit { z, .. } => Some(z),
            Infimum::NegInfinity => None,
        }
    }

    pub fn is_neg_infinity(&self) -> bool {
        matches!(self, Infimum::NegInfinity)
    }

    /// `-inf` ranks below every finite value.
    fn better_than(&self, other: &Infimum) -> bool {
        match (self.value(), other.value()) {
            (Some(a), Some(b)) => a > b,
            (Some(_), None) => true,
            _ => false,
        }
    }
}

/// One factor `(a ((1+z)^r - 1) + b)^exponent` of a per-test generating function.
#[derive(Debug, Clone, Copy)]
struct PoolFactor {
    exponent: f64,
    a: f64,
    b: f64,
}

/// `inf_z log2( prod factors / z^{lp} )` for factors built on `(1+z)^r - 1`.
fn pool_infimum(factors: &[PoolFactor], r: usize, lp: f64) -> Infimum {
    let rf = r as f64;
    // asymptotic slopes of the objective in t = ln z (up to the 1/ln2 scale)
    let slope_hi: f64 = factors
        .iter()
        .map(|fa| fa.exponent * if fa.a > 0.0 { rf } else { 0.0 })
        .sum::<f64>()
        - lp;
    let slope_lo: f64 = factors
        .iter()
        .map(|fa| fa.exponent * if fa.b > 0.0 { 0.0 } else { 1.0 })
        .sum::<f64>()
        - lp;
    if slope_hi < -SLOPE_TOL || slope_lo > SLOPE_TOL {
        return Infimum::NegInfinity;
    }
    let logs: Vec<(f64, f64, f64)> = factors
        .iter()
        .filter(|fa| fa.exponent != 0.0)
        .map(|fa| (fa.exponent, fa.a.ln(), fa.b.ln()))
        .collect();
    // A convex function with a flat asymptote is monotone toward it, so the
    // infimum is the asymptotic value and is not attained.
    if slope_lo.abs() <= SLOPE_TOL {
        let value: f64 = logs
            .iter()
            .map(|&(e, ln_a, ln_b)| e * if ln_b.is_finite() { ln_b } else { ln_a + (r as f64).ln() })
            .sum();
        return Infimum::Limit {
            value: value / LN_2,
            z: 0.0,
        };
    }
    if slope_hi.abs() <= SLOPE_TOL {
        let value: f64 = logs
            .iter()
            .map(|&(e, ln_a, ln_b)| e * if ln_a.is_finite() { ln_a } else { ln_b })
            .sum();
        return Infimum::Limit {
            value: value / LN_2,
            z: f64::INFINITY,
        };
    }
    let objective = |t: f64| {
        let ln_pool = ln_expm1(rf * t.exp().ln_1p());
        let acc = logs
            .iter()
            .fold(0.0, |acc, &(e, ln_a, ln_b)| acc + e * log_add_exp(ln_a + ln_pool, ln_b));
        (acc - lp * t) / LN_2
    };
    match minimize_convex(objective, z_star(r).ln(), 1.0, LINE_TOL, T_LIMIT) {
        LineMinimum::Found { arg, value } => Infimum::Attained { value, z: arg.exp() },
        LineMinimum::Unbounded { arg, value } => Infimum::Limit { value, z: arg.exp() },
    }
}

fn check_open_p(name: &str, p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {p} must lie in (0, 1)")))
    }
}

fn check_sigma(l: usize, r: usize, sigma: f64) -> Result<f64> {
    if l == 0 || r == 0 {
        return Err(Error::Domain(format!("degrees must be positive (l={l}, r={r})")));
    }
    let sigma_max = l as f64 / r as f64;
    if !(0.0..=sigma_max).contains(&sigma) {
        return Err(Error::Domain(format!("sigma = {sigma} is outside [0, {sigma_max}]")));
    }
    Ok(sigma_max)
}

/// `inf_{z>0} [sigma log2((1+z)^r - 1) - l p log2 z]`.
///
/// Unbounded below unless `l p / r <= sigma <= l p`; outside that window the
/// coefficient it approximates is identically zero.
pub fn exponent_infimum(sigma: f64, l: usize, r: usize, p: f64) -> Result<Infimum> {
    check_sigma(l, r, sigma)?;
    check_open_p("p", p)?;
    let factors = [PoolFactor {
        exponent: sigma,
        a: 1.0,
        b: 0.0,
    }];
    Ok(pool_infimum(&factors, r, l as f64 * p))
}

/// `inf_{z>0} log2( eta(z) / z^{l p} )` with
/// `eta(z) = (B(1-q) + q)^sigma (B q + 1 - q)^{1-sigma}`, `B = (1+z)^r - 1`.
pub fn noisy_exponent_infimum(sigma: f64, l: usize, r: usize, p: f64, q: f64) -> Result<Infimum> {
    check_sigma(l, r, sigma)?;
    check_open_p("p", p)?;
    if !(0.0..1.0).contains(&q) {
        return Err(Error::Domain(format!("q = {q} must lie in [0, 1)")));
    }
    if sigma > 1.0 {
        return Err(Error::Domain(format!(
            "sigma = {sigma} makes the exponent 1 - sigma negative"
        )));
    }
    let factors = [
        PoolFactor {
            exponent: sigma,
            a: 1.0 - q,
            b: q,
        },
        PoolFactor {
            exponent: 1.0 - sigma,
            a: q,
            b: 1.0 - q,
        },
    ];
    Ok(pool_infimum(&factors, r, l as f64 * p))
}

/// `eta(z) = (B(1-q) + q)^sigma (B q + 1 - q)^{1-sigma}` with `B = (1+z)^r - 1`.
pub fn eta(r: usize, q: f64, sigma: f64, z: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::Domain(format!("z = {z} must be positive")));
    }
    if !(0.0..=1.0).contains(&q) || !(0.0..=1.0).contains(&sigma) {
        return Err(Error::Domain(format!("q = {q} and sigma = {sigma} must lie in [0, 1]")));
    }
    let b = (r as f64 * z.ln_1p()).exp_m1();
    Ok((b * (1.0 - q) + q).powf(sigma) * (b * q + 1.0 - q).powf(1.0 - sigma))
}

/// A maximized direct exponent and where the maximum sits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectExponent {
    /// Full exponent in bits, including the entropy terms.
    pub value: f64,
    /// Maximizing `sigma`.
    pub sigma: f64,
    /// Inner infimum at the maximizing `sigma`.
    pub inner: Infimum,
    pub grid_points: usize,
}

/// Max over a `sigma` grid, then one golden-section pass around the best point.
/// The inner value is concave in `sigma` (an infimum of affine functions).
fn maximize_sigma<F>(inner: F, sigma_max: f64, step: f64, extra: &[f64]) -> Result<(f64, Infimum, usize)>
where
    F: Fn(f64) -> Infimum,
{
    if !(step > 0.0) {
        return Err(Error::Domain(format!("sigma grid step {step} must be positive")));
    }
    let count = (sigma_max / step + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=count).map(|k| k as f64 * step).collect();
    grid.push(sigma_max);
    grid.extend(extra.iter().copied().filter(|s| (0.0..=sigma_max).contains(s)));

    let mut best_sigma = 0.0;
    let mut best = Infimum::NegInfinity;
    for &s in &grid {
        let v = inner(s);
        if v.better_than(&best) {
            best = v;
            best_sigma = s;
        }
    }
    if best.is_neg_infinity() {
        return Ok((best_sigma, best, grid.len()));
    }
    let lo = (best_sigma - step).max(0.0);
    let hi = (best_sigma + step).min(sigma_max);
    let (s, _) = golden_section(|s| inner(s).value().map_or(f64::INFINITY, |v| -v), lo, hi, SIGMA_TOL);
    let refined = inner(s);
    if refined.better_than(&best) {
        best = refined;
        best_sigma = s;
    }
    Ok((best_sigma, best, grid.len()))
}

/// `-(l-1) h(p) + max_sigma inf_z [sigma log2((1+z)^r - 1) - l p log2 z]`.
pub fn noiseless_direct_exponent(l: usize, r: usize, p: f64, sigma_step: f64) -> Result<DirectExponent> {
    let sigma_max = check_sigma(l, r, 0.0)?;
    check_open_p("p", p)?;
    let lp = l as f64 * p;
    let window = [lp / r as f64, lp];
    let (sigma, inner, grid_points) = maximize_sigma(
        |s| exponent_infimum(s, l, r, p).expect("validated"),
        sigma_max,
        sigma_step,
        &window,
    )?;
    let value = inner
        .value()
        .map(|v| -((l - 1) as f64) * h(p) + v)
        .ok_or_else(|| Error::Domain("every sigma gives an unbounded infimum".into()))?;
    Ok(DirectExponent {
        value,
        sigma,
        inner,
        grid_points,
    })
}

/// `-(l-1) h(p) + (l/r) h(q) + max_sigma inf_z log2(eta(z) / z^{l p})`.
pub fn noisy_direct_exponent(l: usize, r: usize, p: f64, q: f64, sigma_step: f64) -> Result<DirectExponent> {
    let sigma_max = check_sigma(l, r, 0.0)?;
    check_open_p("p", p)?;
    let sigma_max = sigma_max.min(1.0);
    let lp = l as f64 * p;
    let window = [lp / r as f64, lp];
    let (sigma, inner, grid_points) = maximize_sigma(
        |s| noisy_exponent_infimum(s, l, r, p, q).expect("validated"),
        sigma_max,
        sigma_step,
        &window,
    )?;
    let ratio = l as f64 / r as f64;
    let value = inner
        .value()
        .map(|v| -((l - 1) as f64) * h(p) + ratio * h(q) + v)
        .ok_or_else(|| Error::Domain("every sigma gives an unbounded infimum".into()))?;
    Ok(DirectExponent {
        value,
        sigma,
        inner,
        grid_points,
    })
}

/// `ln` of a polynomial with positive coefficients, evaluated at `z = e^t`.
#[derive(Debug, Clone)]
struct LogPoly {
    /// `(ln coefficient, exponents)`
    terms: Vec<(f64, Vec<f64>)>,
}

impl LogPoly {
    fn ln_eval(&self, t: &[f64]) -> f64 {
        let exps: Vec<f64> = self
            .terms
            .iter()
            .map(|(lc, e)| lc + e.iter().zip(t).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        let Some(max) = exps.iter().copied().reduce(f64::max) else {
            return f64::NEG_INFINITY;
        };
        max + exps.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
    }
}

fn log_polys(f: &TestFunction) -> Vec<LogPoly> {
    alpha_polys(f)
        .iter()
        .map(|a| LogPoly {
            terms: a
                .terms()
                .map(|(e, c)| {
                    let c = num_traits::ToPrimitive::to_f64(c).unwrap_or(f64::INFINITY);
                    (c.ln(), e.iter().map(|&k| k as f64).collect())
                })
                .collect(),
        })
        .collect()
}

fn max_ln(polys: &[LogPoly], t: &[f64]) -> f64 {
    polys.iter().map(|p| p.ln_eval(t)).fold(f64::NEG_INFINITY, f64::max)
}

/// `(l/r) max_k log2 beta_k(z) - l p log2 z` for a binary-input test function,
/// where `beta_k(z) = sum over x in {0,1}^r with f(x) = b_k of z^{wt(x)}`.
#[derive(Debug, Clone)]
pub struct BinaryMarginObjective {
    betas: Vec<LogPoly>,
    ratio: f64,
    lp: f64,
}

impl BinaryMarginObjective {
    pub fn new(f: &TestFunction, l: usize, r: usize, p: f64) -> Result<Self> {
        if !f.is_binary_input() {
            return Err(Error::Input("binary margin needs the input alphabet {0, 1}".into()));
        }
        if f.arity() != r {
            return Err(Error::Input(format!(
                "function arity {} does not match r = {r}",
                f.arity()
            )));
        }
        check_open_p("p", p)?;
        // alpha_k(1, z) = beta_k(z): keep only the weight exponent
        let betas = log_polys(f)
            .into_iter()
            .map(|lp| LogPoly {
                terms: lp.terms.into_iter().map(|(c, e)| (c, vec![e[1]])).collect(),
            })
            .collect();
        Ok(Self {
            betas,
            ratio: l as f64 / r as f64,
            lp: l as f64 * p,
        })
    }

    pub fn eval_ln_z(&self, t: f64) -> f64 {
        (self.ratio * max_ln(&self.betas, &[t]) - self.lp * t) / LN_2
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.eval_ln_z(z.ln())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinaryMargin {
    pub value: f64,
    /// Minimizing `z`.
    pub z: f64,
}

/// `-(l-1) h(p) + inf_z [(l/r) max_k log2 beta_k(z) - l p log2 z]`.
pub fn binary_direct_margin(f: &TestFunction, l: usize, r: usize, p: f64) -> Result<BinaryMargin> {
    let objective = BinaryMarginObjective::new(f, l, r, p)?;
    let t0 = z_star(r).ln();
    let (t, value) = match minimize_convex(|t| objective.eval_ln_z(t), t0, 1.0, MARGIN_LINE_TOL, T_LIMIT) {
        LineMinimum::Found { arg, value } | LineMinimum::Unbounded { arg, value } => (arg, value),
    };
    Ok(BinaryMargin {
        value: -((l - 1) as f64) * h(p) + value,
        z: t.exp(),
    })
}

/// `(l/r) max_k log2 alpha_k(z) - l sum_i p_i log2 z_i` over `u` variables.
#[derive(Debug, Clone)]
pub struct GeneralMarginObjective {
    alphas: Vec<LogPoly>,
    ratio: f64,
    weights: Vec<f64>,
}

impl GeneralMarginObjective {
    pub fn new(f: &TestFunction, l: usize, r: usize, probs: &[f64]) -> Result<Self> {
        if f.arity() != r {
            return Err(Error::Input(format!(
                "function arity {} does not match r = {r}",
                f.arity()
            )));
        }
        if probs.len() != f.input_size() {
            return Err(Error::Input(format!(
                "{} probabilities for {} symbols",
                probs.len(),
                f.input_size()
            )));
        }
        if let Some(i) = probs.iter().position(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::Domain(format!(
                "probability {} of symbol {i} is outside [0, 1]",
                probs[i]
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("probabilities sum to {total}, not 1")));
        }
        if let Some(index) = probs.iter().position(|&p| p == 0.0) {
            return Err(Error::ReducedAlphabet { index });
        }
        Ok(Self {
            alphas: log_polys(f),
            ratio: l as f64 / r as f64,
            weights: probs.iter().map(|&p| l as f64 * p).collect(),
        })
    }

    /// Objective at `z_i = e^{t_i}`.
    pub fn eval_ln_z(&self, t: &[f64]) -> f64 {
        let linear: f64 = self.weights.iter().zip(t).map(|(w, ti)| w * ti).sum();
        (self.ratio * max_ln(&self.alphas, t) - linear) / LN_2
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        let t: Vec<f64> = z.iter().map(|zi| zi.ln()).collect();
        self.eval_ln_z(&t)
    }
}

/// A generalized direct margin together with convergence diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneralMargin {
    pub value: f64,
    /// Minimizing point, with `z_1 = 1`.
    pub z: Vec<f64>,
    pub sweeps: usize,
    /// Objective decrease in the last sweep, in bits.
    pub last_improvement: f64,
    pub converged: bool,
    /// False if some line search ran off to `|ln z| = 600` (infimum approached, not attained).
    pub attained: bool,
}

/// `-(l-1) h(p) + inf_{z>0} [(l/r) max_k log2 alpha_k(z) - l sum_i p_i log2 z_i]`.
///
/// The objective is invariant under `z -> c z` (each `alpha_k` is homogeneous
/// of degree `r` and the weights sum to `l`), so `z_1` is pinned to 1 and the
/// rest are found by cyclic line searches along coordinates and pairwise
/// diagonals, plus a pattern move along each sweep's net displacement.
pub fn general_direct_margin(f: &TestFunction, l: usize, r: usize, probs: &[f64]) -> Result<GeneralMargin> {
    let objective = GeneralMarginObjective::new(f, l, r, probs)?;
    let u = probs.len();
    let entropy_term = -((l - 1) as f64) * entropy(probs);
    let mut t = vec![0.0; u];
    let mut current = objective.eval_ln_z(&t);
    let mut directions: Vec<Vec<f64>> = Vec::new();
    for i in 1..u {
        let mut d = vec![0.0; u];
        d[i] = 1.0;
        directions.push(d);
    }
    for i in 1..u {
        for j in (i + 1)..u {
            for sign in [1.0, -1.0] {
                let mut d = vec![0.0; u];
                d[i] = 1.0;
                d[j] = sign;
                directions.push(d);
            }
        }
    }

    let mut attained = true;
    let mut sweeps = 0;
    let mut last_improvement = 0.0;
    let mut line_search = |t: &mut Vec<f64>, current: &mut f64, d: &[f64]| {
        let base = t.clone();
        let along = |s: f64| {
            let point: Vec<f64> = base.iter().zip(d).map(|(b, di)| b + s * di).collect();
            objective.eval_ln_z(&point)
        };
        let (s, value) = match minimize_convex(along, 0.0, 1.0, MARGIN_LINE_TOL, T_LIMIT) {
            LineMinimum::Found { arg, value } => (arg, value),
            LineMinimum::Unbounded { arg, value } => {
                attained = false;
                (arg, value)
            }
        };
        if value < *current {
            for (ti, (b, di)) in t.iter_mut().zip(base.iter().zip(d)) {
                *ti = b + s * di;
            }
            *current = value;
        }
    };

    if u > 1 {
        while sweeps < MAX_SWEEPS {
            sweeps += 1;
            let start = t.clone();
            let start_value = current;
            for d in &directions {
                line_search(&mut t, &mut current, d);
            }
            let pattern: Vec<f64> = t.iter().zip(&start).map(|(a, b)| a - b).collect();
            if pattern.iter().any(|&x| x != 0.0) {
                line_search(&mut t, &mut current, &pattern);
            }
            last_improvement = start_value - current;
            if last_improvement <= 1e-13 {
                break;
            }
        }
    }
    Ok(GeneralMargin {
        value: entropy_term + current,
        z: t.iter().map(|ti| ti.exp()).collect(),
        sweeps,
        last_improvement,
        converged: last_improvement <= OUTER_TOL,
        attained,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{lambda_direct, noisy_direct_margin, theta};

    #[test]
    fn infimum_window() {
        // lp = 0.24, lp/r = 0.04
        assert!(exponent_infimum(0.0, 3, 6, 0.08).unwrap().is_neg_infinity());
        assert!(exponent_infimum(0.5, 3, 6, 0.08).unwrap().is_neg_infinity());
        assert!(exponent_infimum(0.03, 3, 6, 0.08).unwrap().is_neg_infinity());
        let inf = exponent_infimum(0.1, 3, 6, 0.08).unwrap();
        assert!(matches!(inf, Infimum::Attained { .. }), "{inf:?}");
        assert!(exponent_infimum(0.6, 3, 6, 0.08).is_err());
        assert!(exponent_infimum(0.1, 3, 6, 0.0).is_err());
    }

    #[test]
    fn infimum_below_value_at_fixed_point() {
        let zs = z_star(6);
        for sigma in [0.05, 0.1, 0.2, 0.24] {
            let v = exponent_infimum(sigma, 3, 6, 0.08).unwrap().value().unwrap();
            let at_fixed = -3.0 * 0.08 * zs.log2();
            assert!(v <= at_fixed + 1e-12, "sigma {sigma}: {v} vs {at_fixed}");
        }
    }

    #[test]
    fn infimum_at_window_edge_is_a_limit() {
        // sigma = lp: the infimum sigma log2 r is approached as z -> 0
        let inf = exponent_infimum(0.24, 3, 6, 0.08).unwrap();
        assert!(matches!(inf, Infimum::Limit { .. }), "{inf:?}");
        assert!((inf.value().unwrap() - 0.24 * 6f64.log2()).abs() < 1e-9);
    }

    #[test]
    fn infimum_matches_theta_minimum() {
        let sigma = 0.15;
        let inf = exponent_infimum(sigma, 3, 6, 0.08).unwrap();
        let z = inf.z().unwrap();
        let th = theta(3, 6, 0.08, sigma, z).unwrap() + 2.0 * h(0.08);
        assert!((th - inf.value().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn noiseless_exponent_relaxation() {
        for k in 1..=15 {
            let p = 0.01 * k as f64;
            let e = noiseless_direct_exponent(3, 6, p, DEFAULT_SIGMA_STEP).unwrap();
            assert!(e.value <= lambda_direct(3, 6, p).unwrap() + 1e-9);
        }
        assert!(noiseless_direct_exponent(3, 6, 0.10, DEFAULT_SIGMA_STEP).unwrap().value < 0.0);
    }

    #[test]
    fn sigma_refinement_is_stable() {
        let coarse = noiseless_direct_exponent(3, 6, 0.08, 0.01).unwrap();
        let fine = noiseless_direct_exponent(3, 6, 0.08, 0.001).unwrap();
        assert!((coarse.value - fine.value).abs() < 1e-6);
        assert!(noiseless_direct_exponent(3, 6, 0.08, 0.0).is_err());
    }

    #[test]
    fn noisy_exponent_properties() {
        for p in [0.02, 0.05, 0.1] {
            let a = noisy_direct_exponent(3, 6, p, 0.0, DEFAULT_SIGMA_STEP).unwrap();
            let b = noiseless_direct_exponent(3, 6, p, DEFAULT_SIGMA_STEP).unwrap();
            assert!((a.value - b.value).abs() <= 1e-12);
        }
        let e = noisy_direct_exponent(3, 6, 0.05, 0.01, DEFAULT_SIGMA_STEP).unwrap();
        assert!(e.value <= noisy_direct_margin(3, 6, 0.05, 0.01).unwrap() + 1e-9);
        assert!(e.value < 0.0);
        assert!(noisy_exponent_infimum(0.2, 3, 6, 0.05, 1.0).is_err());
    }

    #[test]
    fn binary_margin_for_or_is_lambda_below_kink_slope() {
        let f = TestFunction::or(6).unwrap();
        for p in [0.02, 0.05, 0.1, 0.2] {
            let m = binary_direct_margin(&f, 3, 6, p).unwrap();
            assert!((m.value - lambda_direct(3, 6, p).unwrap()).abs() < 1e-9, "p={p}");
            assert!((m.z - z_star(6)).abs() < 1e-8);
        }
    }

    #[test]
    fn or_envelope_identity() {
        let f = TestFunction::or(6).unwrap();
        let obj = BinaryMarginObjective::new(&f, 3, 6, 0.08).unwrap();
        let zs = z_star(6);
        for k in 1..200 {
            let z = 0.005 * k as f64;
            let pool = if z >= zs {
                0.5 * crate::bounds::log2_or_pool(6, z)
            } else {
                0.0
            };
            let envelope = pool - 3.0 * 0.08 * z.log2();
            assert!((obj.eval(z) - envelope).abs() < 1e-12, "z={z}");
        }
    }

    #[test]
    fn parity_betas_total() {
        let f = TestFunction::parity(5).unwrap();
        let obj = BinaryMarginObjective::new(&f, 2, 5, 0.1).unwrap();
        for z in [0.1f64, 0.7, 2.0] {
            let total: f64 = obj.betas.iter().map(|b| b.ln_eval(&[z.ln()]).exp()).sum();
            assert!((total - (1.0 + z).powi(5)).abs() < 1e-12 * total);
        }
        assert!(binary_direct_margin(&f, 2, 5, 0.1).unwrap().value.is_finite());
    }

    #[test]
    fn general_margin_edge_cases() {
        let single = TestFunction::from_rule(vec![0.0], vec![0.0], 4, |_| 0).unwrap();
        let m = general_direct_margin(&single, 2, 4, &[1.0]).unwrap();
        assert_eq!(m.value, 0.0);
        let f = TestFunction::or(6).unwrap();
        assert_eq!(
            general_direct_margin(&f, 3, 6, &[1.0, 0.0]).unwrap_err(),
            Error::ReducedAlphabet { index: 1 }
        );
        assert!(general_direct_margin(&f, 3, 6, &[0.5, 0.4]).is_err());
    }

    #[test]
    fn general_margin_for_or_matches_binary() {
        let f = TestFunction::or(6).unwrap();
        for p in [0.03, 0.08, 0.15] {
            let g = general_direct_margin(&f, 3, 6, &[1.0 - p, p]).unwrap();
            let b = binary_direct_margin(&f, 3, 6, p).unwrap();
            assert!((g.value - b.value).abs() < 1e-8, "p={p}: {} vs {}", g.value, b.value);
            assert!(g.converged);
        }
    }

    #[test]
    fn general_margin_is_scale_invariant() {
        let f = TestFunction::max_level(4, 3).unwrap();
        let obj = GeneralMarginObjective::new(&f, 2, 4, &[0.8, 0.15, 0.05]).unwrap();
        for z in [[1.0, 0.3, 0.1], [0.5, 2.0, 0.01]] {
            let scaled: Vec<f64> = z.iter().map(|zi| zi * 3.7).collect();
            assert!((obj.eval(&z) - obj.eval(&scaled)).abs() < 1e-12);
        }
    }
}
