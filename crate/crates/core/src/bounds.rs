//! Closed-form converse and direct bound functions of `(l, r, p, q)`, and the
//! threshold root-finders.
//!
//! All values are in bits. The `0 * log2(0) = 0` convention makes every
//! function total on closed probability intervals.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{bisect, ln_expm1};

/// Absolute tolerance of the threshold bisections.
pub const THRESHOLD_TOL: f64 = 1e-9;
/// Left end of the threshold search interval.
pub const THRESHOLD_P_MIN: f64 = 1e-9;
/// Right end of the threshold search interval.
pub const THRESHOLD_P_MAX: f64 = 0.5;
/// Step of the coarse scan that brackets the first sign change of `alpha`.
pub const THRESHOLD_SCAN_STEP: f64 = 1e-3;

fn check_p(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {p} is outside [0, 1]")))
    }
}

fn check_degrees(l: usize, r: usize) -> Result<()> {
    if l == 0 || r == 0 {
        Err(Error::Domain(format!("degrees must be positive (l={l}, r={r})")))
    } else {
        Ok(())
    }
}

/// `x log2 x` with the `0 log 0 = 0` convention.
pub(crate) fn xlog2x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// Binary entropy without the domain check.
pub(crate) fn h(p: f64) -> f64 {
    -xlog2x(p) - xlog2x(1.0 - p)
}

/// Binary entropy function in bits.
pub fn entropy2(p: f64) -> Result<f64> {
    check_p("p", p)?;
    Ok(h(p))
}

/// Entropy of a finite distribution in bits.
pub fn entropy(probs: &[f64]) -> f64 {
    -probs.iter().map(|&p| xlog2x(p)).sum::<f64>()
}

/// `z* = 2^{1/r} - 1`, the root of `(1+z)^r - 1 = 1`.
pub fn z_star(r: usize) -> f64 {
    (LN_2 / r as f64).exp_m1()
}

/// `log2((1+z)^r - 1)` for `z > 0`.
pub(crate) fn log2_or_pool(r: usize, z: f64) -> f64 {
    ln_expm1(r as f64 * z.ln_1p()) / LN_2
}

/// Converse exponent of the noiseless system: `h(p) - (l/r) h((1-p)^r)`.
///
/// Positive values rule out vanishing error probability.
pub fn alpha(l: usize, r: usize, p: f64) -> Result<f64> {
    check_degrees(l, r)?;
    check_p("p", p)?;
    Ok(h(p) - (l as f64 / r as f64) * h((1.0 - p).powi(r as i32)))
}

/// Converse exponent of the noisy system.
pub fn beta(l: usize, r: usize, p: f64, q: f64) -> Result<f64> {
    check_degrees(l, r)?;
    check_p("p", p)?;
    check_p("q", q)?;
    let ratio = l as f64 / r as f64;
    let all_negative = (1.0 - p).powi(r as i32);
    let z0 = all_negative * (1.0 - q) + (1.0 - all_negative) * q;
    Ok(h(p) + ratio * h(q) - ratio * h(z0))
}

/// Direct margin of the noiseless system: `-(l-1) h(p) - l p log2(2^{1/r} - 1)`.
///
/// Negative values guarantee a graph/estimator pair with vanishing error.
pub fn lambda_direct(l: usize, r: usize, p: f64) -> Result<f64> {
    check_degrees(l, r)?;
    check_p("p", p)?;
    Ok(-((l - 1) as f64) * h(p) - l as f64 * p * z_star(r).log2())
}

/// Direct margin of the noisy system; `lambda_direct + (l/r) h(q)`.
pub fn noisy_direct_margin(l: usize, r: usize, p: f64, q: f64) -> Result<f64> {
    check_p("q", q)?;
    Ok(lambda_direct(l, r, p)? + (l as f64 / r as f64) * h(q))
}

/// `theta(z) = -(l-1) h(p) + log2( ((1+z)^r - 1)^sigma / z^{l p} )`.
pub fn theta(l: usize, r: usize, p: f64, sigma: f64, z: f64) -> Result<f64> {
    check_degrees(l, r)?;
    check_p("p", p)?;
    if !(z > 0.0) {
        return Err(Error::Domain(format!("z = {z} must be positive")));
    }
    let sigma_max = l as f64 / r as f64;
    if !(0.0..=sigma_max).contains(&sigma) {
        return Err(Error::Domain(format!("sigma = {sigma} is outside [0, {sigma_max}]")));
    }
    Ok(-((l - 1) as f64) * h(p) + sigma * log2_or_pool(r, z) - l as f64 * p * z.log2())
}

fn check_threshold_degrees(l: usize, r: usize) -> Result<()> {
    if l < 2 || r < 2 {
        Err(Error::Domain(format!(
            "thresholds need l >= 2 and r >= 2 (l={l}, r={r})"
        )))
    } else {
        Ok(())
    }
}

/// `p*_U(l, r)`: the smallest `p` at which `alpha(l, r, .)` turns positive.
///
/// `alpha` can become positive again near `p = 1`, so the bracket is the
/// first sign change of an upward scan, not an arbitrary one.
pub fn threshold_upper(l: usize, r: usize) -> Result<f64> {
    check_threshold_degrees(l, r)?;
    let f = |p: f64| alpha(l, r, p).expect("p within [0, 1]");
    let steps = ((THRESHOLD_P_MAX - THRESHOLD_P_MIN) / THRESHOLD_SCAN_STEP).ceil() as usize;
    let grid = |k: usize| (THRESHOLD_P_MIN + k as f64 * THRESHOLD_SCAN_STEP).min(THRESHOLD_P_MAX);
    let mut prev = f(grid(0));
    if prev > 0.0 {
        return Err(Error::NoThreshold(format!(
            "alpha({l},{r},.) is already positive at p = {THRESHOLD_P_MIN}"
        )));
    }
    for k in 1..=steps {
        let cur = f(grid(k));
        if prev <= 0.0 && cur > 0.0 {
            return bisect(f, grid(k - 1), grid(k), THRESHOLD_TOL)
                .ok_or_else(|| Error::NoThreshold(format!("bisection failed for alpha({l},{r},.)")));
        }
        prev = cur;
    }
    Err(Error::NoThreshold(format!(
        "alpha({l},{r},.) has no sign change in ({THRESHOLD_P_MIN}, {THRESHOLD_P_MAX}]"
    )))
}

/// `p*_L(l, r)`: the root of the convex `lambda_direct(l, r, .)`.
pub fn threshold_lower(l: usize, r: usize) -> Result<f64> {
    check_threshold_degrees(l, r)?;
    bisect(
        |p| lambda_direct(l, r, p).expect("p within [0, 1]"),
        THRESHOLD_P_MIN,
        THRESHOLD_P_MAX,
        THRESHOLD_TOL,
    )
    .ok_or_else(|| {
        Error::NoThreshold(format!(
            "lambda({l},{r},.) has no sign change in ({THRESHOLD_P_MIN}, {THRESHOLD_P_MAX}]"
        ))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPair {
    pub l: usize,
    pub r: usize,
    pub p_lower: f64,
    pub p_upper: f64,
}

pub fn threshold_pair(l: usize, r: usize) -> Result<ThresholdPair> {
    Ok(ThresholdPair {
        l,
        r,
        p_lower: threshold_lower(l, r)?,
        p_upper: threshold_upper(l, r)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    ConverseNoiseless,
    ConverseNoisy,
    DirectNoiseless,
    DirectNoisy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub value: f64,
    pub kind: BoundKind,
}

impl BoundValue {
    pub fn evaluate(kind: BoundKind, l: usize, r: usize, p: f64, q: f64) -> Result<Self> {
        let value = match kind {
            BoundKind::ConverseNoiseless => alpha(l, r, p)?,
            BoundKind::ConverseNoisy => beta(l, r, p, q)?,
            BoundKind::DirectNoiseless => lambda_direct(l, r, p)?,
            BoundKind::DirectNoisy => noisy_direct_margin(l, r, p, q)?,
        };
        Ok(Self { value, kind })
    }
}

/// Evenly spaced abscissae `min + k (max - min) / steps`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Grid {
    pub fn new(min: f64, max: f64, steps: usize) -> Result<Self> {
        if !min.is_finite() || !max.is_finite() || max < min {
            return Err(Error::Domain(format!("grid [{min}, {max}] is empty")));
        }
        Ok(Self { min, max, steps })
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let width = self.max - self.min;
        let steps = self.steps.max(1) as f64;
        (0..=self.steps).map(move |k| {
            if k == self.steps && self.steps > 0 {
                self.max
            } else {
                self.min + width * k as f64 / steps
            }
        })
    }
}

/// The curve families that can be tabulated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "curve", rename_all = "kebab-case")]
pub enum Curve {
    /// `alpha` against integer `l`, with `r = r_over_l * l`; the grid is over `l`.
    AlphaVsL {
        p: f64,
        r_over_l: usize,
    },
    AlphaVsP {
        l: usize,
        r: usize,
    },
    BetaVsP {
        l: usize,
        r: usize,
        q: f64,
    },
    ThetaVsZ {
        l: usize,
        r: usize,
        p: f64,
        sigma: f64,
    },
    LambdaVsP {
        l: usize,
        r: usize,
    },
}

impl Curve {
    pub const IDS: [&'static str; 5] = ["alpha-vs-l", "alpha-vs-p", "beta-vs-p", "theta-vs-z", "lambda-vs-p"];

    pub fn id(&self) -> &'static str {
        match self {
            Curve::AlphaVsL { .. } => "alpha-vs-l",
            Curve::AlphaVsP { .. } => "alpha-vs-p",
            Curve::BetaVsP { .. } => "beta-vs-p",
            Curve::ThetaVsZ { .. } => "theta-vs-z",
            Curve::LambdaVsP { .. } => "lambda-vs-p",
        }
    }

    fn value_at(&self, x: f64) -> Result<f64> {
        match *self {
            Curve::AlphaVsL { p, r_over_l } => {
                let l = x.round() as usize;
                alpha(l, r_over_l * l, p)
            }
            Curve::AlphaVsP { l, r } => alpha(l, r, x),
            Curve::BetaVsP { l, r, q } => beta(l, r, x, q),
            Curve::ThetaVsZ { l, r, p, sigma } => theta(l, r, p, sigma, x),
            Curve::LambdaVsP { l, r } => lambda_direct(l, r, x),
        }
    }
}

/// Tabulates `curve` on `grid`, one `(abscissa, value)` row per point.
///
/// For [`Curve::AlphaVsL`] the rows are the integers in `[grid.min, grid.max]`.
pub fn emit_curves(curve: &Curve, grid: &Grid) -> Result<Vec<(f64, f64)>> {
    let xs: Vec<f64> = match curve {
        Curve::AlphaVsL { .. } => {
            let lo = grid.min.ceil().max(1.0) as usize;
            let hi = grid.max.floor() as usize;
            if hi < lo {
                return Err(Error::Domain(format!("no integer l in [{}, {}]", grid.min, grid.max)));
            }
            (lo..=hi).map(|l| l as f64).collect()
        }
        _ => grid.points().collect(),
    };
    xs.into_iter().map(|x| Ok((x, curve.value_at(x)?))).collect()
}
