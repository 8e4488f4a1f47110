//! Generating functions behind the ensemble averages.
//!
//! Every probability here has the form `Coeff[g(z), z^{l w}] / C(n l, w l)`
//! (or its multinomial analogue), where `g` assigns one factor per test and
//! the coefficient counts right-socket labelings that reproduce the
//! observed test outcomes.

mod exponent;
mod poly;

pub use exponent::{
    binary_direct_margin, eta, exponent_infimum, general_direct_margin, noiseless_direct_exponent,
    noisy_direct_exponent, noisy_exponent_infimum, BinaryMargin, BinaryMarginObjective, DirectExponent, GeneralMargin,
    GeneralMarginObjective, Infimum, DEFAULT_SIGMA_STEP,
};
pub use poly::{binomial, multinomial, IntPolynomial, MultiPolynomial, Polynomial, RationalPolynomial, RealPolynomial};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::bounds::{entropy, xlog2x};
use crate::ensemble::{SystemParams, TestFunction, TypeVector};
use crate::error::{Error, Result};

/// `(1+z)^r - 1` with exact binomial coefficients.
pub fn or_pool_poly(r: usize) -> IntPolynomial {
    let coeffs = (0..=r)
        .map(|k| if k == 0 { BigUint::zero() } else { binomial(r, k) })
        .collect();
    IntPolynomial::new(coeffs)
}

fn check_weights(params: &SystemParams, w: usize, s: usize) -> Result<()> {
    if w > params.n() {
        return Err(Error::Input(format!("input weight {w} exceeds n = {}", params.n())));
    }
    if s > params.m() {
        return Err(Error::Input(format!("output weight {s} exceeds m = {}", params.m())));
    }
    Ok(())
}

fn to_rational(x: BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

/// Ensemble average of `1[y_s = F_G(x_w)]` for the OR test, exactly.
pub fn ensemble_prob_noiseless(params: &SystemParams, w: usize, s: usize) -> Result<BigRational> {
    check_weights(params, w, s)?;
    let target = params.l() * w;
    let count = or_pool_poly(params.r()).pow_truncated(s, target).coeff(target);
    Ok(BigRational::new(
        BigInt::from(count),
        BigInt::from(binomial(params.sockets(), target)),
    ))
}

/// The two per-test factors of the noisy generating function, in the ring of `q`.
fn noisy_factors<T>(r: usize, q: &T, lift: impl Fn(&BigUint) -> T) -> (Polynomial<T>, Polynomial<T>)
where
    T: Clone + Zero + One + std::ops::Add<Output = T> + std::ops::Mul<Output = T> + std::ops::Sub<Output = T>,
{
    let pool = or_pool_poly(r).map(lift);
    let not_q = T::one() - q.clone();
    // observed 1: (pool fired, no flip) or (silent, flipped)
    let positive = pool.affine(&not_q, q);
    // observed 0: (pool fired, flipped) or (silent, no flip)
    let negative = pool.affine(q, &not_q);
    (positive, negative)
}

/// Noise-averaged ensemble probability of `y_s = F_G(x_w) xor e`, `e ~ Bernoulli(q)^m`,
/// with `q` taken from `params`.
pub fn ensemble_prob_noisy(params: &SystemParams, w: usize, s: usize) -> Result<f64> {
    check_weights(params, w, s)?;
    let target = params.l() * w;
    let q = params.q();
    let (positive, negative) = noisy_factors(params.r(), &q, |c| c.to_f64().unwrap_or(f64::INFINITY));
    let mut zeta = positive
        .pow_truncated(s, target)
        .mul_truncated(&negative.pow_truncated(params.m() - s, target), target);
    zeta.clamp_negatives(1e-12);
    let norm = binomial(params.sockets(), target).to_f64().unwrap_or(f64::INFINITY);
    Ok(zeta.coeff(target) / norm)
}

/// Exact form of [`ensemble_prob_noisy`] for a rational `q` (the `q` in `params` is ignored).
pub fn ensemble_prob_noisy_exact(params: &SystemParams, w: usize, s: usize, q: &BigRational) -> Result<BigRational> {
    check_weights(params, w, s)?;
    if q < &BigRational::zero() || q > &BigRational::one() {
        return Err(Error::Domain(format!("q = {q} is outside [0, 1]")));
    }
    let target = params.l() * w;
    let (positive, negative) = noisy_factors(params.r(), q, |c| to_rational(c.clone()));
    let zeta = positive
        .pow_truncated(s, target)
        .mul_truncated(&negative.pow_truncated(params.m() - s, target), target);
    Ok(zeta.coeff(target) / to_rational(binomial(params.sockets(), target)))
}

/// `alpha_k(z_1..z_u) = sum over input types t with f(t) = b_k of multinomial(r; t) z^t`.
pub fn alpha_k_poly(f: &TestFunction, k: usize) -> Result<MultiPolynomial<BigUint>> {
    if k >= f.output_size() {
        return Err(Error::Input(format!(
            "output index {k} out of range 0..{}",
            f.output_size()
        )));
    }
    let mut poly = MultiPolynomial::zero(f.input_size());
    for (t, out) in f.entries() {
        if out == k {
            poly.add_term(t.counts().to_vec(), multinomial(f.arity(), t.counts()));
        }
    }
    Ok(poly)
}

pub fn alpha_polys(f: &TestFunction) -> Vec<MultiPolynomial<BigUint>> {
    (0..f.output_size())
        .map(|k| alpha_k_poly(f, k).expect("k in range"))
        .collect()
}

/// Ensemble probability that an input of type `w` maps to a fixed output of type `s`.
pub fn ensemble_prob_general(
    params: &SystemParams,
    f: &TestFunction,
    w: &TypeVector,
    s: &TypeVector,
) -> Result<BigRational> {
    if f.arity() != params.r() {
        return Err(Error::Input(format!(
            "function arity {} does not match r = {}",
            f.arity(),
            params.r()
        )));
    }
    if w.alphabet_size() != f.input_size() || w.len() != params.n() {
        return Err(Error::Input(format!(
            "input type {w} must have {} entries summing to n = {}",
            f.input_size(),
            params.n()
        )));
    }
    if s.alphabet_size() != f.output_size() || s.len() != params.m() {
        return Err(Error::Input(format!(
            "output type {s} must have {} entries summing to m = {}",
            f.output_size(),
            params.m()
        )));
    }
    let caps: Vec<usize> = w.counts().iter().map(|&c| c * params.l()).collect();
    let product = alpha_polys(f)
        .iter()
        .zip(s.counts())
        .fold(MultiPolynomial::one(f.input_size()), |acc, (alpha_k, &sk)| {
            acc.mul_truncated(&alpha_k.pow_truncated(sk, &caps), &caps)
        });
    let count = product.coeff(&caps);
    Ok(BigRational::new(
        BigInt::from(count),
        BigInt::from(multinomial(params.sockets(), &caps)),
    ))
}

fn check_distribution(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::Domain("empty distribution".into()));
    }
    if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(Error::Domain(format!("{probs:?} has an entry outside [0, 1]")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("{probs:?} sums to {total}, not 1")));
    }
    Ok(())
}

/// Converse exponent of the generalized system:
/// `h(p_1..p_u) + (l/r) sum_k alpha_k(p) log2 alpha_k(p)`.
pub fn general_converse(f: &TestFunction, l: usize, r: usize, probs: &[f64]) -> Result<f64> {
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
    check_distribution(probs)?;
    let output_entropy_neg: f64 = alpha_polys(f).iter().map(|a| xlog2x(a.eval(probs))).sum();
    Ok(entropy(probs) + (l as f64 / r as f64) * output_entropy_neg)
}

/// `Pr(Y_j = b_k)` for every `k`, i.e. `alpha_k(p_1..p_u)`.
pub fn output_distribution(f: &TestFunction, probs: &[f64]) -> Vec<f64> {
    alpha_polys(f).iter().map(|a| a.eval(probs)).collect()
}
