use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Dense univariate polynomial; `coeffs[k]` multiplies `z^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<T> {
    coeffs: Vec<T>,
}

/// Exact counting polynomial.
pub type IntPolynomial = Polynomial<BigUint>;
/// Probability-weighted counting polynomial.
pub type RealPolynomial = Polynomial<f64>;
pub type RationalPolynomial = Polynomial<BigRational>;

impl<T> Polynomial<T>
where
    T: Clone + Zero + One + Add<Output = T> + Mul<Output = T>,
{
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::new(vec![T::one()])
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).cloned().unwrap_or_else(T::zero)
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn map<U, F>(&self, f: F) -> Polynomial<U>
    where
        U: Clone + Zero + One + Add<Output = U> + Mul<Output = U>,
        F: Fn(&T) -> U,
    {
        Polynomial::new(self.coeffs.iter().map(f).collect())
    }

    /// `a*self + b`
    pub fn affine(&self, a: &T, b: &T) -> Self {
        let mut coeffs: Vec<T> = self.coeffs.iter().map(|c| a.clone() * c.clone()).collect();
        if coeffs.is_empty() {
            coeffs.push(T::zero());
        }
        coeffs[0] = coeffs[0].clone() + b.clone();
        Self::new(coeffs)
    }

    /// Product with every term of degree above `max_degree` dropped.
    pub fn mul_truncated(&self, other: &Self, max_degree: usize) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let len = (self.coeffs.len() + other.coeffs.len() - 1).min(max_degree + 1);
        let mut out = vec![T::zero(); len];
        for (i, a) in self.coeffs.iter().enumerate().take(len) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate().take(len - i) {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Self::new(out)
    }

    /// `self^e` by repeated squaring, truncated at `max_degree`.
    pub fn pow_truncated(&self, mut e: usize, max_degree: usize) -> Self {
        let mut result = Self::one().truncate(max_degree);
        let mut base = self.clone().truncate(max_degree);
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_truncated(&base, max_degree);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_truncated(&base, max_degree);
            }
        }
        result
    }

    pub fn pow(&self, e: usize) -> Self {
        let degree = self.degree().unwrap_or(0) * e;
        self.pow_truncated(e, degree)
    }

    fn truncate(mut self, max_degree: usize) -> Self {
        self.coeffs.truncate(max_degree + 1);
        Self::new(self.coeffs)
    }
}

impl<T> Mul for &Polynomial<T>
where
    T: Clone + Zero + One + Add<Output = T> + Mul<Output = T>,
{
    type Output = Polynomial<T>;

    // degrees add under multiplication
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: Self) -> Polynomial<T> {
        let degree = self.degree().unwrap_or(0) + rhs.degree().unwrap_or(0);
        self.mul_truncated(rhs, degree)
    }
}

impl RealPolynomial {
    /// Zeroes coefficients in `[-tol, 0)` and returns how many were clamped.
    /// Anything more negative is left alone for the caller to see.
    pub fn clamp_negatives(&mut self, tol: f64) -> usize {
        let mut clamped = 0;
        for c in &mut self.coeffs {
            if *c < 0.0 && *c >= -tol {
                *c = 0.0;
                clamped += 1;
            }
        }
        clamped
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c)
    }
}

impl IntPolynomial {
    pub fn to_real(&self) -> RealPolynomial {
        self.map(|c| c.to_f64().unwrap_or(f64::INFINITY))
    }

    pub fn to_rational(&self) -> RationalPolynomial {
        self.map(|c| BigRational::from_integer(c.clone().into()))
    }
}

impl<T: fmt::Display + Zero> fmt::Display for Polynomial<T> {
    /// `exponent:coefficient` pairs for the nonzero terms.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " ")?;
            }
            write!(f, "{k}:{c}")?;
            first = false;
        }
        if first {
            write!(f, "0:0")?;
        }
        Ok(())
    }
}

/// `C(n, k)` exactly.
pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// `n! / (k_1! ... k_u!)`, zero unless the parts sum to `n`.
pub fn multinomial(n: usize, parts: &[usize]) -> BigUint {
    if parts.iter().sum::<usize>() != n {
        return BigUint::zero();
    }
    let mut remaining = n;
    let mut acc = BigUint::one();
    for &k in parts {
        acc *= binomial(remaining, k);
        remaining -= k;
    }
    acc
}

/// Sparse multivariate polynomial over `u` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPolynomial<T> {
    vars: usize,
    terms: BTreeMap<Vec<usize>, T>,
}

impl<T> MultiPolynomial<T>
where
    T: Clone + Zero + One + Add<Output = T> + Mul<Output = T>,
{
    pub fn zero(vars: usize) -> Self {
        Self {
            vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(vars: usize) -> Self {
        let mut p = Self::zero(vars);
        p.terms.insert(vec![0; vars], T::one());
        p
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    /// Adds `c * z^exps`.
    pub fn add_term(&mut self, exps: Vec<usize>, c: T) {
        assert_eq!(exps.len(), self.vars, "exponent tuple length");
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(exps).or_insert_with(T::zero);
        *entry = entry.clone() + c;
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[usize], &T)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), c))
    }

    pub fn coeff(&self, exps: &[usize]) -> T {
        self.terms.get(exps).cloned().unwrap_or_else(T::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    /// Product keeping only terms with `exps[i] <= caps[i]` for all `i`.
    pub fn mul_truncated(&self, other: &Self, caps: &[usize]) -> Self {
        let mut out = Self::zero(self.vars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<usize> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                if e.iter().zip(caps).all(|(x, cap)| x <= cap) {
                    out.add_term(e, ca.clone() * cb.clone());
                }
            }
        }
        out
    }

    pub fn pow_truncated(&self, mut e: usize, caps: &[usize]) -> Self {
        let mut result = Self::one(self.vars);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_truncated(&base, caps);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_truncated(&base, caps);
            }
        }
        result
    }
}

impl MultiPolynomial<BigUint> {
    pub fn eval(&self, z: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let c = c.to_f64().unwrap_or(f64::INFINITY);
                e.iter().zip(z).fold(c, |acc, (&k, &zi)| acc * zi.powi(k as i32))
            })
            .sum()
    }
}
