//! Sparse multivariate polynomials with real coefficients.
//!
//! A [`Polynomial`] stores its terms in a `BTreeMap` keyed by exponent vector,
//! so iteration (and therefore evaluation and printing) follows the
//! lexicographic order of exponents. Every constructor canonicalizes: like
//! terms are merged and coefficients with magnitude below [`ZERO_CUTOFF`] are
//! dropped.

mod parse;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

pub use parse::{ParseError, ParseErrorKind};

/// Coefficients at or below this magnitude are dropped after merging.
pub const ZERO_CUTOFF: f64 = 1e-15;

/// Exponents of one monomial, one entry per variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExponentVector(Vec<u32>);

impl ExponentVector {
    pub fn zero(num_vars: usize) -> Self {
        ExponentVector(vec![0; num_vars])
    }

    pub fn unit(num_vars: usize, var: usize) -> Self {
        let mut e = vec![0; num_vars];
        e[var] = 1;
        ExponentVector(e)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    fn add(&self, other: &Self) -> Self {
        ExponentVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    fn monomial_value(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .filter(|(e, _)| **e > 0)
            .map(|(&e, &xi)| xi.powi(e as i32))
            .product()
    }
}

impl From<Vec<u32>> for ExponentVector {
    fn from(v: Vec<u32>) -> Self {
        ExponentVector(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    num_vars: usize,
    terms: BTreeMap<ExponentVector, f64>,
}

impl Polynomial {
    pub fn zero(num_vars: usize) -> Self {
        Polynomial {
            num_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(num_vars: usize, c: f64) -> Self {
        Self::from_terms(num_vars, [(ExponentVector::zero(num_vars), c)])
    }

    /// The coordinate polynomial `x_{var+1}` (variables are zero-based here).
    pub fn variable(num_vars: usize, var: usize) -> Self {
        Self::from_terms(num_vars, [(ExponentVector::unit(num_vars, var), 1.0)])
    }

    /// Builds a canonical polynomial from possibly repeated terms.
    ///
    /// Panics if an exponent vector does not have length `num_vars`.
    pub fn from_terms<I>(num_vars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (ExponentVector, f64)>,
    {
        let mut map: BTreeMap<ExponentVector, f64> = BTreeMap::new();
        for (e, c) in terms {
            assert_eq!(e.len(), num_vars, "exponent vector length mismatch");
            *map.entry(e).or_insert(0.0) += c;
        }
        map.retain(|_, c| c.abs() > ZERO_CUTOFF);
        Polynomial {
            num_vars,
            terms: map,
        }
    }

    pub fn parse(text: &str, num_vars: usize) -> std::result::Result<Self, ParseError> {
        parse::parse(text, num_vars)
    }

    /// `Σ x_i^2 - r^2`.
    pub fn sphere(num_vars: usize, radius: f64) -> Self {
        let mut terms: Vec<_> = (0..num_vars)
            .map(|i| {
                let mut e = vec![0; num_vars];
                e[i] = 2;
                (ExponentVector(e), 1.0)
            })
            .collect();
        terms.push((ExponentVector::zero(num_vars), -radius * radius));
        Self::from_terms(num_vars, terms)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ExponentVector, f64)> {
        self.terms.iter().map(|(e, &c)| (e, c))
    }

    pub fn coefficient(&self, exponents: &[u32]) -> f64 {
        self.terms
            .get(&ExponentVector(exponents.to_vec()))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coefficient(&vec![0; self.num_vars])
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(ExponentVector::degree).max().unwrap_or(0)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        Error::check_dim(self.num_vars, x.len())?;
        Ok(self.eval_unchecked(x))
    }

    /// Evaluation without the dimension check; callers guarantee `x.len() == num_vars`.
    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.monomial_value(x))
            .sum()
    }

    pub fn derivative(&self, var: usize) -> Polynomial {
        assert!(var < self.num_vars);
        let terms = self.terms.iter().filter_map(|(e, &c)| {
            let k = e.0[var];
            if k == 0 {
                return None;
            }
            let mut d = e.0.clone();
            d[var] = k - 1;
            Some((ExponentVector(d), c * k as f64))
        });
        Polynomial::from_terms(self.num_vars, terms)
    }

    pub fn gradient(&self) -> Vec<Polynomial> {
        (0..self.num_vars).map(|i| self.derivative(i)).collect()
    }

    pub fn scale(&self, a: f64) -> Polynomial {
        Polynomial::from_terms(self.num_vars, self.terms.iter().map(|(e, &c)| (e.clone(), a * c)))
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut acc = Polynomial::constant(self.num_vars, 1.0);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Re-embeds the polynomial into `num_vars` variables, appending unused ones.
    pub fn extend_vars(&self, num_vars: usize) -> Polynomial {
        assert!(num_vars >= self.num_vars);
        let terms = self.terms.iter().map(|(e, &c)| {
            let mut v = e.0.clone();
            v.resize(num_vars, 0);
            (ExponentVector(v), c)
        });
        Polynomial::from_terms(num_vars, terms)
    }

    fn combine(&self, other: &Polynomial, sign: f64) -> Polynomial {
        assert_eq!(self.num_vars, other.num_vars, "variable count mismatch");
        let terms = self
            .terms
            .iter()
            .map(|(e, &c)| (e.clone(), c))
            .chain(other.terms.iter().map(|(e, &c)| (e.clone(), sign * c)));
        Polynomial::from_terms(self.num_vars, terms)
    }
}

/// Gradient of a polynomial as `n` partial-derivative polynomials, evaluated together.
#[derive(Debug, Clone)]
pub struct Gradient(Vec<Polynomial>);

impl Gradient {
    pub fn of(p: &Polynomial) -> Self {
        Gradient(p.gradient())
    }

    pub fn components(&self) -> &[Polynomial] {
        &self.0
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.0.iter().map(|d| d.eval_unchecked(x)).collect()
    }
}

/// A polynomial bundled with its symbolic gradient and Hessian.
#[derive(Debug, Clone)]
pub struct PolyFunction {
    poly: Polynomial,
    grad: Gradient,
    hess: Vec<Gradient>,
}

impl PolyFunction {
    pub fn new(poly: Polynomial) -> Self {
        let grad = Gradient::of(&poly);
        let hess = grad.components().iter().map(Gradient::of).collect();
        PolyFunction { poly, grad, hess }
    }

    pub fn poly(&self) -> &Polynomial {
        &self.poly
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.poly.eval_unchecked(x)
    }

    pub fn gradient_at(&self, x: &[f64]) -> Vec<f64> {
        self.grad.eval(x)
    }

    /// Row-major Hessian.
    pub fn hessian_at(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.hess.iter().map(|row| row.eval(x)).collect()
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.combine(rhs, 1.0)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.combine(rhs, -1.0)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.num_vars, rhs.num_vars, "variable count mismatch");
        let terms = self.terms.iter().flat_map(|(ea, &ca)| {
            rhs.terms.iter().map(move |(eb, &cb)| (ea.add(eb), ca * cb))
        });
        Polynomial::from_terms(self.num_vars, terms)
    }
}

impl fmt::Display for Polynomial {
    /// Canonical form: terms in lexicographic exponent order, explicit `*` and `^`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (e, &c)) in self.terms.iter().enumerate() {
            let magnitude = c.abs();
            if idx == 0 {
                if c < 0.0 {
                    write!(f, "-")?;
                }
            } else if c < 0.0 {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mut factors: Vec<String> = Vec::new();
            let is_constant = e.0.iter().all(|&k| k == 0);
            if magnitude != 1.0 || is_constant {
                factors.push(format!("{}", magnitude));
            }
            for (i, &k) in e.0.iter().enumerate() {
                match k {
                    0 => {}
                    1 => factors.push(format!("x{}", i + 1)),
                    _ => factors.push(format!("x{}^{}", i + 1, k)),
                }
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str, n: usize) -> Polynomial {
        Polynomial::parse(s, n).unwrap()
    }

    #[test]
    fn motzkin_has_four_terms() {
        let m = p("x1^2*x2^4 + x1^4*x2^2 - 3*x1^2*x2^2 + 1", 2);
        assert_eq!(m.num_terms(), 4);
        assert_eq!(m.coefficient(&[2, 2]), -3.0);
        assert_eq!(m.evaluate(&[1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn zero_coefficients_are_dropped() {
        let c = p("0*x1 + 5", 1);
        assert_eq!(c.num_terms(), 1);
        assert_eq!(c.constant_term(), 5.0);
    }

    #[test]
    fn binomial_expansion() {
        let q = p("(x1 - 1)^2", 1);
        assert_eq!(q, p("x1^2 - 2*x1 + 1", 1));
        assert_eq!(q.to_string(), "1 - 2*x1 + x1^2");
    }

    #[test]
    fn degenerate_constraint_vanishes_on_axis() {
        let g1 = p("(1 - x1*x2*x3)^2 + x1^2 + x2^2 - 1", 3);
        // constant terms cancel exactly
        assert_eq!(g1.constant_term(), 0.0);
        for t in [-3.0, 0.0, 2.5, 1e6] {
            assert_eq!(g1.evaluate(&[0.0, 0.0, t]).unwrap(), 0.0);
        }
    }

    #[test]
    fn evaluate_at_origin_is_constant_term() {
        let q = p("3*x1*x2 - 7 + x2^3", 2);
        assert_eq!(q.evaluate(&[0.0, 0.0]).unwrap(), -7.0);
    }

    #[test]
    fn evaluate_rejects_wrong_dimension() {
        let q = p("x1 + x2", 2);
        assert!(matches!(
            q.evaluate(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn gradient_power_rule() {
        let q = p("x1^2*x2", 2);
        let g = Gradient::of(&q).eval(&[2.0, 3.0]);
        assert_eq!(g, vec![12.0, 4.0]);
    }

    #[test]
    fn gradient_of_cube() {
        let h = p("x1^3", 3);
        let g = h.gradient();
        assert_eq!(g[0], p("3*x1^2", 3));
        assert!(g[1].is_zero() && g[2].is_zero());
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let c = p("42", 4);
        assert!(c.gradient().iter().all(Polynomial::is_zero));
        assert_eq!(c.gradient().len(), 4);
    }

    #[test]
    fn printing_uses_explicit_operators() {
        let q = p("-x2 + 2.5*x1*x2^3 - x1", 2);
        assert_eq!(q.to_string(), "-x2 - x1 + 2.5*x1*x2^3");
        assert_eq!(p(&q.to_string(), 2), q);
        assert_eq!(Polynomial::zero(2).to_string(), "0");
    }

    #[test]
    fn sphere_polynomial() {
        let s = Polynomial::sphere(3, 2.0);
        assert_eq!(s.evaluate(&[2.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(s.evaluate(&[0.0, 0.0, 0.0]).unwrap(), -4.0);
    }

    #[test]
    fn extend_vars_preserves_values() {
        let q = p("x1*x2 + 1", 2).extend_vars(3);
        assert_eq!(q.evaluate(&[2.0, 3.0, 99.0]).unwrap(), 7.0);
    }
}
