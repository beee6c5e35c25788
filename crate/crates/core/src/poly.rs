//! Sparse multivariate polynomials over the barycentric variables.

use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use crate::scalar::{Rational, Real};

/// Coefficient ring: exact [`Rational`] or a floating [`Real`].
pub trait Coefficient:
    Clone
    + Debug
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn from_i64(x: i64) -> Self;
    fn to_real<T: Real>(&self) -> T;
    /// Human-readable form used in JSON dumps.
    fn render(&self) -> String;
}

impl Coefficient for Rational {
    fn from_i64(x: i64) -> Self {
        Rational::from_integer(x.into())
    }
    fn to_real<T: Real>(&self) -> T {
        T::lit(self.to_f64().expect("rational within f64 range"))
    }
    fn render(&self) -> String {
        self.to_string()
    }
}

macro_rules! float_coefficient {
    ($t:ty) => {
        impl Coefficient for $t {
            fn from_i64(x: i64) -> Self {
                x as $t
            }
            fn to_real<T: Real>(&self) -> T {
                T::lit(*self as f64)
            }
            fn render(&self) -> String {
                format!("{:e}", self)
            }
        }
    };
}
float_coefficient!(f32);
float_coefficient!(f64);

/// Exponent tuple of a monomial.
pub type Exponents = Vec<u32>;

/// Polynomial in `nvars` variables with no stored zero coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial<C> {
    nvars: usize,
    terms: BTreeMap<Exponents, C>,
}

/// One monomial in a JSON dump.
#[derive(Debug, Serialize)]
pub struct TermRecord {
    pub exponents: Exponents,
    pub coefficient: String,
}

impl<C: Coefficient> Polynomial<C> {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    /// The variable `x_i`.
    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(e, C::one());
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Exponents, C)>) -> Self {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            assert_eq!(e.len(), nvars, "exponent arity");
            p.add_term(e, c);
        }
        p
    }

    fn add_term(&mut self, e: Exponents, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let sum = o.get().clone() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &C)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn coefficient(&self, e: &[u32]) -> C {
        self.terms.get(e).cloned().unwrap_or_else(C::zero)
    }

    pub fn scale(&self, s: &C) -> Self {
        Self::from_terms(self.nvars, self.terms.iter().map(|(e, c)| (e.clone(), c.clone() * s.clone())))
    }

    /// `∂/∂x_var`.
    pub fn derivative(&self, var: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[var] == 0 {
                continue;
            }
            let mut d = e.clone();
            d[var] -= 1;
            out.add_term(d, c.clone() * C::from_i64(e[var] as i64));
        }
        out
    }

    /// Successive partial derivatives, one per listed variable.
    pub fn derivative_seq(&self, vars: &[usize]) -> Self {
        vars.iter().fold(self.clone(), |p, &v| p.derivative(v))
    }

    /// Exact evaluation in the coefficient ring.
    pub fn eval_exact(&self, x: &[C]) -> C {
        assert_eq!(x.len(), self.nvars);
        let mut acc = C::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &k) in x.iter().zip(e) {
                for _ in 0..k {
                    t = t * xi.clone();
                }
            }
            acc = acc + t;
        }
        acc
    }

    /// Evaluation in floating point (coefficients rounded once per call).
    pub fn eval<T: Real>(&self, x: &[T]) -> T {
        assert_eq!(x.len(), self.nvars);
        let mut acc = T::zero();
        for (e, c) in &self.terms {
            let mut t: T = c.to_real();
            for (xi, &k) in x.iter().zip(e) {
                if k > 0 {
                    t *= xi.powi(k as i32);
                }
            }
            acc += t;
        }
        acc
    }

    /// Rounds every coefficient into `T`.
    pub fn to_real<T: Real + Coefficient>(&self) -> Polynomial<T> {
        Polynomial::from_terms(self.nvars, self.terms.iter().map(|(e, c)| (e.clone(), c.to_real::<T>())))
    }

    /// Eliminates the last variable with `x_last = 1 − Σ others`.
    ///
    /// Two polynomials in barycentric variables agree on the simplex iff their
    /// reductions are equal.
    pub fn reduce_barycentric(&self) -> Self {
        let last = self.nvars - 1;
        let mut complement = Self::constant(self.nvars, C::one());
        for v in 0..last {
            complement = &complement - &Self::var(self.nvars, v);
        }
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            let mut head = e.clone();
            head[last] = 0;
            let mut t = Self::from_terms(self.nvars, [(head, c.clone())]);
            for _ in 0..e[last] {
                t = &t * &complement;
            }
            out = &out + &t;
        }
        out
    }

    pub fn records(&self) -> Vec<TermRecord> {
        self.terms
            .iter()
            .map(|(e, c)| TermRecord { exponents: e.clone(), coefficient: c.render() })
            .collect()
    }
}

impl<C: Coefficient> Add for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn add(self, rhs: Self) -> Polynomial<C> {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl<C: Coefficient> Sub for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn sub(self, rhs: Self) -> Polynomial<C> {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -c.clone());
        }
        out
    }
}

impl<C: Coefficient> Mul for &Polynomial<C> {
    type Output = Polynomial<C>;
    fn mul(self, rhs: Self) -> Polynomial<C> {
        assert_eq!(self.nvars, rhs.nvars);
        let mut out = Polynomial::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca.clone() * cb.clone());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn arithmetic_and_degree() {
        let x = Polynomial::<Rational>::var(2, 0);
        let y = Polynomial::<Rational>::var(2, 1);
        let p = &(&x * &y) + &x;
        assert_eq!(p.degree(), 2);
        let z = &p - &p;
        assert!(z.is_zero());
        assert_eq!(z.degree(), 0);
    }

    #[test]
    fn exact_derivative_and_eval() {
        // 2λ² − λ → 4λ − 1
        let l = Polynomial::<Rational>::var(1, 0);
        let p = &(&l * &l).scale(&q(2, 1)) - &l;
        let d = p.derivative(0);
        assert_eq!(d.coefficient(&[1]), q(4, 1));
        assert_eq!(d.coefficient(&[0]), q(-1, 1));
        assert_eq!(p.eval_exact(&[q(1, 2)]), q(0, 1));
        assert_eq!(p.eval(&[0.75f64]), 0.375);
    }

    #[test]
    fn mixed_second_derivative_is_constant() {
        let a = Polynomial::<Rational>::var(2, 0);
        let b = Polynomial::<Rational>::var(2, 1);
        let p = (&a * &b).scale(&q(4, 1));
        let d = p.derivative_seq(&[0, 1]);
        assert_eq!(d, Polynomial::constant(2, q(4, 1)));
    }

    #[test]
    fn barycentric_reduction() {
        let a = Polynomial::<Rational>::var(2, 0);
        let b = Polynomial::<Rational>::var(2, 1);
        let s = &a + &b;
        assert_eq!(s.reduce_barycentric(), Polynomial::constant(2, q(1, 1)));
        let sq = &(&a * &a) - &(&b * &b);
        // a² − (1 − a)² = 2a − 1
        assert_eq!(
            sq.reduce_barycentric(),
            Polynomial::from_terms(2, [(vec![1, 0], q(2, 1)), (vec![0, 0], q(-1, 1))])
        );
    }

    #[test]
    fn cancellation_drops_terms() {
        let x = Polynomial::<f64>::var(1, 0);
        let p = &x - &x;
        assert_eq!(p.terms().count(), 0);
    }
}
