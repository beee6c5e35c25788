//! Smooth functions with analytic derivatives, plus a finite-difference fallback.

use crate::poly::{Coefficient, Polynomial};
use crate::scalar::{ln_gamma, Real};

/// A function on R^n with partial derivatives of any order.
pub trait SmoothFunction<T: Real>: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[T]) -> T;

    /// `∂^α f(x)`; `alpha` has one entry per coordinate.
    fn derivative(&self, x: &[T], alpha: &[usize]) -> T;
}

/// `Π_j sin(π x_j)`; in 1D the classical `sin(πx)`.
#[derive(Debug, Clone, Copy)]
pub struct SinePi {
    pub dim: usize,
}

impl SinePi {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl<T: Real> SmoothFunction<T> for SinePi {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[T]) -> T {
        x.iter().map(|&xi| (T::PI() * xi).sin()).fold(T::one(), |a, b| a * b)
    }

    fn derivative(&self, x: &[T], alpha: &[usize]) -> T {
        let pi = T::PI();
        x.iter()
            .zip(alpha)
            .map(|(&xi, &a)| {
                // d^a/dx^a sin(πx) = π^a sin(πx + aπ/2)
                let shift = a % 4;
                let s = pi * xi;
                let v = match shift {
                    0 => s.sin(),
                    1 => s.cos(),
                    2 => -s.sin(),
                    _ => -s.cos(),
                };
                pi.powi(a as i32) * v
            })
            .fold(T::one(), |acc, v| acc * v)
    }
}

/// `exp(rate · x)` in 1D.
#[derive(Debug, Clone, Copy)]
pub struct Exponential<T> {
    pub rate: T,
}

impl<T: Real> SmoothFunction<T> for Exponential<T> {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[T]) -> T {
        (self.rate * x[0]).exp()
    }

    fn derivative(&self, x: &[T], alpha: &[usize]) -> T {
        self.rate.powi(alpha[0] as i32) * (self.rate * x[0]).exp()
    }
}

/// Polynomial in the Cartesian coordinates.
#[derive(Debug, Clone)]
pub struct PolynomialFunction<T> {
    poly: Polynomial<T>,
}

impl<T: Real + Coefficient> PolynomialFunction<T> {
    pub fn new(poly: Polynomial<T>) -> Self {
        Self { poly }
    }

    /// `Σ c_i x^i` in one variable.
    pub fn univariate(coefficients: &[T]) -> Self {
        Self::new(Polynomial::from_terms(
            1,
            coefficients.iter().enumerate().map(|(i, c)| (vec![i as u32], *c)),
        ))
    }

    pub fn polynomial(&self) -> &Polynomial<T> {
        &self.poly
    }
}

impl<T: Real + Coefficient> SmoothFunction<T> for PolynomialFunction<T> {
    fn dim(&self) -> usize {
        self.poly.nvars()
    }

    fn value(&self, x: &[T]) -> T {
        self.poly.eval(x)
    }

    fn derivative(&self, x: &[T], alpha: &[usize]) -> T {
        let vars: Vec<usize> =
            alpha.iter().enumerate().flat_map(|(j, &a)| std::iter::repeat_n(j, a)).collect();
        self.poly.derivative_seq(&vars).eval(x)
    }
}

/// Arbitrary closure; derivatives by nested central differences.
///
/// First derivatives use the step `cbrt(ε)`. An order-r derivative nests r
/// central differences with step `ε^{1/(r+2)}`, which balances truncation
/// against cancellation; expect roughly `ε^{2/(r+2)}` relative accuracy, so
/// orders above 2 are not trustworthy in `f64`.
pub struct FiniteDifference<F> {
    dim: usize,
    f: F,
}

impl<F> FiniteDifference<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<T: Real, F: Fn(&[T]) -> T + Sync> SmoothFunction<T> for FiniteDifference<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[T]) -> T {
        (self.f)(x)
    }

    fn derivative(&self, x: &[T], alpha: &[usize]) -> T {
        let vars: Vec<usize> =
            alpha.iter().enumerate().flat_map(|(j, &a)| std::iter::repeat_n(j, a)).collect();
        if vars.is_empty() {
            return (self.f)(x);
        }
        let step = T::epsilon().powf(T::one() / T::from_usize_lossy(vars.len() + 2));
        let mut pt = x.to_vec();
        nested_difference(&self.f, &mut pt, &vars, step)
    }
}

fn nested_difference<T: Real, F: Fn(&[T]) -> T>(f: &F, x: &mut [T], vars: &[usize], step: T) -> T {
    let Some((&v, rest)) = vars.split_first() else {
        return f(x);
    };
    let orig = x[v];
    x[v] = orig + step;
    let plus = nested_difference(f, x, rest, step);
    x[v] = orig - step;
    let minus = nested_difference(f, x, rest, step);
    x[v] = orig;
    (plus - minus) / (T::lit(2.0) * step)
}

/// `‖sin(πx)‖_{L^p(0,1)} = ‖cos(πx)‖_{L^p(0,1)} = [Γ((p+1)/2) / (√π Γ(p/2+1))]^{1/p}`.
pub fn sine_lp_norm<T: Real>(p: T) -> T {
    let half = T::lit(0.5);
    let ln = ln_gamma((p + T::one()) * half) - half * T::PI().ln() - ln_gamma(p * half + T::one());
    (ln / p).exp()
}

/// `|sin(πx)|_{r,p,(0,1)} = π^r ‖sin(πx)‖_{L^p}`.
pub fn sine_seminorm<T: Real>(r: usize, p: T) -> T {
    T::PI().powi(r as i32) * sine_lp_norm(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn sine_derivatives_cycle() {
        let u = SinePi::new(1);
        let x = [0.3f64];
        assert_relative_eq!(u.derivative(&x, &[0]), (PI * 0.3).sin());
        assert_relative_eq!(u.derivative(&x, &[1]), PI * (PI * 0.3).cos());
        assert_relative_eq!(u.derivative(&x, &[2]), -PI * PI * (PI * 0.3).sin());
        assert_relative_eq!(u.derivative(&x, &[5]), PI.powi(5) * (PI * 0.3).cos(), max_relative = 1e-14);
    }

    #[test]
    fn finite_differences_track_analytic() {
        let fd = FiniteDifference::new(1, |x: &[f64]| (PI * x[0]).sin());
        let u = SinePi::new(1);
        for order in 1..=2 {
            let a = u.derivative(&[0.37], &[order]);
            let b = fd.derivative(&[0.37], &[order]);
            assert!((a - b).abs() < 1e-5 * a.abs().max(1.0), "order {order}: {a} vs {b}");
        }
    }

    #[test]
    fn polynomial_function() {
        let f = PolynomialFunction::univariate(&[1.0, 2.0, 3.0]);
        assert_eq!(f.value(&[2.0]), 17.0);
        assert_eq!(f.derivative(&[2.0], &[1]), 14.0);
        assert_eq!(f.derivative(&[2.0], &[3]), 0.0);
    }

    #[test]
    fn sine_lp_norms() {
        assert_relative_eq!(sine_lp_norm(2.0f64), 0.5f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(sine_lp_norm(1.0f64), 2.0 / PI, epsilon = 1e-14);
        assert_relative_eq!(sine_seminorm(1, 2.0f64), PI / 2f64.sqrt(), epsilon = 1e-14);
    }
}
