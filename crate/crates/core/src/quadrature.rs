//! Gauss–Legendre rules, collapsed (Duffy) product rules on simplices and an
//! adaptive Gauss integrator on intervals.

use crate::geometry::Simplex;
use crate::scalar::{compensated_sum, CompensatedSum, Real};

/// Gauss–Legendre nodes and weights on `[0, 1]`.
///
/// Roots of `P_m` by Newton iteration from the Chebyshev-like initial guess,
/// computed in `f64` and rounded once into `T`.
pub fn gauss_legendre<T: Real>(m: usize) -> (Vec<T>, Vec<T>) {
    assert!(m >= 1);
    let mut x = vec![0.0f64; m];
    let mut w = vec![0.0f64; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, z);
            for j in 2..=m {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            if m == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = mf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    let pts = x.iter().map(|&v| T::lit(0.5 * (v + 1.0))).collect();
    let wts = w.iter().map(|&v| T::lit(0.5 * v)).collect();
    (pts, wts)
}

/// Quadrature on the reference n-simplex in barycentric form.
#[derive(Debug, Clone)]
pub struct QuadratureRule<T> {
    dim: usize,
    points: Vec<Vec<T>>,
    weights: Vec<T>,
    degree: usize,
}

impl<T: Real> QuadratureRule<T> {
    /// Collapsed Gauss–Legendre product rule exact for total degree `degree`.
    pub fn simplex(dim: usize, degree: usize) -> Self {
        assert!(dim >= 1);
        // Cartesian points on the reference (d)-simplex, built up one coordinate at a time.
        let mut cart: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
        for d in 1..=dim {
            let m = (degree + d).div_ceil(2).max(1);
            let (ts, ws) = gauss_legendre::<f64>(m);
            let mut next = Vec::with_capacity(cart.len() * m);
            for (t, wt) in ts.iter().zip(&ws) {
                let shrink = 1.0 - t;
                let jac = shrink.powi(d as i32 - 1);
                for (y, wy) in &cart {
                    let mut x: Vec<f64> = y.iter().map(|v| v * shrink).collect();
                    x.push(*t);
                    next.push((x, wt * jac * wy));
                }
            }
            cart = next;
        }
        let points = cart
            .iter()
            .map(|(x, _)| {
                let mut l = Vec::with_capacity(dim + 1);
                l.push(T::lit(1.0 - x.iter().sum::<f64>()));
                l.extend(x.iter().map(|&v| T::lit(v)));
                l
            })
            .collect();
        let weights = cart.iter().map(|(_, w)| T::lit(*w)).collect();
        Self { dim, points, weights, degree }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Barycentric coordinates of the nodes.
    pub fn points(&self) -> &[Vec<T>] {
        &self.points
    }

    /// Weights; they sum to `1/n!`.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn exactness_degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `∫_K g` where `g` receives barycentric coordinates and the mapped point.
    pub fn integrate<F>(&self, simplex: &Simplex<T>, mut g: F) -> T
    where
        F: FnMut(&[T], &[T]) -> T,
    {
        let mut acc = CompensatedSum::new();
        for (l, w) in self.points.iter().zip(&self.weights) {
            let x = simplex.point(l);
            acc.add(*w * g(l, &x));
        }
        acc.value() * simplex.jacobian_det()
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveEstimate<T> {
    pub value: T,
    pub error: T,
}

/// Adaptive Gauss–Legendre on `[a, b]` to absolute tolerance `tol`.
///
/// Each panel compares a 10-point rule with the sum over its two halves and
/// bisects until the difference meets the panel's share of `tol`.
pub fn integrate_adaptive<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T) -> AdaptiveEstimate<T> {
    const POINTS: usize = 10;
    const MAX_DEPTH: u32 = 48;
    let (xs, ws) = gauss_legendre::<T>(POINTS);
    let panel = |lo: T, hi: T| -> T {
        let len = hi - lo;
        compensated_sum(xs.iter().zip(&ws).map(|(x, w)| *w * f(lo + len * *x))) * len
    };
    let total = (b - a).abs();
    let mut values = Vec::new();
    let mut errors = Vec::new();
    let mut stack = vec![(a, b, panel(a, b), 0u32)];
    while let Some((lo, hi, whole, depth)) = stack.pop() {
        let mid = (lo + hi) * T::lit(0.5);
        let left = panel(lo, mid);
        let right = panel(mid, hi);
        let diff = (left + right - whole).abs();
        let share = tol * ((hi - lo).abs() / total);
        if diff <= share || depth >= MAX_DEPTH {
            values.push(left + right);
            errors.push(diff);
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    AdaptiveEstimate { value: compensated_sum(values), error: compensated_sum(errors) }
}
