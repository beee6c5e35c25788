//! Scalar abstraction shared by every numeric module.
//!
//! Geometry, quadrature, norms and constants are written against [`Real`], so the
//! same code runs in `f32` or `f64`. Exact construction of the Lagrange basis uses
//! [`Rational`] coefficients and only converts to a [`Real`] at evaluation time.

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::Serialize;
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

/// Exact arbitrary-precision rational.
pub type Rational = Ratio<BigInt>;

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + LowerExp
    + Default
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Serialize
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(x: usize) -> Self {
        Self::from_usize(x).expect("usize representable")
    }

    /// Converts an exact rational, rounding once.
    fn from_rational(r: &Rational) -> Self {
        Self::lit(r.to_f64().expect("rational within f64 range"))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Neumaier compensated summation.
///
/// Accumulation is order-dependent only at the level of the compensated
/// residual, which keeps reductions over elements stable to ~1 ulp.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    comp: T,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self { sum: T::zero(), comp: T::zero() }
    }

    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.comp
    }
}

/// Sums an iterator with [`CompensatedSum`].
pub fn compensated_sum<T: Real, I: IntoIterator<Item = T>>(items: I) -> T {
    let mut acc = CompensatedSum::new();
    for x in items {
        acc.add(x);
    }
    acc.value()
}

/// `ln Γ(x)` for `x > 0`.
///
/// Shifts the argument above 10 by the recurrence and then applies the
/// Stirling series through the `x^-11` term.
pub fn ln_gamma<T: Real>(x: T) -> T {
    assert!(x > T::zero(), "ln_gamma requires a positive argument");
    let ten = T::lit(10.0);
    let mut shift = T::zero();
    let mut z = x;
    while z < ten {
        shift += z.ln();
        z += T::one();
    }
    // Bernoulli coefficients B_{2j} / (2j (2j-1)).
    const SERIES: [f64; 6] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360360.0,
    ];
    let half = T::lit(0.5);
    let inv = z.recip();
    let inv2 = inv * inv;
    let mut term = inv;
    let mut tail = T::zero();
    for c in SERIES {
        tail += T::lit(c) * term;
        term *= inv2;
    }
    let ln_two_pi = (T::lit(2.0) * T::PI()).ln();
    (z - half) * z.ln() - z + half * ln_two_pi + tail - shift
}

/// `ln(n!)`; exact summation for small `n`, log-gamma beyond.
pub fn ln_factorial<T: Real>(n: u64) -> T {
    if n < 2 {
        return T::zero();
    }
    if n <= 32 {
        return compensated_sum((2..=n).map(|i| T::lit(i as f64).ln()));
    }
    ln_gamma(T::lit(n as f64 + 1.0))
}

/// `ln(hi! / lo!)` for `lo <= hi`.
pub fn ln_factorial_ratio<T: Real>(hi: u64, lo: u64) -> T {
    debug_assert!(lo <= hi);
    if hi - lo <= 64 {
        compensated_sum((lo + 1..=hi).map(|i| T::lit(i as f64).ln()))
    } else {
        ln_factorial::<T>(hi) - ln_factorial::<T>(lo)
    }
}

/// `n!` as an exact big integer.
pub fn factorial_exact(n: u64) -> BigInt {
    (1..=n).fold(BigInt::from(1u32), |acc, i| acc * BigInt::from(i))
}
