//! Critical mesh size, the two relative-accuracy laws, the `h*_q` sequence and
//! its weak-* limit.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::norms::SobolevIndex;
use crate::quadrature::integrate_adaptive;
use crate::scalar::{ln_factorial_ratio, Real};

/// Tolerance for the pairing integrals.
pub const PAIRING_TOLERANCE: f64 = 1e-10;

/// Two element degrees with their composite constants `𝒞_{k_i} |u|_{k_i+1,p,Ω}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ElementPair<T> {
    pub k1: usize,
    pub k2: usize,
    pub c_k1: T,
    pub c_k2: T,
}

impl<T: Real> ElementPair<T> {
    pub fn new(k1: usize, k2: usize, c_k1: T, c_k2: T) -> Result<Self> {
        if k1 >= k2 {
            return Err(Error::invalid("k2", format!("need k1 < k2, got k1 = {k1}, k2 = {k2}")));
        }
        for (name, c) in [("c_k1", c_k1), ("c_k2", c_k2)] {
            if !(c > T::zero()) || !c.is_finite() {
                return Err(Error::invalid(name, format!("{c} is not a positive finite constant")));
            }
        }
        Ok(Self { k1, k2, c_k1, c_k2 })
    }

    pub fn exponent(&self) -> usize {
        self.k2 - self.k1
    }
}

/// `(C_k1 / C_k2)^{1/(k2−k1)}`.
///
/// The quotient is formed first, so scaling both constants by a power of two
/// leaves the result bit-identical.
pub fn h_star<T: Real>(pair: &ElementPair<T>) -> T {
    let ratio = pair.c_k1 / pair.c_k2;
    if ratio.is_finite() && ratio > T::zero() {
        (ratio.ln() / T::from_usize_lossy(pair.exponent())).exp()
    } else {
        ((pair.c_k1.ln() - pair.c_k2.ln()) / T::from_usize_lossy(pair.exponent())).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LawKind {
    Nonlinear,
    Heaviside,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccuracyLaw<T> {
    pub h_star: T,
    pub exponent: usize,
    pub kind: LawKind,
}

impl<T: Real> AccuracyLaw<T> {
    pub fn new(h_star: T, exponent: usize, kind: LawKind) -> Result<Self> {
        if !(h_star > T::zero()) || !h_star.is_finite() {
            return Err(Error::invalid("h_star", format!("{h_star} is not positive")));
        }
        if exponent == 0 {
            return Err(Error::invalid("exponent", "must be at least 1"));
        }
        Ok(Self { h_star, exponent, kind })
    }

    pub fn from_pair(pair: &ElementPair<T>, kind: LawKind) -> Result<Self> {
        Self::new(h_star(pair), pair.exponent(), kind)
    }

    /// `P(h)`; see [`prob_law`].
    pub fn eval(&self, h: T) -> Result<T> {
        prob_law(self, h)
    }

    /// `P(h) − 1`, without cancellation for small `h`.
    fn deficit(&self, h: T) -> T {
        let half = T::lit(0.5);
        match self.kind {
            LawKind::Nonlinear if h <= self.h_star => -half * (h / self.h_star).powi(self.exponent as i32),
            LawKind::Nonlinear => half * (self.h_star / h).powi(self.exponent as i32) - T::one(),
            LawKind::Heaviside if h < self.h_star => T::zero(),
            LawKind::Heaviside if h > self.h_star => -T::one(),
            LawKind::Heaviside => -half,
        }
    }
}

/// Probability that the degree-`k2` element is the more accurate one at mesh size `h`.
///
/// Nonlinear: `1 − ½(h/h*)^e` for `h ≤ h*`, `½(h*/h)^e` above.
/// Heaviside: 1 below `h*`, 0 above, ½ at `h*`.
pub fn prob_law<T: Real>(law: &AccuracyLaw<T>, h: T) -> Result<T> {
    if !(h > T::zero()) {
        return Err(Error::invalid("h", format!("{h} is not positive")));
    }
    let half = T::lit(0.5);
    let e = law.exponent as i32;
    Ok(match law.kind {
        LawKind::Nonlinear if h <= law.h_star => T::one() - half * (h / law.h_star).powi(e),
        LawKind::Nonlinear => half * (law.h_star / h).powi(e),
        LawKind::Heaviside if h < law.h_star => T::one(),
        LawKind::Heaviside if h > law.h_star => T::zero(),
        LawKind::Heaviside => half,
    })
}

/// `h*` from the refactored constant ratio; `seminorm_ratio = |u|_{k1+1,p}/|u|_{k2+1,p}`,
/// `cea = (1 + ‖a‖/α_{h,k1}, 1 + ‖a‖/α_{h,k2})`.
#[allow(clippy::too_many_arguments)]
pub fn h_star_explicit<T: Real>(
    n: usize,
    m: usize,
    p: T,
    k1: usize,
    k2: usize,
    seminorm_ratio: T,
    cea: (T, T),
) -> Result<T> {
    if k1 >= k2 {
        return Err(Error::invalid("k2", format!("need k1 < k2, got k1 = {k1}, k2 = {k2}")));
    }
    if !(seminorm_ratio > T::zero()) || !(cea.0 > T::zero()) || !(cea.1 > T::zero()) {
        return Err(Error::invalid("seminorm_ratio", "ratios must be positive"));
    }
    let index = SobolevIndex::new(m, p, n)?;
    index.check_admissible(k1)?;
    index.check_admissible(k2)?;
    let ln = cea.0.ln() - cea.1.ln() + ln_bracket(n, m, p, k1, k2) + seminorm_ratio.ln();
    Ok((ln / T::from_usize_lossy(k2 - k1)).exp())
}

/// ln of the k-dependent part of `𝒞_{k1}/𝒞_{k2}`.
fn ln_bracket<T: Real>(n: usize, m: usize, p: T, k1: usize, k2: usize) -> T {
    let nf = T::from_usize_lossy(n);
    let (a, b) = (T::from_usize_lossy(k1), T::from_usize_lossy(k2));
    let gap = |k: usize| T::from_usize_lossy(k + 1 - m) - nf / p;
    nf * ((a + nf).ln() - (b + nf).ln())
        + T::from_usize_lossy(m * (n + 2)) * (a.ln() - b.ln())
        + ln_factorial_ratio::<T>((k2 - m) as u64, (k1 - m) as u64)
        + gap(k2).ln()
        - gap(k1).ln()
}

/// Supplies `ln |u|_{r,p,Ω}` for every order `r`.
pub trait SeminormModel<T: Real>: Sync {
    fn ln_seminorm(&self, r: usize) -> T;

    /// `lim |u|_{r+1}/|u|_r`, when it exists.
    fn limit_ratio(&self) -> Option<T>;
}

/// `u = sin(πx)` on (0,1): `|u|_{r,p} = π^r ‖sin(πx)‖_{L^p}`.
#[derive(Debug, Clone, Copy)]
pub struct SineModel<T> {
    pub p: T,
}

impl<T: Real> SeminormModel<T> for SineModel<T> {
    fn ln_seminorm(&self, r: usize) -> T {
        T::from_usize_lossy(r) * T::PI().ln() + crate::functions::sine_lp_norm(self.p).ln()
    }

    fn limit_ratio(&self) -> Option<T> {
        Some(T::PI())
    }
}

/// `u = exp(a x)` on (0,1): `|u|_{r,p} = |a|^r ‖exp(a x)‖_{L^p}`.
#[derive(Debug, Clone, Copy)]
pub struct ExponentialModel<T> {
    pub rate: T,
    pub p: T,
}

impl<T: Real> SeminormModel<T> for ExponentialModel<T> {
    fn ln_seminorm(&self, r: usize) -> T {
        let ap = self.rate * self.p;
        let lp = if ap.abs() < T::lit(1e-12) { T::zero() } else { (ap.exp_m1() / ap).ln() / self.p };
        T::from_usize_lossy(r) * self.rate.abs().ln() + lp
    }

    fn limit_ratio(&self) -> Option<T> {
        Some(self.rate.abs())
    }
}

/// `|u|_r = scale · ratio^r`.
#[derive(Debug, Clone, Copy)]
pub struct GeometricModel<T> {
    pub ratio: T,
    pub scale: T,
}

impl<T: Real> SeminormModel<T> for GeometricModel<T> {
    fn ln_seminorm(&self, r: usize) -> T {
        self.scale.ln() + T::from_usize_lossy(r) * self.ratio.ln()
    }

    fn limit_ratio(&self) -> Option<T> {
        Some(self.ratio)
    }
}

/// The Céa factors `1 + ‖a‖/α_{h,k+q}` along the sequence.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum CeaModel<T> {
    /// Same factor for every degree.
    #[default]
    Constant,
    /// `values[q]` for `q < len`, `limit` afterwards.
    Sequence { values: Vec<T>, limit: T },
}

impl<T: Real> CeaModel<T> {
    pub fn factor(&self, q: usize) -> T {
        match self {
            CeaModel::Constant => T::one(),
            CeaModel::Sequence { values, limit } => values.get(q).copied().unwrap_or(*limit),
        }
    }

    fn validate(&self) -> Result<()> {
        if let CeaModel::Sequence { values, limit } = self {
            if values.iter().chain(std::iter::once(limit)).any(|v| !(*v > T::zero()) || !v.is_finite()) {
                return Err(Error::invalid("cea_model", "factors must be positive and finite"));
            }
        }
        Ok(())
    }
}

/// Parameters shared by the sequence and the weak-* test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SequenceParams<T> {
    pub n: usize,
    pub m: usize,
    pub p: T,
    pub k: usize,
}

impl<T: Real> SequenceParams<T> {
    pub fn new(n: usize, m: usize, p: T, k: usize) -> Result<Self> {
        SobolevIndex::new(m, p, n)?.check_admissible(k)?;
        Ok(Self { n, m, p, k })
    }
}

impl Default for SequenceParams<f64> {
    /// `k = 2` elements measured in `H^1` on the unit interval.
    fn default() -> Self {
        Self { n: 1, m: 1, p: 2.0, k: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HStarRow<T> {
    pub q: usize,
    pub h_star: T,
    pub h_star_over_q: T,
}

/// `ln h*_q`, comparing degree `k` with `k + q`.
pub fn ln_h_star_q<T: Real, S: SeminormModel<T> + ?Sized>(
    params: &SequenceParams<T>,
    q: usize,
    model: &S,
    cea: &CeaModel<T>,
) -> T {
    let k = params.k;
    let ln = cea.factor(0).ln() - cea.factor(q).ln()
        + ln_bracket(params.n, params.m, params.p, k, k + q)
        + model.ln_seminorm(k + 1)
        - model.ln_seminorm(k + q + 1);
    ln / T::from_usize_lossy(q)
}

/// `h*_q` for `q = 1..=q_max`.
pub fn h_star_sequence<T: Real, S: SeminormModel<T> + ?Sized>(
    params: &SequenceParams<T>,
    q_max: usize,
    model: &S,
    cea: &CeaModel<T>,
) -> Result<Vec<HStarRow<T>>> {
    cea.validate()?;
    Ok((1..=q_max)
        .into_par_iter()
        .map(|q| {
            let h = ln_h_star_q(params, q, model, cea).exp();
            HStarRow { q, h_star: h, h_star_over_q: h / T::from_usize_lossy(q) }
        })
        .collect())
}

/// `1/(e·l)`, the slope of `h*_q` in `q`.
pub fn asymptotic_slope<T: Real>(l: T) -> T {
    (T::one() + l.ln()).neg().exp()
}

/// Test function for distributional pairings.
pub trait TestFunction<T: Real>: Sync {
    fn value(&self, h: T) -> T;

    /// Closed interval outside which the function vanishes.
    fn support(&self) -> Option<(T, T)>;
}

/// `exp(−1/(1−t²))` with `t` the affine map of `[a, b]` onto `[−1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bump<T> {
    pub a: T,
    pub b: T,
}

impl<T: Real> Bump<T> {
    pub fn new(a: T, b: T) -> Result<Self> {
        if !(a < b) {
            return Err(Error::invalid("bump", format!("empty support [{a}, {b}]")));
        }
        Ok(Self { a, b })
    }
}

impl Default for Bump<f64> {
    fn default() -> Self {
        Self { a: 1.0, b: 2.0 }
    }
}

impl<T: Real> TestFunction<T> for Bump<T> {
    fn value(&self, h: T) -> T {
        let t = (T::lit(2.0) * h - self.a - self.b) / (self.b - self.a);
        let s = T::one() - t * t;
        if s <= T::zero() {
            T::zero()
        } else {
            (-s.recip()).exp()
        }
    }

    fn support(&self) -> Option<(T, T)> {
        Some((self.a, self.b))
    }
}

/// The zero function on `[a, b]`.
#[derive(Debug, Clone, Copy)]
pub struct ZeroFunction<T> {
    pub a: T,
    pub b: T,
}

impl<T: Real> TestFunction<T> for ZeroFunction<T> {
    fn value(&self, _: T) -> T {
        T::zero()
    }

    fn support(&self) -> Option<(T, T)> {
        Some((self.a, self.b))
    }
}

/// A closure with an optional declared support.
pub struct Custom<F, T> {
    pub f: F,
    pub support: Option<(T, T)>,
}

impl<T: Real, F: Fn(T) -> T + Sync> TestFunction<T> for Custom<F, T> {
    fn value(&self, h: T) -> T {
        (self.f)(h)
    }

    fn support(&self) -> Option<(T, T)> {
        self.support
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakStarRow<T> {
    pub q: usize,
    pub h_star: T,
    /// `⟨T_{P_q}, φ⟩`.
    pub pairing: T,
    /// `⟨T_H, φ⟩ = ∫_0^∞ φ`.
    pub limit: T,
    pub error: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakStarReport<T> {
    pub rows: Vec<WeakStarRow<T>>,
    /// Position in `rows` of the first `q` with `h*_q > sup supp φ`.
    pub first_index: Option<usize>,
}

impl<T: Real> WeakStarReport<T> {
    /// Rows strictly after the first one whose `h*_q` clears the support.
    pub fn tail(&self) -> &[WeakStarRow<T>] {
        self.first_index.map_or(&[], |i| &self.rows[i + 1..])
    }

    /// Every tail error below `tol` and strictly decreasing; false on an empty tail.
    pub fn converged(&self, tol: T) -> bool {
        let tail = self.tail();
        !tail.is_empty()
            && tail.iter().all(|r| r.error < tol)
            && tail.windows(2).all(|w| w[1].error < w[0].error)
    }
}

/// Pairs the nonlinear law `P_q` (extended by 0 for `h ≤ 0`) and the Heaviside
/// limit with `phi` for each `q` in `q_list`.
pub fn weak_star_test<T: Real, S: SeminormModel<T> + ?Sized>(
    params: &SequenceParams<T>,
    q_list: &[usize],
    model: &S,
    cea: &CeaModel<T>,
    phi: &dyn TestFunction<T>,
) -> Result<WeakStarReport<T>> {
    let (a, b) = phi.support().ok_or(Error::MissingSupport)?;
    if !(a < b) {
        return Err(Error::invalid("support", format!("empty support [{a}, {b}]")));
    }
    if q_list.contains(&0) {
        return Err(Error::invalid("q", "indices start at 1"));
    }
    cea.validate()?;
    // Only h > 0 contributes on either side.
    let lo = a.max(T::zero());
    let tol = T::lit(PAIRING_TOLERANCE);
    let limit = if lo < b { integrate_adaptive(|h| phi.value(h), lo, b, tol).value } else { T::zero() };
    let rows: Vec<WeakStarRow<T>> = q_list
        .par_iter()
        .map(|&q| {
            let h_star = ln_h_star_q(params, q, model, cea).exp();
            let law = AccuracyLaw { h_star, exponent: q, kind: LawKind::Nonlinear };
            let deficit = |x: T, y: T| integrate_adaptive(|h| law.deficit(h) * phi.value(h), x, y, tol).value;
            let diff = if !(lo < b) {
                T::zero()
            } else if lo < h_star && h_star < b {
                deficit(lo, h_star) + deficit(h_star, b)
            } else {
                deficit(lo, b)
            };
            WeakStarRow { q, h_star, pairing: limit + diff, limit, error: diff.abs() }
        })
        .collect();
    let first_index = rows.iter().position(|r| r.h_star > b);
    Ok(WeakStarReport { rows, first_index })
}

/// `ln 𝒞_{k+q} − ln 𝒞_k`, kept for callers that build pairs by hand.
pub fn ln_constant_ratio<T: Real>(n: usize, m: usize, p: T, k1: usize, k2: usize) -> T {
    -ln_bracket(n, m, p, k1, k2)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::ConstantBundle;
    use crate::functions::sine_seminorm;
    use approx::assert_relative_eq;

    #[test]
    fn h_star_examples() {
        let pair = |c1: f64, c2: f64, e: usize| ElementPair::new(1, 1 + e, c1, c2).unwrap();
        assert_eq!(h_star(&pair(3.0, 3.0, 1)), 1.0);
        assert_relative_eq!(h_star(&pair(8.0, 2.0, 2)), 2.0, epsilon = 1e-15);
        assert_relative_eq!(h_star(&pair(2.0, 8.0, 1)), 0.25, epsilon = 1e-15);
        assert!(ElementPair::new(1, 2, 0.0, 1.0).is_err());
        assert!(ElementPair::new(1, 2, 1.0, -1.0).is_err());
        assert!(ElementPair::new(2, 2, 1.0, 1.0).is_err());
    }

    #[test]
    fn explicit_examples() {
        let h = h_star_explicit(1, 0, 2.0, 1, 2, 1.0, (1.0, 1.0)).unwrap();
        assert_relative_eq!(h, 20.0 / 9.0, epsilon = 1e-14);
        assert!(matches!(
            h_star_explicit(2, 1, 2.0, 1, 2, 1.0, (1.0, 1.0)),
            Err(Error::Inadmissible { .. })
        ));
    }

    #[test]
    fn explicit_matches_assembled_constants() {
        for (n, m, p, k1, k2) in [(1, 0, 2.0, 1, 2), (1, 1, 2.0, 2, 5), (2, 1, 3.0, 2, 4), (1, 1, 1.5, 1, 3)] {
            let u = |k: usize| sine_seminorm::<f64>(k + 1, p);
            let b = |k| ConstantBundle::new(n, m, k, p).with_sigma(1.7).with_lambda(2.5);
            let c1 = b(k1).with_cea_ratio(1.3).script_c_k().unwrap() * u(k1);
            let c2 = b(k2).with_cea_ratio(1.1).script_c_k().unwrap() * u(k2);
            let direct = h_star(&ElementPair::new(k1, k2, c1, c2).unwrap());
            let explicit = h_star_explicit(n, m, p, k1, k2, u(k1) / u(k2), (1.3, 1.1)).unwrap();
            assert_relative_eq!(direct, explicit, max_relative = 1e-12);
        }
    }

    #[test]
    fn law_examples() {
        let law = AccuracyLaw::new(0.3, 1, LawKind::Nonlinear).unwrap();
        assert_eq!(prob_law(&law, 0.3).unwrap(), 0.5);
        assert_relative_eq!(prob_law(&law, 0.15).unwrap(), 0.75);
        assert!(prob_law(&law, 1e-12).unwrap() > 1.0 - 1e-11);
        assert!(prob_law(&law, 0.0).is_err());
        let hv = AccuracyLaw::new(0.3, 2, LawKind::Heaviside).unwrap();
        assert_eq!(prob_law(&hv, 0.2).unwrap(), 1.0);
        assert_eq!(prob_law(&hv, 0.3).unwrap(), 0.5);
        assert_eq!(prob_law(&hv, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn sine_model_ratio_is_pi() {
        let m = SineModel { p: 2.5f64 };
        for r in 0..6 {
            assert_relative_eq!((m.ln_seminorm(r + 1) - m.ln_seminorm(r)).exp(), std::f64::consts::PI, epsilon = 1e-13);
        }
    }

    #[test]
    fn exponential_model_matches_quadrature() {
        let m = ExponentialModel { rate: 1.5f64, p: 3.0 };
        let want = integrate_adaptive(|x: f64| (1.5 * x).exp().powi(3), 0.0, 1.0, 1e-13).value.powf(1.0 / 3.0);
        assert_relative_eq!(m.ln_seminorm(0).exp(), want, max_relative = 1e-12);
        assert_relative_eq!(m.ln_seminorm(2).exp(), 2.25 * want, max_relative = 1e-12);
    }

    #[test]
    fn sequence_grows_large() {
        let params = SequenceParams::default();
        let seq = h_star_sequence(&params, 1000, &SineModel { p: 2.0 }, &CeaModel::Constant).unwrap();
        assert!(seq.last().unwrap().h_star > 100.0);
        let last = seq.last().unwrap().h_star_over_q;
        assert_relative_eq!(last, asymptotic_slope(std::f64::consts::PI), max_relative = 0.01);
    }

    #[test]
    fn sequence_handles_large_q() {
        let seq = h_star_sequence(&SequenceParams::default(), 10_000, &SineModel { p: 2.0 }, &CeaModel::Constant).unwrap();
        assert!(seq.iter().all(|r| r.h_star.is_finite() && r.h_star > 0.0));
    }

    #[test]
    fn cea_sequence_hook() {
        let params = SequenceParams::default();
        let model = SineModel { p: 2.0 };
        let base = ln_h_star_q(&params, 3, &model, &CeaModel::Constant);
        let cea = CeaModel::Sequence { values: vec![2.0, 1.5], limit: 1.0 };
        let shifted = ln_h_star_q(&params, 3, &model, &cea);
        assert_relative_eq!(shifted - base, 2f64.ln() / 3.0, epsilon = 1e-14);
        let bad = CeaModel::Sequence { values: vec![0.0], limit: 1.0 };
        assert!(h_star_sequence(&params, 2, &model, &bad).is_err());
    }

    #[test]
    fn weak_star_zero_and_missing_support() {
        let params = SequenceParams::default();
        let model = SineModel { p: 2.0 };
        let zero = ZeroFunction { a: 1.0, b: 2.0 };
        let rep = weak_star_test(&params, &[1, 5], &model, &CeaModel::Constant, &zero).unwrap();
        assert!(rep.rows.iter().all(|r| r.pairing == 0.0 && r.error == 0.0));
        let custom = Custom { f: |h: f64| h, support: None };
        assert_eq!(
            weak_star_test(&params, &[1], &model, &CeaModel::Constant, &custom).unwrap_err(),
            Error::MissingSupport
        );
    }

    #[test]
    fn weak_star_error_bound_on_support() {
        let params = SequenceParams::default();
        let model = SineModel { p: 2.0 };
        let phi = Bump::default();
        let rep = weak_star_test(&params, &[25, 30], &model, &CeaModel::Constant, &phi).unwrap();
        for r in &rep.rows {
            assert!(r.h_star > 2.0);
            assert!(r.error <= 0.5 * (2.0 / r.h_star).powi(r.q as i32) * r.limit + 1e-10);
        }
    }
}
