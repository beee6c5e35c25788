//! Explicit bounds on the canonical basis and the k-explicit error constant.
//!
//! Everything here is an upper bound; the checks certify only the inequality
//! direction, never sharpness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::basis::{multi_indices, PkBasis};
use crate::error::{Error, Result};
use crate::geometry::{Simplex, SimplexMesh};
use crate::norms::{polynomial_seminorm, SobolevIndex};
use crate::poly::{Coefficient, Polynomial};
use crate::scalar::{ln_factorial, Real};

/// Inputs of the error constant for one element degree `k` and norm `W^{m,p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantBundle<T> {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub p: T,
    /// Regularity bound `σ ≥ max h_K/ρ_K`.
    pub sigma: T,
    /// `Λ = max |∂λ_q/∂x_j|`.
    pub lambda: T,
    pub mes_k: T,
    pub rho: T,
    /// `1 + ‖a‖/α_h`.
    pub cea_ratio: T,
    /// Cap on `h` used to bound `ξ(m, p, h)`: the domain diameter.
    pub h_cap: T,
}

impl<T: Real> ConstantBundle<T> {
    /// Reference-simplex geometry, `σ = Λ = 1`, unit Céa ratio and `h_cap = 1`.
    pub fn new(n: usize, m: usize, k: usize, p: T) -> Self {
        let reference = Simplex::<T>::reference(n.max(1));
        Self {
            n,
            m,
            k,
            p,
            sigma: T::one(),
            lambda: T::one(),
            mes_k: reference.measure(),
            rho: reference.inscribed_diameter(),
            cea_ratio: T::one(),
            h_cap: T::one(),
        }
    }

    /// Takes σ, the mesh-wide Λ (max over elements), the largest element
    /// measure, the smallest ρ and the domain diameter from `mesh`.
    pub fn from_mesh(mesh: &SimplexMesh<T>, m: usize, k: usize, p: T) -> Self {
        let mes_k = mesh.simplices().iter().fold(T::zero(), |a, s| a.max(s.measure()));
        let rho = mesh.simplices().iter().fold(T::infinity(), |a, s| a.min(s.inscribed_diameter()));
        Self {
            n: mesh.dim(),
            m,
            k,
            p,
            sigma: mesh.sigma(),
            lambda: mesh.lambda_max(),
            mes_k,
            rho,
            cea_ratio: T::one(),
            h_cap: mesh.domain_diameter(),
        }
    }

    pub fn with_sigma(mut self, sigma: T) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_lambda(mut self, lambda: T) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_cea_ratio(mut self, cea_ratio: T) -> Self {
        self.cea_ratio = cea_ratio;
        self
    }

    pub fn with_h_cap(mut self, h_cap: T) -> Self {
        self.h_cap = h_cap;
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn index(&self) -> Result<SobolevIndex<T>> {
        SobolevIndex::new(self.m, self.p, self.n)
    }

    /// Range checks on the configurable fields plus admissibility of `(k, m, n, p)`.
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= T::one()) {
            return Err(Error::invalid("sigma", format!("{} < 1", self.sigma)));
        }
        if !(self.cea_ratio >= T::one()) || !self.cea_ratio.is_finite() {
            return Err(Error::invalid("cea_ratio", format!("{} < 1", self.cea_ratio)));
        }
        if !(self.lambda > T::zero()) || !self.lambda.is_finite() {
            return Err(Error::invalid("lambda", format!("{} is not positive", self.lambda)));
        }
        if !(self.h_cap > T::zero()) {
            return Err(Error::invalid("h_cap", format!("{} is not positive", self.h_cap)));
        }
        if self.k == 0 {
            return Err(Error::invalid("k", "degree must be at least 1"));
        }
        self.index()?.check_admissible(self.k)
    }

    /// `Λ* = max_{0≤l≤m} Λ^l = max(1, Λ^m)`.
    pub fn lambda_star(&self) -> T {
        T::one().max(self.lambda.powi(self.m as i32))
    }

    /// `C_1 = 1 + [n(n+1)σ]^m Λ* m! / n!`.
    pub fn c1(&self) -> T {
        let nn = T::from_usize_lossy(self.n * (self.n + 1));
        let ln = T::from_usize_lossy(self.m) * (nn * self.sigma).ln() + self.lambda_star().ln()
            + ln_factorial::<T>(self.m as u64)
            - ln_factorial::<T>(self.n as u64);
        T::one() + ln.exp()
    }

    /// `C_2 = 1 + 1/n!`.
    pub fn c2(&self) -> T {
        T::one() + (-ln_factorial::<T>(self.n as u64)).exp()
    }

    /// `max(C_1, C_2)`.
    pub fn c(&self) -> T {
        self.c1().max(self.c2())
    }

    /// `ξ(m, p, h_cap)`.
    pub fn xi_sup(&self) -> T {
        xi(self.m, self.p, self.h_cap)
    }

    /// `ln[(k+n)^n k^{m(n+2)} / ((k−m)! (k+1−m−n/p))]`.
    pub fn ln_k_factor(&self) -> Result<T> {
        self.index()?.check_admissible(self.k)?;
        Ok(ln_k_factor(self.n, self.m, self.k, self.p))
    }

    /// The k-dependent factor, exponentiated.
    pub fn k_factor(&self) -> Result<T> {
        self.ln_k_factor().map(T::exp)
    }

    /// `ln 𝒞_k`.
    pub fn ln_script_c_k(&self) -> Result<T> {
        self.validate()?;
        Ok(self.cea_ratio.ln() + self.c().ln() + self.xi_sup().ln() + ln_k_factor(self.n, self.m, self.k, self.p))
    }

    /// `𝒞_k = cea · max(C_1, C_2) · ξ_sup · (k+n)^n k^{m(n+2)} / ((k−m)! (k+1−m−n/p))`.
    pub fn script_c_k(&self) -> Result<T> {
        self.ln_script_c_k().map(T::exp)
    }

    /// Same constant by plain products; overflows for large `k`.
    pub fn script_c_k_direct(&self) -> Result<T> {
        self.validate()?;
        let (n, m, k) = (self.n, self.m, self.k);
        let kf = T::from_usize_lossy(k);
        let fact = (1..=k - m).fold(T::one(), |acc, i| acc * T::from_usize_lossy(i));
        let gap = T::from_usize_lossy(k + 1 - m) - T::from_usize_lossy(n) / self.p;
        let factor = T::from_usize_lossy(k + n).powi(n as i32) * kf.powi((m * (n + 2)) as i32) / (fact * gap);
        Ok(self.cea_ratio * self.c() * self.xi_sup() * factor)
    }
}

pub(crate) fn ln_k_factor<T: Real>(n: usize, m: usize, k: usize, p: T) -> T {
    let nf = T::from_usize_lossy(n);
    let kf = T::from_usize_lossy(k);
    let gap = T::from_usize_lossy(k + 1 - m) - nf / p;
    nf * (kf + nf).ln() + T::from_usize_lossy(m * (n + 2)) * kf.ln()
        - ln_factorial::<T>((k - m) as u64)
        - gap.ln()
}

/// `ξ(m, p, h) = [(1 − h^{p(m+1)}) / (1 − h^p)]^{1/p}`, `(m+1)^{1/p}` at `h = 1`.
///
/// Evaluated as the equivalent geometric sum `(Σ_{j=0}^{m} h^{pj})^{1/p}`,
/// which has no cancellation near `h = 1`.
pub fn xi<T: Real>(m: usize, p: T, h: T) -> T {
    assert!(h > T::zero(), "xi requires h > 0");
    let hp = h.powf(p);
    let mut acc = T::zero();
    let mut term = T::one();
    for _ in 0..=m {
        acc += term;
        term *= hp;
    }
    acc.powf(p.recip())
}

/// One certified inequality, as emitted in JSON reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport<T> {
    pub bound_name: String,
    /// The inequality being certified.
    pub inequality: String,
    pub measured: T,
    pub bound: T,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl<T: Real> BoundReport<T> {
    fn new(name: String, inequality: &str, measured: T, bound: T, warning: Option<String>) -> Self {
        Self { bound_name: name, inequality: inequality.into(), measured, bound, pass: measured <= bound, warning }
    }
}

/// Sampling density for [`point_bound_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sampling {
    /// Subdivisions of the barycentric lattice.
    pub lattice: u32,
    /// Extra uniform random points on the simplex.
    pub random: usize,
    pub seed: u64,
}

impl Default for Sampling {
    fn default() -> Self {
        Self { lattice: 50, random: 10_000, seed: 0x5eed }
    }
}

/// Lattice points plus uniform random points on `{λ ≥ 0, Σλ = 1}`.
pub fn barycentric_samples<T: Real>(nvars: usize, sampling: Sampling) -> Vec<Vec<T>> {
    let div = T::from_usize_lossy(sampling.lattice.max(1) as usize);
    let mut pts: Vec<Vec<T>> = multi_indices(nvars, sampling.lattice.max(1))
        .into_iter()
        .map(|mi| mi.0.iter().map(|&i| T::from_usize_lossy(i as usize) / div).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    for _ in 0..sampling.random {
        // Normalized exponentials are uniform on the simplex.
        let e: Vec<f64> = (0..nvars).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let s: f64 = e.iter().sum();
        pts.push(e.iter().map(|v| T::lit(v / s)).collect());
    }
    pts
}

/// Sorted λ-variable sequences of length `r`.
fn derivative_orders(nvars: usize, r: usize) -> Vec<Vec<usize>> {
    multi_indices(nvars, r as u32)
        .into_iter()
        .map(|mi| mi.0.iter().enumerate().flat_map(|(q, &c)| std::iter::repeat_n(q, c as usize)).collect())
        .collect()
}

/// Sampled `max_i max_{q} |∂^r p_i / ∂λ_{q_1}..∂λ_{q_r}|` against `k^{n+1}` (r = 0) or `k^{r(n+2)}`.
///
/// Sampling can only under-report the supremum.
pub fn point_bound_check<T: Real + Coefficient>(basis: &PkBasis, r: usize, sampling: Sampling) -> BoundReport<T> {
    let n = basis.dim();
    let k = T::from_usize_lossy(basis.degree() as usize);
    let bound = if r == 0 { k.powi(n as i32 + 1) } else { k.powi((r * (n + 2)) as i32) };
    let pts = barycentric_samples::<T>(n + 1, sampling);
    let polys: Vec<Polynomial<T>> = basis
        .polynomials()
        .iter()
        .flat_map(|p| derivative_orders(n + 1, r).into_iter().map(move |seq| p.derivative_seq(&seq).to_real::<T>()))
        .collect();
    let measured = polys
        .iter()
        .flat_map(|p| pts.iter().map(move |x| p.eval(x).abs()))
        .fold(T::zero(), T::max);
    let inequality = if r == 0 { "|p_i| <= k^(n+1)" } else { "|d^r p_i / dλ^r| <= k^(r(n+2))" };
    BoundReport::new(format!("point_bound(n={n}, k={}, r={r})", basis.degree()), inequality, measured, bound, None)
}

/// `max_i |p_i|_{l,p,K}` against `C_0 k^{n+1}` (l = 0) or `C_l k^{l(n+2)} / ρ^l`,
/// with `C_0 = mes(K)^{1/p}` and `C_l = [n(n+1)Λ]^l l! mes(K)^{1/p}`.
pub fn seminorm_bound_check<T: Real + Coefficient>(
    basis: &PkBasis,
    simplex: &Simplex<T>,
    l: usize,
    p: T,
) -> Result<BoundReport<T>> {
    let n = basis.dim();
    let kdeg = basis.degree() as usize;
    let index = SobolevIndex::new(l, p, n)?;
    let warning = index.check_embedding(kdeg, l).err().map(|e| e.to_string());
    let measured = basis
        .polynomials()
        .iter()
        .map(|poly| polynomial_seminorm(poly, simplex, l, p).map(|r| r.value))
        .collect::<Result<Vec<T>>>()?
        .into_iter()
        .fold(T::zero(), T::max);
    let bound = seminorm_bound(n, kdeg, l, p, simplex.lambda_max(), simplex.measure(), simplex.inscribed_diameter());
    let inequality = if l == 0 { "|p_i|_{0,p,K} <= mes(K)^(1/p) k^(n+1)" } else { "|p_i|_{l,p,K} <= C_l k^(l(n+2)) / rho^l" };
    Ok(BoundReport::new(format!("seminorm_bound(n={n}, k={kdeg}, l={l}, p={p})"), inequality, measured, bound, warning))
}

/// Right-hand side of the basis seminorm bound.
pub fn seminorm_bound<T: Real>(n: usize, k: usize, l: usize, p: T, lambda: T, mes_k: T, rho: T) -> T {
    let kf = T::from_usize_lossy(k);
    let c0 = mes_k.powf(p.recip());
    if l == 0 {
        return c0 * kf.powi(n as i32 + 1);
    }
    let ln = T::from_usize_lossy(l) * (T::from_usize_lossy(n * (n + 1)) * lambda).ln()
        + ln_factorial::<T>(l as u64)
        + T::from_usize_lossy(l * (n + 2)) * kf.ln()
        - T::from_usize_lossy(l) * rho.ln();
    c0 * ln.exp()
}

/// Folded local interpolation bound on one element:
/// `C_1 F_k |u|_{k+1,p,K} h_K^{k+1−l}` for `l ≥ 1`, `C_2 F_k |u|_{k+1,p,K} h_K^{k+1}` for `l = 0`,
/// where `F_k = (k+n)^n k^{m(n+2)} / ((k−m)! (k+1−m−n/p))`.
pub fn local_interp_bound<T: Real>(bundle: &ConstantBundle<T>, u_seminorm: T, h_k: T, l: usize) -> Result<T> {
    bundle.validate()?;
    if l > bundle.m {
        return Err(Error::invalid("l", format!("{l} exceeds m = {}", bundle.m)));
    }
    let factor = bundle.k_factor()?;
    let c = if l == 0 { bundle.c2() } else { bundle.c1() };
    Ok(c * factor * u_seminorm * h_k.powi((bundle.k + 1 - l) as i32))
}

/// The per-element interpolation estimate before the k-dependent factors are
/// folded into `F_k`, using the element's own `Λ` and `ρ`:
/// `|u|h^{k+1−l} / ((k−l)!(k+1−l−n/p)) + [n(n+1)Λ]^l l! N k^{l(n+2)} |u| h^{k+1} / (ρ^l k! (k+1−n/p))`
/// (with `k^{n+1}` in place of `[n(n+1)Λ]^l l! k^{l(n+2)}/ρ^l` when `l = 0`).
#[allow(clippy::too_many_arguments)]
pub fn intermediate_interp_bound<T: Real>(
    n: usize,
    k: usize,
    l: usize,
    p: T,
    lambda: T,
    rho: T,
    u_seminorm: T,
    h_k: T,
) -> Result<T> {
    let index = SobolevIndex::new(l, p, n)?;
    index.check_embedding(k, l)?;
    let nf = T::from_usize_lossy(n);
    let size_ln = ln_factorial::<T>((k + n) as u64) - ln_factorial::<T>(n as u64) - ln_factorial::<T>(k as u64);
    let first = (-ln_factorial::<T>((k - l) as u64)).exp()
        / (T::from_usize_lossy(k + 1 - l) - nf / p)
        * h_k.powi((k + 1 - l) as i32);
    let basis_ln = if l == 0 {
        T::from_usize_lossy(n + 1) * T::from_usize_lossy(k).ln()
    } else {
        T::from_usize_lossy(l) * (T::from_usize_lossy(n * (n + 1)) * lambda).ln()
            + ln_factorial::<T>(l as u64)
            + T::from_usize_lossy(l * (n + 2)) * T::from_usize_lossy(k).ln()
            - T::from_usize_lossy(l) * rho.ln()
    };
    let second = (basis_ln + size_ln - ln_factorial::<T>(k as u64)).exp()
        / (T::from_usize_lossy(k + 1) - nf / p)
        * h_k.powi((k + 1) as i32);
    Ok((first + second) * u_seminorm)
}

/// Global interpolation bound `C ξ(m,p,h) F_k |u|_{k+1,p,Ω} h^{k+1−m}` in `‖·‖_{m,p,Ω}`.
pub fn global_interp_bound<T: Real>(bundle: &ConstantBundle<T>, u_seminorm: T, h: T) -> Result<T> {
    bundle.validate()?;
    let factor = bundle.k_factor()?;
    Ok(bundle.c() * xi(bundle.m, bundle.p, h) * factor * u_seminorm * h.powi((bundle.k + 1 - bundle.m) as i32))
}

/// A-priori Galerkin bound `𝒞_k h^{k+1−m} |u|_{k+1,p,Ω}`.
pub fn error_bound<T: Real>(bundle: &ConstantBundle<T>, u_seminorm: T, h: T) -> Result<T> {
    Ok(bundle.script_c_k()? * h.powi((bundle.k + 1 - bundle.m) as i32) * u_seminorm)
}
