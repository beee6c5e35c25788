//! L^p and W^{m,p} (semi-)norms by quadrature over simplicial meshes.
//!
//! Every norm is evaluated twice, with rules of exactness `degree` and
//! `degree + 4`; the higher value is reported and the difference serves as the
//! quadrature-error estimate. For noninteger `p`, `|g|^p` is not a polynomial,
//! so this estimate is the only guard on the integration error.

use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{spatial_derivative, spatial_multi_indices, BasisTabulation, PkBasis};
use crate::error::{Error, Result};
use crate::functions::SmoothFunction;
use crate::geometry::{Simplex, SimplexMesh};
use crate::poly::{Coefficient, Polynomial};
use crate::quadrature::QuadratureRule;
use crate::scalar::{compensated_sum, Real};

/// Extra exactness of the comparison rule.
pub const RULE_GAP: usize = 4;

/// `(m, p)` in dimension `n`, with the admissibility tests for P_k estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SobolevIndex<T> {
    pub m: usize,
    pub p: T,
    pub n: usize,
}

/// Outcome of every admissibility test for one element degree.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Admissibility {
    /// `k + 1 > l + n/p` for `l = 0..=m`.
    pub embedding: Vec<bool>,
    /// `n/p < 1 ⇒ m ≤ k`, `n/p ≥ 1 ⇒ m ≤ k−1 ∧ k+1−n/p > 0`.
    pub dichotomy: bool,
    /// `p > 1`, the range of the Banach variational setting.
    pub variational: bool,
}

impl Admissibility {
    pub fn all(&self) -> bool {
        self.dichotomy && self.embedding.iter().all(|&b| b)
    }
}

impl<T: Real> SobolevIndex<T> {
    pub fn new(m: usize, p: T, n: usize) -> Result<Self> {
        if !(p > T::zero()) || !p.is_finite() {
            return Err(Error::invalid("p", format!("{p} is not a finite positive real")));
        }
        if n == 0 {
            return Err(Error::invalid("n", "dimension must be at least 1"));
        }
        Ok(Self { m, p, n })
    }

    fn n_over_p(&self) -> T {
        T::from_usize_lossy(self.n) / self.p
    }

    /// `k + 1 > l + n/p`.
    pub fn embedding_holds(&self, k: usize, l: usize) -> bool {
        T::from_usize_lossy(k + 1) > T::from_usize_lossy(l) + self.n_over_p()
    }

    pub fn admissibility(&self, k: usize) -> Admissibility {
        let np = self.n_over_p();
        let dichotomy = if np < T::one() {
            self.m <= k
        } else {
            self.m < k && T::from_usize_lossy(k + 1) - np > T::zero()
        };
        Admissibility {
            embedding: (0..=self.m).map(|l| self.embedding_holds(k, l)).collect(),
            dichotomy,
            variational: self.p > T::one(),
        }
    }

    fn inadmissible(&self, k: usize, inequality: String) -> Error {
        Error::Inadmissible { n: self.n, k, m: self.m, p: self.p.to_f64().unwrap_or(f64::NAN), inequality }
    }

    /// Errors with the first failing inequality.
    pub fn check_embedding(&self, k: usize, l: usize) -> Result<()> {
        if self.embedding_holds(k, l) {
            Ok(())
        } else {
            Err(self.inadmissible(k, format!("k+1 > l + n/p with l = {l}")))
        }
    }

    pub fn check_admissible(&self, k: usize) -> Result<()> {
        let np = self.n_over_p();
        if np < T::one() {
            if self.m > k {
                return Err(self.inadmissible(k, "n/p < 1 ⇒ m ≤ k".into()));
            }
        } else {
            if self.m + 1 > k {
                return Err(self.inadmissible(k, "n/p ≥ 1 ⇒ m ≤ k−1".into()));
            }
            if !(T::from_usize_lossy(k + 1) - np > T::zero()) {
                return Err(self.inadmissible(k, "n/p ≥ 1 ⇒ k+1−n/p > 0".into()));
            }
        }
        (0..=self.m).try_for_each(|l| self.check_embedding(k, l))
    }

    pub fn in_variational_range(&self) -> bool {
        self.p > T::one()
    }
}

/// Values of `∂^α f` at the nodes of a quadrature rule, element by element.
pub trait ElementValues<T>: Sync {
    fn derivative(&self, element: usize, simplex: &Simplex<T>, alpha: &[usize]) -> Vec<T>;
}

/// Anything whose derivatives can be sampled at rule nodes on each element.
pub trait Field<T: Real>: Sync {
    fn prepare<'a>(&'a self, rule: &'a QuadratureRule<T>, max_order: usize) -> Box<dyn ElementValues<T> + 'a>;
}

/// A [`SmoothFunction`] viewed as a [`Field`].
pub struct Analytic<'f, F: ?Sized>(pub &'f F);

struct AnalyticValues<'a, T, F: ?Sized> {
    f: &'a F,
    rule: &'a QuadratureRule<T>,
}

impl<T: Real, F: SmoothFunction<T> + ?Sized> ElementValues<T> for AnalyticValues<'_, T, F> {
    fn derivative(&self, _element: usize, simplex: &Simplex<T>, alpha: &[usize]) -> Vec<T> {
        self.rule.points().iter().map(|l| self.f.derivative(&simplex.point(l), alpha)).collect()
    }
}

impl<T: Real, F: SmoothFunction<T> + ?Sized> Field<T> for Analytic<'_, F> {
    fn prepare<'a>(&'a self, rule: &'a QuadratureRule<T>, _max_order: usize) -> Box<dyn ElementValues<T> + 'a> {
        Box::new(AnalyticValues { f: self.0, rule })
    }
}

/// A polynomial in barycentric variables, the same on every element.
pub struct BarycentricField<'p, C>(pub &'p Polynomial<C>);

struct BarycentricValues<'a, T, C> {
    poly: &'a Polynomial<C>,
    rule: &'a QuadratureRule<T>,
}

impl<T: Real + Coefficient, C: Coefficient> ElementValues<T> for BarycentricValues<'_, T, C> {
    fn derivative(&self, _element: usize, simplex: &Simplex<T>, alpha: &[usize]) -> Vec<T> {
        let d = spatial_derivative(self.poly, simplex, alpha);
        self.rule.points().iter().map(|l| d.eval(l)).collect()
    }
}

impl<T: Real + Coefficient, C: Coefficient> Field<T> for BarycentricField<'_, C> {
    fn prepare<'a>(&'a self, rule: &'a QuadratureRule<T>, _max_order: usize) -> Box<dyn ElementValues<T> + 'a> {
        Box::new(BarycentricValues { poly: self.0, rule })
    }
}

/// `u − Π_h u` for the continuous P_k Lagrange interpolant.
pub struct InterpolationError<'a, F: ?Sized> {
    pub u: &'a F,
    pub basis: &'a PkBasis,
}

struct InterpolationValues<'a, T, F: ?Sized> {
    u: &'a F,
    basis: &'a PkBasis,
    rule: &'a QuadratureRule<T>,
    table: BasisTabulation<T>,
}

impl<T: Real + Coefficient, F: SmoothFunction<T> + ?Sized> ElementValues<T> for InterpolationValues<'_, T, F> {
    fn derivative(&self, _element: usize, simplex: &Simplex<T>, alpha: &[usize]) -> Vec<T> {
        let nodal: Vec<T> = (0..self.basis.len())
            .map(|i| self.u.value(&simplex.point(&self.basis.node_barycentric::<T>(i))))
            .collect();
        let phi = self.table.spatial(simplex, alpha);
        self.rule
            .points()
            .iter()
            .enumerate()
            .map(|(qp, l)| {
                let interp = compensated_sum(nodal.iter().zip(&phi).map(|(v, row)| *v * row[qp]));
                self.u.derivative(&simplex.point(l), alpha) - interp
            })
            .collect()
    }
}

impl<T: Real + Coefficient, F: SmoothFunction<T> + ?Sized> Field<T> for InterpolationError<'_, F> {
    fn prepare<'a>(&'a self, rule: &'a QuadratureRule<T>, max_order: usize) -> Box<dyn ElementValues<T> + 'a> {
        Box::new(InterpolationValues {
            u: self.u,
            basis: self.basis,
            rule,
            table: BasisTabulation::new(self.basis, rule.points(), max_order),
        })
    }
}

/// One norm measurement, as emitted in JSON reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormReport<T> {
    pub l: usize,
    pub p: T,
    pub value: T,
    pub quad_error_estimate: T,
}

/// Quadrature exactness used for order-k fields: `2k + 6`.
pub fn default_degree(k: usize) -> usize {
    2 * k + 6
}

fn check_p<T: Real>(p: T) -> Result<()> {
    if p > T::zero() && p.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("p", format!("{p} is not a finite positive real")))
    }
}

/// `Σ_K Σ_{|α|=l} ∫_K |∂^α f|^p` with one rule.
fn powered_seminorm<T: Real, F: Field<T> + ?Sized>(field: &F, mesh: &SimplexMesh<T>, l: usize, p: T, degree: usize) -> T {
    let rule = QuadratureRule::simplex(mesh.dim(), degree);
    let values = field.prepare(&rule, l);
    let alphas = spatial_multi_indices(mesh.dim(), l);
    let parts: Vec<T> = mesh
        .simplices()
        .par_iter()
        .enumerate()
        .map(|(idx, simplex)| {
            compensated_sum(alphas.iter().map(|alpha| {
                let vals = values.derivative(idx, simplex, alpha);
                let weighted = rule.weights().iter().zip(&vals).map(|(w, v)| *w * v.abs().powf(p));
                compensated_sum(weighted) * simplex.jacobian_det()
            }))
        })
        .collect();
    compensated_sum(parts)
}

/// `|f|_{l,p}` over the mesh.
pub fn seminorm<T: Real, F: Field<T> + ?Sized>(
    field: &F,
    mesh: &SimplexMesh<T>,
    l: usize,
    p: T,
    degree: usize,
) -> Result<NormReport<T>> {
    check_p(p)?;
    let lo = powered_seminorm(field, mesh, l, p, degree).powf(p.recip());
    let hi = powered_seminorm(field, mesh, l, p, degree + RULE_GAP).powf(p.recip());
    Ok(NormReport { l, p, value: hi, quad_error_estimate: (hi - lo).abs() })
}

/// `‖f‖_{m,p}` together with each `|f|_{l,p}`, `l = 0..=m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SobolevReport<T> {
    pub m: usize,
    pub p: T,
    pub norm: T,
    pub quad_error_estimate: T,
    pub seminorms: Vec<NormReport<T>>,
}

pub fn sobolev_norm<T: Real, F: Field<T> + ?Sized>(
    field: &F,
    mesh: &SimplexMesh<T>,
    m: usize,
    p: T,
    degree: usize,
) -> Result<SobolevReport<T>> {
    check_p(p)?;
    let mut lo_parts = Vec::with_capacity(m + 1);
    let mut hi_parts = Vec::with_capacity(m + 1);
    let mut seminorms = Vec::with_capacity(m + 1);
    for l in 0..=m {
        let lo = powered_seminorm(field, mesh, l, p, degree);
        let hi = powered_seminorm(field, mesh, l, p, degree + RULE_GAP);
        let (lo_r, hi_r) = (lo.powf(p.recip()), hi.powf(p.recip()));
        seminorms.push(NormReport { l, p, value: hi_r, quad_error_estimate: (hi_r - lo_r).abs() });
        lo_parts.push(lo);
        hi_parts.push(hi);
    }
    let lo = compensated_sum(lo_parts).powf(p.recip());
    let hi = compensated_sum(hi_parts).powf(p.recip());
    Ok(SobolevReport { m, p, norm: hi, quad_error_estimate: (hi - lo).abs(), seminorms })
}

/// Interpolation-error measurement with its admissibility status.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterpolationErrorReport<T> {
    pub k: u32,
    pub h: T,
    pub norm: NormReport<T>,
    /// Set when `k + 1 > l + n/p` fails; the measurement is still reported.
    pub warning: Option<String>,
}

/// `|u − Π_h u|_{l,p,Ω}` by per-element interpolation and quadrature.
pub fn interpolation_error<T, F>(
    u: &F,
    mesh: &SimplexMesh<T>,
    basis: &PkBasis,
    l: usize,
    p: T,
) -> Result<InterpolationErrorReport<T>>
where
    T: Real + Coefficient,
    F: SmoothFunction<T> + ?Sized,
{
    if mesh.dim() != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), got: mesh.dim() });
    }
    let k = basis.degree() as usize;
    let index = SobolevIndex::new(l, p, mesh.dim())?;
    let warning = index.check_embedding(k, l).err().map(|e| e.to_string());
    let field = InterpolationError { u, basis };
    let norm = seminorm(&field, mesh, l, p, default_degree(k))?;
    Ok(InterpolationErrorReport { k: basis.degree(), h: mesh.h(), norm, warning })
}

/// Seminorm of a barycentric polynomial on one simplex.
pub fn polynomial_seminorm<T, C>(poly: &Polynomial<C>, simplex: &Simplex<T>, l: usize, p: T) -> Result<NormReport<T>>
where
    T: Real + Coefficient,
    C: Coefficient,
{
    let mesh = SimplexMesh::from_simplex(simplex.clone());
    let degree = poly.degree() as usize;
    // |g|^p with even integer p is a polynomial of degree p·deg.
    let pf = p.to_f64().unwrap_or(2.0);
    let rule_degree = if pf.fract() == 0.0 && (pf as usize).is_multiple_of(2) {
        degree * pf as usize
    } else {
        2 * degree + 6
    };
    seminorm(&BarycentricField(poly), &mesh, l, p, rule_degree)
}
