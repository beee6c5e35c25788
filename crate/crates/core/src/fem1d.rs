//! P_k Galerkin solver for `−u'' + u = f` on (0,1) with `u(0) = u(1) = 0`.

use rayon::prelude::*;
use serde::Serialize;

use crate::accuracy::{h_star_explicit, prob_law, AccuracyLaw, LawKind};
use crate::basis::{BasisTabulation, PkBasis};
use crate::bounds::{error_bound, ConstantBundle};
use crate::error::{Error, Result};
use crate::functions::SmoothFunction;
use crate::geometry::{Simplex, SimplexMesh};
use crate::norms::{default_degree, seminorm, sobolev_norm, Analytic, ElementValues, Field, NormReport, SobolevIndex};
use crate::poly::Coefficient;
use crate::quadrature::QuadratureRule;
use crate::scalar::{compensated_sum, Real};

/// Relative residual above which a solve is reported as failed.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Manufactured problem: `u` is given, `f = −u'' + u`.
#[derive(Debug, Clone)]
pub struct ModelProblem<F> {
    pub u: F,
}

impl<F> ModelProblem<F> {
    pub fn new(u: F) -> Self {
        Self { u }
    }

    pub fn rhs<T: Real>(&self, x: T) -> T
    where
        F: SmoothFunction<T>,
    {
        self.u.value(&[x]) - self.u.derivative(&[x], &[2])
    }
}

/// Global numbering: vertices first, then the `k − 1` interior nodes of each element.
#[derive(Debug, Clone)]
pub struct DofMap {
    k: usize,
    nvertices: usize,
    /// Per element, global indices in local basis order.
    local: Vec<Vec<usize>>,
}

impl DofMap {
    fn new(mesh: &SimplexMesh<impl Real>, basis: &PkBasis) -> Self {
        let k = basis.degree() as usize;
        let nvertices = mesh.vertices().len();
        let local = mesh
            .cells()
            .iter()
            .enumerate()
            .map(|(e, cell)| {
                basis
                    .nodes()
                    .iter()
                    .map(|node| match (node.0[0] as usize, node.0[1] as usize) {
                        (_, 0) => cell[0],
                        (0, _) => cell[1],
                        (_, j) => nvertices + e * (k - 1) + (j - 1),
                    })
                    .collect()
            })
            .collect();
        Self { k, nvertices, local }
    }

    pub fn len(&self) -> usize {
        self.nvertices + self.local.len() * (self.k - 1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn element(&self, e: usize) -> &[usize] {
        &self.local[e]
    }
}

/// Symmetric positive definite band matrix, lower part stored by diagonal offset.
struct Band<T> {
    n: usize,
    bw: usize,
    /// `data[i * (bw + 1) + d] = A[i][i − d]`.
    data: Vec<T>,
}

impl<T: Real> Band<T> {
    fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![T::zero(); n * (bw + 1)] }
    }

    fn add(&mut self, i: usize, j: usize, v: T) {
        if i >= j {
            self.data[i * (self.bw + 1) + (i - j)] += v;
        }
    }

    fn get(&self, i: usize, j: usize) -> T {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            T::zero()
        } else {
            self.data[i * (self.bw + 1) + (i - j)]
        }
    }

    fn mul(&self, x: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                let lo = i.saturating_sub(self.bw);
                let hi = (i + self.bw).min(self.n - 1);
                compensated_sum((lo..=hi).map(|j| self.get(i, j) * x[j]))
            })
            .collect()
    }

    /// In-place `L Lᵀ` followed by the two triangular solves.
    fn cholesky_solve(&self, b: &[T]) -> Result<Vec<T>> {
        let (n, bw) = (self.n, self.bw);
        let mut l = self.data.clone();
        let at = |i: usize, d: usize| i * (bw + 1) + d;
        for i in 0..n {
            for j in i.saturating_sub(bw)..=i {
                let mut s = l[at(i, i - j)];
                for t in i.saturating_sub(bw).max(j.saturating_sub(bw))..j {
                    s -= l[at(i, i - t)] * l[at(j, j - t)];
                }
                if i == j {
                    if !(s > T::zero()) {
                        return Err(Error::SingularSystem { pivot: i });
                    }
                    l[at(i, 0)] = s.sqrt();
                } else {
                    l[at(i, i - j)] = s / l[at(j, 0)];
                }
            }
        }
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for t in i.saturating_sub(bw)..i {
                s -= l[at(i, i - t)] * y[t];
            }
            y[i] = s / l[at(i, 0)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for t in i + 1..=(i + bw).min(n - 1) {
                s -= l[at(t, t - i)] * y[t];
            }
            y[i] = s / l[at(i, 0)];
        }
        Ok(y)
    }
}

/// Continuous piecewise-P_k Galerkin solution.
#[derive(Debug, Clone)]
pub struct DiscreteSolution<T> {
    mesh: SimplexMesh<T>,
    basis: PkBasis,
    dofs: DofMap,
    coefficients: Vec<T>,
    residual: T,
}

impl<T: Real + Coefficient> DiscreteSolution<T> {
    pub fn mesh(&self) -> &SimplexMesh<T> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.basis.degree() as usize
    }

    pub fn basis(&self) -> &PkBasis {
        &self.basis
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    /// Coefficients in the global (vertices, then interiors) numbering.
    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    /// Relative Galerkin residual `‖A x − b‖ / ‖b‖` (absolute when `b = 0`).
    pub fn residual(&self) -> T {
        self.residual
    }

    /// `u_h(x)`, `x` in the mesh domain.
    pub fn eval(&self, x: T) -> Result<T> {
        let e = self
            .mesh
            .simplices()
            .iter()
            .position(|s| {
                let (a, b) = (s.vertices()[0][0], s.vertices()[1][0]);
                a.min(b) <= x && x <= a.max(b)
            })
            .ok_or_else(|| Error::invalid("x", format!("{x} lies outside the mesh")))?;
        let lambda = self.mesh.simplices()[e].barycentric(&[x])?;
        Ok(compensated_sum(
            self.basis
                .polynomials()
                .iter()
                .zip(self.dofs.element(e))
                .map(|(p, &g)| p.eval::<T>(&lambda) * self.coefficients[g]),
        ))
    }

    fn local(&self, e: usize) -> Vec<T> {
        self.dofs.element(e).iter().map(|&g| self.coefficients[g]).collect()
    }
}

/// Band ordering: sweep the elements left to right, numbering each element's
/// left vertex, interiors and right vertex as they are met; boundary vertices
/// are dropped. Returns `perm[global] = Some(unknown)`.
fn band_ordering<T: Real>(mesh: &SimplexMesh<T>, dofs: &DofMap, boundary: &[usize]) -> (Vec<Option<usize>>, usize) {
    let mut order: Vec<usize> = (0..mesh.len()).collect();
    order.sort_by(|&a, &b| {
        let xa = mesh.simplices()[a].vertices().iter().fold(T::infinity(), |m, v| m.min(v[0]));
        let xb = mesh.simplices()[b].vertices().iter().fold(T::infinity(), |m, v| m.min(v[0]));
        xa.partial_cmp(&xb).unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut perm = vec![None; dofs.len()];
    let mut next = 0;
    for &e in &order {
        let s = &mesh.simplices()[e];
        let loc = dofs.element(e);
        // Local order runs from the λ_1 vertex to the λ_2 vertex.
        let mut seq: Vec<usize> = vec![loc[0]];
        seq.extend(loc[1..loc.len() - 1].iter().copied());
        seq.push(loc[loc.len() - 1]);
        if s.vertices()[0][0] > s.vertices()[1][0] {
            seq.reverse();
        }
        for g in seq {
            if perm[g].is_none() && !boundary.contains(&g) {
                perm[g] = Some(next);
                next += 1;
            }
        }
    }
    let bw = (0..mesh.len())
        .flat_map(|e| {
            let ids: Vec<usize> = dofs.element(e).iter().filter_map(|&g| perm[g]).collect();
            let lo = ids.iter().min().copied().unwrap_or(0);
            let hi = ids.iter().max().copied().unwrap_or(0);
            std::iter::once(hi - lo)
        })
        .max()
        .unwrap_or(0);
    (perm, bw)
}

/// Element stiffness-plus-mass matrix and load vector.
fn element_system<T, F>(
    simplex: &Simplex<T>,
    rule: &QuadratureRule<T>,
    table: &BasisTabulation<T>,
    load_rule: &QuadratureRule<T>,
    load_table: &BasisTabulation<T>,
    problem: &ModelProblem<F>,
) -> (Vec<Vec<T>>, Vec<T>)
where
    T: Real + Coefficient,
    F: SmoothFunction<T>,
{
    let jac = simplex.jacobian_det();
    let val = table.spatial(simplex, &[0]);
    let der = table.spatial(simplex, &[1]);
    let nb = val.len();
    let mut a = vec![vec![T::zero(); nb]; nb];
    for i in 0..nb {
        for j in 0..=i {
            let v = compensated_sum(
                rule.weights().iter().enumerate().map(|(q, w)| *w * (der[i][q] * der[j][q] + val[i][q] * val[j][q])),
            ) * jac;
            a[i][j] = v;
            a[j][i] = v;
        }
    }
    let lval = load_table.spatial(simplex, &[0]);
    let fvals: Vec<T> = load_rule.points().iter().map(|l| problem.rhs(simplex.point(l)[0])).collect();
    let b = (0..nb)
        .map(|i| compensated_sum(load_rule.weights().iter().zip(&fvals).zip(&lval[i]).map(|((w, f), v)| *w * *f * *v)) * jac)
        .collect();
    (a, b)
}

/// Assembles and solves the Galerkin system with homogeneous Dirichlet data.
pub fn assemble_and_solve<T, F>(problem: &ModelProblem<F>, mesh: &SimplexMesh<T>, k: usize) -> Result<DiscreteSolution<T>>
where
    T: Real + Coefficient,
    F: SmoothFunction<T>,
{
    if mesh.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: mesh.dim() });
    }
    let basis = PkBasis::new(1, k)?;
    let dofs = DofMap::new(mesh, &basis);
    let rule = QuadratureRule::simplex(1, 2 * k);
    let table = BasisTabulation::new(&basis, rule.points(), 1);
    let load_rule = QuadratureRule::simplex(1, 2 * k + 16);
    let load_table = BasisTabulation::new(&basis, load_rule.points(), 0);
    let locals: Vec<(Vec<Vec<T>>, Vec<T>)> = mesh
        .simplices()
        .par_iter()
        .map(|s| element_system(s, &rule, &table, &load_rule, &load_table, problem))
        .collect();

    let (lo, hi) = mesh.vertices().iter().enumerate().fold((0, 0), |(lo, hi), (i, v)| {
        let vs = mesh.vertices();
        (if v[0] < vs[lo][0] { i } else { lo }, if v[0] > vs[hi][0] { i } else { hi })
    });
    let boundary = [lo, hi];
    let (perm, bw) = band_ordering(mesh, &dofs, &boundary);
    let nfree = perm.iter().flatten().count();
    let mut coefficients = vec![T::zero(); dofs.len()];
    if nfree == 0 {
        return Ok(DiscreteSolution { mesh: mesh.clone(), basis, dofs, coefficients, residual: T::zero() });
    }
    let mut matrix = Band::zeros(nfree, bw);
    let mut rhs = vec![T::zero(); nfree];
    for (e, (a, b)) in locals.iter().enumerate() {
        let ids = dofs.element(e);
        for (i, &gi) in ids.iter().enumerate() {
            let Some(pi) = perm[gi] else { continue };
            rhs[pi] += b[i];
            for (j, &gj) in ids.iter().enumerate() {
                if let Some(pj) = perm[gj] {
                    matrix.add(pi, pj, a[i][j]);
                }
            }
        }
    }
    let x = matrix.cholesky_solve(&rhs)?;
    let ax = matrix.mul(&x);
    let num = compensated_sum(ax.iter().zip(&rhs).map(|(u, v)| (*u - *v) * (*u - *v))).sqrt();
    let den = compensated_sum(rhs.iter().map(|v| *v * *v)).sqrt();
    let residual = if den > T::zero() { num / den } else { num };
    if !(residual <= T::lit(RESIDUAL_TOLERANCE)) {
        return Err(Error::invalid("residual", format!("Galerkin residual {residual:e} exceeds {RESIDUAL_TOLERANCE:e}")));
    }
    for (g, p) in perm.iter().enumerate() {
        if let Some(p) = p {
            coefficients[g] = x[*p];
        }
    }
    Ok(DiscreteSolution { mesh: mesh.clone(), basis, dofs, coefficients, residual })
}

/// `u − u_h` as a [`Field`].
pub struct GalerkinError<'a, T, F: ?Sized> {
    pub u: &'a F,
    pub solution: &'a DiscreteSolution<T>,
}

struct GalerkinValues<'a, T, F: ?Sized> {
    u: &'a F,
    solution: &'a DiscreteSolution<T>,
    rule: &'a QuadratureRule<T>,
    table: BasisTabulation<T>,
}

impl<T: Real + Coefficient, F: SmoothFunction<T> + ?Sized> ElementValues<T> for GalerkinValues<'_, T, F> {
    fn derivative(&self, element: usize, simplex: &Simplex<T>, alpha: &[usize]) -> Vec<T> {
        let coeffs = self.solution.local(element);
        let phi = self.table.spatial(simplex, alpha);
        self.rule
            .points()
            .iter()
            .enumerate()
            .map(|(q, l)| {
                let uh = compensated_sum(coeffs.iter().zip(&phi).map(|(c, row)| *c * row[q]));
                self.u.derivative(&simplex.point(l), alpha) - uh
            })
            .collect()
    }
}

impl<T: Real + Coefficient, F: SmoothFunction<T> + ?Sized> Field<T> for GalerkinError<'_, T, F> {
    fn prepare<'a>(&'a self, rule: &'a QuadratureRule<T>, max_order: usize) -> Box<dyn ElementValues<T> + 'a> {
        Box::new(GalerkinValues {
            u: self.u,
            solution: self.solution,
            rule,
            table: BasisTabulation::new(&self.solution.basis, rule.points(), max_order),
        })
    }
}

/// Measured `‖u − u_h‖_{m,p}` next to the a-priori bound `𝒞_k h^{k+1−m} |u|_{k+1,p}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport<T> {
    pub k: usize,
    pub m: usize,
    pub p: T,
    pub h: T,
    pub norm: T,
    pub quad_error_estimate: T,
    pub seminorms: Vec<NormReport<T>>,
    /// `|u|_{k+1,p,Ω}`.
    pub u_seminorm: T,
    pub constant: T,
    pub bound: T,
    pub pass: bool,
    /// `norm / bound`: where the error sits in `[0, bound]`.
    pub position: T,
    pub residual: T,
}

pub fn error_report<T, F>(
    solution: &DiscreteSolution<T>,
    problem: &ModelProblem<F>,
    m: usize,
    p: T,
    cea_ratio: T,
) -> Result<ErrorReport<T>>
where
    T: Real + Coefficient,
    F: SmoothFunction<T>,
{
    let k = solution.degree();
    let mesh = solution.mesh();
    SobolevIndex::new(m, p, 1)?.check_admissible(k)?;
    let field = GalerkinError { u: &problem.u, solution };
    let measured = sobolev_norm(&field, mesh, m, p, default_degree(k))?;
    let u_seminorm = seminorm(&Analytic(&problem.u), mesh, k + 1, p, default_degree(k))?.value;
    let bundle = ConstantBundle::from_mesh(mesh, m, k, p).with_cea_ratio(cea_ratio);
    let constant = bundle.script_c_k()?;
    let bound = error_bound(&bundle, u_seminorm, mesh.h())?;
    Ok(ErrorReport {
        k,
        m,
        p,
        h: mesh.h(),
        norm: measured.norm,
        quad_error_estimate: measured.quad_error_estimate,
        seminorms: measured.seminorms,
        u_seminorm,
        constant,
        bound,
        pass: measured.norm <= bound,
        position: measured.norm / bound,
        residual: solution.residual(),
    })
}

/// Least-squares slope of `ln error` against `ln h`.
pub fn loglog_slope<T: Real>(h: &[T], error: &[T]) -> T {
    let n = T::from_usize_lossy(h.len());
    let xs: Vec<T> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<T> = error.iter().map(|v| v.ln()).collect();
    let mx = compensated_sum(xs.iter().copied()) / n;
    let my = compensated_sum(ys.iter().copied()) / n;
    let sxy = compensated_sum(xs.iter().zip(&ys).map(|(x, y)| (*x - mx) * (*y - my)));
    let sxx = compensated_sum(xs.iter().map(|x| (*x - mx) * (*x - mx)));
    sxy / sxx
}

/// One row of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow<T> {
    pub k: usize,
    pub m: usize,
    pub p: T,
    pub h: T,
    pub error: T,
    pub bound: T,
    /// Order against the previous (coarser) row; `None` on the first row.
    pub order_est: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy<T> {
    pub rows: Vec<ConvergenceRow<T>>,
    pub reports: Vec<ErrorReport<T>>,
    /// Least-squares order over all rows.
    pub slope: T,
}

/// Solves on `(0,1)` with each element count and measures `‖u − u_h‖_{m,p}`.
pub fn convergence_study<T, F>(
    problem: &ModelProblem<F>,
    k: usize,
    m: usize,
    p: T,
    elements: &[usize],
    cea_ratio: T,
) -> Result<ConvergenceStudy<T>>
where
    T: Real + Coefficient,
    F: SmoothFunction<T>,
{
    if elements.is_empty() {
        return Err(Error::invalid("elements", "need at least one mesh"));
    }
    SobolevIndex::new(m, p, 1)?.check_admissible(k)?;
    let mut reports = Vec::with_capacity(elements.len());
    for &ne in elements {
        let mesh = SimplexMesh::uniform_1d(T::zero(), T::one(), ne)?;
        let sol = assemble_and_solve(problem, &mesh, k)?;
        reports.push(error_report(&sol, problem, m, p, cea_ratio)?);
    }
    let rows = reports
        .iter()
        .enumerate()
        .map(|(i, r)| ConvergenceRow {
            k,
            m,
            p,
            h: r.h,
            error: r.norm,
            bound: r.bound,
            order_est: (i > 0).then(|| (reports[i - 1].norm / r.norm).ln() / (reports[i - 1].h / r.h).ln()),
        })
        .collect();
    let hs: Vec<T> = reports.iter().map(|r| r.h).collect();
    let es: Vec<T> = reports.iter().map(|r| r.norm).collect();
    let slope = if reports.len() > 1 { loglog_slope(&hs, &es) } else { T::nan() };
    Ok(ConvergenceStudy { rows, reports, slope })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossoverRow<T> {
    pub h: T,
    pub error_k1: T,
    pub error_k2: T,
    /// `error_k2 / error_k1`.
    pub ratio: T,
    pub h_star: Option<T>,
    /// Nonlinear-law probability that `k2` is the more accurate element.
    pub probability: Option<T>,
}

/// Tabulates both elements' errors against the model `h*` on a descending `h` grid
/// (each `h` rounded to the nearest uniform mesh of (0,1)).
pub fn empirical_crossover<T, F>(
    problem: &ModelProblem<F>,
    k1: usize,
    k2: usize,
    m: usize,
    p: T,
    h_grid: &[T],
) -> Result<Vec<CrossoverRow<T>>>
where
    T: Real + Coefficient,
    F: SmoothFunction<T>,
{
    if h_grid.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::invalid("h_grid", "must be descending"));
    }
    let index = SobolevIndex::new(m, p, 1)?;
    index.check_admissible(k1)?;
    index.check_admissible(k2)?;
    let unit = SimplexMesh::uniform_1d(T::zero(), T::one(), 1)?;
    let ratio = |k: usize| seminorm(&Analytic(&problem.u), &unit, k + 1, p, default_degree(k2 + 4)).map(|r| r.value);
    let h_star = if k1 < k2 {
        Some(h_star_explicit(1, m, p, k1, k2, ratio(k1)? / ratio(k2)?, (T::one(), T::one()))?)
    } else if k2 < k1 {
        Some(h_star_explicit(1, m, p, k2, k1, ratio(k2)? / ratio(k1)?, (T::one(), T::one()))?)
    } else {
        None
    };
    let law = match h_star {
        Some(hs) => Some(AccuracyLaw::new(hs, k1.abs_diff(k2), LawKind::Nonlinear)?),
        None => None,
    };
    h_grid
        .iter()
        .map(|&h| {
            let ne = (T::one() / h).round().to_usize().unwrap_or(1).max(1);
            let mesh = SimplexMesh::uniform_1d(T::zero(), T::one(), ne)?;
            let err = |k: usize| -> Result<T> {
                let sol = assemble_and_solve(problem, &mesh, k)?;
                Ok(sobolev_norm(&GalerkinError { u: &problem.u, solution: &sol }, &mesh, m, p, default_degree(k))?.norm)
            };
            let e1 = err(k1)?;
            let e2 = if k1 == k2 { e1 } else { err(k2)? };
            let probability = match &law {
                Some(l) => Some(prob_law(l, mesh.h())?),
                None => None,
            };
            Ok(CrossoverRow { h: mesh.h(), error_k1: e1, error_k2: e2, ratio: e2 / e1, h_star, probability })
        })
        .collect()
}
