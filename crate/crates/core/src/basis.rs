//! Canonical P_k Lagrange basis on an n-simplex, built as products of the
//! auxiliary factors `P_{i_j}(λ_j)` over the regularly spaced nodes.

use num_traits::One;
use serde::Serialize;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::Simplex;
use crate::poly::{Coefficient, Polynomial, TermRecord};
use crate::scalar::{Rational, Real};

/// Largest basis the builder will attempt.
pub const MAX_BASIS_SIZE: usize = 1 << 20;

/// Node label `(i_1, .., i_{n+1})` with `Σ i_j = k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Barycentric node `M = (i_1/k, .., i_{n+1}/k)`, exact.
    pub fn node(&self, k: u32) -> Vec<Rational> {
        self.0
            .iter()
            .map(|&i| Rational::new((i as i64).into(), (k as i64).into()))
            .collect()
    }
}

/// All multi-indices of length `parts` summing to `total`, lexicographically descending.
pub fn multi_indices(parts: usize, total: u32) -> Vec<MultiIndex> {
    fn rec(parts: usize, total: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if parts == 1 {
            prefix.push(total);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for first in (0..=total).rev() {
            prefix.push(first);
            rec(parts - 1, total - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(parts, total, &mut Vec::with_capacity(parts), &mut out);
    out
}

/// `dim P_k` on an n-simplex: `(n+k)! / (n! k!)`, or `None` past [`MAX_BASIS_SIZE`].
pub fn basis_size(n: usize, k: usize) -> Option<usize> {
    let mut acc: u128 = 1;
    for i in 1..=n.min(k) as u128 {
        acc = acc.checked_mul((n.max(k) as u128).checked_add(i)?)? / i;
        if acc > MAX_BASIS_SIZE as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

/// `P_i(λ) = Π_{c=1}^{i} (kλ − c + 1)/c` as a univariate polynomial, `1` for `i = 0`.
pub fn auxiliary_factor(i: u32, k: u32) -> Result<Polynomial<Rational>> {
    if i > k {
        return Err(Error::invalid("i_j", format!("{i} exceeds k = {k}")));
    }
    let mut p = Polynomial::constant(1, Rational::one());
    let lambda = Polynomial::<Rational>::var(1, 0);
    for c in 1..=i as i64 {
        let inv_c = Rational::new(1.into(), c.into());
        let factor = &lambda.scale(&(Rational::from_i64(k as i64) * inv_c.clone()))
            + &Polynomial::constant(1, Rational::from_i64(1 - c) * inv_c);
        p = &p * &factor;
    }
    Ok(p)
}

/// Embeds a univariate polynomial as a polynomial in variable `var` of `nvars`.
fn embed(p: &Polynomial<Rational>, nvars: usize, var: usize) -> Polynomial<Rational> {
    Polynomial::from_terms(
        nvars,
        p.terms().map(|(e, c)| {
            let mut ee = vec![0; nvars];
            ee[var] = e[0];
            (ee, c.clone())
        }),
    )
}

/// The N canonical basis polynomials of `P_k(K)` in barycentric variables.
#[derive(Debug, Clone)]
pub struct PkBasis {
    n: usize,
    k: u32,
    nodes: Vec<MultiIndex>,
    polynomials: Vec<Polynomial<Rational>>,
}

#[derive(Debug, Serialize)]
pub struct BasisFunctionRecord {
    pub index: usize,
    pub node: MultiIndex,
    pub node_barycentric: Vec<String>,
    pub terms: Vec<TermRecord>,
}

#[derive(Debug, Serialize)]
pub struct BasisRecord {
    pub n: usize,
    pub k: u32,
    pub size: usize,
    pub functions: Vec<BasisFunctionRecord>,
}

impl PkBasis {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n", "dimension must be at least 1"));
        }
        if k == 0 {
            return Err(Error::invalid("k", "degree must be at least 1"));
        }
        let size = basis_size(n, k).ok_or(Error::BasisOverflow { n, k })?;
        let k = u32::try_from(k).map_err(|_| Error::BasisOverflow { n, k })?;
        let factors: Vec<Polynomial<Rational>> =
            (0..=k).map(|i| auxiliary_factor(i, k)).collect::<Result<_>>()?;
        let nodes = multi_indices(n + 1, k);
        debug_assert_eq!(nodes.len(), size);
        let polynomials = nodes
            .iter()
            .map(|mi| {
                mi.0.iter().enumerate().fold(
                    Polynomial::constant(n + 1, Rational::one()),
                    |acc, (j, &ij)| &acc * &embed(&factors[ij as usize], n + 1, j),
                )
            })
            .collect();
        Ok(Self { n, k, nodes, polynomials })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> u32 {
        self.k
    }

    /// Number of basis functions N.
    pub fn len(&self) -> usize {
        self.polynomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polynomials.is_empty()
    }

    pub fn nodes(&self) -> &[MultiIndex] {
        &self.nodes
    }

    pub fn polynomials(&self) -> &[Polynomial<Rational>] {
        &self.polynomials
    }

    pub fn node_barycentric<T: Real>(&self, i: usize) -> Vec<T> {
        self.nodes[i].node(self.k).iter().map(T::from_rational).collect()
    }

    /// Exact Gram of nodal values `p_i(M_j)`.
    pub fn nodal_matrix(&self) -> Vec<Vec<Rational>> {
        let nodes: Vec<Vec<Rational>> = self.nodes.iter().map(|m| m.node(self.k)).collect();
        self.polynomials
            .iter()
            .map(|p| nodes.iter().map(|m| p.eval_exact(m)).collect())
            .collect()
    }

    /// `Σ_i p_i` as an exact polynomial in the free λ-variables.
    pub fn sum(&self) -> Polynomial<Rational> {
        self.polynomials
            .iter()
            .fold(Polynomial::zero(self.n + 1), |acc, p| &acc + p)
    }

    pub fn record(&self) -> BasisRecord {
        BasisRecord {
            n: self.n,
            k: self.k,
            size: self.len(),
            functions: self
                .nodes
                .iter()
                .zip(&self.polynomials)
                .enumerate()
                .map(|(index, (node, p))| BasisFunctionRecord {
                    index,
                    node: node.clone(),
                    node_barycentric: node.node(self.k).iter().map(|r| r.to_string()).collect(),
                    terms: p.records(),
                })
                .collect(),
        }
    }
}

/// Spatial derivative `∂^α p` through the chain rule `∂/∂x_j = Σ_q Λ^q_j ∂/∂λ_q`.
///
/// `alpha[j]` counts derivatives in `x_j`. Orders above the degree give zero.
pub fn spatial_derivative<C, T>(poly: &Polynomial<C>, simplex: &Simplex<T>, alpha: &[usize]) -> Polynomial<T>
where
    C: Coefficient,
    T: Real + Coefficient,
{
    let grads = simplex.barycentric_gradients();
    let mut p: Polynomial<T> =
        Polynomial::from_terms(poly.nvars(), poly.terms().map(|(e, c)| (e.clone(), c.to_real::<T>())));
    for (j, &times) in alpha.iter().enumerate() {
        for _ in 0..times {
            let mut next = Polynomial::zero(p.nvars());
            for (q, row) in grads.iter().enumerate() {
                if row[j] != T::zero() {
                    next = &next + &p.derivative(q).scale(&row[j]);
                }
            }
            p = next;
        }
    }
    p
}

/// Spatial multi-indices `α ∈ N^n` with `|α| = order`, lexicographically descending.
pub fn spatial_multi_indices(n: usize, order: usize) -> Vec<Vec<usize>> {
    multi_indices(n, order as u32)
        .into_iter()
        .map(|m| m.0.into_iter().map(|v| v as usize).collect())
        .collect()
}

/// Lagrange interpolant `Q = Σ φ_i p_i` on one simplex.
#[derive(Debug, Clone)]
pub struct LocalInterpolant<T> {
    values: Vec<T>,
    poly: Polynomial<T>,
}

impl<T: Real + Coefficient> LocalInterpolant<T> {
    pub fn from_values(basis: &PkBasis, values: Vec<T>) -> Result<Self> {
        if values.len() != basis.len() {
            return Err(Error::DimensionMismatch { expected: basis.len(), got: values.len() });
        }
        let poly = basis
            .polynomials()
            .iter()
            .zip(&values)
            .fold(Polynomial::zero(basis.dim() + 1), |acc, (p, v)| {
                &acc + &p.to_real::<T>().scale(v)
            });
        Ok(Self { values, poly })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn polynomial(&self) -> &Polynomial<T> {
        &self.poly
    }

    pub fn eval_barycentric(&self, lambda: &[T]) -> T {
        self.poly.eval(lambda)
    }

    pub fn eval_at(&self, simplex: &Simplex<T>, x: &[T]) -> Result<T> {
        Ok(self.poly.eval(&simplex.barycentric(x)?))
    }
}

/// Interpolates `f` at the mapped nodes of `simplex`.
pub fn interpolate<T, F>(basis: &PkBasis, simplex: &Simplex<T>, f: F) -> Result<LocalInterpolant<T>>
where
    T: Real + Coefficient,
    F: Fn(&[T]) -> T,
{
    if simplex.dim() != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), got: simplex.dim() });
    }
    let values = (0..basis.len())
        .map(|i| f(&simplex.point(&basis.node_barycentric::<T>(i))))
        .collect();
    LocalInterpolant::from_values(basis, values)
}

/// Nondecreasing λ-variable sequences of length `order` over `nvars` variables.
fn lambda_multisets(nvars: usize, order: usize) -> Vec<Vec<usize>> {
    fn rec(nvars: usize, left: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for v in start..nvars {
            cur.push(v);
            rec(nvars, left - 1, v, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(nvars, order, 0, &mut Vec::new(), &mut out);
    out
}

/// Values of every λ-derivative of every basis function at fixed barycentric points.
///
/// Spatial derivatives on a given simplex are then linear combinations of these
/// tables with products of `Λ^q_j` as weights, so a mesh sweep never rebuilds
/// polynomials.
#[derive(Debug, Clone)]
pub struct BasisTabulation<T> {
    nvars: usize,
    npoints: usize,
    /// `by_order[r]` maps a sorted λ-sequence to `[basis][point]` values.
    by_order: Vec<HashMap<Vec<usize>, Vec<Vec<T>>>>,
}

impl<T: Real + Coefficient> BasisTabulation<T> {
    pub fn new(basis: &PkBasis, points: &[Vec<T>], max_order: usize) -> Self {
        let nvars = basis.dim() + 1;
        let real: Vec<Polynomial<T>> = basis.polynomials().iter().map(|p| p.to_real()).collect();
        let by_order = (0..=max_order)
            .map(|r| {
                lambda_multisets(nvars, r)
                    .into_iter()
                    .map(|seq| {
                        let table = real
                            .iter()
                            .map(|p| {
                                let d = p.derivative_seq(&seq);
                                points.iter().map(|x| d.eval(x)).collect()
                            })
                            .collect();
                        (seq, table)
                    })
                    .collect()
            })
            .collect();
        Self { nvars, npoints: points.len(), by_order }
    }

    pub fn npoints(&self) -> usize {
        self.npoints
    }

    /// `∂^α p_i` at every tabulated point, as `[basis][point]`.
    pub fn spatial(&self, simplex: &Simplex<T>, alpha: &[usize]) -> Vec<Vec<T>> {
        let order: usize = alpha.iter().sum();
        let table = &self.by_order[order];
        let nbasis = table.values().next().map_or(0, Vec::len);
        let mut out = vec![vec![T::zero(); self.npoints]; nbasis];
        if order == 0 {
            return table[&Vec::new()].clone();
        }
        let grads = simplex.barycentric_gradients();
        let js: Vec<usize> = alpha.iter().enumerate().flat_map(|(j, &a)| std::iter::repeat_n(j, a)).collect();
        // Accumulate Π Λ^{q_t}_{j_t} onto the sorted λ-sequence.
        let mut weights: HashMap<Vec<usize>, T> = HashMap::new();
        let total = self.nvars.pow(order as u32);
        for code in 0..total {
            let mut c = code;
            let mut qs = Vec::with_capacity(order);
            let mut w = T::one();
            for &j in &js {
                let q = c % self.nvars;
                c /= self.nvars;
                w *= grads[q][j];
                qs.push(q);
            }
            if w == T::zero() {
                continue;
            }
            qs.sort_unstable();
            *weights.entry(qs).or_insert_with(T::zero) += w;
        }
        let mut keys: Vec<_> = weights.into_iter().filter(|(_, w)| !w.is_zero()).collect();
        keys.sort_by(|a, b| a.0.cmp(&b.0));
        for (seq, w) in keys {
            let t = &table[&seq];
            for (o, row) in out.iter_mut().zip(t) {
                for (ov, v) in o.iter_mut().zip(row) {
                    *ov += w * *v;
                }
            }
        }
        out
    }
}
