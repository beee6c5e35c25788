//! Simplices and structured simplicial meshes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{gram_volume, Dense};
use crate::scalar::{compensated_sum, Real};

/// Relative tolerance on `|det J| / diam^n` below which a simplex is degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-12;

/// A nondegenerate n-simplex in R^n.
#[derive(Debug, Clone, PartialEq)]
pub struct Simplex<T> {
    vertices: Vec<Vec<T>>,
    /// `|det J|` of the map from the reference simplex.
    abs_det: T,
    /// Rows `q = 1..=n+1`, columns `j = 1..=n`: `∂λ_q/∂x_j`.
    gradients: Vec<Vec<T>>,
    /// Inverse Jacobian (row-major), used by [`Simplex::barycentric`].
    jac_inv: Dense<T>,
}

impl<T: Real> Simplex<T> {
    pub fn new(vertices: Vec<Vec<T>>) -> Result<Self> {
        let n = vertices.len().checked_sub(1).filter(|&n| n >= 1).ok_or_else(|| {
            Error::invalid("vertices", "an n-simplex needs n + 1 >= 2 vertices")
        })?;
        if let Some(v) = vertices.iter().find(|v| v.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: v.len() });
        }
        let mut jac = Dense::zeros(n);
        for i in 0..n {
            for j in 0..n {
                jac.set(i, j, vertices[j + 1][i] - vertices[0][i]);
            }
        }
        let abs_det = jac.det().abs();
        let diam = max_pairwise_distance(&vertices);
        let scale = diam.powi(n as i32);
        let tolerance = T::lit(DEGENERACY_TOLERANCE);
        if !(abs_det > tolerance * scale) || !abs_det.is_finite() {
            return Err(Error::DegenerateSimplex {
                volume: abs_det.to_f64().unwrap_or(f64::NAN),
                tolerance: (tolerance * scale).to_f64().unwrap_or(f64::NAN),
            });
        }
        let jac_inv = jac.inverse().ok_or(Error::DegenerateSimplex {
            volume: 0.0,
            tolerance: (tolerance * scale).to_f64().unwrap_or(f64::NAN),
        })?;
        // λ_{q+1} = row q of J⁻¹ applied to (x - v_0); λ_1 = 1 - Σ.
        let mut gradients = vec![vec![T::zero(); n]; n + 1];
        for q in 0..n {
            for j in 0..n {
                gradients[q + 1][j] = jac_inv.get(q, j);
            }
        }
        for j in 0..n {
            gradients[0][j] = -(1..=n).map(|q| gradients[q][j]).sum::<T>();
        }
        Ok(Self { vertices, abs_det, gradients, jac_inv })
    }

    /// Reference simplex `conv{0, e_1, .., e_n}`.
    pub fn reference(n: usize) -> Self {
        let mut vs = vec![vec![T::zero(); n]];
        for i in 0..n {
            let mut v = vec![T::zero(); n];
            v[i] = T::one();
            vs.push(v);
        }
        Self::new(vs).expect("reference simplex is nondegenerate")
    }

    /// The interval `[a, b]`.
    pub fn interval(a: T, b: T) -> Result<Self> {
        Self::new(vec![vec![a], vec![b]])
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn vertices(&self) -> &[Vec<T>] {
        &self.vertices
    }

    /// `|det J|`, i.e. `n! · mes(K)`.
    pub fn jacobian_det(&self) -> T {
        self.abs_det
    }

    /// n-dimensional measure `mes(K)`.
    pub fn measure(&self) -> T {
        let fact: T = (1..=self.dim()).map(T::from_usize_lossy).fold(T::one(), |a, b| a * b);
        self.abs_det / fact
    }

    /// Diameter `h_K` (longest edge).
    pub fn diameter(&self) -> T {
        max_pairwise_distance(&self.vertices)
    }

    /// Maps barycentric coordinates to a point.
    pub fn point(&self, lambda: &[T]) -> Vec<T> {
        let n = self.dim();
        let mut x = vec![T::zero(); n];
        for (l, v) in lambda.iter().zip(&self.vertices) {
            for i in 0..n {
                x[i] += *l * v[i];
            }
        }
        x
    }

    /// Barycentric coordinates of `x` (not clamped; negative outside `K`).
    pub fn barycentric(&self, x: &[T]) -> Result<Vec<T>> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x.len() });
        }
        let d: Vec<T> = (0..n).map(|i| x[i] - self.vertices[0][i]).collect();
        let mut lambda = vec![T::zero(); n + 1];
        for q in 0..n {
            lambda[q + 1] = (0..n).map(|j| self.jac_inv.get(q, j) * d[j]).sum();
        }
        lambda[0] = T::one() - lambda[1..].iter().copied().sum::<T>();
        Ok(lambda)
    }

    /// `Λ^q_j = ∂λ_q/∂x_j`, one row per barycentric coordinate.
    pub fn barycentric_gradients(&self) -> &[Vec<T>] {
        &self.gradients
    }

    /// `Λ = max_{q,j} |Λ^q_j|`.
    pub fn lambda_max(&self) -> T {
        self.gradients
            .iter()
            .flatten()
            .fold(T::zero(), |m, g| m.max(g.abs()))
    }

    /// (n-1)-measure of the facet opposite vertex `q`; 1 for n = 1.
    pub fn facet_measure(&self, q: usize) -> T {
        let n = self.dim();
        let others: Vec<&Vec<T>> =
            self.vertices.iter().enumerate().filter(|(i, _)| *i != q).map(|(_, v)| v).collect();
        let base = others[0];
        let edges: Vec<Vec<T>> = others[1..]
            .iter()
            .map(|v| (0..n).map(|i| v[i] - base[i]).collect())
            .collect();
        let fact: T = (1..n).map(T::from_usize_lossy).fold(T::one(), |a, b| a * b);
        gram_volume(&edges) / fact
    }

    /// Diameter of the inscribed ball, `ρ = 2 n mes(K) / Σ mes(F)`.
    pub fn inscribed_diameter(&self) -> T {
        let n = self.dim();
        let facets = compensated_sum((0..=n).map(|q| self.facet_measure(q)));
        T::lit(2.0) * T::from_usize_lossy(n) * self.measure() / facets
    }

    /// Uniformly scaled copy `x ↦ s·x`.
    pub fn scaled(&self, s: T) -> Result<Self> {
        Self::new(self.vertices.iter().map(|v| v.iter().map(|c| *c * s).collect()).collect())
    }
}

fn max_pairwise_distance<T: Real>(vs: &[Vec<T>]) -> T {
    let mut best = T::zero();
    for i in 0..vs.len() {
        for j in i + 1..vs.len() {
            let d2: T = vs[i].iter().zip(&vs[j]).map(|(a, b)| (*a - *b) * (*a - *b)).sum();
            best = best.max(d2.sqrt());
        }
    }
    best
}

/// A conforming simplicial mesh with its size `h` and regularity bound `σ`.
#[derive(Debug, Clone)]
pub struct SimplexMesh<T> {
    vertices: Vec<Vec<T>>,
    cells: Vec<Vec<usize>>,
    simplices: Vec<Simplex<T>>,
    h: T,
    sigma: T,
}

/// JSON shape of a mesh.
#[derive(Debug, Serialize)]
pub struct MeshRecord<'a, T: Serialize> {
    pub dim: usize,
    pub vertices: &'a [Vec<T>],
    pub cells: &'a [Vec<usize>],
    pub h: T,
    pub sigma: T,
}

impl<T: Real> SimplexMesh<T> {
    pub fn from_cells(vertices: Vec<Vec<T>>, cells: Vec<Vec<usize>>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::invalid("cells", "mesh must contain at least one simplex"));
        }
        let simplices = cells
            .iter()
            .map(|c| {
                let vs = c
                    .iter()
                    .map(|&i| {
                        vertices.get(i).cloned().ok_or_else(|| {
                            Error::invalid("cells", format!("vertex index {i} out of range"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Simplex::new(vs)
            })
            .collect::<Result<Vec<_>>>()?;
        let dim = simplices[0].dim();
        if let Some(s) = simplices.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: s.dim() });
        }
        let h = simplices.iter().fold(T::zero(), |m, s| m.max(s.diameter()));
        let sigma = simplices
            .iter()
            .fold(T::one(), |m, s| m.max(s.diameter() / s.inscribed_diameter()));
        Ok(Self { vertices, cells, simplices, h, sigma })
    }

    /// One-element mesh.
    pub fn from_simplex(simplex: Simplex<T>) -> Self {
        let n = simplex.dim();
        let h = simplex.diameter();
        let sigma = T::one().max(h / simplex.inscribed_diameter());
        Self {
            vertices: simplex.vertices().to_vec(),
            cells: vec![(0..=n).collect()],
            simplices: vec![simplex],
            h,
            sigma,
        }
    }

    /// `[a, b]` split into `elements` equal intervals.
    pub fn uniform_1d(a: T, b: T, elements: usize) -> Result<Self> {
        if elements == 0 {
            return Err(Error::invalid("elements", "need at least one element"));
        }
        if !(b > a) {
            return Err(Error::invalid("interval", "require a < b"));
        }
        let ne = T::from_usize_lossy(elements);
        let vertices = (0..=elements)
            .map(|i| {
                let t = T::from_usize_lossy(i) / ne;
                vec![a + (b - a) * t]
            })
            .collect();
        let cells = (0..elements).map(|i| vec![i, i + 1]).collect();
        let mut mesh = Self::from_cells(vertices, cells)?;
        // Exact in 1D: h_K = ρ_K.
        mesh.sigma = T::one();
        Ok(mesh)
    }

    /// Unit square, `per_side²` squares each cut into two right triangles.
    pub fn structured_2d(per_side: usize) -> Result<Self> {
        if per_side == 0 {
            return Err(Error::invalid("per_side", "need at least one square per side"));
        }
        let np = per_side + 1;
        let ns = T::from_usize_lossy(per_side);
        let mut vertices = Vec::with_capacity(np * np);
        for j in 0..np {
            for i in 0..np {
                vertices.push(vec![T::from_usize_lossy(i) / ns, T::from_usize_lossy(j) / ns]);
            }
        }
        let id = |i: usize, j: usize| j * np + i;
        let mut cells = Vec::with_capacity(2 * per_side * per_side);
        for j in 0..per_side {
            for i in 0..per_side {
                cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                cells.push(vec![id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        Self::from_cells(vertices, cells)
    }

    pub fn dim(&self) -> usize {
        self.simplices[0].dim()
    }

    pub fn simplices(&self) -> &[Simplex<T>] {
        &self.simplices
    }

    pub fn vertices(&self) -> &[Vec<T>] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    /// `h = max_K h_K`.
    pub fn h(&self) -> T {
        self.h
    }

    /// `σ = max_K h_K / ρ_K` (at least 1).
    pub fn sigma(&self) -> T {
        self.sigma
    }

    /// Mesh-wide `Λ`: the maximum over elements.
    pub fn lambda_max(&self) -> T {
        self.simplices.iter().fold(T::zero(), |m, s| m.max(s.lambda_max()))
    }

    /// `Σ_K mes(K)`.
    pub fn measure(&self) -> T {
        compensated_sum(self.simplices.iter().map(Simplex::measure))
    }

    /// Diameter of the vertex cloud.
    pub fn domain_diameter(&self) -> T {
        max_pairwise_distance(&self.vertices)
    }

    pub fn record(&self) -> MeshRecord<'_, T> {
        MeshRecord {
            dim: self.dim(),
            vertices: &self.vertices,
            cells: &self.cells,
            h: self.h,
            sigma: self.sigma,
        }
    }
}
