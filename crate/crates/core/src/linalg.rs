//! Small dense kernels for simplex-sized matrices (n <= 3 in practice).

use crate::scalar::Real;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Dense<T> {
    pub n: usize,
    pub a: Vec<T>,
}

impl<T: Real> Dense<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, a: vec![T::zero(); n * n] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.a[i * self.n + j] = v;
    }

    /// LU with partial pivoting; returns (factors, permutation, sign) or `None` if singular.
    fn lu(&self) -> Option<(Vec<T>, Vec<usize>, T)> {
        let n = self.n;
        let mut a = self.a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        for col in 0..n {
            let (piv, max) = (col..n)
                .map(|r| (r, a[r * n + col].abs()))
                .fold((col, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if max == T::zero() {
                return None;
            }
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                }
                perm.swap(col, piv);
                sign = -sign;
            }
            let d = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / d;
                a[r * n + col] = f;
                for j in col + 1..n {
                    let v = a[col * n + j];
                    a[r * n + j] -= f * v;
                }
            }
        }
        Some((a, perm, sign))
    }

    pub fn det(&self) -> T {
        match self.lu() {
            None => T::zero(),
            Some((a, _, sign)) => (0..self.n).fold(sign, |acc, i| acc * a[i * self.n + i]),
        }
    }

    pub fn inverse(&self) -> Option<Self> {
        let n = self.n;
        let (lu, perm, _) = self.lu()?;
        let mut inv = Self::zeros(n);
        for col in 0..n {
            let mut x: Vec<T> = (0..n).map(|i| if perm[i] == col { T::one() } else { T::zero() }).collect();
            for i in 0..n {
                for j in 0..i {
                    let v = lu[i * n + j] * x[j];
                    x[i] -= v;
                }
            }
            for i in (0..n).rev() {
                for j in i + 1..n {
                    let v = lu[i * n + j] * x[j];
                    x[i] -= v;
                }
                x[i] /= lu[i * n + i];
            }
            for i in 0..n {
                inv.set(i, col, x[i]);
            }
        }
        Some(inv)
    }
}

/// `sqrt(det(Eᵀ E))` for the `rows x cols` edge matrix `E` given as column vectors.
pub(crate) fn gram_volume<T: Real>(columns: &[Vec<T>]) -> T {
    let c = columns.len();
    if c == 0 {
        return T::one();
    }
    let mut g = Dense::zeros(c);
    for i in 0..c {
        for j in 0..c {
            let dot: T = columns[i].iter().zip(&columns[j]).map(|(a, b)| *a * *b).sum();
            g.set(i, j, dot);
        }
    }
    g.det().max(T::zero()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_3x3() {
        let m = Dense { n: 3, a: vec![2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0] };
        let inv = m.inverse().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| m.get(i, k) * inv.get(k, j)).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        assert!((m.det() - 18.0).abs() < 1e-13);
    }

    #[test]
    fn singular_has_no_inverse() {
        let m = Dense { n: 2, a: vec![1.0, 2.0, 2.0, 4.0] };
        assert!(m.inverse().is_none());
        assert_eq!(m.det(), 0.0);
    }
}
