//! Dense helpers for small symmetric matrices.
//!
//! The feature dimensions here are tiny (≤ 40), so a cyclic Jacobi sweep is
//! plenty and keeps the whole stack free of external linear-algebra backends.

use crate::scalar::Real;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMat<R> {
    pub n: usize,
    pub data: Vec<R>,
}

impl<R: Real> SquareMat<R> {
    pub fn zeros(n: usize) -> Self {
        SquareMat { n, data: vec![R::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = R::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<R>]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "not square");
            data.extend_from_slice(r);
        }
        SquareMat { n, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> R {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: R) {
        self.data[i * self.n + j] = v;
    }

    pub fn trace(&self) -> R {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn matmul(&self, other: &SquareMat<R>) -> SquareMat<R> {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = SquareMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == R::zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> SquareMat<R> {
        let n = self.n;
        let mut out = SquareMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.set(j, i, self.get(i, j));
            }
        }
        out
    }

    /// `(A + Aᵀ) / 2`, removing numeric asymmetry.
    pub fn symmetrized(&self) -> SquareMat<R> {
        let n = self.n;
        let half = R::of(0.5);
        let mut out = SquareMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, (self.get(i, j) + self.get(j, i)) * half);
            }
        }
        out
    }

    pub fn scale(&self, s: R) -> SquareMat<R> {
        SquareMat { n: self.n, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn add(&self, other: &SquareMat<R>) -> SquareMat<R> {
        assert_eq!(self.n, other.n);
        SquareMat {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn max_abs(&self) -> R {
        self.data.iter().fold(R::zero(), |m, &x| m.max(x.abs()))
    }
}

/// Eigendecomposition of a symmetric matrix: `A = V diag(λ) Vᵀ`.
///
/// Returned eigenvalues are sorted descending; `vectors` holds the matching
/// eigenvectors as columns of `v`.
pub struct SymEigen<R> {
    pub values: Vec<R>,
    pub vectors: SquareMat<R>,
}

/// Cyclic Jacobi rotations until off-diagonal mass is negligible.
pub fn sym_eigen<R: Real>(a: &SquareMat<R>) -> SymEigen<R> {
    let n = a.n;
    let mut m = a.symmetrized();
    let mut v = SquareMat::identity(n);
    let tol = R::of(1e-14) * m.max_abs().max(R::one());
    for _sweep in 0..100 {
        let mut off = R::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(m.get(i, j).abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq.abs() <= tol * R::of(1e-2) {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (R::of(2.0) * apq);
                // Stable tangent of the rotation angle.
                let t = {
                    let sign = if theta >= R::zero() { R::one() } else { -R::one() };
                    sign / (theta.abs() + (theta * theta + R::one()).sqrt())
                };
                let c = R::one() / (t * t + R::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<R> = (0..n).map(|i| m.get(i, i)).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).expect("finite eigenvalues"));
    let values: Vec<R> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = SquareMat::zeros(n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..n {
            vectors.set(k, new_col, v.get(k, old_col));
        }
    }
    SymEigen { values, vectors }
}

/// Principal square root of a symmetric PSD matrix, flooring eigenvalues at 0.
pub fn sym_sqrt<R: Real>(a: &SquareMat<R>) -> SquareMat<R> {
    let eig = sym_eigen(a);
    let n = a.n;
    let mut out = SquareMat::zeros(n);
    for (k, &lam) in eig.values.iter().enumerate() {
        let s = lam.max(R::zero()).sqrt();
        if s == R::zero() {
            continue;
        }
        for i in 0..n {
            let vi = eig.vectors.get(i, k) * s;
            for j in 0..n {
                out.data[i * n + j] += vi * eig.vectors.get(j, k);
            }
        }
    }
    out
}
