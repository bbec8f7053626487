//! Small dense matrices (at most 4x4) for pointwise coefficient algebra.

use std::ops::{Index, IndexMut};

pub const MAX_COMP: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat {
    n: usize,
    a: [[f64; MAX_COMP]; MAX_COMP],
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        assert!(n <= MAX_COMP, "matrix size {n} exceeds {MAX_COMP}");
        Mat {
            n,
            a: [[0.0; MAX_COMP]; MAX_COMP],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i][i] = 1.0;
        }
        m
    }

    pub fn diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &x) in d.iter().enumerate() {
            m.a[i][i] = x;
        }
        m
    }

    pub fn from_rows<const N: usize>(rows: [[f64; N]; N]) -> Self {
        let mut m = Self::zeros(N);
        for i in 0..N {
            m.a[i][..N].copy_from_slice(&rows[i]);
        }
        m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t.a[j][i] = self.a[i][j];
            }
        }
        t
    }

    pub fn add(&self, other: &Mat) -> Self {
        debug_assert_eq!(self.n, other.n);
        let mut m = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                m.a[i][j] += other.a[i][j];
            }
        }
        m
    }

    pub fn sub(&self, other: &Mat) -> Self {
        debug_assert_eq!(self.n, other.n);
        let mut m = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                m.a[i][j] -= other.a[i][j];
            }
        }
        m
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                m.a[i][j] *= s;
            }
        }
        m
    }

    /// Symmetric part `(M + Mᵀ)/2`.
    pub fn sym(&self) -> Self {
        let mut m = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m.a[i][j] = 0.5 * (self.a[i][j] + self.a[j][i]);
            }
        }
        m
    }

    #[inline]
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for j in 0..self.n {
                s += self.a[i][j] * x[j];
            }
            out[i] = s;
        }
    }

    #[inline]
    pub fn tr_mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for j in 0..self.n {
                s += self.a[j][i] * x[j];
            }
            out[i] = s;
        }
    }

    /// `uᵀ M v`
    pub fn quad(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            let mut r = 0.0;
            for j in 0..self.n {
                r += self.a[i][j] * v[j];
            }
            s += u[i] * r;
        }
        s
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                m = m.max(self.a[i][j].abs());
            }
        }
        m
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        let tol = rel_tol * self.max_abs();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if (self.a[i][j] - self.a[j][i]).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_finite(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self.a[i][j].is_finite()))
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.n && j < self.n);
        &self.a[i][j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.n && j < self.n);
        &mut self.a[i][j]
    }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as the columns of the second matrix.
pub fn symmetric_eigen(m: &Mat) -> (Vec<f64>, Mat) {
    let n = m.n;
    let mut a = m.sym();
    let mut v = Mat::identity(n);
    let scale = a.max_abs();
    if scale == 0.0 {
        return (vec![0.0; n], v);
    }
    for _sweep in 0..64 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(a[(i, j)].abs());
            }
        }
        if off <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let vals = idx.iter().map(|&i| a[(i, i)]).collect();
    let mut vecs = Mat::zeros(n);
    for (col, &i) in idx.iter().enumerate() {
        for k in 0..n {
            vecs[(k, col)] = v[(k, i)];
        }
    }
    (vals, vecs)
}

pub fn symmetric_eigenvalues(m: &Mat) -> Vec<f64> {
    symmetric_eigen(m).0
}

/// Splits a symmetric matrix into its negative semi-definite part.
pub fn negative_part(m: &Mat) -> Mat {
    let (vals, vecs) = symmetric_eigen(m);
    let n = m.n;
    let mut out = Mat::zeros(n);
    for (k, &lam) in vals.iter().enumerate() {
        if lam >= 0.0 {
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += lam * vecs[(i, k)] * vecs[(j, k)];
            }
        }
    }
    out
}

pub fn positive_part(m: &Mat) -> Mat {
    m.sym().sub(&negative_part(m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_diagonal_and_rotated() {
        let d = Mat::diag(&[3.0, -1.0, 0.5]);
        let vals = symmetric_eigenvalues(&d);
        assert_eq!(vals, vec![-1.0, 0.5, 3.0]);

        let m = Mat::from_rows([[2.0, 1.0], [1.0, 2.0]]);
        let vals = symmetric_eigenvalues(&m);
        assert!((vals[0] - 1.0).abs() < 1e-14);
        assert!((vals[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_reconstructs_matrix() {
        let m = Mat::from_rows([
            [1.0, 0.3, -0.2, 0.5],
            [0.3, -2.0, 0.7, 0.0],
            [-0.2, 0.7, 0.4, 1.1],
            [0.5, 0.0, 1.1, -0.3],
        ]);
        let (vals, v) = symmetric_eigen(&m);
        for i in 0..4 {
            for j in 0..4 {
                let mut s = 0.0;
                for k in 0..4 {
                    s += vals[k] * v[(i, k)] * v[(j, k)];
                }
                assert!((s - m[(i, j)]).abs() < 1e-13, "({i},{j}) {s} vs {}", m[(i, j)]);
            }
        }
        let split = negative_part(&m).add(&positive_part(&m));
        for i in 0..4 {
            for j in 0..4 {
                assert!((split[(i, j)] - m[(i, j)]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn quad_and_transpose() {
        let m = Mat::from_rows([[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(m.quad(&[1.0, 1.0], &[1.0, 0.0]), 4.0);
        let mut out = [0.0; 2];
        m.tr_mul_vec(&[1.0, 0.0], &mut out);
        assert_eq!(out, [1.0, 2.0]);
        assert!(!m.is_symmetric(1e-14));
        assert!(m.sym().is_symmetric(0.0));
    }
}
