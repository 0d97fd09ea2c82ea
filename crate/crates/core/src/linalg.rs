//! Real symmetric eigensolvers.
//!
//! [`tridiag_eigen`] is the production path: implicit-shift QL with Wilkinson
//! shifts on the tridiagonal sector blocks (Bowdler, Martin, Reinsch and
//! Wilkinson's `tql2`). [`dense_eigen`] is a cyclic Jacobi solver that shares
//! no code with it and serves as the oracle in tests and for dense matrices
//! produced by the small-rotation check.

use std::cmp::Ordering;
use std::ops::{Index, IndexMut};

use crate::hamiltonian::TridiagonalBlock;
use crate::{Error, Result};

/// Iteration cap per eigenvalue for the QL sweep.
pub const DEFAULT_MAX_SWEEPS: usize = 50;

/// Square row-major real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        Self {
            n,
            data: rows.concat(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm(&self) -> f64 {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    /// Largest absolute off-diagonal element.
    pub fn max_off_diagonal(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    worst = worst.max(self[(i, j)].abs());
                }
            }
        }
        worst
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Ascending eigenvalues with orthonormal eigenvectors stored as columns.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DenseMatrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `max |VᵀV - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let v = &self.eigenvectors;
        let vtv = v.transpose().matmul(v);
        let mut worst = 0.0f64;
        for i in 0..v.dim() {
            for j in 0..v.dim() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((vtv[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// Puts eigenpairs in a canonical form: each vector's largest-magnitude
    /// component is positive, eigenvalues ascend, and exact ties are broken by
    /// descending lexicographic order of the eigenvectors.
    fn canonicalize(values: Vec<f64>, vectors: DenseMatrix) -> Self {
        let n = values.len();
        let mut columns: Vec<Vec<f64>> = (0..n).map(|j| vectors.column(j)).collect();
        for col in &mut columns {
            let mut pivot = 0;
            for (i, x) in col.iter().enumerate() {
                if x.abs() > col[pivot].abs() {
                    pivot = i;
                }
            }
            if col[pivot] < 0.0 {
                col.iter_mut().for_each(|x| *x = -*x);
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            values[a].total_cmp(&values[b]).then_with(|| {
                columns[b]
                    .iter()
                    .zip(&columns[a])
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| *o != Ordering::Equal)
                    .unwrap_or(Ordering::Equal)
            })
        });
        let eigenvalues = order.iter().map(|&j| values[j]).collect();
        let mut eigenvectors = DenseMatrix::zeros(n);
        for (dst, &src) in order.iter().enumerate() {
            for i in 0..n {
                eigenvectors[(i, dst)] = columns[src][i];
            }
        }
        Self {
            eigenvalues,
            eigenvectors,
        }
    }
}

/// Eigendecomposition of a sector block.
pub fn tridiag_eigen(block: &TridiagonalBlock) -> Result<EigenDecomposition> {
    symmetric_tridiagonal_eigen(&block.diag, &block.offdiag)
}

pub fn symmetric_tridiagonal_eigen(diag: &[f64], offdiag: &[f64]) -> Result<EigenDecomposition> {
    symmetric_tridiagonal_eigen_capped(diag, offdiag, DEFAULT_MAX_SWEEPS)
}

/// Implicit QL on the tridiagonal matrix with diagonal `diag` and
/// sub/super-diagonal `offdiag` (`offdiag.len() == diag.len() - 1`).
pub fn symmetric_tridiagonal_eigen_capped(
    diag: &[f64],
    offdiag: &[f64],
    max_sweeps: usize,
) -> Result<EigenDecomposition> {
    let n = diag.len();
    assert!(n > 0, "empty block");
    assert_eq!(offdiag.len(), n - 1, "off-diagonal length must be n - 1");

    let mut d = diag.to_vec();
    // e[i] couples i and i + 1; e[n - 1] = 0 terminates the split search
    let mut e = offdiag.to_vec();
    e.push(0.0);
    let mut z = DenseMatrix::identity(n);

    let mut shift_acc = 0.0;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > f64::EPSILON * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > max_sweeps {
                    return Err(Error::NoConvergence { size: n, index: l });
                }
                // Wilkinson shift from the leading 2x2
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                shift_acc += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..n {
                        let zk1 = z[(k, i + 1)];
                        let zk = z[(k, i)];
                        z[(k, i + 1)] = s * zk + c * zk1;
                        z[(k, i)] = c * zk - s * zk1;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= f64::EPSILON * tst1 {
                    break;
                }
            }
        }
        d[l] += shift_acc;
        e[l] = 0.0;
    }
    Ok(EigenDecomposition::canonicalize(d, z))
}

/// Cyclic Jacobi eigensolver for dense real symmetric matrices.
pub fn dense_eigen(matrix: &DenseMatrix) -> Result<EigenDecomposition> {
    let n = matrix.dim();
    let scale = matrix.norm().max(1.0);
    let asym = matrix.max_asymmetry();
    if asym > 1e-12 * scale {
        return Err(Error::NotSymmetric(asym));
    }
    let mut a = DenseMatrix::from_fn(n, |i, j| 0.5 * (matrix[(i, j)] + matrix[(j, i)]));
    let mut v = DenseMatrix::identity(n);
    const MAX_SWEEPS: usize = 100;

    let frob: f64 = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| a[(i, j)].powi(2))
        .sum::<f64>()
        .sqrt();
    let target = f64::EPSILON * frob.max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| a[(i, j)].powi(2))
            .sum::<f64>()
            .sqrt();
        if off <= target {
            let values = (0..n).map(|i| a[(i, i)]).collect();
            return Ok(EigenDecomposition::canonicalize(values, v));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
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
    Err(Error::NoConvergence { size: n, index: 0 })
}
