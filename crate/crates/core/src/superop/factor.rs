//! Left and right factors of structured superoperators, with a sparse
//! copy for fast products.

use std::sync::atomic::{AtomicU64, Ordering};

use num_complex::Complex64;

use crate::linalg::{self, CMatrix, ONE, ZERO};

static NEXT_ID: AtomicU64 = AtomicU64::new(0);

/// Compressed sparse columns.
#[derive(Clone, Debug)]
struct Csc {
    col_ptr: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<Complex64>,
}

impl Csc {
    fn from_dense(m: &CMatrix) -> Self {
        let mut col_ptr = vec![0];
        let (mut rows, mut vals) = (vec![], vec![]);
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let v = m[(i, j)];
                if v != ZERO {
                    rows.push(i);
                    vals.push(v);
                }
            }
            col_ptr.push(rows.len());
        }
        Self { col_ptr, rows, vals }
    }

    fn col(&self, j: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        self.rows[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }
}

/// A square matrix used as `L` or `R` in `c L X R`.
#[derive(Clone, Debug)]
pub struct Factor {
    id: u64,
    label: String,
    matrix: CMatrix,
    sparse: Option<Csc>,
    identity: bool,
}

impl Factor {
    pub fn new(label: impl Into<String>, matrix: CMatrix) -> Self {
        let n = matrix.nrows();
        let identity = matrix == linalg::identity(n);
        let nnz = matrix.iter().filter(|z| **z != ZERO).count();
        let sparse = (nnz * 4 <= n * n).then(|| Csc::from_dense(&matrix));
        Self { id: NEXT_ID.fetch_add(1, Ordering::Relaxed), label: label.into(), matrix, sparse, identity }
    }

    pub fn identity(n: usize) -> Self {
        Self::new("I", linalg::identity(n))
    }

    /// Unique per construction; equal ids mean the same matrix.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    /// `self * x`.
    pub fn left_mul(&self, x: &CMatrix) -> CMatrix {
        if self.identity {
            return x.clone();
        }
        match &self.sparse {
            None => linalg::matmul(&self.matrix, x),
            Some(s) => {
                let n = self.matrix.nrows();
                let mut out = CMatrix::zeros(n, x.ncols());
                for j in 0..x.ncols() {
                    let xc = x.column(j);
                    let mut oc = out.column_mut(j);
                    for k in 0..n {
                        let xk = xc[k];
                        if xk == ZERO {
                            continue;
                        }
                        for (i, v) in s.col(k) {
                            oc[i] += v * xk;
                        }
                    }
                }
                out
            }
        }
    }

    /// `x * self`.
    pub fn right_mul(&self, x: &CMatrix) -> CMatrix {
        if self.identity {
            return x.clone();
        }
        match &self.sparse {
            None => linalg::matmul(x, &self.matrix),
            Some(s) => {
                let n = self.matrix.ncols();
                let mut out = CMatrix::zeros(x.nrows(), n);
                for j in 0..n {
                    for (k, v) in s.col(j) {
                        let src = x.column(k);
                        let mut dst = out.column_mut(j);
                        dst.axpy(v, &src, ONE);
                    }
                }
                out
            }
        }
    }

    /// Adds `c * self` into `buf`.
    pub(crate) fn accumulate(&self, c: Complex64, buf: &mut CMatrix) {
        match &self.sparse {
            Some(s) => {
                for j in 0..self.matrix.ncols() {
                    for (i, v) in s.col(j) {
                        buf[(i, j)] += c * v;
                    }
                }
            }
            None => {
                for (b, m) in buf.iter_mut().zip(self.matrix.iter()) {
                    *b += c * m;
                }
            }
        }
    }
}
