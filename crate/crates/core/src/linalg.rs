//! Dense complex linear algebra shared by the operator and superoperator
//! layers.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>` (column-major). Products go
//! through `matrixmultiply::zgemm`; nalgebra's generic complex product is an
//! order of magnitude slower at the sizes used here.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// `a * b` via zgemm.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (m, k) = a.shape();
    let (k2, n) = b.shape();
    assert_eq!(k, k2, "matmul: inner dimensions differ");
    let mut c = CMatrix::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    // SAFETY: nalgebra stores DMatrix contiguously in column-major order and
    // Complex64 is #[repr(C)] with layout [f64; 2]. Strides describe exactly
    // the allocated buffers.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    c
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).fold(0.0_f64, |m, (x, y)| m.max((x - y).norm()))
}

/// Max-norm of `a - a^dagger`.
pub fn hermiticity_residual(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut r = 0.0_f64;
    for j in 0..n {
        for i in 0..=j {
            r = r.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    r
}

pub fn trace(a: &CMatrix) -> Complex64 {
    a.diagonal().iter().sum()
}

/// Eigenvalues of the Hermitian part `(a + a^dagger)/2`, ascending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    let h = (a + a.adjoint()) * Complex64::new(0.5, 0.0);
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// `exp(i * theta * h)` for Hermitian `h`, through its eigendecomposition.
/// The result is unitary to rounding.
pub fn expm_hermitian_phase(h: &CMatrix, theta: f64) -> CMatrix {
    let h = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, theta * lambda);
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= phase;
        }
    }
    matmul(&scaled, &v.adjoint())
}

/// Matrix exponential (nalgebra's scaling and squaring Padé).
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    if a.ncols() != a.nrows() {
        return Err(Error::InvalidArgument("expm of a non-square matrix".into()));
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidArgument("expm of a non-finite matrix".into()));
    }
    Ok(a.clone().exp())
}

pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}
