//! Dense complex linear-algebra helpers shared by the forward model and the
//! solver.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);

/// Eigenpairs of a Hermitian matrix sorted by descending eigenvalue.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `j` is the unit eigenvector for `values[j]`.
    pub vectors: CMatrix,
}

/// `(H + Hᴴ) / 2`
pub fn hermitize(h: &CMatrix) -> CMatrix {
    let n = h.nrows();
    CMatrix::from_fn(n, n, |i, j| (h[(i, j)] + h[(j, i)].conj()) * 0.5)
}

pub fn hermitian_eigen(h: &CMatrix) -> Result<HermitianEigen> {
    if h.nrows() != h.ncols() {
        return Err(Error::Dimension {
            context: "hermitian_eigen (square input)",
            expected: h.nrows(),
            found: h.ncols(),
        });
    }
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numerical(format!(
            "non-finite entries in {}x{} matrix passed to the eigensolver",
            h.nrows(),
            h.ncols()
        )));
    }
    let n = h.nrows();
    let eig = SymmetricEigen::try_new(h.clone(), f64::EPSILON, 1000 * n.max(1)).ok_or_else(|| {
        let asym = h
            .iter()
            .zip(h.adjoint().iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        Error::Numerical(format!(
            "Hermitian eigendecomposition did not converge ({n}x{n}, ‖H‖_F = {:.3e}, max |H - Hᴴ| = {asym:.3e})",
            h.norm()
        ))
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps the solver's order among equal eigenvalues.
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermitianEigen { values, vectors })
}

/// `Σ_j w_j q_j q_jᴴ` over the columns `q_j` of `vectors`.
pub fn weighted_outer(values: &[f64], vectors: &CMatrix) -> CMatrix {
    let n = vectors.nrows();
    let mut out = CMatrix::zeros(n, n);
    for (j, &w) in values.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let q = vectors.column(j);
        for c in 0..n {
            let qc = q[c].conj() * w;
            for r in 0..n {
                out[(r, c)] += q[r] * qc;
            }
        }
    }
    out
}

/// Complex GEMM `C = A·B` on raw strided storage.
///
/// Each matrix is described by `(rows, cols, row_stride, col_stride)` in units
/// of complex elements.
#[allow(clippy::too_many_arguments)]
pub(crate) fn zgemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[C64],
    a_strides: (isize, isize),
    b: &[C64],
    b_strides: (isize, isize),
    c: &mut [C64],
    c_strides: (isize, isize),
) {
    use matrixmultiply::CGemmOption;
    debug_assert!(c.len() >= m * n);
    // SAFETY: Complex<f64> is #[repr(C)] { re, im } and therefore layout
    // compatible with [f64; 2]; the callers pass buffers whose extents cover
    // the described strided views.
    unsafe {
        matrixmultiply::zgemm(
            CGemmOption::Standard,
            CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            a_strides.0,
            a_strides.1,
            b.as_ptr() as *const [f64; 2],
            b_strides.0,
            b_strides.1,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            c_strides.0,
            c_strides.1,
        );
    }
}

pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `⟨a, b⟩ = Σ conj(a_i) b_i`
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_descending_and_reconstructs() {
        let h = CMatrix::from_row_slice(
            3,
            3,
            &[
                C64::new(2.0, 0.0),
                C64::new(0.5, 0.5),
                C64::new(0.0, -1.0),
                C64::new(0.5, -0.5),
                C64::new(-1.0, 0.0),
                C64::new(0.25, 0.0),
                C64::new(0.0, 1.0),
                C64::new(0.25, 0.0),
                C64::new(3.0, 0.0),
            ],
        );
        let e = hermitian_eigen(&h).unwrap();
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        let back = weighted_outer(&e.values, &e.vectors);
        assert!((back - &h).norm() < 1e-12);
    }

    #[test]
    fn rejects_non_finite() {
        let mut h = CMatrix::identity(2, 2);
        h[(0, 1)] = C64::new(f64::NAN, 0.0);
        assert!(matches!(hermitian_eigen(&h), Err(Error::Numerical(_))));
    }

    #[test]
    fn zgemm_matches_naive_product() {
        let a: Vec<C64> = (0..6).map(|i| C64::new(i as f64, 1.0 - i as f64)).collect();
        let b: Vec<C64> = (0..12).map(|i| C64::new(0.5 * i as f64, 2.0)).collect();
        // A: 2x3 row-major, B: 3x4 row-major, C: 2x4 column-major.
        let mut c = vec![ZERO; 8];
        zgemm(2, 3, 4, &a, (3, 1), &b, (4, 1), &mut c, (1, 2));
        for i in 0..2 {
            for j in 0..4 {
                let want: C64 = (0..3).map(|t| a[i * 3 + t] * b[t * 4 + j]).sum();
                assert!((c[i + 2 * j] - want).norm() < 1e-12);
            }
        }
    }
}
