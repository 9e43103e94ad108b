//! Dense fallbacks built on nalgebra, used for small meshes and for
//! cross-checking the banded/Lanczos paths.

use nalgebra::{DMatrix, DVector};

use crate::error::{numeric, Result};

/// Eigenpairs of a dense symmetric matrix, ascending.
pub fn sym_eigen_sorted(a: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let se = a.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    let vals = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vecs.set_column(col, &se.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// The `count` smallest eigenpairs of the symmetric-definite pencil
/// K x = Λ M x, by Cholesky reduction to a standard symmetric problem.
/// Returned eigenvectors are M-orthonormal.
pub fn generalized_sym_eigs(
    k: &DMatrix<f64>,
    m: &DMatrix<f64>,
    count: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = k.nrows();
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| numeric("mass matrix is not positive definite"))?;
    let l = chol.l();
    // B = L⁻¹ K L⁻ᵀ
    let x = l.solve_lower_triangular(k).ok_or_else(|| numeric("singular Cholesky factor"))?;
    let b = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| numeric("singular Cholesky factor"))?
        .transpose();
    // enforce exact symmetry against round-off before the eigensolve
    let b = (&b + b.transpose()) * 0.5;
    let (vals, vecs) = sym_eigen_sorted(b);
    let count = count.min(n);
    let mut out_vecs = Vec::with_capacity(count);
    for j in 0..count {
        let y: DVector<f64> = vecs.column(j).into();
        let x = l
            .transpose()
            .solve_upper_triangular(&y)
            .ok_or_else(|| numeric("singular Cholesky factor"))?;
        out_vecs.push(x.iter().copied().collect());
    }
    Ok((vals[..count].to_vec(), out_vecs))
}

/// Largest eigenvalue of a small dense symmetric matrix.
pub fn sym_max_eigenvalue(a: DMatrix<f64>) -> f64 {
    let se = a.symmetric_eigen();
    se.eigenvalues.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
}
