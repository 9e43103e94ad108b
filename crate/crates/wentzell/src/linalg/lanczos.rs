//! Shift-invert Lanczos for the symmetric-definite pencil K x = Λ M x.
//!
//! Works on the operator A = (K + s·M)⁻¹ M, which is self-adjoint and
//! positive in the M-inner product; its largest eigenvalues θ = 1/(Λ + s)
//! correspond to the smallest pencil eigenvalues. The basis is expanded
//! block-wise (so clustered and double eigenvalues — ubiquitous on the
//! square — are resolved) and kept M-orthonormal by full two-pass
//! reorthogonalization; eigenpairs come from Rayleigh-Ritz on the whole
//! basis, so small recurrence errors cannot produce ghosts.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{invalid, numeric, Result};
use crate::linalg::band::{m_orthonormalize, SymBand};

#[derive(Debug, Clone)]
pub struct LanczosOptions {
    /// Block size; must cover the largest expected eigenvalue multiplicity.
    pub block: usize,
    /// Spectral shift s > 0; K + s·M is factorized once.
    pub shift: f64,
    /// Relative tolerance on the pencil eigenvalues.
    pub tol: f64,
    /// Hard cap on the basis size (0 = choose from the request).
    pub max_basis: usize,
    /// Seed for the random starting block.
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            block: 4,
            shift: 1.0,
            tol: 1e-9,
            max_basis: 0,
            seed: 0x57454e54,
        }
    }
}

/// The `want` smallest eigenpairs of K x = Λ M x.
///
/// Returns (eigenvalues ascending, M-orthonormal eigenvectors, residuals
/// ‖Kx − ΛMx‖₂ / max(1, |Λ|)).
pub fn smallest_generalized(
    k: &SymBand,
    m: &SymBand,
    want: usize,
    opts: &LanczosOptions,
) -> Result<(Vec<f64>, Vec<Vec<f64>>, Vec<f64>)> {
    let n = k.n();
    if want == 0 || want >= n {
        return Err(invalid(format!(
            "requested {want} eigenpairs of an order-{n} pencil"
        )));
    }
    let block = opts.block.max(1).min(n);
    let max_basis = if opts.max_basis > 0 {
        opts.max_basis.min(n)
    } else {
        (3 * want + 90).min(n)
    };
    let shifted = k.add_scaled(m, opts.shift);
    let chol = shifted.cholesky().map_err(|e| {
        numeric(format!(
            "shift-invert factorization failed (shift {}): {e}",
            opts.shift
        ))
    })?;

    let mut rng = ChaCha12Rng::seed_from_u64(opts.seed);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut proj: DMatrix<f64> = DMatrix::zeros(max_basis, max_basis); // VᵀMAV
    let mut z = vec![0.0; n];

    // starting block
    let mut start: Vec<Vec<f64>> = (0..block)
        .map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect())
        .collect();
    m_orthonormalize(m, &mut start)?;
    basis.extend(start);

    // `processed` counts columns whose image A·v has been formed; the
    // projected matrix VᵀMAV is complete (and exactly symmetric in exact
    // arithmetic) on that leading block, so Rayleigh-Ritz runs there.
    let mut processed = 0usize;
    let mut prev_vals: Option<Vec<f64>> = None;
    let mut converged = false;
    let check_stride = (4 * block).max(12);
    let mut next_check = want + block;
    while !converged {
        let hi = basis.len();
        let ncols = hi - processed;
        // block images Y = A·V_block
        let mut block_y: Vec<Vec<f64>> = Vec::with_capacity(ncols);
        for c in processed..hi {
            m.matvec_into(&basis[c], &mut z);
            block_y.push(chol.solve(&z));
        }
        // classical Gram-Schmidt against the whole basis, jointly over the
        // block so each basis vector is streamed once per sweep; the
        // first-pass coefficients are the projected-operator entries
        // ⟨A v_c, v_i⟩_M
        let mut h = vec![0.0f64; ncols];
        for pass in 0..2 {
            let mut norms_before = vec![0.0f64; ncols];
            let mut zs: Vec<Vec<f64>> = Vec::with_capacity(ncols);
            for (bc, y) in block_y.iter().enumerate() {
                let zy = m.matvec(y);
                norms_before[bc] = zy.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
                zs.push(zy);
            }
            for (i, v) in basis.iter().enumerate() {
                for (bc, zy) in zs.iter().enumerate() {
                    h[bc] = v.iter().zip(zy.iter()).map(|(a, b)| a * b).sum();
                    if pass == 0 {
                        let c = processed + bc;
                        proj[(i, c)] = h[bc];
                        proj[(c, i)] = h[bc];
                    }
                }
                for (bc, y) in block_y.iter_mut().enumerate() {
                    let hv = h[bc];
                    if hv != 0.0 {
                        for (yv, bv) in y.iter_mut().zip(v) {
                            *yv -= hv * bv;
                        }
                    }
                }
            }
            if pass == 0 {
                // skip the cleanup pass when no column lost significant norm
                let drop = block_y.iter().zip(&norms_before).any(|(y, &nb)| {
                    let na = m.quad_form(y, y);
                    na < 0.25 * nb
                });
                if !drop {
                    break;
                }
            }
        }
        // append the remainder block, replacing collapsed directions with
        // fresh noise so multiplicities keep getting probed
        for mut y in block_y {
            if basis.len() >= max_basis {
                break;
            }
            let nrm2 = m.quad_form(&y, &y);
            if nrm2.sqrt() > 1e-10 {
                let mut one = vec![y];
                orthogonalize_against(m, &basis, &mut one[0], &mut z);
                if m_orthonormalize(m, &mut one).is_ok() {
                    basis.push(one.pop().unwrap());
                }
            } else {
                y.iter_mut().for_each(|v| *v = rng.random::<f64>() - 0.5);
                let mut one = vec![y];
                orthogonalize_against(m, &basis, &mut one[0], &mut z);
                if m_orthonormalize(m, &mut one).is_ok() {
                    basis.push(one.pop().unwrap());
                }
            }
        }
        processed = hi;

        if std::env::var("LANCZOS_TRACE").is_ok() {
            eprintln!("basis {} processed {}", basis.len(), processed);
        }
        let full_space = processed >= n;
        if processed >= want && (processed >= next_check || full_space || basis.len() == processed)
        {
            next_check = processed + check_stride;
            let t = proj.view((0, 0), (processed, processed)).into_owned();
            let t = (&t + t.transpose()) * 0.5;
            let mut vals: Vec<f64> = t.symmetric_eigenvalues().iter().copied().collect();
            vals.sort_by(|a, b| b.total_cmp(a)); // θ descending
            let lam: Vec<f64> = vals[..want]
                .iter()
                .map(|&th| 1.0 / th.max(1e-300) - opts.shift)
                .collect();
            if let Some(prev) = &prev_vals {
                let scale = opts.shift.abs().max(1.0);
                converged = lam
                    .iter()
                    .zip(prev)
                    .all(|(a, b)| (a - b).abs() <= opts.tol * a.abs().max(scale));
            }
            if full_space {
                converged = true; // Rayleigh-Ritz on the full space is exact
            }
            prev_vals = Some(lam);
        }
        if !converged && basis.len() == processed {
            // the basis cannot grow further (cap or breakdown)
            if processed >= n {
                converged = prev_vals.is_some();
            }
            if !converged {
                return Err(numeric(format!(
                    "Lanczos did not converge: basis {processed}/{max_basis}, want {want}; \
                     increase max_basis or loosen tol"
                )));
            }
        }
    }

    // final Rayleigh-Ritz with vectors over the completed columns
    let nb = processed;
    let t = proj.view((0, 0), (nb, nb)).into_owned();
    let t = (&t + t.transpose()) * 0.5;
    let se = t.symmetric_eigen();
    let mut order: Vec<usize> = (0..nb).collect();
    order.sort_by(|&i, &j| se.eigenvalues[j].total_cmp(&se.eigenvalues[i]));

    let mut vecs: Vec<Vec<f64>> = Vec::with_capacity(want);
    for &col in order.iter().take(want) {
        let s = se.eigenvectors.column(col);
        let mut x = vec![0.0; n];
        for (i, v) in basis[..nb].iter().enumerate() {
            let w = s[i];
            if w != 0.0 {
                for (xv, bv) in x.iter_mut().zip(v) {
                    *xv += w * bv;
                }
            }
        }
        vecs.push(x);
    }
    // polish: re-orthonormalize in M (tight Gram within clusters), then take
    // Rayleigh quotients with K as the reported eigenvalues
    m_orthonormalize(m, &mut vecs)?;
    let mut pairs: Vec<(f64, Vec<f64>)> = vecs
        .into_iter()
        .map(|x| (k.quad_form(&x, &x), x))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut lams = Vec::with_capacity(want);
    let mut out = Vec::with_capacity(want);
    let mut residuals = Vec::with_capacity(want);
    for (lam, mut x) in pairs {
        // deterministic sign: largest-magnitude entry positive
        let mut imax = 0;
        for (i, v) in x.iter().enumerate() {
            if v.abs() > x[imax].abs() {
                imax = i;
            }
        }
        if x[imax] < 0.0 {
            for v in x.iter_mut() {
                *v = -*v;
            }
        }
        let kx = k.matvec(&x);
        let mx = m.matvec(&x);
        let res = kx
            .iter()
            .zip(mx.iter())
            .map(|(a, b)| (a - lam * b).powi(2))
            .sum::<f64>()
            .sqrt()
            / lam.abs().max(1.0);
        lams.push(lam);
        residuals.push(res);
        out.push(x);
    }
    Ok((lams, out, residuals))
}

fn orthogonalize_against(m: &SymBand, basis: &[Vec<f64>], w: &mut [f64], z: &mut [f64]) {
    for _ in 0..2 {
        m.matvec_into(w, z);
        for v in basis {
            let h: f64 = v.iter().zip(z.iter()).map(|(a, b)| a * b).sum();
            for (wv, bv) in w.iter_mut().zip(v) {
                *wv -= h * bv;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense::generalized_sym_eigs;

    #[test]
    fn matches_dense_on_small_pencil() {
        // 1D Laplacian-like K with a mass that has extra weight at the ends
        let n = 60;
        let mut k = SymBand::zeros(n, 1);
        let mut m = SymBand::zeros(n, 1);
        for i in 0..n {
            k.add_at(i, i, 2.0);
            m.add_at(i, i, 1.0 + if i == 0 || i == n - 1 { 2.0 } else { 0.0 });
            if i + 1 < n {
                k.add_at(i + 1, i, -1.0);
                m.add_at(i + 1, i, 0.15);
            }
        }
        k.add_at(0, 0, -1.0);
        k.add_at(n - 1, n - 1, -1.0); // Neumann-like: constants in the kernel
        let opts = LanczosOptions::default();
        let (lam, vecs, res) = smallest_generalized(&k, &m, 8, &opts).unwrap();
        let (lam_d, _) = generalized_sym_eigs(&k.to_dense(), &m.to_dense(), 8).unwrap();
        for j in 0..8 {
            assert!(
                (lam[j] - lam_d[j]).abs() <= 1e-8 * lam_d[j].abs().max(1.0),
                "mode {j}: lanczos {} dense {}",
                lam[j],
                lam_d[j]
            );
            assert!(res[j] < 1e-7, "residual {j} = {}", res[j]);
        }
        // M-orthonormality
        for i in 0..8 {
            for j in 0..8 {
                let g = m.quad_form(&vecs[i], &vecs[j]);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g - want).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn resolves_multiplicity() {
        // block-diagonal pencil with exactly double eigenvalues
        let n = 40;
        let mut k = SymBand::zeros(n, 2);
        let mut m = SymBand::zeros(n, 0);
        for i in 0..n {
            m.add_at(i, i, 1.0);
        }
        // two interleaved independent chains → every chain eigenvalue twice
        for p in 0..2 {
            for i in 0..n / 2 {
                let g = 2 * i + p;
                k.add_at(g, g, 2.0);
                if i + 1 < n / 2 {
                    k.add_at(2 * (i + 1) + p, g, -1.0);
                }
            }
        }
        let (lam, _, _) = smallest_generalized(&k, &m, 6, &LanczosOptions::default()).unwrap();
        for pair in lam.chunks(2) {
            assert!(
                (pair[0] - pair[1]).abs() < 1e-9 * pair[0].max(1.0),
                "double eigenvalue split: {pair:?}"
            );
        }
    }
}
