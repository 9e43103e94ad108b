//! Low spectrum of the pencil, Weyl-law fits, Lieb–Thirring sums and
//! min-max checks.
//!
//! The eigenvalue sequence is surface-dominated for n ≥ 2 (Λ_j ~ C_W·j on a
//! planar domain) and bulk-like for n = 1 (Λ_j ~ C_D·j²); `weyl_fit`
//! regresses the computed spectrum against the appropriate power of the
//! index and reports the slope as the operational Weyl constant.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{invalid, numeric, Result};
use crate::linalg::dense::{generalized_sym_eigs, sym_max_eigenvalue};
use crate::linalg::lanczos::{smallest_generalized, LanczosOptions};
use crate::linalg::{m_orthonormalize, SymBand};
use crate::pencil::{OperatorPencil, StateVector};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Ordered eigenvalues with M-orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    /// ‖Kx − ΛMx‖₂ / max(1, |Λ|) per pair.
    pub residuals: Vec<f64>,
    pub mesh_h: f64,
}

impl Spectrum {
    pub fn count(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, j: usize) -> StateVector {
        StateVector::new(self.eigenvectors[j].clone())
    }

    /// CSV with columns (j, lambda_j, residual_j).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("j,lambda,residual\n");
        for j in 0..self.count() {
            let _ = writeln!(s, "{},{},{}", j, self.eigenvalues[j], self.residuals[j]);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigMethod {
    /// Dense below `DENSE_CUTOFF` nodes, Lanczos above.
    #[default]
    Auto,
    Dense,
    Lanczos,
}

const DENSE_CUTOFF: usize = 700;

#[derive(Debug, Clone)]
pub struct EigOptions {
    pub method: EigMethod,
    pub lanczos: LanczosOptions,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self { method: EigMethod::Auto, lanczos: LanczosOptions::default() }
    }
}

/// The m smallest eigenpairs of K φ = Λ M φ.
pub fn solve_eigs(pencil: &OperatorPencil, m: usize) -> Result<Spectrum> {
    solve_eigs_with(pencil, m, &EigOptions::default())
}

pub fn solve_eigs_with(pencil: &OperatorPencil, m: usize, opts: &EigOptions) -> Result<Spectrum> {
    let n = pencil.n();
    if m < 1 || m >= n {
        return Err(invalid(format!(
            "solve_eigs: m = {m} must satisfy 1 <= m < node count ({n})"
        )));
    }
    let use_dense = match opts.method {
        EigMethod::Dense => true,
        EigMethod::Lanczos => false,
        EigMethod::Auto => n <= DENSE_CUTOFF,
    };
    let (eigenvalues, eigenvectors, residuals) = if use_dense {
        dense_eigs(pencil.k(), pencil.m(), m)?
    } else {
        smallest_generalized(pencil.k(), pencil.m(), m, &opts.lanczos)?
    };
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        residuals,
        mesh_h: pencil.mesh().h(),
    })
}

fn dense_eigs(
    k: &SymBand,
    m_mat: &SymBand,
    m: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>, Vec<f64>)> {
    let (vals, mut vecs) = generalized_sym_eigs(&k.to_dense(), &m_mat.to_dense(), m)?;
    let mut residuals = Vec::with_capacity(m);
    for (lam, x) in vals.iter().zip(vecs.iter_mut()) {
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
        let kx = k.matvec(x);
        let mx = m_mat.matvec(x);
        let res = kx
            .iter()
            .zip(mx.iter())
            .map(|(a, b)| (a - lam * b).powi(2))
            .sum::<f64>()
            .sqrt()
            / lam.abs().max(1.0);
        residuals.push(res);
    }
    Ok((vals, vecs, residuals))
}

/// Exact 1D dispersion oracle: eigenvalues of −φ'' = Λφ on (0, L) with
/// b∂ₙφ = Λφ at both endpoints. Inserting φ = A·cos(kx) + B·sin(kx) gives
///
///   (b² − k²)·sin(kL) + 2bk·cos(kL) = 0,   Λ = k²,
///
/// solved by sign-scan plus bisection. Λ = 0 (constant φ) is prepended, so
/// the result has k_max + 1 entries and indexes like the computed spectrum.
pub fn eig_oracle_1d(length: f64, b: f64, k_max: usize) -> Result<Vec<f64>> {
    if !(length > 0.0 && b > 0.0) {
        return Err(invalid("eig_oracle_1d requires L > 0 and b > 0"));
    }
    let f = |k: f64| (b * b - k * k) * (k * length).sin() + 2.0 * b * k * (k * length).cos();
    let mut roots = vec![0.0];
    let k_end = (k_max as f64 + 3.0) * std::f64::consts::PI / length;
    let steps = 400 * (k_max + 3);
    let dk = k_end / steps as f64;
    let mut k_prev = 1e-12;
    let mut f_prev = f(k_prev);
    for s in 1..=steps {
        let k = s as f64 * dk;
        let fk = f(k);
        if f_prev * fk < 0.0 {
            let (mut a, mut c) = (k_prev, k);
            let mut fa = f_prev;
            for _ in 0..200 {
                let mid = 0.5 * (a + c);
                if (c - a) <= 1e-15 * mid.max(1.0) {
                    break;
                }
                let fm = f(mid);
                if fa * fm <= 0.0 {
                    c = mid;
                } else {
                    a = mid;
                    fa = fm;
                }
            }
            let root = 0.5 * (a + c);
            roots.push(root * root);
            if roots.len() > k_max {
                return Ok(roots);
            }
        }
        k_prev = k;
        f_prev = fk;
    }
    Err(numeric(format!(
        "eig_oracle_1d: found only {} of {} roots up to k = {k_end}",
        roots.len() - 1,
        k_max
    )))
}

/// Result of regressing the spectrum against the Weyl-law index power.
#[derive(Debug, Clone, Serialize)]
pub struct WeylFit {
    /// Index exponent: 1/(n−1) for n ≥ 2, 2 for n = 1.
    pub exponent_used: f64,
    /// Least-squares slope through the origin — the operational Weyl constant.
    pub fitted_slope: f64,
    /// Inclusive index window the fit ran over.
    pub fit_window: (usize, usize),
    /// Max relative deviation inside the window.
    pub residual: f64,
    /// Indices are shifted by this before the power is applied (1 for n = 1:
    /// the constant mode occupies index 0 and the oscillatory branch carries
    /// the j² law; 0 otherwise).
    pub index_offset: usize,
}

impl WeylFit {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("WeylFit serializes")
    }
}

/// Default fit window: drop the first 10% of modes (preasymptotic) and the
/// top 40% (mesh-polluted).
pub fn default_fit_window(m: usize) -> (usize, usize) {
    let lo = ((m as f64) * 0.1).ceil() as usize;
    let hi = ((m as f64) * 0.6).floor() as usize;
    (lo.max(1), hi.max(lo.max(1)).min(m.saturating_sub(1)))
}

/// Least-squares fit of Λ_j against j^{1/(n−1)} (n ≥ 2) or the branch index
/// squared (n = 1) over `window` (inclusive, 0-based sorted indices).
pub fn weyl_fit(spectrum: &Spectrum, n_dim: usize, window: (usize, usize)) -> Result<WeylFit> {
    let (lo, hi) = window;
    if hi >= spectrum.count() || lo > hi {
        return Err(invalid(format!(
            "weyl_fit: window [{lo},{hi}] outside the computed spectrum (m = {})",
            spectrum.count()
        )));
    }
    if hi - lo + 1 < 8 {
        return Err(invalid(format!("weyl_fit: window [{lo},{hi}] shorter than 8 indices")));
    }
    let (exponent, offset) = match n_dim {
        1 => (2.0, 1usize),
        n if n >= 2 => (1.0 / (n as f64 - 1.0), 0usize),
        _ => return Err(invalid("weyl_fit: dimension must be >= 1")),
    };
    let mut num = 0.0;
    let mut den = 0.0;
    for j in lo..=hi {
        if j < offset {
            continue;
        }
        let t = ((j - offset) as f64).powf(exponent);
        num += spectrum.eigenvalues[j] * t;
        den += t * t;
    }
    if den <= 0.0 {
        return Err(invalid("weyl_fit: degenerate abscissa in window"));
    }
    let slope = num / den;
    let mut residual = 0.0f64;
    for j in lo..=hi {
        if j < offset {
            continue;
        }
        let t = ((j - offset) as f64).powf(exponent);
        let pred = slope * t;
        if pred != 0.0 {
            residual = residual.max((spectrum.eigenvalues[j] - pred).abs() / pred.abs());
        }
    }
    Ok(WeylFit {
        exponent_used: exponent,
        fitted_slope: slope,
        fit_window: window,
        residual,
        index_offset: offset,
    })
}

/// Lieb–Thirring diagnostics: the largest c₁ with
/// S(m) = Σ_{j=1}^m Λ_j ≥ c₁·C_W·(m^{1/(n−1)+1} − m) across the tested m.
#[derive(Debug, Clone, Serialize)]
pub struct LiebThirringReport {
    pub c1: f64,
    /// (m, S(m) / (C_W·(m^{1/(n−1)+1} − m))) per tested m ≥ 2.
    pub margins: Vec<(usize, f64)>,
    pub weyl_constant: f64,
    pub n_dim: usize,
}

impl LiebThirringReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("LiebThirringReport serializes")
    }
}

pub fn lieb_thirring_check(
    spectrum: &Spectrum,
    n_dim: usize,
    weyl_constant: f64,
    m_list: &[usize],
) -> Result<LiebThirringReport> {
    if n_dim < 2 {
        return Err(invalid("lieb_thirring_check requires n >= 2"));
    }
    if !(weyl_constant > 0.0) {
        return Err(invalid("lieb_thirring_check requires a positive Weyl constant"));
    }
    let expo = 1.0 / (n_dim as f64 - 1.0) + 1.0;
    let mut margins = Vec::new();
    let mut c1 = f64::INFINITY;
    for &m in m_list {
        if m >= spectrum.count() {
            return Err(invalid(format!(
                "lieb_thirring_check: m = {m} exceeds computed spectrum ({})",
                spectrum.count()
            )));
        }
        if m < 2 {
            continue; // the bound is 0 ≤ Λ₁ for m = 1
        }
        let s: f64 = spectrum.eigenvalues[1..=m].iter().sum();
        let rhs = weyl_constant * ((m as f64).powf(expo) - m as f64);
        let ratio = s / rhs;
        margins.push((m, ratio));
        c1 = c1.min(ratio);
    }
    if margins.is_empty() {
        return Err(invalid("lieb_thirring_check: no m >= 2 in m_list"));
    }
    Ok(LiebThirringReport { c1, margins, weyl_constant, n_dim })
}

/// Gradient sum Σ‖∇ω_j‖² of an arbitrary family (rows of `family`).
pub fn gradient_sum(pencil: &OperatorPencil, family: &[Vec<f64>]) -> f64 {
    family.iter().map(|v| pencil.k0().quad_form(v, v)).sum()
}

/// Min-max spot check: over random j-dimensional subspaces the max Rayleigh
/// quotient must dominate Λ_{j−1}.
#[derive(Debug, Clone, Serialize)]
pub struct MinMaxReport {
    pub trials: usize,
    pub max_dim: usize,
    pub violations: usize,
    /// min over trials of (subspace max quotient − Λ_{j−1}), per j.
    pub worst_margin: Vec<f64>,
}

pub fn minmax_check(
    pencil: &OperatorPencil,
    spectrum: &Spectrum,
    trials: usize,
    seed: u64,
) -> Result<MinMaxReport> {
    if spectrum.count() < 2 {
        return Err(invalid("minmax_check needs at least two computed modes"));
    }
    let n = pencil.n();
    let max_dim = 5.min(spectrum.count());
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut worst = vec![f64::INFINITY; max_dim];
    let tol = 1e-9 * spectrum.eigenvalues.last().unwrap().abs().max(1.0);
    for jdim in 1..=max_dim {
        for _ in 0..trials {
            let mut basis: Vec<Vec<f64>> = (0..jdim)
                .map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect())
                .collect();
            m_orthonormalize(pencil.m(), &mut basis)?;
            let mut proj = DMatrix::zeros(jdim, jdim);
            for a in 0..jdim {
                let ka = pencil.k().matvec(&basis[a]);
                for c in a..jdim {
                    let v: f64 = ka.iter().zip(basis[c].iter()).map(|(x, y)| x * y).sum();
                    proj[(a, c)] = v;
                    proj[(c, a)] = v;
                }
            }
            let max_q = sym_max_eigenvalue(proj);
            let lam = spectrum.eigenvalues[jdim - 1];
            let margin = max_q - lam;
            if margin < -tol {
                violations += 1;
            }
            if margin < worst[jdim - 1] {
                worst[jdim - 1] = margin;
            }
        }
    }
    Ok(MinMaxReport { trials, max_dim, violations, worst_margin: worst })
}
