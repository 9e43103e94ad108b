//! Symmetric banded matrices and factorizations.
//!
//! The structured meshes produced by this crate give pencils whose matrices
//! are symmetric with a fixed, small bandwidth (1 for intervals, nx+2 for
//! rectangles), so banded storage plus an O(n·bw²) Cholesky covers every
//! linear solve in the workspace: implicit time steps, shift-invert
//! eigensolves and inertia counts.

use nalgebra::DMatrix;

use crate::error::{invalid, numeric, Result};

/// Symmetric matrix in lower-band storage.
///
/// Entry (i, j) with i ≥ j and i − j ≤ bw lives at `data[(i − j) * n + j]`;
/// everything below the band is structurally zero.
#[derive(Debug, Clone)]
pub struct SymBand {
    n: usize,
    bw: usize,
    data: Vec<f64>,
    /// Which diagonals ever received an entry; FEM matrices populate only a
    /// handful of the band, and matvec/quad_form skip the rest.
    occupied: Vec<bool>,
}

impl SymBand {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; (bw + 1) * n],
            occupied: vec![false; bw + 1],
        }
    }

    /// Diagonal matrix (bandwidth 0).
    pub fn from_diagonal(diag: Vec<f64>) -> Self {
        let n = diag.len();
        Self { n, bw: 0, data: diag, occupied: vec![true] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        if d > self.bw {
            0.0
        } else {
            self.data[d * self.n + lo]
        }
    }

    /// Adds `v` to the (i, j) entry (and by symmetry to (j, i)).
    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        let d = hi - lo;
        assert!(d <= self.bw, "entry ({i},{j}) outside bandwidth {}", self.bw);
        self.data[d * self.n + lo] += v;
        self.occupied[d] = true;
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.data[..self.n]
    }

    pub fn add_diagonal(&mut self, diag: &[f64]) {
        assert_eq!(diag.len(), self.n);
        for (a, d) in self.data[..self.n].iter_mut().zip(diag) {
            *a += d;
        }
        self.occupied[0] = true;
    }

    pub fn scale(&mut self, c: f64) {
        for v in &mut self.data {
            *v *= c;
        }
    }

    /// `self + c * other`, widening the band as needed.
    pub fn add_scaled(&self, other: &SymBand, c: f64) -> SymBand {
        assert_eq!(self.n, other.n);
        let bw = self.bw.max(other.bw);
        let mut out = SymBand::zeros(self.n, bw);
        for d in 0..=bw {
            let mut any = false;
            let dst = &mut out.data[d * self.n..(d + 1) * self.n];
            if d <= self.bw && self.occupied[d] {
                any = true;
                let src = &self.data[d * self.n..(d + 1) * self.n];
                for (o, s) in dst.iter_mut().zip(src) {
                    *o += s;
                }
            }
            if d <= other.bw && other.occupied[d] {
                any = true;
                let src = &other.data[d * self.n..(d + 1) * self.n];
                for (o, s) in dst.iter_mut().zip(src) {
                    *o += c * s;
                }
            }
            out.occupied[d] = any;
        }
        out
    }

    /// y = A·x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        let diag = &self.data[..self.n];
        for i in 0..self.n {
            y[i] = diag[i] * x[i];
        }
        for d in 1..=self.bw {
            if !self.occupied[d] {
                continue;
            }
            let band = &self.data[d * self.n..(d + 1) * self.n];
            for j in 0..self.n - d {
                let v = band[j];
                y[j + d] += v * x[j];
                y[j] += v * x[j + d];
            }
        }
    }

    /// xᵀ A y.
    pub fn quad_form(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        let diag = &self.data[..self.n];
        let mut acc = 0.0;
        for i in 0..self.n {
            acc += diag[i] * x[i] * y[i];
        }
        for d in 1..=self.bw {
            if !self.occupied[d] {
                continue;
            }
            let band = &self.data[d * self.n..(d + 1) * self.n];
            for j in 0..self.n - d {
                acc += band[j] * (x[j + d] * y[j] + x[j] * y[j + d]);
            }
        }
        acc
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for d in 0..=self.bw {
            for j in 0..self.n - d {
                let v = self.data[d * self.n + j];
                a[(j + d, j)] = v;
                a[(j, j + d)] = v;
            }
        }
        a
    }

    /// Coordinate-format dump (`row col value` per line, both triangles).
    pub fn to_coo(&self) -> String {
        let mut out = String::new();
        for j in 0..self.n {
            for d in 0..=self.bw.min(self.n - 1 - j) {
                let v = self.data[d * self.n + j];
                if v != 0.0 {
                    out.push_str(&format!("{} {} {}\n", j + d, j, v));
                    if d > 0 {
                        out.push_str(&format!("{} {} {}\n", j, j + d, v));
                    }
                }
            }
        }
        out
    }

    /// Banded Cholesky A = L·Lᵀ. Fails on a non-positive pivot.
    pub fn cholesky(&self) -> Result<BandCholesky> {
        let n = self.n;
        let bw = self.bw;
        let mut l = self.data.clone();
        for j in 0..n {
            let kmin = j.saturating_sub(bw);
            let mut s = l[j]; // (j, j)
            for k in kmin..j {
                let v = l[(j - k) * n + k];
                s -= v * v;
            }
            if s <= 0.0 || !s.is_finite() {
                return Err(numeric(format!(
                    "banded Cholesky broke down at column {j} (pivot {s:.3e})"
                )));
            }
            let d = s.sqrt();
            l[j] = d;
            let imax = (j + bw).min(n - 1);
            for i in j + 1..=imax {
                let kmin_i = i.saturating_sub(bw).max(kmin);
                let mut s = l[(i - j) * n + j];
                for k in kmin_i..j {
                    s -= l[(i - k) * n + k] * l[(j - k) * n + k];
                }
                l[(i - j) * n + j] = s / d;
            }
        }
        Ok(BandCholesky { n, bw, l })
    }

    /// Signature (n₊, n₋, n₀) of the matrix via unpivoted banded LDLᵀ.
    ///
    /// With an SPD mass matrix this equals the sign count of the generalized
    /// pencil eigenvalues (Sylvester). Near-zero pivots abort: the caller
    /// should perturb the matrix rather than trust the count.
    pub fn ldlt_inertia(&self) -> Result<(usize, usize, usize)> {
        let n = self.n;
        let bw = self.bw;
        let mut l = self.data.clone();
        let mut d = vec![0.0; n];
        let scale = self.data[..n]
            .iter()
            .fold(0.0f64, |a, &v| a.max(v.abs()))
            .max(1e-300);
        let tiny = scale * 1e-13;
        let (mut pos, mut neg, mut zer) = (0, 0, 0);
        for j in 0..n {
            let kmin = j.saturating_sub(bw);
            let mut s = l[j];
            for k in kmin..j {
                let v = l[(j - k) * n + k];
                s -= v * v * d[k];
            }
            d[j] = s;
            if s.abs() <= tiny {
                zer += 1;
                if j + 1 < n {
                    return Err(numeric(format!(
                        "LDLT inertia hit a near-zero pivot at column {j}; \
                         perturb the shift and retry"
                    )));
                }
                continue;
            }
            if s > 0.0 {
                pos += 1;
            } else {
                neg += 1;
            }
            let imax = (j + bw).min(n - 1);
            for i in j + 1..=imax {
                let kmin_i = i.saturating_sub(bw).max(kmin);
                let mut v = l[(i - j) * n + j];
                for k in kmin_i..j {
                    v -= l[(i - k) * n + k] * l[(j - k) * n + k] * d[k];
                }
                l[(i - j) * n + j] = v / s;
            }
        }
        Ok((pos, neg, zer))
    }
}

/// Lower-triangular banded Cholesky factor.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        let (n, bw, l) = (self.n, self.bw, &self.l);
        // L y = b
        for j in 0..n {
            let y = x[j] / l[j];
            x[j] = y;
            let imax = (j + bw).min(n - 1);
            for i in j + 1..=imax {
                x[i] -= l[(i - j) * n + j] * y;
            }
        }
        // Lᵀ x = y
        for j in (0..n).rev() {
            let imax = (j + bw).min(n - 1);
            let mut s = x[j];
            for i in j + 1..=imax {
                s -= l[(i - j) * n + j] * x[i];
            }
            x[j] = s / l[j];
        }
    }

    /// Solves several right-hand sides in one pass over the factor, which
    /// for wide bands is memory-bound work shared across the columns.
    pub fn solve_block_in_place(&self, xs: &mut [Vec<f64>]) {
        let (n, bw, l) = (self.n, self.bw, &self.l);
        for x in xs.iter() {
            assert_eq!(x.len(), n);
        }
        for j in 0..n {
            let d = l[j];
            let imax = (j + bw).min(n - 1);
            for x in xs.iter_mut() {
                let y = x[j] / d;
                x[j] = y;
                for i in j + 1..=imax {
                    x[i] -= l[(i - j) * n + j] * y;
                }
            }
        }
        for j in (0..n).rev() {
            let d = l[j];
            let imax = (j + bw).min(n - 1);
            for x in xs.iter_mut() {
                let mut s = x[j];
                for i in j + 1..=imax {
                    s -= l[(i - j) * n + j] * x[i];
                }
                x[j] = s / d;
            }
        }
    }
}

/// M-orthonormalizes `vecs` in place (modified Gram-Schmidt in the M-inner
/// product, two passes) and returns the diagonal norms r_jj — the Benettin
/// log increments. Fails if a vector collapses to the span of its
/// predecessors.
pub fn m_orthonormalize(m: &SymBand, vecs: &mut [Vec<f64>]) -> Result<Vec<f64>> {
    let n = m.n();
    let count = vecs.len();
    let mut diag = vec![0.0; count];
    // cache M·q for finished columns
    let mut mq: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut z = vec![0.0; n];
    for j in 0..count {
        let (head, tail) = vecs.split_at_mut(j);
        let vj = &mut tail[0];
        for _pass in 0..2 {
            for (q, mqi) in head.iter().zip(&mq) {
                let h: f64 = mqi.iter().zip(vj.iter()).map(|(a, b)| a * b).sum();
                for (v, qv) in vj.iter_mut().zip(q) {
                    *v -= h * qv;
                }
            }
        }
        m.matvec_into(vj, &mut z);
        let nrm2: f64 = z.iter().zip(vj.iter()).map(|(a, b)| a * b).sum();
        if !(nrm2 > 0.0) || !nrm2.is_finite() {
            return Err(numeric(format!(
                "M-orthonormalization: vector {j} is degenerate (norm² = {nrm2:.3e})"
            )));
        }
        let r = nrm2.sqrt();
        diag[j] = r;
        for v in vj.iter_mut() {
            *v /= r;
        }
        mq.push(z.iter().map(|v| v / r).collect());
    }
    Ok(diag)
}

/// xᵀ M y without forming M·x (single matvec).
pub fn m_inner(m: &SymBand, x: &[f64], y: &[f64]) -> f64 {
    m.quad_form(x, y)
}

pub(crate) fn check_len(len: usize, expect: usize, what: &str) -> Result<()> {
    if len != expect {
        return Err(invalid(format!("{what}: length {len}, expected {expect}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_band(n: usize) -> SymBand {
        let mut a = SymBand::zeros(n, 1);
        for i in 0..n {
            a.add_at(i, i, 2.0);
            if i + 1 < n {
                a.add_at(i + 1, i, -1.0);
            }
        }
        a
    }

    #[test]
    fn matvec_matches_dense() {
        let a = laplacian_band(7);
        let d = a.to_dense();
        let x: Vec<f64> = (0..7).map(|i| (i as f64).sin() + 1.0).collect();
        let y = a.matvec(&x);
        let yd = &d * nalgebra::DVector::from_column_slice(&x);
        for i in 0..7 {
            assert!((y[i] - yd[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn cholesky_solves() {
        let mut a = laplacian_band(20);
        for i in 0..20 {
            a.add_at(i, i, 0.5);
        }
        let chol = a.cholesky().unwrap();
        let b: Vec<f64> = (0..20).map(|i| (i as f64 * 0.3).cos()).collect();
        let x = chol.solve(&b);
        let r = a.matvec(&x);
        for i in 0..20 {
            assert!((r[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = laplacian_band(5);
        a.add_at(2, 2, -10.0);
        assert!(a.cholesky().is_err());
    }

    #[test]
    fn inertia_counts_signs() {
        // diag(3, -1, 2, -4, 5) plus a weak coupling keeps the signs
        let mut a = SymBand::zeros(5, 1);
        for (i, v) in [3.0, -1.0, 2.0, -4.0, 5.0].iter().enumerate() {
            a.add_at(i, i, *v);
        }
        for i in 0..4 {
            a.add_at(i + 1, i, 0.01);
        }
        let (pos, neg, zero) = a.ldlt_inertia().unwrap();
        assert_eq!((pos, neg, zero), (3, 2, 0));
    }

    #[test]
    fn orthonormalize_gram_identity() {
        let mut m = laplacian_band(12);
        for i in 0..12 {
            m.add_at(i, i, 1.0); // SPD
        }
        let mut vecs: Vec<Vec<f64>> = (0..4)
            .map(|k| (0..12).map(|i| ((i * (k + 1)) as f64 * 0.37).sin() + 0.1).collect())
            .collect();
        let diag = m_orthonormalize(&m, &mut vecs).unwrap();
        assert!(diag.iter().all(|&r| r > 0.0));
        for i in 0..4 {
            for j in 0..4 {
                let g = m_inner(&m, &vecs[i], &vecs[j]);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g - want).abs() < 1e-12, "gram[{i}][{j}] = {g}");
            }
        }
    }
}
