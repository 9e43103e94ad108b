//! Assembly of the discrete operator pencil (K, M).
//!
//! Testing −Δφ + qφ = Λφ against trace-compatible P1 hat functions moves the
//! eigenvalue of the boundary condition b∂ₙφ = Λφ onto a boundary mass, so
//! the spectral problem becomes the symmetric generalized pencil
//! K φ = Λ (M_Ω + M_Γ/b) φ, the exact discrete counterpart of the Rayleigh
//! quotient (‖∇φ‖² + ⟨qφ,φ⟩) / ‖φ‖²_{X²}. The boundary mass is lumped
//! (diagonal in the surface weights), so the X² inner product of nodal
//! vectors is UᵀMV with M = M_bulk + diag(surface_weights)/b.

use std::sync::{Arc, OnceLock};

use crate::error::{invalid, Result};
use crate::linalg::band::{check_len, BandCholesky, SymBand};
use crate::mesh::{Elements, Mesh};

/// Forcing term g of the reaction-diffusion equation. Enters only the
/// dynamics right-hand side, never the pencil.
#[derive(Debug, Clone, PartialEq)]
pub enum Forcing {
    Constant(f64),
    Nodal(Vec<f64>),
}

impl Default for Forcing {
    fn default() -> Self {
        Forcing::Constant(0.0)
    }
}

impl Forcing {
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Forcing::Constant(c) => Some(*c),
            Forcing::Nodal(_) => None,
        }
    }

    pub(crate) fn value_at(&self, node: usize) -> f64 {
        match self {
            Forcing::Constant(c) => *c,
            Forcing::Nodal(v) => v[node],
        }
    }
}

/// Physical parameters (ν, λ, b, g) of the problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemParams {
    /// Diffusion ν > 0.
    pub nu: f64,
    /// Linear gain λ.
    pub lambda: f64,
    /// Boundary coefficient b > 0 scaling the surface measure dS/b.
    pub b: f64,
    /// Forcing g, constant by default.
    pub g: Forcing,
}

impl ProblemParams {
    pub fn new(nu: f64, lambda: f64, b: f64) -> Self {
        Self { nu, lambda, b, g: Forcing::default() }
    }

    pub fn with_g(mut self, g: f64) -> Self {
        self.g = Forcing::Constant(g);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0) || !self.nu.is_finite() {
            return Err(invalid(format!("params.nu must be positive, got {}", self.nu)));
        }
        if !(self.b > 0.0) || !self.b.is_finite() {
            return Err(invalid(format!("params.b must be positive, got {}", self.b)));
        }
        if !self.lambda.is_finite() {
            return Err(invalid("params.lambda must be finite"));
        }
        if let Forcing::Nodal(v) = &self.g {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(invalid("params.g has non-finite entries"));
            }
        }
        Ok(())
    }
}

/// Bulk mass treatment: consistent P1 mass by default, fully lumped on
/// request. The boundary mass is always lumped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MassScheme {
    #[default]
    Consistent,
    Lumped,
}

/// Discrete state U = (u on Ω, ψ on Γ) with the trace ψ = u|_Γ enforced by
/// shared nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    values: Vec<f64>,
}

impl StateVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn constant(mesh: &Mesh, c: f64) -> Self {
        Self { values: vec![c; mesh.node_count()] }
    }

    /// Nodal interpolation of a function of (x, y).
    pub fn from_fn(mesh: &Mesh, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            values: mesh.nodes().iter().map(|p| f(p[0], p[1])).collect(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

impl From<Vec<f64>> for StateVector {
    fn from(values: Vec<f64>) -> Self {
        Self { values }
    }
}

/// Which matrix of the pencil to export.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PencilMatrix {
    Stiffness,
    StiffnessNoPotential,
    BulkMass,
    Mass,
}

/// The assembled symmetric pencil.
pub struct OperatorPencil {
    mesh: Arc<Mesh>,
    b: f64,
    scheme: MassScheme,
    /// stiffness including the (lumped) potential term
    k: SymBand,
    /// potential-free stiffness
    k0: SymBand,
    m_bulk: SymBand,
    /// diagonal of the boundary mass, already scaled by 1/b
    m_surf: Vec<f64>,
    m: SymBand,
    q: Option<Vec<f64>>,
    m_chol: OnceLock<BandCholesky>,
}

/// Assembles the pencil with the default consistent bulk mass.
pub fn assemble_pencil(
    mesh: &Arc<Mesh>,
    params: &ProblemParams,
    q: Option<&[f64]>,
) -> Result<OperatorPencil> {
    assemble_pencil_with(mesh, params, q, MassScheme::Consistent)
}

pub fn assemble_pencil_with(
    mesh: &Arc<Mesh>,
    params: &ProblemParams,
    q: Option<&[f64]>,
    scheme: MassScheme,
) -> Result<OperatorPencil> {
    params.validate()?;
    let n = mesh.node_count();
    if let Some(q) = q {
        check_len(q.len(), n, "potential q")?;
        if q.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(invalid("potential q must be nonnegative and finite"));
        }
    }
    let bw = mesh.bandwidth();
    let mut k0 = SymBand::zeros(n, bw);
    let mut m_bulk = SymBand::zeros(n, bw);
    match mesh.elements() {
        Elements::Segments(segs) => {
            for seg in segs {
                let [a, c] = *seg;
                let h = (mesh.nodes()[c][0] - mesh.nodes()[a][0]).abs();
                let w = 1.0 / h;
                k0.add_at(a, a, w);
                k0.add_at(c, c, w);
                k0.add_at(a, c, -w);
                match scheme {
                    MassScheme::Consistent => {
                        m_bulk.add_at(a, a, h / 3.0);
                        m_bulk.add_at(c, c, h / 3.0);
                        m_bulk.add_at(a, c, h / 6.0);
                    }
                    MassScheme::Lumped => {
                        m_bulk.add_at(a, a, h / 2.0);
                        m_bulk.add_at(c, c, h / 2.0);
                    }
                }
            }
        }
        Elements::Triangles(tris) => {
            for t in tris {
                let p: Vec<[f64; 2]> = t.iter().map(|&v| mesh.nodes()[v]).collect();
                let bv = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
                let cv = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
                let area = 0.5 * (bv[0] * cv[1] - bv[1] * cv[0]).abs();
                for a in 0..3 {
                    for c in a..3 {
                        let ke = (bv[a] * bv[c] + cv[a] * cv[c]) / (4.0 * area);
                        if ke != 0.0 {
                            k0.add_at(t[a], t[c], ke);
                        }
                        match scheme {
                            MassScheme::Consistent => {
                                let me = area / 12.0 * if a == c { 2.0 } else { 1.0 };
                                m_bulk.add_at(t[a], t[c], me);
                            }
                            MassScheme::Lumped => {
                                if a == c {
                                    m_bulk.add_at(t[a], t[a], area / 3.0);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let m_surf: Vec<f64> = mesh.surface_weights().iter().map(|w| w / params.b).collect();
    let mut m = m_bulk.clone();
    m.add_diagonal(&m_surf);
    let k = match q {
        Some(q) => {
            // lumped potential: diag(q_i · bulk weight_i)
            let diag: Vec<f64> = q
                .iter()
                .zip(mesh.bulk_weights())
                .map(|(qi, wi)| qi * wi)
                .collect();
            let mut k = k0.clone();
            k.add_diagonal(&diag);
            k
        }
        None => k0.clone(),
    };
    Ok(OperatorPencil {
        mesh: Arc::clone(mesh),
        b: params.b,
        scheme,
        k,
        k0,
        m_bulk,
        m_surf,
        m,
        q: q.map(|v| v.to_vec()),
        m_chol: OnceLock::new(),
    })
}

impl OperatorPencil {
    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn n(&self) -> usize {
        self.mesh.node_count()
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn mass_scheme(&self) -> MassScheme {
        self.scheme
    }

    pub fn q(&self) -> Option<&[f64]> {
        self.q.as_deref()
    }

    /// Stiffness including the potential term.
    pub fn k(&self) -> &SymBand {
        &self.k
    }

    /// Potential-free stiffness K₀.
    pub fn k0(&self) -> &SymBand {
        &self.k0
    }

    pub fn m_bulk(&self) -> &SymBand {
        &self.m_bulk
    }

    /// Diagonal of the boundary mass (surface weights / b).
    pub fn m_surf(&self) -> &[f64] {
        &self.m_surf
    }

    pub fn m(&self) -> &SymBand {
        &self.m
    }

    /// X² inner product ⟨u,v⟩ + ⟨ψ,φ⟩_Γ/b = UᵀMV.
    pub fn x2_inner(&self, u: &StateVector, v: &StateVector) -> Result<f64> {
        check_len(u.len(), self.n(), "x2_inner lhs")?;
        check_len(v.len(), self.n(), "x2_inner rhs")?;
        Ok(self.m.quad_form(u.values(), v.values()))
    }

    pub fn x2_norm_sq(&self, u: &StateVector) -> Result<f64> {
        self.x2_inner(u, u)
    }

    /// (UᵀKU)/(UᵀMU); the discrete Wentzell Rayleigh quotient.
    pub fn rayleigh_quotient(&self, u: &StateVector) -> Result<f64> {
        check_len(u.len(), self.n(), "rayleigh_quotient")?;
        let den = self.m.quad_form(u.values(), u.values());
        if den <= 0.0 {
            return Err(invalid("rayleigh_quotient of the zero vector"));
        }
        Ok(self.k.quad_form(u.values(), u.values()) / den)
    }

    /// UᵀK₀U = ‖∇u‖²_{L²(Ω)} of the P1 interpolant.
    pub fn h1_seminorm_sq(&self, u: &StateVector) -> Result<f64> {
        check_len(u.len(), self.n(), "h1_seminorm_sq")?;
        Ok(self.k0.quad_form(u.values(), u.values()))
    }

    /// Bulk L² product xᵀ M_Ω y.
    pub fn bulk_inner(&self, x: &[f64], y: &[f64]) -> f64 {
        self.m_bulk.quad_form(x, y)
    }

    /// ⟨c·x, y⟩_Ω with a nodal coefficient c: (c∘x)ᵀ M_Ω y.
    pub fn bulk_inner_weighted(&self, coeff: &[f64], x: &[f64], y: &[f64]) -> f64 {
        let cx: Vec<f64> = coeff.iter().zip(x).map(|(c, v)| c * v).collect();
        self.m_bulk.quad_form(&cx, y)
    }

    /// 1ᵀMU — the conserved total mass of the heat flow.
    pub fn total_mass(&self, u: &StateVector) -> f64 {
        let ones = vec![1.0; self.n()];
        self.m.quad_form(&ones, u.values())
    }

    /// Solves M·W = K·U (the discrete operator application used by the
    /// self-adjointness diagnostics).
    pub fn apply_operator(&self, u: &StateVector) -> Result<StateVector> {
        check_len(u.len(), self.n(), "apply_operator")?;
        let chol = self.m_cholesky()?;
        let mut w = self.k.matvec(u.values());
        chol.solve_in_place(&mut w);
        Ok(StateVector::new(w))
    }

    pub(crate) fn m_cholesky(&self) -> Result<&BandCholesky> {
        if let Some(c) = self.m_chol.get() {
            return Ok(c);
        }
        let c = self.m.cholesky()?;
        let _ = self.m_chol.set(c);
        Ok(self.m_chol.get().expect("just set"))
    }

    /// Coordinate-format export (`row col value`) of a pencil matrix.
    pub fn export_coo(&self, which: PencilMatrix) -> String {
        match which {
            PencilMatrix::Stiffness => self.k.to_coo(),
            PencilMatrix::StiffnessNoPotential => self.k0.to_coo(),
            PencilMatrix::BulkMass => self.m_bulk.to_coo(),
            PencilMatrix::Mass => self.m.to_coo(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_interval_mesh, build_rectangle_mesh};

    fn interval_pencil(l: f64, n: usize, b: f64) -> OperatorPencil {
        let mesh = Arc::new(build_interval_mesh(l, n).unwrap());
        assemble_pencil(&mesh, &ProblemParams::new(1.0, 0.0, b), None).unwrap()
    }

    #[test]
    fn interval_stiffness_annihilates_constants() {
        let p = interval_pencil(1.0, 4, 1.0);
        // standard 1D P1 stiffness: tridiag(-1/h, 2/h, -1/h) with 1/h ends
        assert!((p.k().get(1, 1) - 8.0).abs() < 1e-12);
        assert!((p.k().get(1, 0) + 4.0).abs() < 1e-12);
        assert!((p.k().get(0, 0) - 4.0).abs() < 1e-12);
        let ones = vec![1.0; p.n()];
        let k1 = p.k().matvec(&ones);
        assert!(k1.iter().all(|v| v.abs() < 1e-12), "K·1 = {k1:?}");
    }

    #[test]
    fn boundary_mass_scales_with_b() {
        let p1 = interval_pencil(1.0, 8, 1.0);
        let p2 = interval_pencil(1.0, 8, 2.0);
        for i in 0..p1.n() {
            assert!((p2.m_surf()[i] - p1.m_surf()[i] / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn square_mass_trace_split() {
        // trace(M) = trace(M_bulk) + |Γ|/b under lumped boundary mass
        let mesh = Arc::new(build_rectangle_mesh(1.0, 1.0, 4, 4).unwrap());
        let b = 1.0;
        let p = assemble_pencil(&mesh, &ProblemParams::new(1.0, 0.0, b), None).unwrap();
        let tr_m: f64 = p.m().diagonal().iter().sum();
        let tr_mb: f64 = p.m_bulk().diagonal().iter().sum();
        assert!((tr_m - tr_mb - mesh.domain().surface() / b).abs() < 1e-10);
    }

    #[test]
    fn x2_inner_of_constants() {
        let p = interval_pencil(1.0, 16, 1.0);
        let one = StateVector::constant(p.mesh(), 1.0);
        // |Ω| + |Γ|/b = 1 + 2
        assert!((p.x2_norm_sq(&one).unwrap() - 3.0).abs() < 1e-12);

        let mesh = Arc::new(build_rectangle_mesh(1.0, 1.0, 4, 4).unwrap());
        let p = assemble_pencil(&mesh, &ProblemParams::new(1.0, 0.0, 4.0), None).unwrap();
        let one = StateVector::constant(&mesh, 1.0);
        assert!((p.x2_norm_sq(&one).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rayleigh_of_constants_is_zero_and_rejects_zero_vector() {
        let p = interval_pencil(1.0, 16, 1.0);
        let one = StateVector::constant(p.mesh(), 1.0);
        assert!(p.rayleigh_quotient(&one).unwrap().abs() < 1e-13);
        let zero = StateVector::constant(p.mesh(), 0.0);
        assert!(p.rayleigh_quotient(&zero).is_err());
    }

    #[test]
    fn rayleigh_of_cosine_matches_quadrature_oracle() {
        // ∫(π sin πx)² = π²/2, ∫cos² = 1/2, ψ(0)²+ψ(1)² = 2
        // → R = (π²/2)/(1/2 + 2/b) = π²/5 for b = 1
        let p = interval_pencil(1.0, 512, 1.0);
        let u = StateVector::from_fn(p.mesh(), |x, _| (std::f64::consts::PI * x).cos());
        let r = p.rayleigh_quotient(&u).unwrap();
        let oracle = std::f64::consts::PI.powi(2) / 5.0;
        assert!(
            (r - oracle).abs() / oracle < 5e-4,
            "R = {r}, oracle = {oracle}"
        );
    }

    #[test]
    fn h1_seminorm_identities() {
        let p = interval_pencil(1.0, 32, 1.0);
        let c = StateVector::constant(p.mesh(), 2.5);
        assert!(p.h1_seminorm_sq(&c).unwrap().abs() < 1e-12);
        let u = StateVector::from_fn(p.mesh(), |x, _| x * x - 0.3 * x);
        let one = p.h1_seminorm_sq(&u).unwrap();
        let doubled = StateVector::new(u.values().iter().map(|v| 2.0 * v).collect());
        assert!((p.h1_seminorm_sq(&doubled).unwrap() - 4.0 * one).abs() < 1e-10 * one.abs());
        // q = 0: UᵀKU = R(U) · UᵀMU
        let r = p.rayleigh_quotient(&u).unwrap();
        let m = p.x2_norm_sq(&u).unwrap();
        assert!((one - r * m).abs() < 1e-10 * one.abs());
    }

    #[test]
    fn potential_is_validated_and_enters_k() {
        let mesh = Arc::new(build_interval_mesh(1.0, 8).unwrap());
        let params = ProblemParams::new(1.0, 0.0, 1.0);
        let bad = vec![-1.0; mesh.node_count()];
        assert!(assemble_pencil(&mesh, &params, Some(&bad)).is_err());
        let q = vec![1.0; mesh.node_count()];
        let p = assemble_pencil(&mesh, &params, Some(&q)).unwrap();
        let one = StateVector::constant(&mesh, 1.0);
        // constants no longer in the kernel: R(1) = ⟨q·1,1⟩/‖1‖² = 1/3
        let r = p.rayleigh_quotient(&one).unwrap();
        assert!((r - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn self_adjointness_in_x2() {
        let mesh = Arc::new(build_rectangle_mesh(1.0, 1.0, 6, 6).unwrap());
        let p = assemble_pencil(&mesh, &ProblemParams::new(1.0, 0.0, 0.7), None).unwrap();
        let u = StateVector::from_fn(&mesh, |x, y| (3.0 * x).sin() + y * y);
        let v = StateVector::from_fn(&mesh, |x, y| (2.0 * y).cos() - x);
        let au = p.apply_operator(&u).unwrap();
        let av = p.apply_operator(&v).unwrap();
        let l = p.x2_inner(&au, &v).unwrap();
        let r = p.x2_inner(&u, &av).unwrap();
        assert!((l - r).abs() < 1e-10 * l.abs().max(1.0), "⟨Au,v⟩ = {l}, ⟨u,Av⟩ = {r}");
    }
}
