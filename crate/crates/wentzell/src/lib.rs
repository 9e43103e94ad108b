//! Numerical laboratory for scalar reaction-diffusion equations with a
//! dynamic (Wentzell) boundary condition ∂ₜu + νb∂ₙu = 0 on Γ.
//!
//! The crate covers the full pipeline on the coupled bulk/boundary phase
//! space X² = L²(Ω) ⊕ L²(Γ, dS/b):
//!
//! - structured P1 meshes with explicit bulk and surface quadrature
//!   ([`mesh`]);
//! - the symmetric generalized pencil K φ = Λ M φ realizing the Wentzell
//!   Laplacian and the X² inner product ([`pencil`]);
//! - its low spectrum, surface-dominated Weyl asymptotics and Lieb–Thirring
//!   sums ([`spectral`]);
//! - semi-implicit integration of the semilinear dynamics with
//!   dissipativity diagnostics and constant equilibria ([`dynamics`]);
//! - Lyapunov exponents, trace sums and unstable-mode counts for attractor
//!   dimension estimates ([`dimension`]);
//! - the closed-form dimension bounds and Weyl constants ([`bounds`]).

pub mod bounds;
pub mod dimension;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod pencil;
pub mod spectral;

pub use error::{Error, Result};
pub use mesh::{build_interval_mesh, build_rectangle_mesh, Domain, Mesh, Shape};
pub use pencil::{
    assemble_pencil, assemble_pencil_with, Forcing, MassScheme, OperatorPencil, ProblemParams,
    StateVector,
};
pub use spectral::{eig_oracle_1d, solve_eigs, solve_eigs_with, weyl_fit, Spectrum, WeylFit};
