pub mod band;
pub mod dense;
pub mod lanczos;

pub use band::{m_inner, m_orthonormalize, BandCholesky, SymBand};
