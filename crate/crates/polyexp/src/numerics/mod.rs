//! Shared numerical kernels: double-double arithmetic, polynomial root
//! isolation, adaptive quadrature, refined linear solves, and Hankel moment
//! matrices.

pub mod dd;
pub mod hankel;
pub mod integrate;
pub mod linalg;
pub mod poly;

pub use hankel::{hankel_from_moments, HankelMoments};
pub use integrate::{adaptive_simpson, QuadratureSettings, WindowPolicy};
pub use linalg::SolveReport;
