//! Mixed operators between L^p-direct integrals over finite atomic measure spaces.
//!
//! An instance consists of two weighted atom sets `T` (with measure μ) and `S`
//! (with measure ν), a weighted relation `F ⊂ S×T` carrying a measure λ, fiber
//! families `{W_t}` over `T` and `{V_s}` over `S` made of finite-dimensional
//! weighted r-norm spaces, and a matrix `P(s,t): W_t → V_s` for each pair of `F`.
//! The mixed operator sends a section `f` over `T` to `(s,t) ↦ P(s,t) f(t)`.
//!
//! | module | contents |
//! |--------|----------|
//! | [`measure`] | atomic measures, relations, Radon–Nikodym and volume derivatives |
//! | [`fibers`] | fiber norms, direct-integral norms, mixed-norm Lebesgue spaces |
//! | [`kernels`] | operator kernels, matrix operator norms, fiber effectiveness |
//! | [`boundedness`] | boundedness criteria, exact decoupled norm, set function Φ, reports |
//! | [`mixedcomp`] | composition operators between mixed-norm spaces |
//!
//! All constructors canonicalize atom order (lexicographic by id), so every
//! reduction runs in a fixed order and results do not depend on input order or
//! on thread scheduling.

pub mod boundedness;
mod error;
mod exponent;
pub mod fibers;
pub mod kernels;
pub mod measure;
pub mod mixedcomp;
pub mod oracle;
pub mod rng;
pub mod testing;

pub use error::{Error, Result};
pub use exponent::Exponent;

/// Re-exported so downstream crates build kernels with the same matrix type.
pub use nalgebra::{DMatrix, DVector};
