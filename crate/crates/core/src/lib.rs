//! Numerical toolkit for the three-point fractional boundary value problem
//!
//! ```text
//! D^{α,φ} u(t) + f(t, u(t)) = 0,   t ∈ (0, 1),
//! u(0) = u'(0) = 0,   u'(1) = β u(η),
//! ```
//!
//! where `D^{α,φ}` is the φ-Riemann–Liouville derivative of order `2 < α ≤ 3`.
//!
//! The crate is organised bottom-up:
//!
//! - [`special`]: Γ and the catalogue of coordinate maps φ.
//! - [`calculus`]: quadrature grids in the variable `y = φ(s)`, grid functions,
//!   and the φ-fractional integral and derivative.
//! - [`green`]: the determinant μ, the admissible range of β, and the
//!   four-branch Green's function together with its property checks.
//! - [`bmetric`]: the b-metric `d(x, y) = sup (x − y)²` and the contraction /
//!   Geraghty fixed-point certificates.
//! - [`solver`]: the integral operator `A u(t) = ∫ G(t,s) φ'(s) f(s, u(s)) ds`,
//!   certificates for uniqueness and positive existence, and Picard iteration.

pub mod bmetric;
pub mod calculus;
pub mod error;
pub mod green;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
