//! Quantitative Sobolev-type inequalities on cones and star-shaped domains,
//! and a finite-difference laboratory for the torsion problem that measures
//! stability in the Alexandrov soap-bubble and Serrin overdetermined problems.
//!
//! The crate is organised bottom-up:
//!
//! * [`constants`] evaluates every closed-form constant and exponent.
//! * [`cone`] integrates analytic fields over truncated cones and checks the
//!   pointwise, Morrey and interpolation inequalities.
//! * [`oscillation`] checks the oscillation bounds on whole star domains.
//! * [`domain`] describes planar star-shaped domains by a radial function.
//! * [`torsion`] solves `Δu = N` with homogeneous Dirichlet data and derives
//!   the field `h = Q - u`, harmonic since `ΔQ = N`.
//! * [`identities`] evaluates integral identities and inequality chains.
//! * [`stability`] runs perturbation families and fits stability exponents.

pub mod cone;
pub mod constants;
pub mod domain;
pub mod error;
pub mod field;
pub mod identities;
pub mod linalg;
pub mod oscillation;
pub mod quadrature;
pub mod special;
pub mod stability;
pub mod torsion;

pub use error::{Error, Result};
