//! Computable approximate identities on the circle: kernels and their region
//! functionals, λ(r)-maximal operators, finite-depth counterexample
//! constructions, and exact dyadic differentiation-basis machinery.

pub mod circle;
pub mod counterexamples;
pub mod dyadic;
pub mod error;
pub mod kernels;
pub mod operators;
pub mod regions;

pub use circle::{Angle, ArcSet, ComplexGridFunction, GridFunction, SignedMeasure};
pub use error::{Diagnostic, DiagnosticCode, Error, Result};
