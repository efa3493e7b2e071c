//! The circle ℝ/2πℤ: points, arc unions, sampled functions, measures, quadrature.

pub mod angle;
pub mod arcs;
pub mod grid;
pub mod measure;
pub mod quadrature;

pub use angle::{distance, reduce, reduce_signed, Angle};
pub use arcs::ArcSet;
pub use grid::{ComplexGridFunction, GridFunction, Sampled};
pub use measure::SignedMeasure;
pub use quadrature::{integrate, integrate_with_breaks, QuadOptions};
