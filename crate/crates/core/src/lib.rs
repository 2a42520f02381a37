//! Casimir-Lifshitz forces between a metal sphere and plate across a fluid,
//! auxiliary hydrodynamic and electrostatic forces, and the analysis chain
//! that turns AFM deflection traces into calibrated force curves.
//!
//! SI units are used in [`dielectric`], [`lifshitz`] and [`forces`];
//! [`pipeline`] and [`synth`] work in nm, V, pN and nm/s.

pub mod constants;
pub mod dielectric;
pub mod error;
pub mod fitting;
pub mod forces;
pub mod io;
pub mod lifshitz;
pub mod pipeline;
pub mod quadrature;
pub mod synth;

pub use error::{Category, Error, Result};
