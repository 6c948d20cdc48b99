//! Synthesis of rational observers for rational systems and polynomial
//! observers for polynomial systems.

pub mod algebra;
pub mod inverse;
pub mod lie;
pub mod observer;
pub mod parser;
pub mod pipeline;
pub mod realization;
pub mod simulate;
