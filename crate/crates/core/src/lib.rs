//! Exterior differential forms over a small symbolic expression language,
//! with closure and commutator analysis of functional relations, characteristic
//! and canonical flows, integrating-factor checks, worked physical scenarios and
//! a (p, k, n) structure classification table.

pub mod characteristics;
pub mod classification;
pub mod dsl;
pub mod expr;
pub mod forms;
pub mod grid;
pub mod pipeline;
pub mod relations;
pub mod report;
pub mod sample;
pub mod scenarios;

pub use expr::{parse, Expr, Point};
pub use forms::{Connection, DifferentialForm};
pub use grid::{Axis, GridSpec};
