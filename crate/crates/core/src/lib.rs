//! Exact q-series engine for wall-crossing terms of 4-manifolds with b₊ = 1
//! and for the Donaldson invariants of the projective plane.

pub mod arith;
pub mod cli;
pub mod donaldson;
pub mod error;
pub mod forms;
pub mod qseries;
pub mod report;
pub mod wallcross;
pub mod walls;

pub use arith::{Cyc8, Rational};
pub use error::{Error, Result};
pub use qseries::{MultiSeries, QSeries};
pub use report::{Check, Report};
