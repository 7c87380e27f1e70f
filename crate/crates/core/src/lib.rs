#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod bite;
pub mod costs;
pub mod error;
pub mod ftrt;
pub mod geom;
pub mod plan;
pub mod rng;
pub mod run;
pub mod sample;
pub mod scenario;
pub mod sweep;

pub use error::{Error, Result};
