//! Carbon-risk factor construction, exposure estimation and
//! carbon-aware portfolio optimization.

// NaN-rejecting guards are written as negated comparisons on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Time loops index several aligned series at once.
#![allow(clippy::needless_range_loop)]

pub mod data;
pub mod enhanced_index;
pub mod error;
pub mod factors;
pub mod io;
pub mod kalman;
pub mod linalg;
pub mod minvar;
mod optim;
pub mod qp;
pub mod regression;
pub mod synth;

pub use error::{Error, ErrorKind, Result};
