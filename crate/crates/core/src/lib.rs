// Guards like `!(x > 0.0)` are negated on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curves;
pub mod damping;
pub mod error;
pub mod exec;
pub mod iteration;
pub mod lifespan;
pub mod odi;
pub mod pde;
pub mod quad;
pub mod specialfn;
pub mod verify;

pub use error::{Error, Result};
