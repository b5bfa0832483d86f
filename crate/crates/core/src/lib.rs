//! Distributed-memory tensor-train kernels.

pub mod bench;
pub mod comm;
pub mod cost;
pub mod error;
pub mod linalg;
pub mod ops;
pub mod parallel;
pub mod trace;
pub mod tsqr;
pub mod tt;

pub use error::{Error, Result};
