//! Tensor-train arithmetic, contractions and operator application.

pub mod arith;
pub mod inner;
pub mod operator;

pub use arith::{add, add_dist, hadamard, hadamard_dist, scale, scale_dist};
pub use inner::{inner_product, inner_product_dist, norm, norm_dist, NormMethod, NormReport};
pub use operator::{apply_operator_dist, KroneckerOperator};
