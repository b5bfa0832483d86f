//! Slice-distributed tensor trains: layout, orthonormalization and rounding.

pub mod dist;
pub mod ortho;
pub mod round;
pub mod tsvd;

pub use dist::{block_range, distribute, gather, random_dist, DistTTTensor};
pub use ortho::{left_orthonormalize, orthonormalize, right_orthonormalize, Direction};
pub use round::{round, round_dist, RoundingOptions, RoundingReport, RoundingVariant};
pub use tsvd::{tail_norms, truncated_svd, TruncatedSvd};
