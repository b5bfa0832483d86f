//! Sequential tensor-train data structures and the dense oracle.

pub mod core;
pub mod dense;
pub mod io;
pub mod quadprod;
pub mod random;
pub mod tensor;

pub use self::core::TTCore;
pub use dense::DenseTensor;
pub use quadprod::verify_quadprod;
pub use random::random_tt;
pub use tensor::{TTTensor, FULL_GUARD};
