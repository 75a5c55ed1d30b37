//! Dense/sparse linear algebra, reverse-mode differentiation, initialization
//! and the Adam optimizer.

mod adam;
pub mod autodiff;
mod dense;
mod init;
pub(crate) mod kernels;
mod sparse;

pub use adam::{AdamConfig, AdamState};
pub use autodiff::{OpKind, Tape, Var};
pub use dense::DenseMatrix;
pub use init::{xavier_init, xavier_init_with};
pub use kernels::LOG_FLOOR;
pub use sparse::CsrMatrix;
