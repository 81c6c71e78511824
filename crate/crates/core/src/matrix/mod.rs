//! Host-side matrix storage, generators and Matrix Market input.

mod csr;
mod dense;
pub mod gen;
pub mod market;

pub use csr::CsrMatrix;
pub use dense::DenseMatrix;
pub use gen::gen_poisson;
pub use market::{load_matrix_market, read_matrix_market};
