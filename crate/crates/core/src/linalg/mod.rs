//! Sparse storage, banded factorizations and symmetric eigensolvers.

mod banded;
mod eigen;
mod sparse;

pub use banded::{rcm_ordering, BandCholesky, BandLu};
pub use eigen::{dense_generalized, lowest_generalized, EigenPairs};
pub use sparse::Csr;
