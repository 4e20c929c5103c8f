pub mod calculus;
pub mod chainhtpy;
pub mod decompose;
pub mod error;
pub mod exactla;
pub mod exactness;
pub mod fixtures;
pub mod lattice;
pub mod persmod;
pub mod suites;
pub mod verdict;

pub use error::{Error, Result};
pub use verdict::Check;
