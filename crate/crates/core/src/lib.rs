//! Strip decompositions, boundary edge-map dynamics and gluing certificates
//! for end-periodic surface maps built from non-negative integer matrices.

pub mod complex;
pub mod decomposition;
pub mod edgemaps;
pub mod error;
pub mod markov;
pub mod par;
pub mod pipeline;
pub mod render;
pub mod spectral;
pub mod suite;
pub mod warmup;

pub use error::{Error, Result};
pub use spectral::{IntMatrix, IntPolynomial, PerronData};
