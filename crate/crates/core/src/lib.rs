//! Finite-truncation diagnostics for lacunary f-statistical convergence and
//! Musielak-Orlicz sequence spaces.

pub mod axioms;
pub mod cli;
pub mod density;
pub mod error;
pub mod matrix;
pub mod membership;
pub mod modulus;
pub mod numeric;
pub mod orlicz;
pub mod sequence;
pub mod witnesses;

pub use error::{Error, Result};
