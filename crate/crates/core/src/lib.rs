//! Numerical models of quantum decay transitions and the timescales that
//! govern them: exact spectral propagation of discrete decay Hamiltonians,
//! pulsed and continuous measurement backends, orthogonality-bound
//! verification, and engineered fast-transition states.

pub mod arrowhead;
pub mod dynamics;
pub mod error;
pub mod expm;
pub mod fleming;
pub mod measurement;
pub mod models;
pub mod special;
pub mod timescales;

pub use error::{Error, Result};
pub use num_complex::Complex64;
