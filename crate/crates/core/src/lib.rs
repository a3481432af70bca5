//! Fourier-space solution theory for the viscoelastic damped wave equation
//! `u_tt - Δu - Δu_t + g∗Δu = 0` with memory `g(t) = e^{-γt}`, and for its
//! Moore-Gibson-Thompson companion `τv_ttt + v_tt - Δv - Δv_t + g∗Δv = 0`.
//!
//! Every quantity is computed one radial frequency `r = |ξ|` at a time and
//! assembled into Sobolev norms by radial Plancherel quadrature.

pub mod data;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod kernel;
pub mod oracle;
pub mod params;
pub mod quadrature;
pub mod spectrum;

pub use error::{Error, Result};
pub use params::ModelParams;

pub use num_complex::Complex64 as C64;
