//! Weak-measurement trajectories in a Gaussian double-slit interferometer.
//!
//! The crate is organised bottom-up:
//!
//! * [`qcore`]: analytic Gaussian wavepackets, free and slit propagators,
//!   interference patterns and the quadrature used to cross-check them.
//! * [`weakval`]: complex weak values of the spatial projector and of the
//!   transverse momentum for arbitrary pre/post-selected states.
//! * [`probegrid`]: space-time grids of weakly coupled pointers and the
//!   extraction of weak trajectories from their shifts.
//! * [`protocol`]: the four-crystal polarization protocol, its contrasts
//!   and the inversion back to weak values.
//! * [`scenario`]: configuration files, command orchestration and table
//!   emission used by the `weaktraj` binary.
//!
//! Grid-shaped work (screen sampling, probe evaluation, quadrature oracles)
//! runs through [`Execution`], which is data-parallel when the `parallel`
//! feature is enabled and sequential otherwise.

pub mod error;
pub mod exec;
pub mod probegrid;
pub mod protocol;
pub mod qcore;
pub mod scenario;
pub mod weakval;

pub use error::{Error, Result};
pub use exec::Execution;

/// Complex amplitudes are double precision throughout.
pub type C64 = num_complex::Complex64;
