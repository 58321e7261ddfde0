//! Analytic wavepackets, propagators and interference patterns.
//!
//! Everything here is a pure function of immutable inputs. States are
//! sums of complex Gaussians, so values, derivatives and overlaps are all
//! closed-form; [`quadrature`] provides the independent numerical route
//! used to validate them.

mod gaussian;
mod packet;
mod propagator;
pub mod quadrature;
mod state;
mod units;

pub use gaussian::ComplexGaussian;
pub use packet::{packet_value, Evolution, GaussianPacket};
pub use propagator::{
    fraunhofer_pattern, fraunhofer_profile, free_propagator, slit_propagator, SlitGeometry,
};
pub use state::{state_value, Component, Role, Slit, SlitConfig, StateSpec};
pub use units::{UnitSystem, ELECTRON_MASS_SI, HBAR_SI};
