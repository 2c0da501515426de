//! Differentiable simulation and optimal driving of exciton transfer through
//! open quantum networks.
//!
//! A single photon in a radiation mode is absorbed by an antenna qubit, hops
//! into a network of coupled sites and is irreversibly captured by a sink
//! attached to the last site. Dynamics follow a Lindblad master equation in
//! the single-excitation sector, integrated with fixed-step RK4. Gradients of
//! the time-integrated sink population come from forward-mode tangents
//! carried through the integrator, and drive an Adam optimiser over one of
//! three parameter families: antenna/site drivings, hopping couplings, or
//! site energies.

pub mod dynamics;
pub mod error;
pub mod model;
pub mod optimize;
pub mod oracle;
pub mod scalar;

pub use error::{Error, Result};
