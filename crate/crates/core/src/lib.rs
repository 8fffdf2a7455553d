//! Statistical-equilibrium toolkit for nearly parallel vortex filaments.
//!
//! N filaments, nearly parallel to the z-axis, are discretized into M
//! planar beads each (periodic in the layer index). The energy is
//! self-induction stiffness plus a per-layer logarithmic pair interaction,
//! sampled in the Gibbs ensemble exp(−βH − μI) where I is the angular
//! momentum acting as a harmonic trap.
//!
//! * [`meanfield`] — closed-form spherical/mean-field analytics: the
//!   explicit mean-square radius, saddle point, free energies, turning
//!   point and error locus.
//! * [`ensemble`] — the bead data model, exact and incremental energy
//!   evaluation, and snapshot serialization.
//! * [`sampler`] — the Markov chain: rigid translations plus exact-Gaussian
//!   internal regrow, equilibration detection, checkpointing.
//! * [`observables`] — R², A², a², d² with blocking error bars and the
//!   straightness/braiding validity flags.
//! * [`oracle`] — independent verifiers (circulant statistics, numeric
//!   saddle location, closed forms with quadrature cross-checks) used to
//!   certify both the analytics and the sampler.

pub mod ensemble;
pub mod error;
pub mod meanfield;
pub mod observables;
pub mod oracle;
pub mod sampler;

pub use error::{Error, Result};
