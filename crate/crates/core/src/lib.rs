//! Path integrals with the particle's time coordinate treated as a quantum
//! variable, in one time and one space dimension.
//!
//! The crate is organised bottom-up:
//!
//! * [`kernels`]: closed-form free kernels and Gaussian packets;
//! * [`lattice`]: a Trotter-product oracle and a Fourier path sampler;
//! * [`classical`]: trajectories, actions, gauge changes and the van Vleck kernel;
//! * [`normalization`]: per-packet kernel normalization;
//! * [`dipole`] and [`schrodinger`]: a dipole crossing a time-varying field,
//!   in the four-dimensional formalism and in ordinary quantum mechanics;
//! * [`experiment`]: the end-to-end comparison of the two.

pub mod classical;
pub mod dipole;
pub mod experiment;
pub mod grid;
pub mod kernels;
pub mod lattice;
pub mod normalization;
pub mod schrodinger;

pub use kernels::{Amplitude, Axis, Event, GaussianPacket4D, KernelError, Moments, PacketParams};
