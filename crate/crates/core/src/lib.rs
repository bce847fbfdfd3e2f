//! Drifted self-repelling random polymers on the square lattice.
//!
//! A polymer of `N` unit steps on Z² is weighted by a long-range pair
//! interaction between its steps plus a drift coupling to the endpoint.
//! Projecting every step onto `e1 - e2` and `e1 + e2` splits the polymer
//! measure into two independent one-dimensional long-range Ising chains at
//! half the inverse temperature. This crate implements both sides of that
//! correspondence:
//!
//! * [`ising`]: finite Ising chains with arbitrary translation-invariant
//!   couplings, exact enumeration and brute-force observables.
//! * [`transfer`]: nearest-neighbour chains via 2×2 transfer matrices.
//! * [`polymer`]: walks, the polymer Hamiltonian and exact enumeration.
//! * [`decoupling`]: the step/spin bijection and polymer sampling through
//!   two Ising samplers.
//! * [`montecarlo`]: Metropolis sampling of long-range chains with
//!   batch-means error bars and replica diagnostics.
//! * [`analysis`]: scaling-exponent fits, the pressure functional, its
//!   second derivative, and a Kolmogorov–Smirnov normality test.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod coupling;
pub mod decoupling;
pub mod error;
pub mod ising;
pub mod montecarlo;
pub mod polymer;
pub mod rng;
pub mod transfer;

pub use coupling::CouplingSpec;
pub use error::{Error, Result};
pub use ising::{IsingParams, SpinConfig};
pub use polymer::{PolymerParams, Step, Walk};
