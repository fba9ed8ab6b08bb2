//! Wavepacket free fall in a uniform field: exact and split-step evolvers,
//! Wigner phase-space maps, composite-particle dephasing and the internal
//! qubit phase shift.
//!
//! Units are ħ = c = 1 unless a function takes a [`qubitphase::UnitSystem`].
//! The potential is `+m g x`, so free fall moves packets toward −x.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod composite;
pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod phasespace;
pub mod qubitphase;
pub mod states;

pub use error::{Domain, Error, Result};
pub use lattice::{dft_forward, dft_inverse, make_grid, quad, Grid1D};
pub use num_complex::Complex64;
pub use states::{cat_state, gaussian_packet, PacketSpec, WaveFunction};
