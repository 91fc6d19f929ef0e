//! Calculator for pre- and post-selected quantum measurements, built around a
//! Mach-Zehnder interferometer that nests a smaller interferometer in one arm
//! and optionally couples a nondemolition which-way detector to an inner path.
//!
//! The crate answers two kinds of question about such a circuit:
//!
//! * forward questions: with the which-way coupler present or absent, what is
//!   the probability of each final detector click, and what is the marginal
//!   probability that the coupler recorded the particle?
//! * two-time questions: given both the initial state and a final detector
//!   click, what is the probability that the particle was on the watched path
//!   in between? These conditionals come from the two-state formula for
//!   complete final measurements and from its subspace generalization when the
//!   final click only reveals a multi-dimensional subspace.
//!
//! [`montecarlo`] checks the closed forms by sampling projective trajectories,
//! and [`abl::decompose_total`] demonstrates how mixing conditionals with
//! marginals taken from a circuit without the coupler produces bogus totals.

pub mod abl;
mod error;
pub mod hilbert;
pub mod montecarlo;
pub mod optics;
pub mod presets;
pub mod scenario;

pub use error::{Error, Result};
