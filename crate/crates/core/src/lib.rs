//! Numerics for border-collision bifurcations that turn a stable fixed point
//! into many coexisting chaotic attractors.
//!
//! The crate is organised bottom-up:
//!
//! * [`map`] evaluates the skew tent map, the simple companion form, the
//!   normal form with polynomial higher-order terms and its scaled version.
//! * [`skewtent`] handles the `S_k` parameter regions, the critical orbit and
//!   the attractor intervals of the one-dimensional map.
//! * [`boxes`] fattens those intervals, builds the product boxes and the
//!   trapping regions, and checks the inclusion properties numerically.
//! * [`orbits`] counts the trapping regions exactly, three independent ways.
//! * [`dynamics`] checks the stable side (fixed point) and the chaotic side
//!   (expansion, Lyapunov exponents, attractor census).

pub mod boxes;
pub mod dynamics;
pub mod error;
pub mod map;
pub mod orbits;
pub mod skewtent;

mod linalg;
mod rng;

pub use error::{Error, Result};
