//! Renormalization of Lorenz maps.
//!
//! A Lorenz map is a pair of increasing branches `f_-: [0,c) -> [0,1]` and
//! `f_+: (c,1] -> [0,1]` of the form `f_±(x) = η_±(|x - c|^α)` with `η_±`
//! real-analytic diffeomorphisms. The crate covers
//!
//! * [`map`] and [`chebyshev`]: representation and evaluation (real and complex),
//! * [`engine`]: first-return renormalization and its iterates,
//! * [`combinatorics`]: Lorenz permutations and their realizability,
//! * [`machinery`]: the nested interval families used for real bounds,
//! * [`domains`]: hyperbolic neighborhoods, flowers and modulus estimates,
//! * [`verifier`]: inverse branches and power-like extension certificates,
//! * [`flow`]: renormalization orbits and the fixed-point search,
//! * [`io`]: JSON, CSV and SVG formats.

// `!(x > 0.0)` style guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chebyshev;
pub mod combinatorics;
pub mod config;
pub mod domains;
pub mod engine;
pub mod error;
pub mod flow;
pub mod interval;
pub mod io;
pub mod machinery;
pub mod map;
pub mod verifier;

pub use config::Tolerances;
pub use error::{Error, Result};
pub use interval::Interval;
pub use map::{LorenzMap, Side};
