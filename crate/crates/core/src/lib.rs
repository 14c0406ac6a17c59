//! Constructive approximation of continuous maps from planar Arakelian sets
//! into the Riemann sphere by global rational maps.
//!
//! The pipeline follows the exhaustion-and-gluing scheme: the target is
//! approximated step by step on an increasing family of sets, each step
//! combining a Mergelyan-type fit, a transition map built from the
//! `SL(2,C)` spray on `CP^1`, and a nonlinear Cousin splitting on a
//! Cartan pair solved with the Cauchy-Green transform.

pub mod cauchy_green;
pub mod cli;
pub mod cousin;
pub mod driver;
pub mod error;
pub mod io;
pub mod linalg;
pub mod mergelyan;
pub mod planar_sets;
pub mod scenario;
pub mod selftest;
pub mod target_cp1;
pub mod transition;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex<f64>;
