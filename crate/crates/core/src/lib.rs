//! Link-level OTFS simulator comparing delay-Doppler pilot schemes.
//!
//! The numeric core is generic over the real scalar type ([`Real`], implemented for
//! `f32` and `f64`); the aliases at the bottom of this file pin the usual `f64`
//! instantiation used by the experiment runner and the CLI.

pub mod channel;
pub mod chest;
pub mod dd;
pub mod detect;
pub mod error;
pub mod experiments;
pub mod jced;
pub mod linalg;
pub mod pilot;
pub mod scalar;
pub mod selftest;

pub use error::{Error, Result};
pub use scalar::{Cx, Real};

pub type C64 = Cx<f64>;
pub type Grid64 = dd::DdGrid<f64>;
