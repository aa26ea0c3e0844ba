//! Frame configuration, QAM mapping, delay-Doppler/delay-time transforms and
//! cyclic-prefix handling shared by the rest of the crate.
//!
//! Every grid in the crate is stored column-major: cell `(m, n)` (delay bin `m`,
//! Doppler bin `n`) lives at vector index `n * M + m`.

mod config;
mod grid;
mod qam;
mod transform;

pub use config::{FrameConfig, Scheme};
pub use grid::{DdGrid, GridRole};
pub use qam::{bits_per_symbol, qam_demodulate_hard, qam_hard_decision, qam_modulate, Constellation};
pub use transform::{add_cp, dd_to_delay_time, delay_time_to_dd, remove_cp, DdTransform};
