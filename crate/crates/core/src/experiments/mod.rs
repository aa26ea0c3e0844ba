//! Frame simulation, metrics and Monte-Carlo sweeps.

pub mod config;
mod frame;
mod metrics;
mod plot;
pub mod profiles;
mod sweep;

pub use frame::{derive_seed, noise_variance, simulate_frame, FrameSeeds, LinkParams, SimulatedFrame};
pub use metrics::{ber, bit_errors, nmse_exact, nmse_probe, nmse_taps, to_db, NmseDenominator};
pub use config::{load_config, parse_config, parse_config_with_profile, LoadedConfig};
pub use plot::{write_iteration_table, write_snr_table, PlotMetric};
pub use profiles::{profile_spec, Profile};
pub use sweep::{
    run_sweep, write_csv, write_csv_file, write_trace, IterationSummary, PointResult, SweepResult, SweepSpec, CSV_HEADER,
};
