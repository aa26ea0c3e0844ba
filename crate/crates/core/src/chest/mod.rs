//! Channel estimation: symbol operators for the pilot regions, the per-scheme
//! estimators, and interpolation to a full effective channel.

mod difference;
mod estimate;
mod interp;
mod sbc;

pub use difference::{CancellationMode, Differenced, RegionDifference};
pub use estimate::{
    cancel_pilots_initial, check_estimator_config, estimate_full_guard, estimate_reduced_guard, estimate_split_initial,
    refine_reduced_guard, refine_split, remove_pilot, remove_pilot_reduced, remove_pilots_cross, PilotRegion, RegionTag,
    SplitEstimate, SplitPrior,
};
pub use interp::{anchor_gains, interpolate_taps, interpolate_to_heff, ComplexSpline, Extrapolation, Interpolation, SplineEnd};
pub use sbc::{build_sbc, sbc_from_grid, BlockCirculantSymbols};
