//! Data detection: complex LSMR and the masked, interference-cancelling detector.

mod ic;
mod lsmr;

pub use ic::{detect_with_ic, symbols_changed, DetectionResult, Detector, DetectorConfig, GenieDetector, LsmrDetector};
pub use lsmr::{lsmr_solve, LsmrOptions, LsmrOutput, LsmrStop};
