//! Preset sweeps for the published figures.

use serde::{Deserialize, Serialize};

use super::metrics::NmseDenominator;
use super::sweep::SweepSpec;
use crate::channel::PowerDelayProfile;
use crate::dd::{FrameConfig, Scheme};
use crate::detect::DetectorConfig;
use crate::error::{Error, Result};
use crate::jced::ReceiverOptions;

pub const PAPER_SAMPLE_PERIOD: f64 = 520.3e-9;
pub const LARGE_L_SAMPLE_PERIOD: f64 = 133.33e-9;
pub const PAPER_SPEED_KMH: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// BER against SNR, all schemes.
    Fig2,
    /// NMSE against SNR, all schemes.
    Fig3,
    /// BER against SNR with the shorter sampling period.
    Fig4,
    /// Per-iteration BER and NMSE at 14 dB.
    Fig5,
    Custom,
}

impl Profile {
    pub fn parse(s: &str) -> Result<Profile> {
        match s {
            "fig2" => Ok(Profile::Fig2),
            "fig3" => Ok(Profile::Fig3),
            "fig4" => Ok(Profile::Fig4),
            "fig5" => Ok(Profile::Fig5),
            "custom" => Ok(Profile::Custom),
            other => Err(Error::Parse(format!("unknown profile `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Profile::Fig2 => "fig2",
            Profile::Fig3 => "fig3",
            Profile::Fig4 => "fig4",
            Profile::Fig5 => "fig5",
            Profile::Custom => "custom",
        }
    }
}

/// 128 x 32 frame with the EVA channel length for the given sampling period.
pub fn paper_frame(sample_period: f64) -> FrameConfig {
    let l = PowerDelayProfile::eva().channel_len(sample_period);
    FrameConfig::new(128, 32, sample_period, l)
}

pub fn default_snr_grid() -> Vec<f64> {
    (0..=10).map(|i| 2.0 * i as f64).collect()
}

pub fn profile_spec(profile: Profile) -> SweepSpec {
    let base = |ts: f64| SweepSpec {
        schemes: Scheme::ALL.to_vec(),
        snr_db: default_snr_grid(),
        frames: 200,
        seed: 1,
        speed_kmh: PAPER_SPEED_KMH,
        frame: paper_frame(ts),
        detector: DetectorConfig::default(),
        noise_damping: true,
        receiver: ReceiverOptions::default(),
        nmse_denominator: NmseDenominator::Estimate,
        record_trace: false,
    };
    match profile {
        Profile::Fig2 | Profile::Fig3 | Profile::Custom => base(PAPER_SAMPLE_PERIOD),
        Profile::Fig4 => SweepSpec { frames: 100, ..base(LARGE_L_SAMPLE_PERIOD) },
        Profile::Fig5 => SweepSpec {
            schemes: vec![Scheme::SplitPilot, Scheme::ReducedGuard],
            snr_db: vec![14.0],
            receiver: ReceiverOptions { early_stop: false, ..ReceiverOptions::default() },
            record_trace: true,
            ..base(PAPER_SAMPLE_PERIOD)
        },
    }
}

/// A fast configuration for tests: 32 x 8 frame, EVA at the paper's sampling period.
pub fn small_test_spec() -> SweepSpec {
    let mut frame = FrameConfig::new(32, 8, PAPER_SAMPLE_PERIOD, 5);
    frame.max_iterations = 2;
    SweepSpec {
        schemes: Scheme::ALL.to_vec(),
        snr_db: vec![10.0],
        frames: 4,
        seed: 7,
        speed_kmh: PAPER_SPEED_KMH,
        frame,
        detector: DetectorConfig::default(),
        noise_damping: true,
        receiver: ReceiverOptions::default(),
        nmse_denominator: NmseDenominator::Estimate,
        record_trace: true,
    }
}
