//! TOML sweep configuration: a profile to start from plus per-section overrides.
//!
//! ```toml
//! [sweep]
//! profile = "fig2"
//! schemes = ["split", "full"]
//! snr_db = [10, 14]
//! frames = 50
//!
//! [frame]
//! max_iterations = 2
//!
//! [detector]
//! ic_rounds = 1
//! ```
//!
//! Unknown keys are rejected. Errors carry the line and column of the offending
//! entry.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::metrics::NmseDenominator;
use super::profiles::{profile_spec, Profile};
use super::sweep::SweepSpec;
use crate::channel::PowerDelayProfile;
use crate::chest::{CancellationMode, Interpolation};
use crate::dd::{FrameConfig, Scheme};
use crate::error::{Error, Result};
use crate::jced::{AverageAnchor, PriorMode};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    sweep: SweepSection,
    #[serde(default)]
    frame: FrameSection,
    #[serde(default)]
    detector: DetectorSection,
    #[serde(default)]
    receiver: ReceiverSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    profile: Option<Profile>,
    schemes: Option<Vec<Scheme>>,
    snr_db: Option<Vec<f64>>,
    frames: Option<usize>,
    seed: Option<u64>,
    speed_kmh: Option<f64>,
    nmse_denominator: Option<NmseDenominator>,
    record_trace: Option<bool>,
    noise_damping: Option<bool>,
    out: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameSection {
    delay_bins: Option<usize>,
    doppler_bins: Option<usize>,
    sample_period: Option<f64>,
    channel_len: Option<usize>,
    cp_len: Option<usize>,
    carrier_freq: Option<f64>,
    qam_order: Option<usize>,
    pilot_power: Option<f64>,
    /// Alternative to `pilot_power`, in dB.
    pilot_power_db: Option<f64>,
    pilot_delay: Option<usize>,
    pilot_doppler: Option<usize>,
    reclaimed_rows: Option<usize>,
    max_iterations: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DetectorSection {
    max_lsmr_iters: Option<usize>,
    residual_tol: Option<f64>,
    ic_rounds: Option<usize>,
    damping: Option<f64>,
    ic_fraction: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReceiverSection {
    interpolation: Option<Interpolation>,
    split_prior: Option<PriorMode>,
    cancellation: Option<CancellationMode>,
    average_anchor: Option<AverageAnchor>,
    early_stop: Option<bool>,
}

/// A configuration file resolved against its profile.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub profile: Profile,
    pub spec: SweepSpec,
    pub out: Option<PathBuf>,
}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |p| before.len() - p - 1) + 1;
    (line, col)
}

/// Parses configuration text. `origin` names the source in error messages.
pub fn parse_config(text: &str, origin: &str) -> Result<LoadedConfig> {
    parse_config_with_profile(text, origin, None)
}

/// As [`parse_config`], with `profile` taking precedence over the file's own.
pub fn parse_config_with_profile(text: &str, origin: &str, profile: Option<Profile>) -> Result<LoadedConfig> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| {
        let msg = e.message().trim().to_string();
        match e.span() {
            Some(span) => {
                let (line, col) = line_col(text, span.start);
                Error::Parse(format!("{origin}:{line}:{col}: {msg}"))
            }
            None => Error::Parse(format!("{origin}: {msg}")),
        }
    })?;
    let profile = profile.or(file.sweep.profile).unwrap_or(Profile::Custom);
    let mut spec = profile_spec(profile);
    let s = file.sweep;
    if let Some(v) = s.schemes {
        spec.schemes = v;
    }
    if let Some(v) = s.snr_db {
        spec.snr_db = v;
    }
    if let Some(v) = s.frames {
        spec.frames = v;
    }
    if let Some(v) = s.seed {
        spec.seed = v;
    }
    if let Some(v) = s.speed_kmh {
        spec.speed_kmh = v;
    }
    if let Some(v) = s.nmse_denominator {
        spec.nmse_denominator = v;
    }
    if let Some(v) = s.record_trace {
        spec.record_trace = v;
    }
    if let Some(v) = s.noise_damping {
        spec.noise_damping = v;
    }
    spec.frame = resolve_frame(spec.frame, file.frame)?;

    let d = file.detector;
    let det = &mut spec.detector;
    det.max_lsmr_iters = d.max_lsmr_iters.unwrap_or(det.max_lsmr_iters);
    det.residual_tol = d.residual_tol.unwrap_or(det.residual_tol);
    det.ic_rounds = d.ic_rounds.unwrap_or(det.ic_rounds);
    det.ic_fraction = d.ic_fraction.unwrap_or(det.ic_fraction);
    if let Some(v) = d.damping {
        det.damping = v;
        // an explicit damping value wins over the noise-derived one
        if s.noise_damping.is_none() {
            spec.noise_damping = false;
        }
    }

    let r = file.receiver;
    let rx = &mut spec.receiver;
    rx.interpolation = r.interpolation.unwrap_or(rx.interpolation);
    rx.split_prior = r.split_prior.unwrap_or(rx.split_prior);
    rx.cancellation = r.cancellation.unwrap_or(rx.cancellation);
    rx.average_anchor = r.average_anchor.unwrap_or(rx.average_anchor);
    rx.early_stop = r.early_stop.unwrap_or(rx.early_stop);

    spec.validate().map_err(|e| Error::Parse(format!("{origin}: {e}")))?;
    Ok(LoadedConfig { profile, spec, out: s.out })
}

/// Changing the grid or sampling period rebuilds the derived defaults (pilot row,
/// cyclic prefix, channel length, reclaimed rows) before the explicit overrides.
fn resolve_frame(base: FrameConfig, f: FrameSection) -> Result<FrameConfig> {
    if f.pilot_power.is_some() && f.pilot_power_db.is_some() {
        return Err(Error::Parse("set either pilot_power or pilot_power_db, not both".into()));
    }
    let reshaped = f.delay_bins.is_some() || f.doppler_bins.is_some() || f.sample_period.is_some() || f.channel_len.is_some();
    let mut cfg = if reshaped {
        let ts = f.sample_period.unwrap_or(base.sample_period);
        let l = f.channel_len.unwrap_or_else(|| PowerDelayProfile::eva().channel_len(ts));
        let mut c = FrameConfig::new(f.delay_bins.unwrap_or(base.delay_bins), f.doppler_bins.unwrap_or(base.doppler_bins), ts, l);
        c.carrier_freq = base.carrier_freq;
        c.qam_order = base.qam_order;
        c.pilot_power = base.pilot_power;
        c.max_iterations = base.max_iterations;
        c
    } else {
        base
    };
    if let Some(v) = f.cp_len {
        cfg.cp_len = v;
    }
    if let Some(v) = f.carrier_freq {
        cfg.carrier_freq = v;
    }
    if let Some(v) = f.qam_order {
        cfg.qam_order = v;
    }
    if let Some(v) = f.pilot_power {
        cfg.pilot_power = v;
    }
    if let Some(v) = f.pilot_power_db {
        cfg.pilot_power = 10f64.powf(v / 10.0);
    }
    if let Some(v) = f.pilot_delay {
        cfg.pilot_delay = v;
    }
    if let Some(v) = f.pilot_doppler {
        cfg.pilot_doppler = v;
    }
    if let Some(v) = f.reclaimed_rows {
        cfg.reclaimed_rows = v;
    }
    if let Some(v) = f.max_iterations {
        cfg.max_iterations = v;
    }
    Ok(cfg)
}

pub fn load_config(path: &Path, profile: Option<Profile>) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config_with_profile(&text, &path.display().to_string(), profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chest::{Extrapolation, SplineEnd};

    #[test]
    fn empty_file_is_the_custom_profile() {
        let c = parse_config("", "t").unwrap();
        assert_eq!(c.profile, Profile::Custom);
        assert_eq!(c.spec, profile_spec(Profile::Custom));
        assert_eq!(c.out, None);
    }

    #[test]
    fn overrides_apply_on_top_of_the_profile() {
        let text = r#"
[sweep]
profile = "fig4"
schemes = ["split", "full_guard"]
snr_db = [14]
frames = 3
out = "res"

[frame]
max_iterations = 2
pilot_power_db = 30

[detector]
ic_rounds = 1

[receiver]
interpolation = { end = "natural", extrapolation = "flat" }
average_anchor = "first_pilot"
"#;
        let c = parse_config(text, "t").unwrap();
        assert_eq!(c.profile, Profile::Fig4);
        assert_eq!(c.spec.schemes, vec![Scheme::SplitPilot, Scheme::FullGuard]);
        assert_eq!(c.spec.snr_db, vec![14.0]);
        assert_eq!(c.spec.frame.channel_len, 19);
        assert_eq!(c.spec.frame.max_iterations, 2);
        assert!((c.spec.frame.pilot_power - 1e3).abs() < 1e-9);
        assert_eq!(c.spec.detector.ic_rounds, 1);
        assert_eq!(c.spec.receiver.interpolation, Interpolation { end: SplineEnd::Natural, extrapolation: Extrapolation::Flat });
        assert_eq!(c.spec.receiver.average_anchor, AverageAnchor::FirstPilot);
        assert_eq!(c.out, Some(PathBuf::from("res")));
    }

    #[test]
    fn explicit_profile_wins() {
        let c = parse_config_with_profile("[sweep]\nprofile = \"fig2\"\nframes = 2\n", "t", Some(Profile::Fig4)).unwrap();
        assert_eq!(c.profile, Profile::Fig4);
        assert_eq!(c.spec.frame.channel_len, 19);
        assert_eq!(c.spec.frames, 2);
    }

    #[test]
    fn reshaping_the_grid_recomputes_derived_fields() {
        let c = parse_config("[frame]\ndelay_bins = 64\ndoppler_bins = 16\n", "t").unwrap();
        let f = &c.spec.frame;
        assert_eq!((f.delay_bins, f.doppler_bins, f.pilot_delay, f.channel_len, f.cp_len), (64, 16, 32, 5, 10));
    }

    #[test]
    fn explicit_damping_disables_noise_damping() {
        let c = parse_config("[detector]\ndamping = 0.5\n", "t").unwrap();
        assert!(!c.spec.noise_damping);
        assert_eq!(c.spec.detector_at(10.0).damping, 0.5);
    }

    #[test]
    fn errors_point_at_the_offending_line() {
        let err = parse_config("[sweep]\nframes = 3\nfrmes = 4\n", "cfg.toml").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("cfg.toml:3:1"), "{msg}");
        assert!(msg.contains("frmes"), "{msg}");
        let err = parse_config("[frame]\n\ndelay_bins = \"many\"\n", "cfg.toml").unwrap_err();
        assert!(err.to_string().contains("cfg.toml:3:14"), "{err}");
        let err = parse_config("[sweep]\nschemes = [\"diagonal\"]\n", "c").unwrap_err();
        assert!(err.to_string().contains("c:2:"), "{err}");
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(parse_config("[sweep]\nframes = 0\n", "t").is_err());
        assert!(parse_config("[frame]\nqam_order = 8\n", "t").is_err());
        assert!(parse_config("[frame]\npilot_power = 1\npilot_power_db = 0\n", "t").is_err());
    }
}
