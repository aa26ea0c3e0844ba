use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pilot arrangement used by a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Single impulse with `2L-1` guard rows.
    #[serde(alias = "full")]
    FullGuard,
    /// Single impulse with `k` guard rows above the pilot handed back to data.
    #[serde(alias = "reduced")]
    ReducedGuard,
    /// Two half-power impulses `L` rows apart sharing one `L`-row guard.
    #[serde(alias = "split")]
    SplitPilot,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::FullGuard, Scheme::ReducedGuard, Scheme::SplitPilot];

    /// Short name used in CSV files and on the command line.
    pub fn name(self) -> &'static str {
        match self {
            Scheme::FullGuard => "full",
            Scheme::ReducedGuard => "reduced",
            Scheme::SplitPilot => "split",
        }
    }

    pub fn parse(s: &str) -> Result<Scheme> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" | "full_guard" | "fullguard" => Ok(Scheme::FullGuard),
            "reduced" | "reduced_guard" | "reducedguard" => Ok(Scheme::ReducedGuard),
            "split" | "split_pilot" | "splitpilot" => Ok(Scheme::SplitPilot),
            other => Err(Error::Parameter(format!("unknown scheme '{other}'"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Scalar system parameters of one OTFS frame.
///
/// The delay resolution (`sample_period`), Doppler resolution
/// `1 / (M N Ts)` and subcarrier spacing `1 / (M Ts)` are derived on demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameConfig {
    /// Delay bins `M`.
    pub delay_bins: usize,
    /// Doppler bins `N`.
    pub doppler_bins: usize,
    /// Sampling period in seconds.
    pub sample_period: f64,
    /// Cyclic prefix length in samples.
    pub cp_len: usize,
    /// Carrier frequency in Hz.
    pub carrier_freq: f64,
    /// QAM alphabet size.
    pub qam_order: usize,
    /// Total pilot power, linear, relative to unit-energy data symbols.
    pub pilot_power: f64,
    pub scheme: Scheme,
    /// Delay bin of the (first) pilot.
    pub pilot_delay: usize,
    /// Doppler bin of the pilot(s).
    pub pilot_doppler: usize,
    /// Guard rows above the pilot reclaimed for data (reduced guard only).
    pub reclaimed_rows: usize,
    /// Maximum number of refinement iterations.
    pub max_iterations: usize,
    /// Channel length `L` in samples.
    pub channel_len: usize,
}

impl FrameConfig {
    /// Configuration with the common defaults filled in: 5.9 GHz carrier, 4-QAM,
    /// 40 dB pilot, pilot at `(M/2, 0)`, `k = L-1`, four refinement iterations and
    /// a cyclic prefix of `2L` samples.
    pub fn new(delay_bins: usize, doppler_bins: usize, sample_period: f64, channel_len: usize) -> Self {
        FrameConfig {
            delay_bins,
            doppler_bins,
            sample_period,
            cp_len: 2 * channel_len,
            carrier_freq: 5.9e9,
            qam_order: 4,
            pilot_power: 1e4,
            scheme: Scheme::SplitPilot,
            pilot_delay: delay_bins / 2,
            pilot_doppler: 0,
            reclaimed_rows: channel_len.saturating_sub(1),
            max_iterations: 4,
            channel_len,
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    /// `M * N`.
    pub fn frame_len(&self) -> usize {
        self.delay_bins * self.doppler_bins
    }

    /// `M_T = M N + M_cp`.
    pub fn total_len(&self) -> usize {
        self.frame_len() + self.cp_len
    }

    pub fn delay_resolution(&self) -> f64 {
        self.sample_period
    }

    pub fn doppler_resolution(&self) -> f64 {
        1.0 / (self.frame_len() as f64 * self.sample_period)
    }

    pub fn subcarrier_spacing(&self) -> f64 {
        1.0 / (self.delay_bins as f64 * self.sample_period)
    }

    /// Pilot amplitude of each impulse for the configured scheme.
    pub fn pilot_amplitude(&self) -> f64 {
        match self.scheme {
            Scheme::SplitPilot => (self.pilot_power / 2.0).sqrt(),
            _ => self.pilot_power.sqrt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n, l) = (self.delay_bins, self.doppler_bins, self.channel_len);
        if l == 0 {
            return Err(Error::Parameter("channel_len must be at least 1".into()));
        }
        if n == 0 {
            return Err(Error::Parameter("doppler_bins must be at least 1".into()));
        }
        if m < 2 * l {
            return Err(Error::Parameter(format!("delay_bins {m} must be at least 2*channel_len = {}", 2 * l)));
        }
        if self.cp_len < l {
            return Err(Error::Parameter(format!("cp_len {} shorter than channel_len {l}", self.cp_len)));
        }
        if self.cp_len > self.frame_len() {
            return Err(Error::Parameter("cp_len exceeds frame length".into()));
        }
        if !(self.sample_period > 0.0) || !self.sample_period.is_finite() {
            return Err(Error::Parameter("sample_period must be positive".into()));
        }
        if !(self.pilot_power > 0.0) || !self.pilot_power.is_finite() {
            return Err(Error::Parameter("pilot_power must be positive".into()));
        }
        crate::dd::bits_per_symbol(self.qam_order)?;
        if self.pilot_delay + 1 < l {
            return Err(Error::Parameter(format!(
                "pilot_delay {} leaves no room for {} rows above the pilot",
                self.pilot_delay,
                l - 1
            )));
        }
        if self.pilot_delay + 2 * l > m {
            return Err(Error::Parameter(format!(
                "pilot region ends at row {} beyond delay_bins {m}",
                self.pilot_delay + 2 * l - 1
            )));
        }
        if self.pilot_doppler >= n {
            return Err(Error::Parameter(format!("pilot_doppler {} out of range", self.pilot_doppler)));
        }
        if self.scheme == Scheme::ReducedGuard && self.reclaimed_rows > l - 1 {
            return Err(Error::Parameter(format!(
                "reclaimed_rows {} exceeds channel_len - 1 = {}",
                self.reclaimed_rows,
                l - 1
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_quantities() {
        let cfg = FrameConfig::new(128, 32, 520.3e-9, 5);
        assert_eq!(cfg.total_len(), 128 * 32 + 10);
        assert!((cfg.subcarrier_spacing() - 15_015.0).abs() < 5.0);
        assert!((cfg.doppler_resolution() * 32.0 - cfg.subcarrier_spacing()).abs() < 1e-6);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_geometry() {
        let mut cfg = FrameConfig::new(8, 4, 1e-6, 5);
        assert!(cfg.validate().is_err());
        cfg = FrameConfig::new(32, 4, 1e-6, 5);
        cfg.cp_len = 3;
        assert!(cfg.validate().is_err());
        cfg = FrameConfig::new(32, 4, 1e-6, 5);
        cfg.pilot_delay = 2;
        assert!(cfg.validate().is_err());
        cfg = FrameConfig::new(32, 4, 1e-6, 5);
        cfg.pilot_delay = 24;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(Scheme::parse(s.name()).unwrap(), s);
        }
        assert!(Scheme::parse("bogus").is_err());
    }
}
