use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::{Cx, Real};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// One propagation path: integer delay tap, Doppler shift in Hz, complex gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPath<T> {
    pub delay_tap: usize,
    pub doppler: f64,
    pub gain: Cx<T>,
}

/// Sparse path list defining one channel draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T> {
    paths: Vec<ChannelPath<T>>,
    channel_len: usize,
}

impl<T: Real> ChannelRealization<T> {
    /// Channel length is `max delay tap + 1` (1 for an empty path list).
    pub fn new(paths: Vec<ChannelPath<T>>) -> Self {
        let channel_len = paths.iter().map(|p| p.delay_tap + 1).max().unwrap_or(1);
        ChannelRealization { paths, channel_len }
    }

    /// A single unit path with the given delay and no Doppler.
    pub fn single_tap(delay_tap: usize) -> Self {
        Self::new(vec![ChannelPath { delay_tap, doppler: 0.0, gain: Cx::new(T::one(), T::zero()) }])
    }

    pub fn paths(&self) -> &[ChannelPath<T>] {
        &self.paths
    }

    pub fn channel_len(&self) -> usize {
        self.channel_len
    }

    pub fn is_time_invariant(&self) -> bool {
        self.paths.iter().all(|p| p.doppler == 0.0)
    }

    /// Same delays and gains with every Doppler shift set to zero.
    pub fn without_doppler(&self) -> Self {
        let paths = self.paths.iter().map(|p| ChannelPath { doppler: 0.0, ..*p }).collect();
        ChannelRealization { paths, channel_len: self.channel_len }
    }

    pub fn total_power(&self) -> T {
        self.paths.iter().fold(T::zero(), |acc, p| acc + p.gain.norm_sqr())
    }
}

/// Tapped power-delay profile (delays in ns, relative powers in dB).
#[derive(Debug, Clone, PartialEq)]
pub struct PowerDelayProfile {
    pub delays_ns: Vec<f64>,
    pub powers_db: Vec<f64>,
}

impl PowerDelayProfile {
    /// Extended Vehicular A.
    pub fn eva() -> Self {
        PowerDelayProfile {
            delays_ns: vec![0.0, 30.0, 150.0, 310.0, 370.0, 710.0, 1090.0, 1730.0, 2510.0],
            powers_db: vec![0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9],
        }
    }

    pub fn max_delay_ns(&self) -> f64 {
        self.delays_ns.iter().cloned().fold(0.0, f64::max)
    }

    /// Channel length in samples: `floor(max_delay / Ts) + 1`.
    pub fn channel_len(&self, sample_period: f64) -> usize {
        (self.max_delay_ns() * 1e-9 / sample_period + 1e-9).floor() as usize + 1
    }

    /// Linear powers normalized to sum to one.
    pub fn normalized_powers(&self) -> Vec<f64> {
        let lin: Vec<f64> = self.powers_db.iter().map(|db| 10f64.powf(db / 10.0)).collect();
        let total: f64 = lin.iter().sum();
        lin.into_iter().map(|p| p / total).collect()
    }

    /// Integer delay tap of each path: nearest sample, clamped to `channel_len - 1`.
    pub fn delay_taps(&self, sample_period: f64) -> Vec<usize> {
        let max_tap = self.channel_len(sample_period) - 1;
        self.delays_ns
            .iter()
            .map(|&d| ((d * 1e-9 / sample_period).round() as usize).min(max_tap))
            .collect()
    }
}

/// Maximum Doppler shift `fc v / c` for a relative speed in km/h.
pub fn max_doppler_hz(speed_kmh: f64, carrier_freq: f64) -> f64 {
    carrier_freq * (speed_kmh / 3.6) / SPEED_OF_LIGHT
}

/// Draws one path per profile tap: Rayleigh gain with the tap's normalized power and
/// Jakes Doppler `nu_max cos(theta)`, `theta ~ U[0, 2 pi)`.
pub fn sample_channel<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    profile: &PowerDelayProfile,
    speed_kmh: f64,
    carrier_freq: f64,
    sample_period: f64,
) -> Result<ChannelRealization<T>> {
    if !(sample_period > 0.0) {
        return Err(Error::Parameter(format!("sample period must be positive, got {sample_period}")));
    }
    if !(speed_kmh >= 0.0) {
        return Err(Error::Parameter(format!("speed must be non-negative, got {speed_kmh}")));
    }
    if profile.delays_ns.len() != profile.powers_db.len() || profile.delays_ns.is_empty() {
        return Err(Error::Parameter("power-delay profile needs matching, non-empty delay and power lists".into()));
    }
    let nu_max = max_doppler_hz(speed_kmh, carrier_freq);
    let taps = profile.delay_taps(sample_period);
    let powers = profile.normalized_powers();
    let mut paths = Vec::with_capacity(taps.len());
    for (tap, power) in taps.into_iter().zip(powers) {
        let sigma = (power / 2.0).sqrt();
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        let theta = rng.gen::<f64>() * 2.0 * PI;
        paths.push(ChannelPath {
            delay_tap: tap,
            doppler: nu_max * theta.cos(),
            gain: Cx::new(T::lit(sigma * re), T::lit(sigma * im)),
        });
    }
    Ok(ChannelRealization::new(paths))
}

/// EVA profile with Jakes Doppler, deterministic in `seed`.
pub fn sample_eva_channel<T: Real>(
    seed: u64,
    speed_kmh: f64,
    carrier_freq: f64,
    sample_period: f64,
) -> Result<ChannelRealization<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_channel(&mut rng, &PowerDelayProfile::eva(), speed_kmh, carrier_freq, sample_period)
}

/// Plain-text dump, one `delay_tap doppler_hz gain_re gain_im` line per path.
pub fn write_channel_dump<T: Real>(chan: &ChannelRealization<T>) -> String {
    let mut out = String::from("# delay_tap doppler_hz gain_re gain_im\n");
    for p in chan.paths() {
        let _ = writeln!(out, "{} {:.17e} {:.17e} {:.17e}", p.delay_tap, p.doppler, p.gain.re.as_f64(), p.gain.im.as_f64());
    }
    out
}

pub fn parse_channel_dump<T: Real>(text: &str) -> Result<ChannelRealization<T>> {
    let mut paths = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Parse(format!("line {}: expected 4 fields, got {}", lineno + 1, fields.len())));
        }
        let bad = |what: &str| Error::Parse(format!("line {}: invalid {what}", lineno + 1));
        let delay_tap = fields[0].parse::<usize>().map_err(|_| bad("delay_tap"))?;
        let doppler = fields[1].parse::<f64>().map_err(|_| bad("doppler_hz"))?;
        let re = fields[2].parse::<f64>().map_err(|_| bad("gain_re"))?;
        let im = fields[3].parse::<f64>().map_err(|_| bad("gain_im"))?;
        paths.push(ChannelPath { delay_tap, doppler, gain: Cx::new(T::lit(re), T::lit(im)) });
    }
    Ok(ChannelRealization::new(paths))
}
