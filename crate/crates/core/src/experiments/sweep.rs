//! Monte-Carlo sweeps over schemes and SNR points.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::frame::{noise_variance, simulate_frame, FrameSeeds, LinkParams};
use super::metrics::{to_db, NmseDenominator};
use crate::channel::PowerDelayProfile;
use crate::dd::{FrameConfig, Scheme};
use crate::detect::{DetectorConfig, LsmrDetector};
use crate::error::{Error, Result};
use crate::jced::{GroundTruth, IterationTrace, Receiver, ReceiverOptions};
use crate::pilot::PilotLayout;

pub const CSV_HEADER: &str = "scheme,snr_db,ber,nmse,nmse_db,mean_iters,frames,seed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub schemes: Vec<Scheme>,
    pub snr_db: Vec<f64>,
    pub frames: usize,
    pub seed: u64,
    pub speed_kmh: f64,
    pub frame: FrameConfig,
    #[serde(default)]
    pub detector: DetectorConfig,
    /// Replace the detector damping with the noise standard deviation of each SNR point.
    #[serde(default = "default_true")]
    pub noise_damping: bool,
    #[serde(default)]
    pub receiver: ReceiverOptions,
    #[serde(default)]
    pub nmse_denominator: NmseDenominator,
    /// Keep per-iteration averages in the result.
    #[serde(default)]
    pub record_trace: bool,
}

fn default_true() -> bool {
    true
}

impl SweepSpec {
    /// Detector settings used at one SNR point.
    pub fn detector_at(&self, snr_db: f64) -> DetectorConfig {
        let mut cfg = self.detector.clone();
        if self.noise_damping {
            cfg.damping = noise_variance(snr_db).sqrt();
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return Err(Error::Parameter("frames must be at least 1".into()));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Parameter("SNR list must be non-empty and finite".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Parameter("scheme list must be non-empty".into()));
        }
        if !(self.speed_kmh >= 0.0) {
            return Err(Error::Parameter("speed must be non-negative".into()));
        }
        self.detector.validate()?;
        for &s in &self.schemes {
            self.frame.clone().with_scheme(s).validate()?;
        }
        Ok(())
    }
}

/// Frame-averaged metrics after each iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationSummary {
    pub iteration: usize,
    pub ber: f64,
    pub nmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub scheme: Scheme,
    pub snr_db: f64,
    pub ber: f64,
    pub nmse: f64,
    pub nmse_db: f64,
    pub mean_iters: f64,
    /// Frames that completed.
    pub frames: usize,
    pub failed_frames: usize,
    pub bit_errors: usize,
    pub bits: usize,
    pub wall_time_s: f64,
    pub trace: Vec<IterationSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub seed: u64,
    pub points: Vec<PointResult>,
}

impl SweepResult {
    pub fn point(&self, scheme: Scheme, snr_db: f64) -> Option<&PointResult> {
        self.points.iter().find(|p| p.scheme == scheme && p.snr_db == snr_db)
    }
}

struct FrameOutcome {
    bit_errors: usize,
    bits: usize,
    nmse: f64,
    stop_iteration: usize,
    trace: IterationTrace,
}

fn run_frame(
    spec: &SweepSpec,
    cfg: &FrameConfig,
    layout: &PilotLayout<f64>,
    detector: &LsmrDetector<f64>,
    link: &LinkParams,
    frame: u64,
) -> Result<FrameOutcome> {
    let sim = simulate_frame::<f64>(cfg, layout, link, FrameSeeds::for_frame(spec.seed, frame, link.snr_db))?;
    let receiver = Receiver {
        config: cfg,
        layout,
        detector,
        options: &spec.receiver,
        truth: Some(GroundTruth { taps: &sim.taps, data: &sim.data, denominator: spec.nmse_denominator }),
    };
    let out = receiver.run(&sim.received)?;
    let last = out.trace.records.last().expect("trace always holds iteration 0");
    Ok(FrameOutcome {
        bit_errors: last.bit_errors.unwrap_or(0),
        bits: last.bits,
        nmse: last.nmse.ok_or(Error::UndefinedNmse)?,
        stop_iteration: out.trace.stop_iteration,
        trace: out.trace,
    })
}

fn summarize_traces(outcomes: &[FrameOutcome]) -> Vec<IterationSummary> {
    let depth = outcomes.iter().map(|o| o.trace.records.len()).max().unwrap_or(0);
    (0..depth)
        .map(|i| {
            let (mut errors, mut bits, mut nmse) = (0usize, 0usize, 0.0);
            for o in outcomes {
                // frames that stopped early keep their final state
                let r = &o.trace.records[i.min(o.trace.records.len() - 1)];
                errors += r.bit_errors.unwrap_or(0);
                bits += r.bits;
                nmse += r.nmse.unwrap_or(f64::NAN);
            }
            IterationSummary {
                iteration: i,
                ber: if bits == 0 { 0.0 } else { errors as f64 / bits as f64 },
                nmse: nmse / outcomes.len() as f64,
            }
        })
        .collect()
}

fn run_point(spec: &SweepSpec, scheme: Scheme, snr_db: f64) -> Result<PointResult> {
    let start = Instant::now();
    let cfg = spec.frame.clone().with_scheme(scheme);
    let layout = PilotLayout::<f64>::new(&cfg)?;
    let detector = LsmrDetector::new(spec.detector_at(snr_db), cfg.qam_order)?;
    let link = LinkParams { profile: PowerDelayProfile::eva(), speed_kmh: spec.speed_kmh, snr_db };
    let results: Vec<Result<FrameOutcome>> = (0..spec.frames as u64)
        .into_par_iter()
        .map(|f| run_frame(spec, &cfg, &layout, &detector, &link, f))
        .collect();
    let mut outcomes = Vec::with_capacity(results.len());
    let mut failed = 0;
    for (f, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => outcomes.push(o),
            Err(e) => {
                failed += 1;
                log::warn!("{scheme} at {snr_db} dB, frame {f}: {e}");
            }
        }
    }
    if outcomes.is_empty() {
        return Err(Error::Numeric(format!("every frame failed for {scheme} at {snr_db} dB")));
    }
    let n = outcomes.len();
    let bit_errors: usize = outcomes.iter().map(|o| o.bit_errors).sum();
    let bits: usize = outcomes.iter().map(|o| o.bits).sum();
    let nmse = outcomes.iter().map(|o| o.nmse).sum::<f64>() / n as f64;
    let mean_iters = outcomes.iter().map(|o| o.stop_iteration as f64).sum::<f64>() / n as f64;
    let trace = if spec.record_trace { summarize_traces(&outcomes) } else { Vec::new() };
    Ok(PointResult {
        scheme,
        snr_db,
        ber: if bits == 0 { 0.0 } else { bit_errors as f64 / bits as f64 },
        nmse,
        nmse_db: to_db(nmse),
        mean_iters,
        frames: n,
        failed_frames: failed,
        bit_errors,
        bits,
        wall_time_s: start.elapsed().as_secs_f64(),
        trace,
    })
}

/// Runs every `(scheme, SNR)` point. Frames run in parallel; results are reduced in
/// frame order, so the output depends only on the spec.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let mut points = Vec::new();
    for &scheme in &spec.schemes {
        for &snr in &spec.snr_db {
            let p = run_point(spec, scheme, snr)?;
            log::info!("{scheme} {snr} dB: BER {:.3e}, NMSE {:.2} dB, {:.1}s", p.ber, p.nmse_db, p.wall_time_s);
            points.push(p);
        }
    }
    Ok(SweepResult { seed: spec.seed, points })
}

fn sci(x: f64) -> String {
    format!("{x:.9e}")
}

pub fn write_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER.split(',')).map_err(io)?;
    for p in &result.points {
        w.write_record([
            p.scheme.name().to_string(),
            sci(p.snr_db),
            sci(p.ber),
            sci(p.nmse),
            sci(p.nmse_db),
            sci(p.mean_iters),
            p.frames.to_string(),
            result.seed.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

pub fn write_csv_file(result: &SweepResult, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    write_csv(result, std::io::BufWriter::new(f))
}

/// Per-iteration averages, one row per `(scheme, SNR, iteration)`.
pub fn write_trace<W: Write>(result: &SweepResult, mut out: W) -> Result<()> {
    let io = |e: std::io::Error| Error::Io(e.to_string());
    writeln!(out, "scheme,snr_db,iteration,ber,nmse,nmse_db").map_err(io)?;
    for p in &result.points {
        for t in &p.trace {
            writeln!(out, "{},{},{},{},{},{}", p.scheme.name(), sci(p.snr_db), t.iteration, sci(t.ber), sci(t.nmse), sci(to_db(t.nmse)))
                .map_err(io)?;
        }
    }
    Ok(())
}
