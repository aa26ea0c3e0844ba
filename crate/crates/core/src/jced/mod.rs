//! Receivers: the single-shot full-guard receiver, the iterative reduced-guard
//! baseline, and the two-stage split-pilot joint estimation and detection loop.

use serde::{Deserialize, Serialize};

use crate::channel::{DdChannelOperator, DelayTimeChannel};
use crate::chest::{
    check_estimator_config, estimate_full_guard, estimate_reduced_guard, estimate_split_initial, interpolate_to_heff,
    refine_reduced_guard, refine_split, remove_pilot, remove_pilots_cross, sbc_from_grid, CancellationMode, Differenced,
    Interpolation, PilotRegion, RegionDifference, RegionTag, SplitEstimate, SplitPrior,
};
use crate::dd::{Constellation, DdGrid, FrameConfig, Scheme};
use crate::detect::{symbols_changed, DetectionResult, Detector};
use crate::error::{Error, Result};
use crate::experiments::{bit_errors, nmse_taps, NmseDenominator};
use crate::pilot::PilotLayout;
use crate::scalar::{Cx, Real};

/// Which previous estimate multiplies the detected-data operators in split refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PriorMode {
    #[default]
    Averaged,
    PerPilot,
}

/// Delay row at which the averaged split estimate is taken to sample the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AverageAnchor {
    /// The first pilot's row.
    FirstPilot,
    /// Halfway between the two pilots.
    #[default]
    Midpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReceiverOptions {
    pub interpolation: Interpolation,
    pub split_prior: PriorMode,
    pub cancellation: CancellationMode,
    pub average_anchor: AverageAnchor,
    /// Leave the split loop as soon as the decisions on the data rows next to the
    /// pilots stop changing.
    pub early_stop: bool,
}

impl Default for ReceiverOptions {
    fn default() -> Self {
        ReceiverOptions {
            interpolation: Interpolation::default(),
            split_prior: PriorMode::Averaged,
            cancellation: CancellationMode::BothRegions,
            average_anchor: AverageAnchor::default(),
            early_stop: true,
        }
    }
}

/// Known channel and data, for per-iteration metrics.
#[derive(Debug, Clone, Copy)]
pub struct GroundTruth<'a, T> {
    pub taps: &'a DelayTimeChannel<T>,
    pub data: &'a DdGrid<T>,
    pub denominator: NmseDenominator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    SingleShot,
    SymbolsStable,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub nmse: Option<f64>,
    pub bit_errors: Option<usize>,
    pub bits: usize,
    /// Whether decisions on the stopping rows changed from the previous iteration.
    pub symbols_changed: Option<bool>,
}

impl IterationRecord {
    pub fn ber(&self) -> Option<f64> {
        self.bit_errors.map(|e| if self.bits == 0 { 0.0 } else { e as f64 / self.bits as f64 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    pub stop_reason: StopReason,
    /// First iteration at which the loop could stop.
    pub stop_iteration: usize,
}

#[derive(Debug, Clone)]
pub struct ReceiverOutput<T: Real> {
    pub channel: DdChannelOperator<T>,
    /// Pilot-column estimate behind `channel`.
    pub estimate: Vec<Cx<T>>,
    pub detection: DetectionResult<T>,
    pub trace: IterationTrace,
}

/// Everything a receiver needs besides the received frame.
pub struct Receiver<'a, T: Real> {
    pub config: &'a FrameConfig,
    pub layout: &'a PilotLayout<T>,
    pub detector: &'a dyn Detector<T>,
    pub options: &'a ReceiverOptions,
    pub truth: Option<GroundTruth<'a, T>>,
}

impl<'a, T: Real> Receiver<'a, T> {
    pub fn run(&self, y: &DdGrid<T>) -> Result<ReceiverOutput<T>> {
        match self.layout.scheme() {
            Scheme::FullGuard => run_full_guard(y, self),
            Scheme::ReducedGuard => run_reduced_guard(y, self),
            Scheme::SplitPilot => run_split_pilot(y, self),
        }
    }

    fn check(&self, y: &DdGrid<T>, scheme: Scheme) -> Result<()> {
        if self.layout.scheme() != scheme || self.config.scheme != scheme {
            return Err(Error::Precondition(format!("{scheme} receiver given a {} frame", self.layout.scheme())));
        }
        if y.delay_bins() != self.config.delay_bins || y.doppler_bins() != self.config.doppler_bins {
            return Err(Error::Dimension("received grid does not match the frame".into()));
        }
        check_estimator_config(self.config)
    }

    fn interpolate(&self, estimate: &[Cx<T>], anchor_row: f64) -> Result<DdChannelOperator<T>> {
        interpolate_to_heff(estimate, anchor_row, self.config, self.config.channel_len, self.options.interpolation)
    }

    fn record(&self, iteration: usize, channel: &DdChannelOperator<T>, det: &DetectionResult<T>, changed: Option<bool>) -> Result<IterationRecord> {
        let Some(truth) = self.truth else {
            return Ok(IterationRecord { iteration, nmse: None, bit_errors: None, bits: 0, symbols_changed: changed });
        };
        let nmse = nmse_taps(truth.taps, channel.taps(), self.config.frame_len(), self.config.cp_len, truth.denominator).ok();
        let (errors, bits) = data_bit_errors(truth.data, &det.hard, self.layout, self.config.qam_order)?;
        Ok(IterationRecord { iteration, nmse, bit_errors: Some(errors), bits, symbols_changed: changed })
    }
}

/// Bit errors between two symbol grids over the layout's data cells.
pub fn data_bit_errors<T: Real>(tx: &DdGrid<T>, rx: &DdGrid<T>, layout: &PilotLayout<T>, qam_order: usize) -> Result<(usize, usize)> {
    let c = Constellation::<T>::new(qam_order)?;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for i in layout.data_indices() {
        c.demap_into(tx.as_slice()[i], &mut a);
        c.demap_into(rx.as_slice()[i], &mut b);
    }
    Ok((bit_errors(&a, &b), a.len()))
}

/// Single-shot estimate, interpolation, pilot removal and detection.
pub fn run_full_guard<T: Real>(y: &DdGrid<T>, rx: &Receiver<'_, T>) -> Result<ReceiverOutput<T>> {
    rx.check(y, Scheme::FullGuard)?;
    let cfg = rx.config;
    let y_p = PilotRegion::extract(y, cfg, RegionTag::Single)?;
    let estimate = estimate_full_guard(&y_p.values, cfg.pilot_power)?;
    let channel = rx.interpolate(&estimate, cfg.pilot_delay as f64)?;
    let z = remove_pilot(y, &channel, rx.layout)?;
    let detection = rx.detector.detect(&channel, z.as_slice(), rx.layout)?;
    let trace = IterationTrace {
        records: vec![rx.record(0, &channel, &detection, None)?],
        stop_reason: StopReason::SingleShot,
        stop_iteration: 0,
    };
    Ok(ReceiverOutput { channel, estimate, detection, trace })
}

/// Estimate absorbing the data above the pilot, then `max_iterations` rounds of
/// cancelling the detected data from the pilot region and re-detecting.
pub fn run_reduced_guard<T: Real>(y: &DdGrid<T>, rx: &Receiver<'_, T>) -> Result<ReceiverOutput<T>> {
    rx.check(y, Scheme::ReducedGuard)?;
    let cfg = rx.config;
    let (mp, l) = (cfg.pilot_delay, cfg.channel_len);
    let y_p = PilotRegion::extract(y, cfg, RegionTag::Single)?;
    let mut estimate = estimate_reduced_guard(&y_p.values, cfg.pilot_power)?;
    let mut channel = rx.interpolate(&estimate, mp as f64)?;
    let z = remove_pilot(y, &channel, rx.layout)?;
    let mut detection = rx.detector.detect(&channel, z.as_slice(), rx.layout)?;
    let mut records = vec![rx.record(0, &channel, &detection, None)?];
    for n in 1..=cfg.max_iterations {
        let sd = sbc_from_grid(&detection.hard, mp, l)?;
        estimate = refine_reduced_guard(&y_p.values, Some(&sd), Some(&estimate), cfg.pilot_power)?;
        channel = rx.interpolate(&estimate, mp as f64)?;
        let z = remove_pilot(y, &channel, rx.layout)?;
        detection = rx.detector.detect(&channel, z.as_slice(), rx.layout)?;
        records.push(rx.record(n, &channel, &detection, None)?);
    }
    let trace = IterationTrace { records, stop_reason: StopReason::IterationLimit, stop_iteration: cfg.max_iterations };
    Ok(ReceiverOutput { channel, estimate, detection, trace })
}

/// Data cells whose decisions feed the two pilot regions' interference terms.
pub fn split_support_cells<T: Real>(cfg: &FrameConfig, layout: &PilotLayout<T>) -> Vec<usize> {
    let (m, mp, l) = (cfg.delay_bins, cfg.pilot_delay, cfg.channel_len);
    let rows = (mp + 1 - l..mp).chain(mp + l..mp + 2 * l);
    let mut cells: Vec<usize> = rows
        .flat_map(|r| (0..cfg.doppler_bins).map(move |c| c * m + r))
        .filter(|&i| layout.data_mask()[i])
        .collect();
    cells.sort_unstable();
    cells
}

/// The two-stage split-pilot receiver.
///
/// Stage 1 averages the two raw estimates and detects from the region-differenced
/// observation. Each stage-2 iteration cancels the detected data from both pilot
/// regions, removes each pilot with the channel rebuilt from the other pilot, and
/// detects with the averaged channel.
pub fn run_split_pilot<T: Real>(y: &DdGrid<T>, rx: &Receiver<'_, T>) -> Result<ReceiverOutput<T>> {
    rx.check(y, Scheme::SplitPilot)?;
    let cfg = rx.config;
    let (mp, l) = (cfg.pilot_delay, cfg.channel_len);
    let average_row = match rx.options.average_anchor {
        AverageAnchor::FirstPilot => mp as f64,
        AverageAnchor::Midpoint => mp as f64 + l as f64 / 2.0,
    };
    let y1 = PilotRegion::extract(y, cfg, RegionTag::First)?;
    let y2 = PilotRegion::extract(y, cfg, RegionTag::Second)?;

    let mut est: SplitEstimate<T> = estimate_split_initial(&y1.values, &y2.values, cfg.pilot_power)?;
    let mut channel = rx.interpolate(&est.average, average_row)?;
    let diff = RegionDifference::new(cfg, rx.options.cancellation);
    let z = diff.apply(y.as_slice());
    let mut detection = rx.detector.detect(&Differenced::new(diff, &channel), &z, rx.layout)?;
    let mut records = vec![rx.record(0, &channel, &detection, None)?];

    let support = split_support_cells(cfg, rx.layout);
    let mut stopped_at = None;
    for n in 1..=cfg.max_iterations {
        let sd1 = sbc_from_grid(&detection.hard, mp, l)?;
        let sd2 = sbc_from_grid(&detection.hard, mp + l, l)?;
        let prior = match rx.options.split_prior {
            PriorMode::Averaged => SplitPrior::Averaged(&est.average),
            PriorMode::PerPilot => SplitPrior::PerPilot(&est.first, &est.second),
        };
        est = refine_split(&y1.values, &y2.values, Some(&sd1), Some(&sd2), Some(prior), cfg.pilot_power)?;
        let from_first = rx.interpolate(&est.first, mp as f64)?;
        let from_second = rx.interpolate(&est.second, (mp + l) as f64)?;
        let z = remove_pilots_cross(y, &from_second, &from_first, rx.layout)?;
        channel = rx.interpolate(&est.average, average_row)?;
        let next = rx.detector.detect(&channel, z.as_slice(), rx.layout)?;
        let changed = symbols_changed(&next.hard, &detection.hard, &support);
        detection = next;
        records.push(rx.record(n, &channel, &detection, Some(changed))?);
        if !changed && stopped_at.is_none() {
            stopped_at = Some(n);
            if rx.options.early_stop {
                break;
            }
        }
    }
    let trace = match stopped_at {
        Some(n) => IterationTrace { records, stop_reason: StopReason::SymbolsStable, stop_iteration: n },
        None => IterationTrace { records, stop_reason: StopReason::IterationLimit, stop_iteration: cfg.max_iterations },
    };
    Ok(ReceiverOutput { channel, estimate: est.average, detection, trace })
}
