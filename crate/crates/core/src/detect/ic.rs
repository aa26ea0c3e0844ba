//! Masked least-squares detection with hard-decision interference cancellation.

use serde::{Deserialize, Serialize};

use super::lsmr::{lsmr_solve, LsmrOptions};
use crate::dd::{Constellation, DdGrid, GridRole};
use crate::error::{Error, Result};
use crate::linalg::{ColumnMask, LinearOperator};
use crate::pilot::PilotLayout;
use crate::scalar::{Cx, Real};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    pub max_lsmr_iters: usize,
    pub residual_tol: f64,
    pub ic_rounds: usize,
    pub damping: f64,
    /// Share of data cells, by distance to their hard decision, re-solved in each
    /// cancellation round.
    pub ic_fraction: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig { max_lsmr_iters: 200, residual_tol: 1e-6, ic_rounds: 2, damping: 0.0, ic_fraction: 0.25 }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0) {
            return Err(Error::Parameter("residual_tol must be positive".into()));
        }
        if !(self.damping >= 0.0) || !self.damping.is_finite() {
            return Err(Error::Parameter("damping must be finite and non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.ic_fraction) {
            return Err(Error::Parameter("ic_fraction must lie in [0, 1]".into()));
        }
        if self.max_lsmr_iters == 0 {
            return Err(Error::Parameter("max_lsmr_iters must be at least 1".into()));
        }
        Ok(())
    }

    fn lsmr<T: Real>(&self) -> LsmrOptions<T> {
        LsmrOptions { damping: T::lit(self.damping), tolerance: T::lit(self.residual_tol), max_iters: self.max_lsmr_iters }
    }
}

#[derive(Debug, Clone)]
pub struct DetectionResult<T> {
    pub soft: DdGrid<T>,
    /// Constellation points on data cells, zero elsewhere.
    pub hard: DdGrid<T>,
    pub lsmr_iterations: usize,
    pub residual_norm: T,
}

/// A receiver back end turning a pilot-free observation into data decisions.
pub trait Detector<T: Real>: Sync {
    fn detect(&self, channel: &dyn LinearOperator<T>, y: &[Cx<T>], layout: &PilotLayout<T>) -> Result<DetectionResult<T>>;
}

/// LSMR with interference cancellation.
#[derive(Debug, Clone)]
pub struct LsmrDetector<T> {
    pub config: DetectorConfig,
    pub constellation: Constellation<T>,
}

impl<T: Real> LsmrDetector<T> {
    pub fn new(config: DetectorConfig, qam_order: usize) -> Result<Self> {
        config.validate()?;
        Ok(LsmrDetector { config, constellation: Constellation::new(qam_order)? })
    }
}

impl<T: Real> Detector<T> for LsmrDetector<T> {
    fn detect(&self, channel: &dyn LinearOperator<T>, y: &[Cx<T>], layout: &PilotLayout<T>) -> Result<DetectionResult<T>> {
        detect_with_ic(channel, y, layout, &self.constellation, &self.config)
    }
}

/// Returns known symbols; isolates estimation from detection errors in tests.
#[derive(Debug, Clone)]
pub struct GenieDetector<T> {
    pub data: DdGrid<T>,
}

impl<T: Real> Detector<T> for GenieDetector<T> {
    fn detect(&self, _channel: &dyn LinearOperator<T>, _y: &[Cx<T>], layout: &PilotLayout<T>) -> Result<DetectionResult<T>> {
        let mut hard = self.data.clone().with_role(GridRole::Data);
        for (z, &d) in hard.as_mut_slice().iter_mut().zip(layout.data_mask()) {
            if !d {
                *z = Cx::new(T::zero(), T::zero());
            }
        }
        Ok(DetectionResult { soft: hard.clone(), hard, lsmr_iterations: 0, residual_norm: T::zero() })
    }
}

fn hard_grid<T: Real>(soft: &[Cx<T>], mask: &[bool], c: &Constellation<T>) -> Vec<Cx<T>> {
    soft.iter().zip(mask).map(|(&s, &d)| if d { c.decide(s) } else { Cx::new(T::zero(), T::zero()) }).collect()
}

/// Least-squares estimate of the data cells of `y = A x`, followed by
/// `ic_rounds` passes that cancel the confident decisions and re-solve the rest.
pub fn detect_with_ic<T: Real, A: LinearOperator<T> + ?Sized>(
    channel: &A,
    y: &[Cx<T>],
    layout: &PilotLayout<T>,
    constellation: &Constellation<T>,
    cfg: &DetectorConfig,
) -> Result<DetectionResult<T>> {
    let cells = layout.delay_bins() * layout.doppler_bins();
    if y.len() != cells || channel.rows() != cells || channel.cols() != cells {
        return Err(Error::Dimension(format!(
            "observation {} / operator {}x{} for a {cells}-cell frame",
            y.len(),
            channel.rows(),
            channel.cols()
        )));
    }
    let opts = cfg.lsmr::<T>();
    let mask = layout.data_mask();
    let first = lsmr_solve(&ColumnMask::new(channel, mask), y, &opts)?;
    let mut iterations = first.iterations;
    let mut residual = first.residual_norm();
    let mut soft = first.x;

    let data_idx = layout.data_indices();
    let redo = ((data_idx.len() as f64) * cfg.ic_fraction).round() as usize;
    if redo > 0 {
        for _ in 0..cfg.ic_rounds {
            let hard = hard_grid(&soft, mask, constellation);
            let mut order: Vec<(T, usize)> = data_idx.iter().map(|&i| ((soft[i] - hard[i]).norm_sqr(), i)).collect();
            // least confident first; index breaks ties deterministically
            order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
            let mut uncertain = vec![false; cells];
            for &(_, i) in order.iter().take(redo) {
                uncertain[i] = true;
            }
            let confident: Vec<Cx<T>> = hard
                .iter()
                .zip(&uncertain)
                .map(|(&h, &u)| if u { Cx::new(T::zero(), T::zero()) } else { h })
                .collect();
            let known = channel.apply_vec(&confident);
            let rest: Vec<Cx<T>> = y.iter().zip(&known).map(|(a, b)| a - b).collect();
            let out = lsmr_solve(&ColumnMask::new(channel, &uncertain), &rest, &opts)?;
            iterations += out.iterations;
            residual = out.residual_norm();
            for i in 0..cells {
                soft[i] = if uncertain[i] { out.x[i] } else { confident[i] };
            }
        }
    }
    let hard = hard_grid(&soft, mask, constellation);
    let (m, n) = (layout.delay_bins(), layout.doppler_bins());
    Ok(DetectionResult {
        soft: DdGrid::from_vec(m, n, soft, GridRole::Data)?,
        hard: DdGrid::from_vec(m, n, hard, GridRole::Data)?,
        lsmr_iterations: iterations,
        residual_norm: residual,
    })
}

/// True iff any of the listed cells differs between the two decisions.
pub fn symbols_changed<T: Real>(current: &DdGrid<T>, previous: &DdGrid<T>, cells: &[usize]) -> bool {
    cells.iter().any(|&i| current.as_slice()[i] != previous.as_slice()[i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dd::{FrameConfig, Scheme};
    use crate::linalg::Identity;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn small() -> (FrameConfig, PilotLayout<f64>) {
        let cfg = FrameConfig::new(16, 4, 1e-6, 2).with_scheme(Scheme::FullGuard);
        let lay = PilotLayout::new(&cfg).unwrap();
        (cfg, lay)
    }

    fn random_symbols(lay: &PilotLayout<f64>, seed: u64) -> DdGrid<f64> {
        let c = Constellation::<f64>::new(4).unwrap();
        let pts = c.points();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let syms: Vec<_> = (0..lay.data_count()).map(|_| pts[rng.gen_range(0..4)]).collect();
        lay.data_grid(&syms).unwrap()
    }

    #[test]
    fn noiseless_identity_recovers_data() {
        let (_, lay) = small();
        let d = random_symbols(&lay, 1);
        let c = Constellation::new(4).unwrap();
        let r = detect_with_ic(&Identity(64), d.as_slice(), &lay, &c, &DetectorConfig::default()).unwrap();
        assert_eq!(r.hard.as_slice(), d.as_slice());
    }

    #[test]
    fn guard_cells_stay_zero() {
        let (_, lay) = small();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let y: Vec<_> = (0..64).map(|_| Cx::new(rng.gen::<f64>(), rng.gen::<f64>())).collect();
        let c = Constellation::new(4).unwrap();
        let r = detect_with_ic(&Identity(64), &y, &lay, &c, &DetectorConfig::default()).unwrap();
        for i in 0..64 {
            if !lay.data_mask()[i] {
                assert_eq!(r.soft.as_slice()[i].norm(), 0.0);
                assert_eq!(r.hard.as_slice()[i].norm(), 0.0);
            }
        }
    }

    #[test]
    fn config_validation() {
        assert!(DetectorConfig::default().validate().is_ok());
        let bad = DetectorConfig { residual_tol: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = DetectorConfig { ic_fraction: 1.5, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let (_, lay) = small();
        let c = Constellation::new(4).unwrap();
        assert!(detect_with_ic(&Identity(63), &[Cx::new(0.0, 0.0); 63], &lay, &c, &DetectorConfig::default()).is_err());
    }

    #[test]
    fn change_detection() {
        let (_, lay) = small();
        let a = random_symbols(&lay, 3);
        let mut b = a.clone();
        assert!(!symbols_changed(&a, &b, &[0, 1, 2]));
        b.as_mut_slice()[1] = -b.as_slice()[1];
        assert!(symbols_changed(&a, &b, &[0, 1, 2]));
        assert!(!symbols_changed(&a, &b, &[5, 6]));
    }

    #[test]
    fn genie_masks_non_data() {
        let (_, lay) = small();
        let mut d = random_symbols(&lay, 4);
        d.as_mut_slice()[8] = Cx::new(3.0, 0.0);
        let g = GenieDetector { data: d.clone() };
        let r = g.detect(&Identity(64), &[], &lay).unwrap();
        assert!(!lay.data_mask()[8]);
        assert_eq!(r.hard.as_slice()[8].norm(), 0.0);
        assert_eq!(r.hard.as_slice()[0], d.as_slice()[0]);
    }

    fn complex_noise(rng: &mut ChaCha8Rng, var: f64) -> Cx<f64> {
        use rand_distr::StandardNormal;
        let s = (var / 2.0).sqrt();
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Cx::new(s * re, s * im)
    }

    #[test]
    fn awgn_ber_matches_closed_form() {
        use crate::channel::{ChannelRealization, DdChannelOperator};
        let cfg = FrameConfig::new(64, 16, 520.3e-9, 5).with_scheme(Scheme::FullGuard);
        let lay = PilotLayout::<f64>::new(&cfg).unwrap();
        let chan = DdChannelOperator::from_realization(&ChannelRealization::single_tap(0), &cfg).unwrap();
        let det = LsmrDetector::new(DetectorConfig::default(), 4).unwrap();
        let c = Constellation::<f64>::new(4).unwrap();
        let snr_db = 10.0;
        let var = 10f64.powf(-snr_db / 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (mut errors, mut bits, mut symbols) = (0usize, 0usize, 0usize);
        let mut frame = 0;
        while symbols < 1_000_000 {
            let d = random_symbols(&lay, 1000 + frame);
            frame += 1;
            let y: Vec<_> = chan.apply_vec(d.as_slice()).into_iter().map(|v| v + complex_noise(&mut rng, var)).collect();
            let r = det.detect(&chan, &y, &lay).unwrap();
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for i in lay.data_indices() {
                c.demap_into(d.as_slice()[i], &mut a);
                c.demap_into(r.hard.as_slice()[i], &mut b);
            }
            errors += a.iter().zip(&b).filter(|(x, y)| x != y).count();
            bits += a.len();
            symbols += lay.data_count();
        }
        let ber = errors as f64 / bits as f64;
        // Gray 4-QAM: Q(sqrt(Es/N0)) per bit
        let theory = 0.5 * statrs::function::erf::erfc((1.0 / var).sqrt() / 2f64.sqrt());
        assert!((ber / theory - 1.0).abs() < 0.1, "ber {ber} theory {theory}");
    }

    #[test]
    fn known_eva_channel_at_high_snr() {
        use crate::experiments::{profile_spec, simulate_frame, FrameSeeds, LinkParams, Profile};
        use crate::channel::{DdChannelOperator, PowerDelayProfile};
        use crate::pilot::multiplex;
        let spec = profile_spec(Profile::Fig2);
        let cfg = spec.frame.clone().with_scheme(Scheme::FullGuard);
        let lay = PilotLayout::<f64>::new(&cfg).unwrap();
        let snr_db = 20.0;
        let det = LsmrDetector::new(spec.detector_at(snr_db), 4).unwrap();
        let c = Constellation::<f64>::new(4).unwrap();
        let link = LinkParams { profile: PowerDelayProfile::eva(), speed_kmh: spec.speed_kmh, snr_db };
        let (mut errors, mut bits) = (0usize, 0usize);
        for f in 0..3 {
            let sim = simulate_frame::<f64>(&cfg, &lay, &link, FrameSeeds::for_frame(5, f, snr_db)).unwrap();
            let chan = DdChannelOperator::from_realization(&sim.channel, &cfg).unwrap();
            let pilot = chan.apply_vec(multiplex(&DdGrid::zeros(cfg.delay_bins, cfg.doppler_bins, GridRole::Data), &lay.pilot_grid(), &lay).unwrap().as_slice());
            let y: Vec<_> = sim.received.as_slice().iter().zip(&pilot).map(|(a, b)| a - b).collect();
            let r = det.detect(&chan, &y, &lay).unwrap();
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for i in lay.data_indices() {
                c.demap_into(sim.data.as_slice()[i], &mut a);
                c.demap_into(r.hard.as_slice()[i], &mut b);
            }
            errors += a.iter().zip(&b).filter(|(x, y)| x != y).count();
            bits += a.len();
        }
        let ber = errors as f64 / bits as f64;
        assert!(ber < 1e-3, "{ber}");
    }
}
