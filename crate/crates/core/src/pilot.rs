//! Pilot layouts for the three schemes, data/pilot multiplexing and overhead
//! accounting.
//!
//! Full guard: rows `m_p-L+1 ..= m_p+L-1` are pilot or guard in every Doppler
//! column. Reduced guard: the top `k` of those rows carry data. Split pilot: rows
//! `m_p ..= m_p+L-1` are guard apart from pilot 1 at `(m_p, n_p)`, and pilot 2 sits
//! on top of the data symbol at `(m_p+L, n_p)`.

use crate::dd::{DdGrid, FrameConfig, GridRole, Scheme};
use crate::error::{Error, Result};
use crate::scalar::{Cx, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotCell<T> {
    pub delay: usize,
    pub doppler: usize,
    pub amplitude: Cx<T>,
}

/// Classification of every cell of an `M x N` frame for one scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotLayout<T> {
    scheme: Scheme,
    delay_bins: usize,
    doppler_bins: usize,
    channel_len: usize,
    pilots: Vec<PilotCell<T>>,
    guard: Vec<bool>,
    data: Vec<bool>,
}

impl<T: Real> PilotLayout<T> {
    pub fn new(cfg: &FrameConfig) -> Result<Self> {
        cfg.validate()?;
        let (m, n, l) = (cfg.delay_bins, cfg.doppler_bins, cfg.channel_len);
        let (mp, np) = (cfg.pilot_delay, cfg.pilot_doppler);
        let mut guard = vec![false; m * n];
        let mut data = vec![true; m * n];
        let mut pilots = Vec::new();
        let amp = Cx::new(T::lit(cfg.pilot_amplitude()), T::zero());

        let reserved = match cfg.scheme {
            Scheme::FullGuard => (mp + 1 - l)..(mp + l),
            Scheme::ReducedGuard => (mp + 1 - l + cfg.reclaimed_rows)..(mp + l),
            Scheme::SplitPilot => mp..(mp + l),
        };
        for col in 0..n {
            for row in reserved.clone() {
                guard[col * m + row] = true;
                data[col * m + row] = false;
            }
        }
        guard[np * m + mp] = false;
        pilots.push(PilotCell { delay: mp, doppler: np, amplitude: amp });
        if cfg.scheme == Scheme::SplitPilot {
            // superimposed on a data cell
            pilots.push(PilotCell { delay: mp + l, doppler: np, amplitude: amp });
        }
        Ok(PilotLayout { scheme: cfg.scheme, delay_bins: m, doppler_bins: n, channel_len: l, pilots, guard, data })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn delay_bins(&self) -> usize {
        self.delay_bins
    }

    pub fn doppler_bins(&self) -> usize {
        self.doppler_bins
    }

    pub fn channel_len(&self) -> usize {
        self.channel_len
    }

    pub fn pilots(&self) -> &[PilotCell<T>] {
        &self.pilots
    }

    pub fn guard_mask(&self) -> &[bool] {
        &self.guard
    }

    pub fn data_mask(&self) -> &[bool] {
        &self.data
    }

    pub fn is_pilot(&self, idx: usize) -> bool {
        self.pilots.iter().any(|p| p.doppler * self.delay_bins + p.delay == idx)
    }

    /// Column-major indices of data cells.
    pub fn data_indices(&self) -> Vec<usize> {
        self.data.iter().enumerate().filter_map(|(i, &d)| d.then_some(i)).collect()
    }

    pub fn data_count(&self) -> usize {
        self.data.iter().filter(|&&d| d).count()
    }

    /// Cells not available to data.
    pub fn overhead(&self) -> usize {
        self.delay_bins * self.doppler_bins - self.data_count()
    }

    pub fn pilot_energy(&self) -> T {
        self.pilots.iter().fold(T::zero(), |acc, p| acc + p.amplitude.norm_sqr())
    }

    /// The pilot grid `P`.
    pub fn pilot_grid(&self) -> DdGrid<T> {
        let mut p = DdGrid::zeros(self.delay_bins, self.doppler_bins, GridRole::Pilot);
        for c in &self.pilots {
            p.set(c.delay, c.doppler, c.amplitude);
        }
        p
    }

    /// Pilot grid holding only the `which`-th impulse.
    pub fn single_pilot_grid(&self, which: usize) -> DdGrid<T> {
        let mut p = DdGrid::zeros(self.delay_bins, self.doppler_bins, GridRole::Pilot);
        let c = self.pilots[which];
        p.set(c.delay, c.doppler, c.amplitude);
        p
    }

    /// Places symbols (in `data_indices` order) on the data cells.
    pub fn data_grid(&self, symbols: &[Cx<T>]) -> Result<DdGrid<T>> {
        let idx = self.data_indices();
        if symbols.len() != idx.len() {
            return Err(Error::Dimension(format!("{} symbols for {} data cells", symbols.len(), idx.len())));
        }
        let mut d = DdGrid::zeros(self.delay_bins, self.doppler_bins, GridRole::Data);
        for (&i, &s) in idx.iter().zip(symbols) {
            d.as_mut_slice()[i] = s;
        }
        Ok(d)
    }

    /// Symbols on the data cells of a grid, in `data_indices` order.
    pub fn gather_data(&self, grid: &DdGrid<T>) -> Vec<Cx<T>> {
        self.data_indices().into_iter().map(|i| grid.as_slice()[i]).collect()
    }
}

/// Builds the layout for `cfg.scheme`.
pub fn layout<T: Real>(cfg: &FrameConfig) -> Result<PilotLayout<T>> {
    PilotLayout::new(cfg)
}

/// `X = D + P`, checking that `D` is silent on guard and pure-pilot cells and `P`
/// is silent off the pilot cells.
pub fn multiplex<T: Real>(data: &DdGrid<T>, pilot: &DdGrid<T>, layout: &PilotLayout<T>) -> Result<DdGrid<T>> {
    let (m, n) = (layout.delay_bins(), layout.doppler_bins());
    for g in [data, pilot] {
        if g.delay_bins() != m || g.doppler_bins() != n {
            return Err(Error::Dimension("grid does not match layout".into()));
        }
    }
    let zero = Cx::new(T::zero(), T::zero());
    let mut out = DdGrid::zeros(m, n, GridRole::Multiplexed);
    for i in 0..m * n {
        let d = data.as_slice()[i];
        let p = pilot.as_slice()[i];
        if !layout.data_mask()[i] && d != zero {
            return Err(Error::LayoutViolation(format!("data on non-data cell ({}, {})", i % m, i / m)));
        }
        if !layout.is_pilot(i) && p != zero {
            return Err(Error::LayoutViolation(format!("pilot energy on cell ({}, {})", i % m, i / m)));
        }
        out.as_mut_slice()[i] = d + p;
    }
    Ok(out)
}

/// Pilot overhead in cells: `(2L-1)N`, `(2L-1-k)N` or `LN`.
pub fn overhead(scheme: Scheme, channel_len: usize, doppler_bins: usize, reclaimed_rows: usize) -> usize {
    let l = channel_len;
    match scheme {
        Scheme::FullGuard => (2 * l - 1) * doppler_bins,
        Scheme::ReducedGuard => (2 * l - 1 - reclaimed_rows) * doppler_bins,
        Scheme::SplitPilot => l * doppler_bins,
    }
}
