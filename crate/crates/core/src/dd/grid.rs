use crate::error::{Error, Result};
use crate::scalar::{Cx, Real};

/// What a grid holds. Purely descriptive; arithmetic does not depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridRole {
    Data,
    Pilot,
    Multiplexed,
    Received,
}

/// `M x N` complex delay-Doppler frame stored column-major (`n * M + m`).
#[derive(Debug, Clone, PartialEq)]
pub struct DdGrid<T> {
    delay_bins: usize,
    doppler_bins: usize,
    cells: Vec<Cx<T>>,
    pub role: GridRole,
}

impl<T: Real> DdGrid<T> {
    pub fn zeros(delay_bins: usize, doppler_bins: usize, role: GridRole) -> Self {
        DdGrid {
            delay_bins,
            doppler_bins,
            cells: vec![Cx::new(T::zero(), T::zero()); delay_bins * doppler_bins],
            role,
        }
    }

    /// Wraps an already vectorized grid (`vec(X)`).
    pub fn from_vec(delay_bins: usize, doppler_bins: usize, cells: Vec<Cx<T>>, role: GridRole) -> Result<Self> {
        if cells.len() != delay_bins * doppler_bins {
            return Err(Error::Dimension(format!(
                "expected {} cells for a {delay_bins}x{doppler_bins} grid, got {}",
                delay_bins * doppler_bins,
                cells.len()
            )));
        }
        Ok(DdGrid { delay_bins, doppler_bins, cells, role })
    }

    pub fn delay_bins(&self) -> usize {
        self.delay_bins
    }

    pub fn doppler_bins(&self) -> usize {
        self.doppler_bins
    }

    #[inline]
    pub fn index(&self, m: usize, n: usize) -> usize {
        debug_assert!(m < self.delay_bins && n < self.doppler_bins);
        n * self.delay_bins + m
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> Cx<T> {
        self.cells[self.index(m, n)]
    }

    #[inline]
    pub fn set(&mut self, m: usize, n: usize, v: Cx<T>) {
        let i = self.index(m, n);
        self.cells[i] = v;
    }

    /// `vec(X)`.
    pub fn as_slice(&self) -> &[Cx<T>] {
        &self.cells
    }

    pub fn as_mut_slice(&mut self) -> &mut [Cx<T>] {
        &mut self.cells
    }

    pub fn into_vec(self) -> Vec<Cx<T>> {
        self.cells
    }

    pub fn with_role(mut self, role: GridRole) -> Self {
        self.role = role;
        self
    }

    /// Vectorizes rows `first .. first + rows` (delay-major inside each Doppler column).
    /// Entry `(first + i, n)` lands at index `n * rows + i`.
    pub fn region(&self, first: usize, rows: usize) -> Result<Vec<Cx<T>>> {
        if first + rows > self.delay_bins {
            return Err(Error::Dimension(format!(
                "rows {first}..{} exceed {} delay bins",
                first + rows,
                self.delay_bins
            )));
        }
        let mut out = Vec::with_capacity(rows * self.doppler_bins);
        for n in 0..self.doppler_bins {
            let base = n * self.delay_bins + first;
            out.extend_from_slice(&self.cells[base..base + rows]);
        }
        Ok(out)
    }

    /// Inverse of [`DdGrid::region`]: overwrites rows `first .. first + rows`.
    pub fn set_region(&mut self, first: usize, rows: usize, values: &[Cx<T>]) -> Result<()> {
        if first + rows > self.delay_bins || values.len() != rows * self.doppler_bins {
            return Err(Error::Dimension("region does not fit grid".into()));
        }
        for n in 0..self.doppler_bins {
            let base = n * self.delay_bins + first;
            self.cells[base..base + rows].copy_from_slice(&values[n * rows..(n + 1) * rows]);
        }
        Ok(())
    }

    pub fn energy(&self) -> T {
        crate::scalar::norm_sqr(&self.cells)
    }
}
