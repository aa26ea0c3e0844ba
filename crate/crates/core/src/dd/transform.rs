use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use super::grid::{DdGrid, GridRole};
use crate::error::{Error, Result};
use crate::scalar::{Cx, Real};

/// Planned unitary `N`-point transforms between the delay-Doppler and delay-time
/// domains for an `M x N` frame.
///
/// Both domains share the column-major layout, so each transform is an `N`-point
/// (I)DFT along stride-`M` "rows" followed by a `1/sqrt(N)` scaling.
#[derive(Clone)]
pub struct DdTransform<T: Real> {
    delay_bins: usize,
    doppler_bins: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    scale: T,
}

impl<T: Real> std::fmt::Debug for DdTransform<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DdTransform")
            .field("delay_bins", &self.delay_bins)
            .field("doppler_bins", &self.doppler_bins)
            .finish()
    }
}

impl<T: Real> DdTransform<T> {
    pub fn new(delay_bins: usize, doppler_bins: usize) -> Self {
        let mut planner = FftPlanner::new();
        DdTransform {
            delay_bins,
            doppler_bins,
            forward: planner.plan_fft_forward(doppler_bins),
            inverse: planner.plan_fft_inverse(doppler_bins),
            scale: T::one() / T::from_usize_lossy(doppler_bins).sqrt(),
        }
    }

    pub fn delay_bins(&self) -> usize {
        self.delay_bins
    }

    pub fn doppler_bins(&self) -> usize {
        self.doppler_bins
    }

    fn strided(&self, buf: &mut [Cx<T>], fft: &Arc<dyn Fft<T>>) {
        let (m, n) = (self.delay_bins, self.doppler_bins);
        assert_eq!(buf.len(), m * n, "buffer length must be M*N");
        let mut row = vec![Cx::new(T::zero(), T::zero()); n];
        let mut scratch = vec![Cx::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
        for d in 0..m {
            for (k, r) in row.iter_mut().enumerate() {
                *r = buf[k * m + d];
            }
            fft.process_with_scratch(&mut row, &mut scratch);
            for (k, r) in row.iter().enumerate() {
                buf[k * m + d] = *r * self.scale;
            }
        }
    }

    /// `(F_N^H kron I_M)` in place: delay-Doppler to delay-time.
    pub fn to_delay_time_inplace(&self, buf: &mut [Cx<T>]) {
        self.strided(buf, &self.inverse);
    }

    /// `(F_N kron I_M)` in place: delay-time to delay-Doppler.
    pub fn to_delay_doppler_inplace(&self, buf: &mut [Cx<T>]) {
        self.strided(buf, &self.forward);
    }
}

/// Delay-Doppler grid to its delay-time sample vector (length `M N`, no CP).
pub fn dd_to_delay_time<T: Real>(x: &DdGrid<T>) -> Vec<Cx<T>> {
    let t = DdTransform::new(x.delay_bins(), x.doppler_bins());
    let mut buf = x.as_slice().to_vec();
    t.to_delay_time_inplace(&mut buf);
    buf
}

/// Delay-time samples (length `M N`, CP removed) back to a received grid.
pub fn delay_time_to_dd<T: Real>(r: &[Cx<T>], delay_bins: usize, doppler_bins: usize) -> Result<DdGrid<T>> {
    if r.len() != delay_bins * doppler_bins {
        return Err(Error::Dimension(format!(
            "delay-time vector has {} samples, expected {}",
            r.len(),
            delay_bins * doppler_bins
        )));
    }
    let t = DdTransform::new(delay_bins, doppler_bins);
    let mut buf = r.to_vec();
    t.to_delay_doppler_inplace(&mut buf);
    DdGrid::from_vec(delay_bins, doppler_bins, buf, GridRole::Received)
}

/// Prepends the last `cp_len` samples.
pub fn add_cp<T: Real>(s: &[Cx<T>], cp_len: usize) -> Result<Vec<Cx<T>>> {
    if cp_len > s.len() {
        return Err(Error::Dimension(format!("cp_len {cp_len} exceeds frame length {}", s.len())));
    }
    let mut out = Vec::with_capacity(s.len() + cp_len);
    out.extend_from_slice(&s[s.len() - cp_len..]);
    out.extend_from_slice(s);
    Ok(out)
}

/// Drops the first `cp_len` samples of a `frame_len + cp_len` vector.
pub fn remove_cp<T: Real>(r: &[Cx<T>], cp_len: usize, frame_len: usize) -> Result<Vec<Cx<T>>> {
    if r.len() != frame_len + cp_len {
        return Err(Error::Dimension(format!(
            "received {} samples, expected {} + {cp_len}",
            r.len(),
            frame_len
        )));
    }
    Ok(r[cp_len..].to_vec())
}
