use std::f64::consts::PI;

use super::realization::ChannelRealization;
use crate::error::{Error, Result};
use crate::scalar::{expj, Cx, Real};

/// Delay-time representation of an LTV channel: for every tap `l < L` and every
/// sample time `t` of the CP-extended frame, the gain `g_l[t]` applied to the input
/// sample at time `t` that arrives `l` samples later.
///
/// Both the ground-truth channel and every interpolated estimate are expressed this
/// way, which makes the matrix-free effective channel and exact Frobenius metrics
/// independent of where the taps came from.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayTimeChannel<T> {
    channel_len: usize,
    total_len: usize,
    gains: Vec<Cx<T>>,
}

impl<T: Real> DelayTimeChannel<T> {
    pub fn zeros(channel_len: usize, total_len: usize) -> Self {
        DelayTimeChannel { channel_len, total_len, gains: vec![Cx::new(T::zero(), T::zero()); channel_len * total_len] }
    }

    /// Samples every path over `total_len` absolute sample times (time 0 = CP start).
    pub fn from_realization(chan: &ChannelRealization<T>, channel_len: usize, total_len: usize, sample_period: f64) -> Result<Self> {
        if chan.channel_len() > channel_len {
            return Err(Error::Dimension(format!(
                "realization spans {} taps but channel_len is {channel_len}",
                chan.channel_len()
            )));
        }
        let mut out = Self::zeros(channel_len, total_len);
        for p in chan.paths() {
            let step = 2.0 * PI * p.doppler * sample_period;
            let row = &mut out.gains[p.delay_tap * total_len..(p.delay_tap + 1) * total_len];
            for (t, g) in row.iter_mut().enumerate() {
                *g = *g + p.gain * expj(T::lit(step * t as f64));
            }
        }
        Ok(out)
    }

    pub fn channel_len(&self) -> usize {
        self.channel_len
    }

    pub fn total_len(&self) -> usize {
        self.total_len
    }

    #[inline]
    pub fn gain(&self, tap: usize, time: usize) -> Cx<T> {
        self.gains[tap * self.total_len + time]
    }

    pub fn tap(&self, tap: usize) -> &[Cx<T>] {
        &self.gains[tap * self.total_len..(tap + 1) * self.total_len]
    }

    pub fn tap_mut(&mut self, tap: usize) -> &mut [Cx<T>] {
        &mut self.gains[tap * self.total_len..(tap + 1) * self.total_len]
    }

    pub fn scaled(&self, factor: T) -> Self {
        DelayTimeChannel {
            channel_len: self.channel_len,
            total_len: self.total_len,
            gains: self.gains.iter().map(|g| *g * factor).collect(),
        }
    }

    /// Squared Frobenius norm of the `MN x MN` effective channel this represents for a
    /// frame with the given CP: the DD transforms are unitary, so it equals the energy
    /// of the circulant delay-time matrix `R_cp H A_cp`.
    pub fn effective_frobenius_sqr(&self, frame_len: usize, cp_len: usize) -> T {
        self.effective_diff_sqr(None, frame_len, cp_len)
    }

    /// `|| H_eff(self) - H_eff(other) ||_F^2` computed on the delay-time taps.
    pub fn effective_distance_sqr(&self, other: &Self, frame_len: usize, cp_len: usize) -> Result<T> {
        if other.channel_len != self.channel_len || other.total_len != self.total_len {
            return Err(Error::Dimension("delay-time channels differ in shape".into()));
        }
        Ok(self.effective_diff_sqr(Some(other), frame_len, cp_len))
    }

    fn effective_diff_sqr(&self, other: Option<&Self>, frame_len: usize, cp_len: usize) -> T {
        let mut acc = T::zero();
        for l in 0..self.channel_len {
            // body output i reads input time i + cp - l
            let lo = cp_len - l;
            let a = &self.tap(l)[lo..lo + frame_len];
            match other {
                None => acc = acc + crate::scalar::norm_sqr(a),
                Some(o) => {
                    let b = &o.tap(l)[lo..lo + frame_len];
                    acc = acc + a.iter().zip(b).fold(T::zero(), |s, (x, y)| s + (*x - *y).norm_sqr());
                }
            }
        }
        acc
    }
}
