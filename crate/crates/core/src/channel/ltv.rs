use std::f64::consts::PI;

use super::realization::ChannelRealization;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::{expj, Cx, Real};

/// Passes a CP-extended frame through the channel, path by path:
/// `r[m] = sum_p a_p exp(j 2 pi nu_p (m - l_p) Ts) s[m - l_p]` for `m >= l_p`.
/// The Doppler phase is indexed by the input sample; noise is not added.
pub fn apply_ltv<T: Real>(s: &[Cx<T>], chan: &ChannelRealization<T>, sample_period: f64) -> Vec<Cx<T>> {
    let mut r = vec![Cx::new(T::zero(), T::zero()); s.len()];
    for p in chan.paths() {
        let step = 2.0 * PI * p.doppler * sample_period;
        for n in 0..s.len().saturating_sub(p.delay_tap) {
            let rot = expj(T::lit(step * n as f64));
            r[n + p.delay_tap] = r[n + p.delay_tap] + p.gain * rot * s[n];
        }
    }
    r
}

/// Dense `M_T x M_T` time-domain channel, element by element:
/// `[H]_{m,n} = sum_p a_p exp(j 2 pi nu_p n Ts) delta[m - n - l_p]`.
pub fn dense_ltv_matrix<T: Real>(chan: &ChannelRealization<T>, total_len: usize, sample_period: f64) -> Result<DenseMatrix<T>> {
    if chan.channel_len() > total_len {
        return Err(Error::Dimension("channel longer than frame".into()));
    }
    let mut h = DenseMatrix::zeros(total_len, total_len);
    for m in 0..total_len {
        for n in 0..=m {
            let mut acc = Cx::new(T::zero(), T::zero());
            for p in chan.paths() {
                if m - n == p.delay_tap {
                    acc = acc + p.gain * expj(T::lit(2.0 * PI * p.doppler * n as f64 * sample_period));
                }
            }
            if acc.re != T::zero() || acc.im != T::zero() {
                h.set(m, n, acc);
            }
        }
    }
    Ok(h)
}
