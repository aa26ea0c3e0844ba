use std::f64::consts::PI;

use super::ltv::dense_ltv_matrix;
use super::realization::ChannelRealization;
use super::taps::DelayTimeChannel;
use crate::dd::{DdTransform, FrameConfig};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, LinearOperator};
use crate::scalar::{expj, Cx, Real};

/// Largest `M N` for which the dense oracle will be materialized by default.
pub const DEFAULT_ORACLE_CAP: usize = 1024;

/// Matrix-free effective channel `(F_N kron I_M) R_cp H A_cp (F_N^H kron I_M)`.
///
/// After CP removal the delay-time part is circulant with time-varying taps:
/// `r[i] = sum_l g_l[i + cp - l] s[(i - l) mod MN]`.
#[derive(Debug, Clone)]
pub struct DdChannelOperator<T: Real> {
    transform: DdTransform<T>,
    taps: DelayTimeChannel<T>,
    cp_len: usize,
    // coef[l * MN + i] = g_l[i + cp - l]
    coef: Vec<Cx<T>>,
}

impl<T: Real> DdChannelOperator<T> {
    pub fn new(taps: DelayTimeChannel<T>, delay_bins: usize, doppler_bins: usize, cp_len: usize) -> Result<Self> {
        let frame_len = delay_bins * doppler_bins;
        if taps.total_len() != frame_len + cp_len {
            return Err(Error::Dimension(format!(
                "tap functions cover {} samples, frame needs {}",
                taps.total_len(),
                frame_len + cp_len
            )));
        }
        if taps.channel_len() > cp_len + 1 {
            return Err(Error::Dimension("cyclic prefix shorter than channel".into()));
        }
        let l_count = taps.channel_len();
        let mut coef = Vec::with_capacity(l_count * frame_len);
        for l in 0..l_count {
            coef.extend_from_slice(&taps.tap(l)[cp_len - l..cp_len - l + frame_len]);
        }
        Ok(DdChannelOperator { transform: DdTransform::new(delay_bins, doppler_bins), taps, cp_len, coef })
    }

    pub fn from_config(taps: DelayTimeChannel<T>, cfg: &FrameConfig) -> Result<Self> {
        Self::new(taps, cfg.delay_bins, cfg.doppler_bins, cfg.cp_len)
    }

    /// Ground-truth operator for a channel realization.
    pub fn from_realization(chan: &ChannelRealization<T>, cfg: &FrameConfig) -> Result<Self> {
        let taps = DelayTimeChannel::from_realization(chan, cfg.channel_len.max(chan.channel_len()), cfg.total_len(), cfg.sample_period)?;
        Self::from_config(taps, cfg)
    }

    pub fn taps(&self) -> &DelayTimeChannel<T> {
        &self.taps
    }

    pub fn cp_len(&self) -> usize {
        self.cp_len
    }

    pub fn delay_bins(&self) -> usize {
        self.transform.delay_bins()
    }

    pub fn doppler_bins(&self) -> usize {
        self.transform.doppler_bins()
    }

    fn frame_len(&self) -> usize {
        self.transform.delay_bins() * self.transform.doppler_bins()
    }
}

impl<T: Real> LinearOperator<T> for DdChannelOperator<T> {
    fn rows(&self) -> usize {
        self.frame_len()
    }

    fn cols(&self) -> usize {
        self.frame_len()
    }

    fn apply(&self, x: &[Cx<T>], out: &mut [Cx<T>]) {
        let n = self.frame_len();
        let mut s = x.to_vec();
        self.transform.to_delay_time_inplace(&mut s);
        for o in out.iter_mut() {
            *o = Cx::new(T::zero(), T::zero());
        }
        for l in 0..self.taps.channel_len() {
            let c = &self.coef[l * n..(l + 1) * n];
            // i >= l: source i - l; i < l: wraps to n + i - l
            for i in 0..l.min(n) {
                out[i] = out[i] + c[i] * s[n + i - l];
            }
            for i in l..n {
                out[i] = out[i] + c[i] * s[i - l];
            }
        }
        self.transform.to_delay_doppler_inplace(out);
    }

    fn apply_adjoint(&self, y: &[Cx<T>], out: &mut [Cx<T>]) {
        let n = self.frame_len();
        let mut r = y.to_vec();
        self.transform.to_delay_time_inplace(&mut r);
        for o in out.iter_mut() {
            *o = Cx::new(T::zero(), T::zero());
        }
        for l in 0..self.taps.channel_len() {
            let c = &self.coef[l * n..(l + 1) * n];
            for j in 0..n {
                let i = if j + l >= n { j + l - n } else { j + l };
                out[j] = out[j] + c[i].conj() * r[i];
            }
        }
        self.transform.to_delay_doppler_inplace(out);
    }
}

/// Effective delay-Doppler channel, materialized or matrix-free.
#[derive(Debug, Clone)]
pub enum EffectiveChannel<T: Real> {
    Dense(DenseMatrix<T>),
    Operator(DdChannelOperator<T>),
}

impl<T: Real> LinearOperator<T> for EffectiveChannel<T> {
    fn rows(&self) -> usize {
        match self {
            EffectiveChannel::Dense(d) => d.nrows(),
            EffectiveChannel::Operator(o) => LinearOperator::<T>::rows(o),
        }
    }

    fn cols(&self) -> usize {
        match self {
            EffectiveChannel::Dense(d) => d.ncols(),
            EffectiveChannel::Operator(o) => LinearOperator::<T>::cols(o),
        }
    }

    fn apply(&self, x: &[Cx<T>], out: &mut [Cx<T>]) {
        match self {
            EffectiveChannel::Dense(d) => d.apply(x, out),
            EffectiveChannel::Operator(o) => o.apply(x, out),
        }
    }

    fn apply_adjoint(&self, y: &[Cx<T>], out: &mut [Cx<T>]) {
        match self {
            EffectiveChannel::Dense(d) => d.apply_adjoint(y, out),
            EffectiveChannel::Operator(o) => o.apply_adjoint(y, out),
        }
    }
}

fn doppler_dft<T: Real>(delay_bins: usize, doppler_bins: usize, inverse: bool) -> DenseMatrix<T> {
    let (m, n) = (delay_bins, doppler_bins);
    let sign = if inverse { 1.0 } else { -1.0 };
    let scale = T::lit(1.0 / (n as f64).sqrt());
    let mut out = DenseMatrix::zeros(m * n, m * n);
    for k in 0..n {
        for t in 0..n {
            let w = expj(T::lit(sign * 2.0 * PI * ((k * t) % n) as f64 / n as f64)) * scale;
            for d in 0..m {
                out.set(k * m + d, t * m + d, w);
            }
        }
    }
    out
}

/// Dense effective channel composed factor by factor from the time-domain matrix.
/// Refuses frames with `M N > cap`.
pub fn build_heff_oracle<T: Real>(chan: &ChannelRealization<T>, cfg: &FrameConfig, cap: usize) -> Result<DenseMatrix<T>> {
    let (m, n, cp) = (cfg.delay_bins, cfg.doppler_bins, cfg.cp_len);
    let frame_len = m * n;
    if frame_len > cap {
        return Err(Error::Dimension(format!("M*N = {frame_len} exceeds dense oracle cap {cap}")));
    }
    if chan.channel_len() > cp + 1 {
        return Err(Error::Dimension("cyclic prefix shorter than channel".into()));
    }
    let total = frame_len + cp;
    let idft = doppler_dft::<T>(m, n, true);
    let dft = doppler_dft::<T>(m, n, false);
    let one = Cx::new(T::one(), T::zero());
    let mut add_cp = DenseMatrix::zeros(total, frame_len);
    for t in 0..cp {
        add_cp.set(t, frame_len - cp + t, one);
    }
    for i in 0..frame_len {
        add_cp.set(cp + i, i, one);
    }
    let mut remove_cp = DenseMatrix::zeros(frame_len, total);
    for i in 0..frame_len {
        remove_cp.set(i, cp + i, one);
    }
    let h = dense_ltv_matrix(chan, total, cfg.sample_period)?;
    let right = add_cp.matmul(&idft)?;
    let right = h.matmul(&right)?;
    let right = remove_cp.matmul(&right)?;
    dft.matmul(&right)
}

/// Pilot column of a dense effective channel: `h[k L + i] = H[k M + m_p + i, n_p M + m_p]`.
pub fn extract_pilot_column_dense<T: Real>(
    heff: &DenseMatrix<T>,
    delay_bins: usize,
    doppler_bins: usize,
    pilot_delay: usize,
    pilot_doppler: usize,
    channel_len: usize,
) -> Result<Vec<Cx<T>>> {
    check_pilot(delay_bins, doppler_bins, pilot_delay, pilot_doppler, channel_len)?;
    let col = pilot_doppler * delay_bins + pilot_delay;
    let mut h = Vec::with_capacity(channel_len * doppler_bins);
    for k in 0..doppler_bins {
        for i in 0..channel_len {
            h.push(heff.get(k * delay_bins + pilot_delay + i, col));
        }
    }
    Ok(h)
}

/// Pilot column computed directly from delay-time taps:
/// `h[k L + l] = (1/N) sum_n exp(-j 2 pi n (k - n_p) / N) g_l[n M + m_p + cp]`.
pub fn extract_pilot_column<T: Real>(
    taps: &DelayTimeChannel<T>,
    delay_bins: usize,
    doppler_bins: usize,
    cp_len: usize,
    pilot_delay: usize,
    pilot_doppler: usize,
) -> Result<Vec<Cx<T>>> {
    let l_count = taps.channel_len();
    check_pilot(delay_bins, doppler_bins, pilot_delay, pilot_doppler, l_count)?;
    if taps.total_len() != delay_bins * doppler_bins + cp_len {
        return Err(Error::Dimension("tap functions do not match the frame".into()));
    }
    let n = doppler_bins;
    let inv_n = T::lit(1.0 / n as f64);
    let mut h = vec![Cx::new(T::zero(), T::zero()); l_count * n];
    for k in 0..n {
        let shift = (k + n - pilot_doppler) % n;
        for l in 0..l_count {
            let mut acc = Cx::new(T::zero(), T::zero());
            for t in 0..n {
                let w = expj(T::lit(-2.0 * PI * ((t * shift) % n) as f64 / n as f64));
                acc = acc + w * taps.gain(l, t * delay_bins + pilot_delay + cp_len);
            }
            h[k * l_count + l] = acc * inv_n;
        }
    }
    Ok(h)
}

fn check_pilot(delay_bins: usize, doppler_bins: usize, pilot_delay: usize, pilot_doppler: usize, channel_len: usize) -> Result<()> {
    if pilot_delay + channel_len > delay_bins || pilot_doppler >= doppler_bins {
        return Err(Error::Parameter(format!(
            "pilot ({pilot_delay}, {pilot_doppler}) with {channel_len} taps does not fit a {delay_bins}x{doppler_bins} frame"
        )));
    }
    Ok(())
}
