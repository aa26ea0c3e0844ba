//! Reconstruction of a full effective channel from an estimated pilot column.
//!
//! Each Doppler-domain tap response is brought back to the delay-time domain, which
//! yields the tap gain at the `N` instants where the pilot samples the channel. A
//! cubic spline through those anchors gives the gain at every sample.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel::{DdChannelOperator, DelayTimeChannel};
use crate::dd::FrameConfig;
use crate::error::{Error, Result};
use crate::scalar::{expj, Cx, Real};

/// Behaviour outside the first and last anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Extrapolation {
    /// Hold the end value.
    Flat,
    /// Continue the end segment's slope.
    #[default]
    Linear,
    /// Continue the end segment's cubic.
    Cubic,
}

/// End conditions of the spline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SplineEnd {
    /// Zero second derivative at both ends.
    Natural,
    /// Continuous third derivative at the second and second-to-last knots.
    #[default]
    NotAKnot,
}

/// How anchors are turned into a full tap function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Interpolation {
    pub end: SplineEnd,
    pub extrapolation: Extrapolation,
}

/// Cubic spline through complex samples at increasing abscissae.
#[derive(Debug, Clone)]
pub struct ComplexSpline<T> {
    xs: Vec<f64>,
    ys: Vec<Cx<T>>,
    // second derivatives at the knots
    d2: Vec<Cx<T>>,
}

fn check_knots<T>(xs: &[f64], ys: &[Cx<T>], min: usize) -> Result<()> {
    if xs.len() != ys.len() || xs.len() < min {
        return Err(Error::Parameter(format!("spline needs at least {min} matching knots, got {} / {}", xs.len(), ys.len())));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Parameter("spline knots must be strictly increasing".into()));
    }
    Ok(())
}

/// Gaussian elimination with partial pivoting: real `n x n` matrix, complex rhs.
fn solve_dense<T: Real>(mut a: Vec<f64>, mut b: Vec<Cx<T>>) -> Result<Vec<Cx<T>>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().partial_cmp(&a[j * n + col].abs()).unwrap())
            .unwrap();
        if a[piv * n + col].abs() < 1e-300 {
            return Err(Error::Numeric("singular spline system".into()));
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            if f != 0.0 {
                for k in col..n {
                    a[row * n + k] -= f * a[col * n + k];
                }
                b[row] = b[row] - b[col] * T::lit(f);
            }
        }
    }
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc = acc - b[k] * T::lit(a[row * n + k]);
        }
        b[row] = acc / T::lit(a[row * n + row]);
    }
    Ok(b)
}

impl<T: Real> ComplexSpline<T> {
    pub fn new(xs: &[f64], ys: &[Cx<T>], end: SplineEnd) -> Result<Self> {
        match end {
            SplineEnd::Natural => Self::natural(xs, ys),
            SplineEnd::NotAKnot => Self::not_a_knot(xs, ys),
        }
    }

    /// Needs at least 4 knots.
    pub fn not_a_knot(xs: &[f64], ys: &[Cx<T>]) -> Result<Self> {
        check_knots(xs, ys, 4)?;
        let n = xs.len();
        let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
        let mut a = vec![0.0; n * n];
        let mut rhs = vec![Cx::new(T::zero(), T::zero()); n];
        a[0] = h[1];
        a[1] = -(h[0] + h[1]);
        a[2] = h[0];
        for i in 1..n - 1 {
            a[i * n + i - 1] = h[i - 1];
            a[i * n + i] = 2.0 * (h[i - 1] + h[i]);
            a[i * n + i + 1] = h[i];
            let s1 = (ys[i + 1] - ys[i]) / T::lit(h[i]);
            let s0 = (ys[i] - ys[i - 1]) / T::lit(h[i - 1]);
            rhs[i] = (s1 - s0) * T::lit(6.0);
        }
        let last = (n - 1) * n;
        a[last + n - 3] = h[n - 2];
        a[last + n - 2] = -(h[n - 3] + h[n - 2]);
        a[last + n - 1] = h[n - 3];
        let d2 = solve_dense(a, rhs)?;
        Ok(ComplexSpline { xs: xs.to_vec(), ys: ys.to_vec(), d2 })
    }

    pub fn natural(xs: &[f64], ys: &[Cx<T>]) -> Result<Self> {
        check_knots(xs, ys, 2)?;
        let n = xs.len();
        let zero = Cx::new(T::zero(), T::zero());
        let mut d2 = vec![zero; n];
        if n > 2 {
            // Thomas algorithm on the interior equations
            let m = n - 2;
            let mut diag = vec![0.0; m];
            let mut rhs = vec![zero; m];
            let mut upper = vec![0.0; m];
            for i in 0..m {
                let (h0, h1) = (xs[i + 1] - xs[i], xs[i + 2] - xs[i + 1]);
                diag[i] = 2.0 * (h0 + h1);
                upper[i] = h1;
                let s1 = (ys[i + 2] - ys[i + 1]) / T::lit(h1);
                let s0 = (ys[i + 1] - ys[i]) / T::lit(h0);
                rhs[i] = (s1 - s0) * T::lit(6.0);
            }
            for i in 1..m {
                let lower = xs[i + 1] - xs[i];
                let w = lower / diag[i - 1];
                diag[i] -= w * upper[i - 1];
                rhs[i] = rhs[i] - rhs[i - 1] * T::lit(w);
            }
            d2[m] = rhs[m - 1] / T::lit(diag[m - 1]);
            for i in (0..m - 1).rev() {
                d2[i + 1] = (rhs[i] - d2[i + 2] * T::lit(upper[i])) / T::lit(diag[i]);
            }
        }
        Ok(ComplexSpline { xs: xs.to_vec(), ys: ys.to_vec(), d2 })
    }

    pub fn eval(&self, x: f64, extrapolation: Extrapolation) -> Cx<T> {
        let n = self.xs.len();
        let (first, last) = (self.xs[0], self.xs[n - 1]);
        if x <= first || x >= last {
            let (i, edge) = if x <= first { (0, first) } else { (n - 2, last) };
            return match extrapolation {
                Extrapolation::Flat => self.ys[if x <= first { 0 } else { n - 1 }],
                Extrapolation::Linear => self.eval_segment(edge, i) + self.slope_at_edge(x <= first) * T::lit(x - edge),
                Extrapolation::Cubic => self.eval_segment(x, i),
            };
        }
        let i = match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => return self.ys[i],
            Err(i) => i - 1,
        };
        self.eval_segment(x, i)
    }

    fn eval_segment(&self, x: f64, i: usize) -> Cx<T> {
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        self.ys[i] * T::lit(a)
            + self.ys[i + 1] * T::lit(b)
            + (self.d2[i] * T::lit(a * a * a - a) + self.d2[i + 1] * T::lit(b * b * b - b)) * T::lit(h * h / 6.0)
    }

    fn slope_at_edge(&self, left: bool) -> Cx<T> {
        let n = self.xs.len();
        if left {
            let h = self.xs[1] - self.xs[0];
            (self.ys[1] - self.ys[0]) / T::lit(h) - (self.d2[0] * T::lit(2.0) + self.d2[1]) * T::lit(h / 6.0)
        } else {
            let h = self.xs[n - 1] - self.xs[n - 2];
            (self.ys[n - 1] - self.ys[n - 2]) / T::lit(h) + (self.d2[n - 2] + self.d2[n - 1] * T::lit(2.0)) * T::lit(h / 6.0)
        }
    }
}

/// Tap gains at the pilot's sampling instants: `g_l(t_n) = sum_k exp(j 2 pi n k / N) h[k L + l]`.
/// Row `l` of the result holds the `N` anchors of tap `l`.
pub fn anchor_gains<T: Real>(estimate: &[Cx<T>], channel_len: usize, doppler_bins: usize) -> Result<Vec<Vec<Cx<T>>>> {
    let (l_count, n) = (channel_len, doppler_bins);
    if estimate.len() != l_count * n {
        return Err(Error::Dimension(format!("estimate length {} is not {l_count}*{n}", estimate.len())));
    }
    let twiddle: Vec<Cx<T>> = (0..n).map(|i| expj(T::lit(2.0 * PI * i as f64 / n as f64))).collect();
    Ok((0..l_count)
        .map(|l| {
            (0..n)
                .map(|t| {
                    (0..n).fold(Cx::new(T::zero(), T::zero()), |acc, k| acc + twiddle[(t * k) % n] * estimate[k * l_count + l])
                })
                .collect()
        })
        .collect())
}

/// Delay-time channel interpolated from a pilot-column estimate whose pilot sits at
/// delay row `anchor_row` (fractional rows allowed, for averaged estimates).
pub fn interpolate_taps<T: Real>(
    estimate: &[Cx<T>],
    anchor_row: f64,
    cfg: &FrameConfig,
    channel_len: usize,
    method: Interpolation,
) -> Result<DelayTimeChannel<T>> {
    let (m, n, cp) = (cfg.delay_bins, cfg.doppler_bins, cfg.cp_len);
    let anchors = anchor_gains(estimate, channel_len, n)?;
    let total = cfg.total_len();
    let mut out = DelayTimeChannel::zeros(channel_len, total);
    let times: Vec<f64> = (0..n).map(|i| (i * m + cp) as f64 + anchor_row).collect();
    for (l, values) in anchors.iter().enumerate() {
        let row = out.tap_mut(l);
        if n < 4 {
            // too few anchors for a spline: hold the nearest one
            for (t, g) in row.iter_mut().enumerate() {
                let nearest = times
                    .iter()
                    .enumerate()
                    .min_by(|a, b| (a.1 - t as f64).abs().partial_cmp(&(b.1 - t as f64).abs()).unwrap())
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                *g = values[nearest];
            }
            continue;
        }
        let spline = ComplexSpline::new(&times, values, method.end)?;
        for (t, g) in row.iter_mut().enumerate() {
            *g = spline.eval(t as f64, method.extrapolation);
        }
    }
    Ok(out)
}

/// Matrix-free effective channel rebuilt from a pilot-column estimate.
pub fn interpolate_to_heff<T: Real>(
    estimate: &[Cx<T>],
    anchor_row: f64,
    cfg: &FrameConfig,
    channel_len: usize,
    method: Interpolation,
) -> Result<DdChannelOperator<T>> {
    let taps = interpolate_taps(estimate, anchor_row, cfg, channel_len, method)?;
    DdChannelOperator::from_config(taps, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_heff_oracle, extract_pilot_column, sample_eva_channel, DEFAULT_ORACLE_CAP};
    use crate::linalg::LinearOperator;
    use crate::scalar::max_abs_diff;

    fn c(v: f64) -> Cx<f64> {
        Cx::new(v, -0.5 * v)
    }

    #[test]
    fn spline_reproduces_cubic_free_data() {
        // natural splines are exact for straight lines
        let xs = [0.0, 1.0, 2.5, 4.0, 7.0];
        let ys: Vec<_> = xs.iter().map(|&x| c(3.0 * x - 1.0)).collect();
        let s = ComplexSpline::natural(&xs, &ys).unwrap();
        for x in [0.3, 1.7, 3.9, 6.2] {
            assert!((s.eval(x, Extrapolation::Flat) - c(3.0 * x - 1.0)).norm() < 1e-12);
        }
        assert!((s.eval(-2.0, Extrapolation::Flat) - c(-1.0)).norm() < 1e-12);
        assert!((s.eval(-2.0, Extrapolation::Linear) - c(-7.0)).norm() < 1e-12);
        assert!((s.eval(9.0, Extrapolation::Linear) - c(26.0)).norm() < 1e-12);
    }

    #[test]
    fn spline_matches_reference_values() {
        // natural spline through (0,0) (1,1) (2,0) (3,1): second derivatives -4, 4
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<Cx<f64>> = [0.0, 1.0, 0.0, 1.0].iter().map(|&v| Cx::new(v, 0.0)).collect();
        let s = ComplexSpline::natural(&xs, &ys).unwrap();
        assert!((s.d2[1].re + 4.0).abs() < 1e-12 && (s.d2[2].re - 4.0).abs() < 1e-12);
        // midpoint of the first segment: 0.5 + (-4)(0.125-0.5)/6
        assert!((s.eval(0.5, Extrapolation::Flat).re - 0.75).abs() < 1e-12);
    }

    #[test]
    fn not_a_knot_reproduces_cubics() {
        // a single cubic satisfies every not-a-knot condition
        let f = |x: f64| Cx::new(x * x * x - 2.0 * x + 1.0, 0.5 * x * x);
        let xs = [0.0, 1.0, 2.5, 3.0, 4.5, 6.0];
        let ys: Vec<_> = xs.iter().map(|&x| f(x)).collect();
        let s = ComplexSpline::not_a_knot(&xs, &ys).unwrap();
        for x in [-1.0, 0.4, 2.2, 5.1, 7.5] {
            assert!((s.eval(x, Extrapolation::Cubic) - f(x)).norm() < 1e-9, "{x}");
        }
        assert!(ComplexSpline::not_a_knot(&xs[..3], &ys[..3]).is_err());
    }

    #[test]
    fn spline_rejects_bad_knots() {
        assert!(ComplexSpline::<f64>::natural(&[0.0], &[c(1.0)]).is_err());
        assert!(ComplexSpline::<f64>::natural(&[0.0, 0.0, 1.0], &[c(1.0); 3]).is_err());
    }

    #[test]
    fn static_channel_reconstructs_oracle() {
        let mut cfg = FrameConfig::new(16, 8, 520.3e-9, 5);
        cfg.cp_len = 6;
        cfg.pilot_delay = 6;
        let chan = sample_eva_channel::<f64>(11, 0.0, 5.9e9, 520.3e-9).unwrap();
        let truth = DelayTimeChannel::from_realization(&chan, 5, cfg.total_len(), cfg.sample_period).unwrap();
        let h = extract_pilot_column(&truth, 16, 8, 6, 6, 0).unwrap();
        let op = interpolate_to_heff(&h, 6.0, &cfg, 5, Interpolation::default()).unwrap();
        let dense = build_heff_oracle(&chan, &cfg, DEFAULT_ORACLE_CAP).unwrap();
        for j in [0usize, 5, 37, 127] {
            let mut e = vec![Cx::new(0.0, 0.0); 128];
            e[j] = Cx::new(1.0, 0.0);
            assert!(max_abs_diff(&op.apply_vec(&e), &dense.column(j)) < 1e-6);
        }
    }

    #[test]
    fn anchors_recover_sampled_gains() {
        let mut cfg = FrameConfig::new(16, 8, 520.3e-9, 5);
        cfg.cp_len = 6;
        let chan = crate::channel::sample_eva_channel::<f64>(2, 500.0, 5.9e9, 520.3e-9).unwrap();
        let truth = DelayTimeChannel::from_realization(&chan, 5, cfg.total_len(), cfg.sample_period).unwrap();
        let h = extract_pilot_column(&truth, 16, 8, 6, 6, 0).unwrap();
        let anchors = anchor_gains(&h, 5, 8).unwrap();
        for l in 0..5 {
            for t in 0..8 {
                assert!((anchors[l][t] - truth.gain(l, t * 16 + 6 + 6)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_estimate_gives_zero_operator() {
        let cfg = FrameConfig::new(16, 8, 520.3e-9, 4);
        let op = interpolate_to_heff(&vec![Cx::<f64>::new(0.0, 0.0); 32], 8.0, &cfg, 4, Interpolation::default()).unwrap();
        assert_eq!(op.taps().effective_frobenius_sqr(128, cfg.cp_len), 0.0);
    }

    #[test]
    fn single_static_tap_is_constant() {
        let cfg = FrameConfig::new(16, 8, 520.3e-9, 2);
        let mut h = vec![Cx::new(0.0, 0.0); 16];
        h[0] = Cx::new(0.6, 0.8);
        let taps = interpolate_taps(&h, 8.0, &cfg, 2, Interpolation::default()).unwrap();
        assert!(taps.tap(0).iter().all(|g| (g - Cx::new(0.6, 0.8)).norm() < 1e-12));
        assert!(taps.tap(1).iter().all(|g| g.norm() < 1e-12));
    }

    #[test]
    fn few_anchors_hold_nearest() {
        let cfg = FrameConfig::new(8, 2, 1e-6, 1);
        let h = vec![Cx::new(1.0, 0.0), Cx::new(1.0, 0.0)];
        // anchors: g(t0) = 2, g(t1) = 0
        let taps = interpolate_taps(&h, 4.0, &cfg, 1, Interpolation::default()).unwrap();
        assert!((taps.gain(0, 0) - Cx::new(2.0, 0.0)).norm() < 1e-12);
        assert!(taps.gain(0, cfg.total_len() - 1).norm() < 1e-12);
    }
}
