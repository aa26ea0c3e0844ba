//! The first-stage split-pilot observation: each pilot region replaced by the
//! difference of the two regions, so the pilot responses cancel.
//!
//! The same signed row combination is applied to the channel model, so detection
//! sees `D y = (D H) x`, in which the sign of the data above pilot 1 is carried by
//! the channel.

use serde::{Deserialize, Serialize};

use crate::dd::FrameConfig;
use crate::linalg::LinearOperator;
use crate::scalar::{Cx, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CancellationMode {
    /// Second region `y_2 - y_1`, first region `y_1 - y_2`.
    #[default]
    BothRegions,
    /// Second region `y_2 - y_1`, first region discarded.
    SecondOnly,
}

/// Row combination over the two pilot regions; identity elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionDifference {
    delay_bins: usize,
    doppler_bins: usize,
    first_row: usize,
    rows: usize,
    mode: CancellationMode,
}

impl RegionDifference {
    pub fn new(cfg: &FrameConfig, mode: CancellationMode) -> Self {
        RegionDifference {
            delay_bins: cfg.delay_bins,
            doppler_bins: cfg.doppler_bins,
            first_row: cfg.pilot_delay,
            rows: cfg.channel_len,
            mode,
        }
    }

    pub fn len(&self) -> usize {
        self.delay_bins * self.doppler_bins
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn apply<T: Real>(&self, y: &[Cx<T>]) -> Vec<Cx<T>> {
        let mut out = y.to_vec();
        let (m, l, p) = (self.delay_bins, self.rows, self.first_row);
        for col in 0..self.doppler_bins {
            for i in 0..l {
                let a = col * m + p + i;
                let b = a + l;
                out[b] = y[b] - y[a];
                out[a] = match self.mode {
                    CancellationMode::BothRegions => y[a] - y[b],
                    CancellationMode::SecondOnly => Cx::new(T::zero(), T::zero()),
                };
            }
        }
        out
    }

    pub fn apply_transpose<T: Real>(&self, y: &[Cx<T>]) -> Vec<Cx<T>> {
        let mut out = y.to_vec();
        let (m, l, p) = (self.delay_bins, self.rows, self.first_row);
        for col in 0..self.doppler_bins {
            for i in 0..l {
                let a = col * m + p + i;
                let b = a + l;
                match self.mode {
                    CancellationMode::BothRegions => {
                        out[a] = y[a] - y[b];
                        out[b] = y[b] - y[a];
                    }
                    CancellationMode::SecondOnly => {
                        out[a] = -y[b];
                        out[b] = y[b];
                    }
                }
            }
        }
        out
    }
}

/// `D A` for a channel operator `A`.
pub struct Differenced<'a, T: Real, A: LinearOperator<T> + ?Sized> {
    pub difference: RegionDifference,
    pub inner: &'a A,
    _scalar: std::marker::PhantomData<T>,
}

impl<'a, T: Real, A: LinearOperator<T> + ?Sized> Differenced<'a, T, A> {
    pub fn new(difference: RegionDifference, inner: &'a A) -> Self {
        Differenced { difference, inner, _scalar: std::marker::PhantomData }
    }
}

impl<'a, T: Real, A: LinearOperator<T> + ?Sized> LinearOperator<T> for Differenced<'a, T, A> {
    fn rows(&self) -> usize {
        self.inner.rows()
    }

    fn cols(&self) -> usize {
        self.inner.cols()
    }

    fn apply(&self, x: &[Cx<T>], out: &mut [Cx<T>]) {
        let ax = self.inner.apply_vec(x);
        out.copy_from_slice(&self.difference.apply(&ax));
    }

    fn apply_adjoint(&self, y: &[Cx<T>], out: &mut [Cx<T>]) {
        self.inner.apply_adjoint(&self.difference.apply_transpose(y), out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{inner, DenseMatrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(len: usize, seed: u64) -> Vec<Cx<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| Cx::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect()
    }

    #[test]
    fn rows_are_differenced() {
        let cfg = FrameConfig::new(16, 2, 1e-6, 3);
        let d = RegionDifference::new(&cfg, CancellationMode::BothRegions);
        let y = random_vec(32, 1);
        let z = d.apply(&y);
        // pilot row 8, regions 8..11 and 11..14
        assert_eq!(z[16 + 12], y[16 + 12] - y[16 + 9]);
        assert_eq!(z[9], y[9] - y[12]);
        assert_eq!(z[0], y[0]);
        assert_eq!(z[14], y[14]);
        let s = RegionDifference::new(&cfg, CancellationMode::SecondOnly).apply(&y);
        assert_eq!(s[9], Cx::new(0.0, 0.0));
        assert_eq!(s[12], z[12]);
    }

    #[test]
    fn transpose_is_adjoint() {
        let cfg = FrameConfig::new(16, 4, 1e-6, 3);
        for mode in [CancellationMode::BothRegions, CancellationMode::SecondOnly] {
            let d = RegionDifference::new(&cfg, mode);
            let x = random_vec(64, 2);
            let y = random_vec(64, 3);
            let lhs = inner(&y, &d.apply(&x));
            let rhs = inner(&d.apply_transpose(&y), &x);
            assert!((lhs - rhs).norm() < 1e-12);

            let a = DenseMatrix::from_fn(64, 64, |r, c| Cx::new(((r * 7 + c) % 5) as f64, (r % 3) as f64 - 1.0));
            let op = Differenced::new(d, &a);
            let lhs = inner(&y, &op.apply_vec(&x));
            let rhs = inner(&op.apply_adjoint_vec(&y), &x);
            assert!((lhs - rhs).norm() < 1e-9);
        }
    }
}
