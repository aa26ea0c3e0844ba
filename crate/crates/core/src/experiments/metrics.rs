//! Channel NMSE and bit-error metrics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::DelayTimeChannel;
use crate::error::{Error, Result};
use crate::linalg::LinearOperator;
use crate::scalar::{norm_sqr, Cx, Real};

/// Which matrix normalizes the squared error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NmseDenominator {
    /// `||H - H_est||^2 / ||H_est||^2`.
    #[default]
    Estimate,
    /// `||H - H_est||^2 / ||H||^2`.
    Truth,
}

fn ratio(num: f64, den: f64) -> Result<f64> {
    if !(den > 0.0) {
        return Err(Error::UndefinedNmse);
    }
    Ok(num / den)
}

/// Exact NMSE of two effective channels given as delay-time taps.
pub fn nmse_taps<T: Real>(
    truth: &DelayTimeChannel<T>,
    estimate: &DelayTimeChannel<T>,
    frame_len: usize,
    cp_len: usize,
    denominator: NmseDenominator,
) -> Result<f64> {
    let num = truth.effective_distance_sqr(estimate, frame_len, cp_len)?.as_f64();
    let den = match denominator {
        NmseDenominator::Estimate => estimate.effective_frobenius_sqr(frame_len, cp_len),
        NmseDenominator::Truth => truth.effective_frobenius_sqr(frame_len, cp_len),
    };
    ratio(num, den.as_f64())
}

fn check_dims<T: Real>(a: &dyn LinearOperator<T>, b: &dyn LinearOperator<T>) -> Result<()> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::Dimension(format!("{}x{} vs {}x{}", a.rows(), a.cols(), b.rows(), b.cols())));
    }
    Ok(())
}

fn accumulate<T: Real>(
    truth: &dyn LinearOperator<T>,
    estimate: &dyn LinearOperator<T>,
    probe: &[Cx<T>],
    acc: &mut [f64; 3],
) {
    let a = truth.apply_vec(probe);
    let b = estimate.apply_vec(probe);
    let diff: Vec<Cx<T>> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    acc[0] += norm_sqr(&diff).as_f64();
    acc[1] += norm_sqr(&b).as_f64();
    acc[2] += norm_sqr(&a).as_f64();
}

fn finish(acc: [f64; 3], denominator: NmseDenominator) -> Result<f64> {
    match denominator {
        NmseDenominator::Estimate => ratio(acc[0], acc[1]),
        NmseDenominator::Truth => ratio(acc[0], acc[2]),
    }
}

/// NMSE from every column of both operators. Exact, `cols` applications each.
pub fn nmse_exact<T: Real>(
    truth: &dyn LinearOperator<T>,
    estimate: &dyn LinearOperator<T>,
    denominator: NmseDenominator,
) -> Result<f64> {
    check_dims(truth, estimate)?;
    let mut acc = [0.0; 3];
    let mut e = vec![Cx::new(T::zero(), T::zero()); truth.cols()];
    for j in 0..truth.cols() {
        e[j] = Cx::new(T::one(), T::zero());
        accumulate(truth, estimate, &e, &mut acc);
        e[j] = Cx::new(T::zero(), T::zero());
    }
    finish(acc, denominator)
}

/// Randomized NMSE: `E ||A z||^2 = ||A||_F^2` for unit-variance random-phase probes.
pub fn nmse_probe<T: Real>(
    truth: &dyn LinearOperator<T>,
    estimate: &dyn LinearOperator<T>,
    probes: usize,
    seed: u64,
    denominator: NmseDenominator,
) -> Result<f64> {
    check_dims(truth, estimate)?;
    if probes == 0 {
        return Err(Error::Parameter("at least one probe vector is needed".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = [0.0; 3];
    for _ in 0..probes {
        let z: Vec<Cx<T>> = (0..truth.cols())
            .map(|_| crate::scalar::expj(T::lit(rng.gen::<f64>() * std::f64::consts::TAU)))
            .collect();
        accumulate(truth, estimate, &z, &mut acc);
    }
    finish(acc, denominator)
}

/// Fraction of differing bits.
pub fn ber(tx: &[u8], rx: &[u8]) -> Result<f64> {
    if tx.len() != rx.len() {
        return Err(Error::Dimension(format!("{} transmitted vs {} received bits", tx.len(), rx.len())));
    }
    if tx.is_empty() {
        return Ok(0.0);
    }
    Ok(bit_errors(tx, rx) as f64 / tx.len() as f64)
}

pub fn bit_errors(tx: &[u8], rx: &[u8]) -> usize {
    tx.iter().zip(rx).filter(|(a, b)| a != b).count()
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
