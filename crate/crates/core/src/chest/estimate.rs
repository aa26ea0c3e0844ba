//! Pilot-region estimators and pilot-removal algebra for the three schemes.
//!
//! All estimators work on vectorized pilot regions of length `L N` (see
//! [`PilotRegion`]) and assume the pilot sits in Doppler column 0, where the pilot
//! part of the symbol operator is a scaled identity.

use crate::chest::sbc::BlockCirculantSymbols;
use crate::dd::{DdGrid, FrameConfig, Scheme};
use crate::error::{Error, Result};
use crate::linalg::LinearOperator;
use crate::pilot::PilotLayout;
use crate::scalar::{Cx, Real};

/// Which pilot a region belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionTag {
    Single,
    First,
    Second,
}

/// Received samples of the `L` rows starting at a pilot, vectorized per Doppler column.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotRegion<T> {
    pub values: Vec<Cx<T>>,
    pub tag: RegionTag,
    pub first_row: usize,
}

impl<T: Real> PilotRegion<T> {
    pub fn extract(y: &DdGrid<T>, cfg: &FrameConfig, tag: RegionTag) -> Result<Self> {
        let first_row = match tag {
            RegionTag::Single | RegionTag::First => cfg.pilot_delay,
            RegionTag::Second => cfg.pilot_delay + cfg.channel_len,
        };
        Ok(PilotRegion { values: y.region(first_row, cfg.channel_len)?, tag, first_row })
    }
}

/// Estimates from the two split pilots and their average.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitEstimate<T> {
    pub first: Vec<Cx<T>>,
    pub second: Vec<Cx<T>>,
    pub average: Vec<Cx<T>>,
}

/// What multiplies the detected-data operators when refining split estimates.
#[derive(Debug, Clone, Copy)]
pub enum SplitPrior<'a, T> {
    /// One previous averaged estimate for both pilots.
    Averaged(&'a [Cx<T>]),
    /// Each pilot's own previous estimate.
    PerPilot(&'a [Cx<T>], &'a [Cx<T>]),
}

/// Rejects configurations the estimators are not derived for.
pub fn check_estimator_config(cfg: &FrameConfig) -> Result<()> {
    if cfg.pilot_doppler != 0 {
        return Err(Error::Unsupported(format!(
            "estimators assume the pilot in Doppler column 0, got {}",
            cfg.pilot_doppler
        )));
    }
    Ok(())
}

fn inv_sqrt_power<T: Real>(pilot_power: f64) -> Result<T> {
    if !(pilot_power > 0.0) || !pilot_power.is_finite() {
        return Err(Error::Parameter(format!("pilot power must be positive, got {pilot_power}")));
    }
    Ok(T::lit(1.0 / pilot_power.sqrt()))
}

fn scaled<T: Real>(v: &[Cx<T>], s: T) -> Vec<Cx<T>> {
    v.iter().map(|z| *z * s).collect()
}

fn minus<T: Real>(a: &[Cx<T>], b: &[Cx<T>]) -> Vec<Cx<T>> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn same_len<T>(a: &[Cx<T>], b: &[Cx<T>]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("length {} vs {}", a.len(), b.len())));
    }
    Ok(())
}

/// `h = y_p / sqrt(gamma)`.
pub fn estimate_full_guard<T: Real>(y_p: &[Cx<T>], pilot_power: f64) -> Result<Vec<Cx<T>>> {
    Ok(scaled(y_p, inv_sqrt_power(pilot_power)?))
}

/// Same arithmetic as the full-guard estimate; with data above the pilot the result
/// also carries `S_d h / sqrt(gamma)`.
pub fn estimate_reduced_guard<T: Real>(y_p: &[Cx<T>], pilot_power: f64) -> Result<Vec<Cx<T>>> {
    estimate_full_guard(y_p, pilot_power)
}

/// `h(n) = (y_p - S_d(n-1) h(n-1)) / sqrt(gamma)`.
pub fn refine_reduced_guard<T: Real>(
    y_p: &[Cx<T>],
    detected: Option<&BlockCirculantSymbols<T>>,
    previous: Option<&[Cx<T>]>,
    pilot_power: f64,
) -> Result<Vec<Cx<T>>> {
    let (sd, prev) = match (detected, previous) {
        (Some(s), Some(h)) => (s, h),
        _ => return Err(Error::Precondition("refinement needs detected data and a previous estimate".into())),
    };
    same_len(y_p, prev)?;
    if LinearOperator::<T>::rows(sd) != y_p.len() {
        return Err(Error::Dimension("symbol operator does not match the pilot region".into()));
    }
    let interference = sd.apply_vec(prev);
    Ok(scaled(&minus(y_p, &interference), inv_sqrt_power(pilot_power)?))
}

/// `y_p - sqrt(gamma) h`: what the reduced-guard receiver leaves in the pilot rows.
pub fn remove_pilot_reduced<T: Real>(y_p: &[Cx<T>], estimate: &[Cx<T>], pilot_power: f64) -> Result<Vec<Cx<T>>> {
    same_len(y_p, estimate)?;
    let amp = T::lit(pilot_power.sqrt());
    Ok(y_p.iter().zip(estimate).map(|(y, h)| y - *h * amp).collect())
}

/// `h_i = sqrt(2) y_pi / sqrt(gamma)` for both pilots, plus their mean.
pub fn estimate_split_initial<T: Real>(y_p1: &[Cx<T>], y_p2: &[Cx<T>], pilot_power: f64) -> Result<SplitEstimate<T>> {
    same_len(y_p1, y_p2)?;
    let s = inv_sqrt_power::<T>(pilot_power)? * T::SQRT_2();
    Ok(split_from(scaled(y_p1, s), scaled(y_p2, s)))
}

fn split_from<T: Real>(first: Vec<Cx<T>>, second: Vec<Cx<T>>) -> SplitEstimate<T> {
    let half = T::lit(0.5);
    let average = first.iter().zip(&second).map(|(a, b)| (a + b) * half).collect();
    SplitEstimate { first, second, average }
}

/// `y_p2 - y_p1`: the pilots cancel, leaving `(S_d2 - S_d1) h` plus noise and aging.
pub fn cancel_pilots_initial<T: Real>(y_p1: &[Cx<T>], y_p2: &[Cx<T>]) -> Result<Vec<Cx<T>>> {
    same_len(y_p1, y_p2)?;
    Ok(minus(y_p2, y_p1))
}

/// `h_i(n) = sqrt(2) (y_pi - S_di(n-1) prior_i) / sqrt(gamma)`.
pub fn refine_split<T: Real>(
    y_p1: &[Cx<T>],
    y_p2: &[Cx<T>],
    detected_first: Option<&BlockCirculantSymbols<T>>,
    detected_second: Option<&BlockCirculantSymbols<T>>,
    prior: Option<SplitPrior<'_, T>>,
    pilot_power: f64,
) -> Result<SplitEstimate<T>> {
    let (sd1, sd2, prior) = match (detected_first, detected_second, prior) {
        (Some(a), Some(b), Some(p)) => (a, b, p),
        _ => return Err(Error::Precondition("split refinement needs detected data and prior estimates".into())),
    };
    same_len(y_p1, y_p2)?;
    let (p1, p2) = match prior {
        SplitPrior::Averaged(h) => (h, h),
        SplitPrior::PerPilot(a, b) => (a, b),
    };
    same_len(y_p1, p1)?;
    same_len(y_p1, p2)?;
    if LinearOperator::<T>::rows(sd1) != y_p1.len() || LinearOperator::<T>::rows(sd2) != y_p1.len() {
        return Err(Error::Dimension("symbol operator does not match the pilot region".into()));
    }
    let s = inv_sqrt_power::<T>(pilot_power)? * T::SQRT_2();
    let first = scaled(&minus(y_p1, &sd1.apply_vec(p1)), s);
    let second = scaled(&minus(y_p2, &sd2.apply_vec(p2)), s);
    Ok(split_from(first, second))
}

/// `Y - A_1 P_1 - A_2 P_2`, with `A_1` the channel rebuilt from the second pilot's
/// estimate and `A_2` the one rebuilt from the first's.
pub fn remove_pilots_cross<T: Real, A: LinearOperator<T> + ?Sized, B: LinearOperator<T> + ?Sized>(
    y: &DdGrid<T>,
    for_first: &A,
    for_second: &B,
    layout: &PilotLayout<T>,
) -> Result<DdGrid<T>> {
    if layout.scheme() != Scheme::SplitPilot {
        return Err(Error::Precondition("cross removal needs the split-pilot layout".into()));
    }
    let len = y.as_slice().len();
    if for_first.rows() != len || for_second.rows() != len {
        return Err(Error::Dimension("channel operators do not match the frame".into()));
    }
    let r1 = for_first.apply_vec(layout.single_pilot_grid(0).as_slice());
    let r2 = for_second.apply_vec(layout.single_pilot_grid(1).as_slice());
    let mut out = y.clone();
    for ((o, a), b) in out.as_mut_slice().iter_mut().zip(&r1).zip(&r2) {
        *o = *o - a - b;
    }
    Ok(out)
}

/// `Y - A P`, the pilot removal used by the single-pilot schemes.
pub fn remove_pilot<T: Real, A: LinearOperator<T> + ?Sized>(y: &DdGrid<T>, channel: &A, layout: &PilotLayout<T>) -> Result<DdGrid<T>> {
    let len = y.as_slice().len();
    if channel.rows() != len {
        return Err(Error::Dimension("channel operator does not match the frame".into()));
    }
    let r = channel.apply_vec(layout.pilot_grid().as_slice());
    let mut out = y.clone();
    for (o, a) in out.as_mut_slice().iter_mut().zip(&r) {
        *o = *o - a;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chest::sbc::{build_sbc, sbc_from_grid};
    use crate::scalar::{max_abs_diff, norm_sqr};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_vec(len: usize, seed: u64) -> Vec<Cx<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| Cx::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect()
    }

    fn noise(len: usize, var: f64, rng: &mut ChaCha8Rng) -> Vec<Cx<f64>> {
        let s = (var / 2.0).sqrt();
        (0..len)
            .map(|_| Cx::new(rng.sample::<f64, _>(StandardNormal) * s, rng.sample::<f64, _>(StandardNormal) * s))
            .collect()
    }

    fn add(a: &[Cx<f64>], b: &[Cx<f64>]) -> Vec<Cx<f64>> {
        a.iter().zip(b).map(|(x, y)| x + y).collect()
    }

    /// Symbol block with the pilot at the centre row of column 0 and random data in
    /// the rows above it.
    fn block(l: usize, n: usize, amp: f64, data_rows_above: usize, seed: u64) -> (Vec<Cx<f64>>, Vec<Cx<f64>>) {
        let w = 2 * l - 1;
        let mut data = vec![Cx::new(0.0, 0.0); w * n];
        let vals = random_vec(w * n, seed);
        for col in 0..n {
            for r in (l - 1 - data_rows_above)..(l - 1) {
                data[col * w + r] = vals[col * w + r];
            }
        }
        let mut pilot = vec![Cx::new(0.0, 0.0); w * n];
        pilot[l - 1] = Cx::new(amp, 0.0);
        (data, pilot)
    }

    #[test]
    fn full_guard_noiseless_is_exact() {
        let h = random_vec(20, 1);
        let y: Vec<_> = h.iter().map(|z| z * 100.0).collect();
        assert!(max_abs_diff(&estimate_full_guard(&y, 1e4).unwrap(), &h) < 1e-15);
        assert!(estimate_full_guard(&y, 0.0).is_err());
        let w = random_vec(20, 2);
        let e = estimate_full_guard(&w, 1e4).unwrap();
        assert!(max_abs_diff(&e, &w.iter().map(|z| z / 100.0).collect::<Vec<_>>()) < 1e-15);
    }

    #[test]
    fn full_guard_noise_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (gamma, var, trials) = (1e2, 0.5, 10_000);
        let mut acc = 0.0;
        for _ in 0..trials {
            let w = noise(1, var, &mut rng);
            acc += estimate_full_guard(&w, gamma).unwrap()[0].norm_sqr();
        }
        let measured = acc / trials as f64;
        assert!((measured / (var / gamma) - 1.0).abs() < 0.05, "{measured}");
    }

    #[test]
    fn reduced_guard_interference_term() {
        let (l, n, gamma) = (4usize, 4usize, 1e4f64);
        let (data, pilot) = block(l, n, gamma.sqrt(), l - 1, 3);
        let h = random_vec(l * n, 4);
        let x: Vec<_> = add(&data, &pilot);
        let y = build_sbc(&x, l, n).unwrap().apply_vec(&h);
        let est = estimate_reduced_guard(&y, gamma).unwrap();
        let sd_h = build_sbc(&data, l, n).unwrap().apply_vec(&h);
        let expect: Vec<_> = h.iter().zip(&sd_h).map(|(a, b)| a + b / gamma.sqrt()).collect();
        assert!(max_abs_diff(&est, &expect) < 1e-12);

        // no data above the pilot: identical to full guard
        let y0 = build_sbc(&pilot, l, n).unwrap().apply_vec(&h);
        assert_eq!(estimate_reduced_guard(&y0, gamma).unwrap(), estimate_full_guard(&y0, gamma).unwrap());
    }

    #[test]
    fn reduced_guard_error_scales_with_pilot_power() {
        let (l, n) = (3, 4);
        let h = random_vec(l * n, 5);
        let mut prev: Option<f64> = None;
        for db in [30.0, 40.0, 50.0] {
            let gamma = 10f64.powf(db / 10.0);
            let (data, pilot) = block(l, n, gamma.sqrt(), l - 1, 6);
            let y = build_sbc(&add(&data, &pilot), l, n).unwrap().apply_vec(&h);
            let err = norm_sqr(&minus(&estimate_reduced_guard(&y, gamma).unwrap(), &h)).sqrt();
            let sd_h = norm_sqr(&build_sbc(&data, l, n).unwrap().apply_vec(&h)).sqrt();
            assert!((err - sd_h / gamma.sqrt()).abs() < 1e-9);
            if let Some(p) = prev {
                assert!((p / err - 10f64.sqrt()).abs() < 1e-6);
            }
            prev = Some(err);
        }
    }

    #[test]
    fn reduced_refinement_cases() {
        let (l, n, gamma) = (2usize, 2usize, 1e4f64);
        let (data, pilot) = block(l, n, gamma.sqrt(), l - 1, 8);
        let h = random_vec(l * n, 9);
        let y = build_sbc(&add(&data, &pilot), l, n).unwrap().apply_vec(&h);
        let sd = build_sbc(&data, l, n).unwrap();
        assert!(max_abs_diff(&refine_reduced_guard(&y, Some(&sd), Some(&h), gamma).unwrap(), &h) < 1e-12);

        let zero = build_sbc(&vec![Cx::new(0.0, 0.0); 3 * n], l, n).unwrap();
        let e0 = estimate_reduced_guard(&y, gamma).unwrap();
        assert_eq!(refine_reduced_guard(&y, Some(&zero), Some(&e0), gamma).unwrap(), e0);

        assert!(matches!(refine_reduced_guard(&y, None, Some(&h), gamma), Err(Error::Precondition(_))));

        // one symbol wrong, prior = first-stage estimate: expand the refinement by hand
        let mut wrong = data.clone();
        wrong[0] += Cx::new(0.7, -0.2);
        let sd_hat = build_sbc(&wrong, l, n).unwrap();
        let refined = refine_reduced_guard(&y, Some(&sd_hat), Some(&e0), gamma).unwrap();
        let g = gamma.sqrt();
        let d_h = minus(&sd.apply_vec(&h), &sd_hat.apply_vec(&h));
        let second = sd_hat.apply_vec(&sd.apply_vec(&h));
        let expect: Vec<_> = (0..l * n).map(|i| h[i] + d_h[i] / g - second[i] / gamma).collect();
        assert!(max_abs_diff(&refined, &expect) < 1e-12);
    }

    #[test]
    fn reduced_pilot_removal() {
        let (l, n, gamma) = (3usize, 3usize, 1e4f64);
        let (data, pilot) = block(l, n, gamma.sqrt(), l - 1, 10);
        let h = random_vec(l * n, 11);
        let sd = build_sbc(&data, l, n).unwrap();
        let y = build_sbc(&add(&data, &pilot), l, n).unwrap().apply_vec(&h);
        // first-stage estimate swallows the data
        let r0 = remove_pilot_reduced(&y, &estimate_reduced_guard(&y, gamma).unwrap(), gamma).unwrap();
        assert!(norm_sqr(&r0) < 1e-20);
        // perfect data estimate keeps the data response
        let h1 = refine_reduced_guard(&y, Some(&sd), Some(&h), gamma).unwrap();
        let r1 = remove_pilot_reduced(&y, &h1, gamma).unwrap();
        assert!(max_abs_diff(&r1, &sd.apply_vec(&h)) < 1e-10);
    }

    #[test]
    fn split_initial_and_cancellation() {
        let (l, n, gamma) = (3usize, 4usize, 1e4f64);
        let amp = (gamma / 2.0).sqrt();
        let h = random_vec(l * n, 12);
        let (_, pilot) = block(l, n, amp, 0, 0);
        let y = build_sbc(&pilot, l, n).unwrap().apply_vec(&h);
        let est = estimate_split_initial(&y, &y, gamma).unwrap();
        assert!(max_abs_diff(&est.first, &h) < 1e-12 && max_abs_diff(&est.average, &h) < 1e-12);
        assert!(norm_sqr(&cancel_pilots_initial(&y, &y).unwrap()) == 0.0);

        // data above pilot 1 only
        let (d1, _) = block(l, n, amp, l - 1, 13);
        let sd1 = build_sbc(&d1, l, n).unwrap();
        let y1 = add(&y, &sd1.apply_vec(&h));
        let est = estimate_split_initial(&y1, &y, gamma).unwrap();
        let expect: Vec<_> = h.iter().zip(sd1.apply_vec(&h)).map(|(a, b)| a + b * 2f64.sqrt() / gamma.sqrt()).collect();
        assert!(max_abs_diff(&est.first, &expect) < 1e-12);
        let res = cancel_pilots_initial(&y1, &y).unwrap();
        let neg: Vec<_> = sd1.apply_vec(&h).iter().map(|z| -z).collect();
        assert!(max_abs_diff(&res, &neg) < 1e-12);
    }

    #[test]
    fn split_average_halves_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (gamma, trials) = (2.0f64, 10_000);
        let (mut single, mut avg) = (0.0, 0.0);
        for _ in 0..trials {
            let w1 = noise(1, 1.0, &mut rng);
            let w2 = noise(1, 1.0, &mut rng);
            let e = estimate_split_initial(&w1, &w2, gamma).unwrap();
            single += e.first[0].norm_sqr();
            avg += e.average[0].norm_sqr();
        }
        assert!((avg / single - 0.5).abs() < 0.5 * 0.05, "{}", avg / single);
    }

    #[test]
    fn split_refinement_cases() {
        let (l, n, gamma) = (3usize, 4usize, 1e4f64);
        let amp = (gamma / 2.0).sqrt();
        let h = random_vec(l * n, 14);
        let (d1, p) = block(l, n, amp, l - 1, 15);
        let d2 = random_vec(5 * n, 16)
            .into_iter()
            .enumerate()
            .map(|(i, z)| if i % 5 >= l - 1 { z } else { Cx::new(0.0, 0.0) })
            .collect::<Vec<_>>();
        let sd1 = build_sbc(&d1, l, n).unwrap();
        let sd2 = build_sbc(&d2, l, n).unwrap();
        let sp = build_sbc(&p, l, n).unwrap().apply_vec(&h);
        let y1 = add(&sp, &sd1.apply_vec(&h));
        let y2 = add(&sp, &sd2.apply_vec(&h));
        let init = estimate_split_initial(&y1, &y2, gamma).unwrap();

        let genie = refine_split(&y1, &y2, Some(&sd1), Some(&sd2), Some(SplitPrior::Averaged(&h)), gamma).unwrap();
        assert!(max_abs_diff(&genie.first, &h) < 1e-9 && max_abs_diff(&genie.second, &h) < 1e-9);

        let z = build_sbc(&vec![Cx::new(0.0, 0.0); 5 * n], l, n).unwrap();
        let same = refine_split(&y1, &y2, Some(&z), Some(&z), Some(SplitPrior::Averaged(&init.average)), gamma).unwrap();
        assert_eq!(same, init);

        let mut wrong = d1.clone();
        wrong[1] += Cx::new(-1.0, 1.0);
        let sd1_hat = build_sbc(&wrong, l, n).unwrap();
        let r = refine_split(&y1, &y2, Some(&sd1_hat), Some(&sd2), Some(SplitPrior::PerPilot(&h, &h)), gamma).unwrap();
        let err = norm_sqr(&minus(&r.first, &h)).sqrt();
        let expect = 2f64.sqrt() * norm_sqr(&minus(&sd1.apply_vec(&h), &sd1_hat.apply_vec(&h))).sqrt() / gamma.sqrt();
        assert!((err - expect).abs() < 1e-12);

        assert!(refine_split(&y1, &y2, None, Some(&sd2), Some(SplitPrior::Averaged(&h)), gamma).is_err());
        assert!(refine_split(&y1, &y2, Some(&sd1), Some(&sd2), None, gamma).is_err());
    }

    #[test]
    fn sbc_from_grid_reads_rows_around_anchor() {
        let mut g = DdGrid::<f64>::zeros(16, 2, crate::dd::GridRole::Data);
        g.set(5, 1, Cx::new(2.0, 0.0));
        let s = sbc_from_grid(&g, 6, 3).unwrap();
        // anchor 6, L 3: rows 4..=8, row 5 is offset 1
        assert_eq!(s.symbol(1, 1), Cx::new(2.0, 0.0));
        assert!(sbc_from_grid(&g, 1, 3).is_err());
    }
}
