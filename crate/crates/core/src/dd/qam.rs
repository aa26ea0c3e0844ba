//! Gray-mapped square QAM with unit average symbol energy.
//!
//! The first half of each symbol's bits selects the in-phase level, the second half
//! the quadrature level. On each axis the Gray index `g` maps to amplitude
//! `(K - 1) - 2 * gray_decode(g)` with `K = sqrt(Q)`, so `00 -> (+1 + j) / sqrt(2)`
//! for 4-QAM. Hard decisions break ties toward the smaller amplitude on each axis.

use crate::error::{Error, Result};
use crate::scalar::{Cx, Real};

/// Bits per symbol for a supported alphabet.
pub fn bits_per_symbol(q: usize) -> Result<usize> {
    match q {
        4 => Ok(2),
        16 => Ok(4),
        64 => Ok(6),
        other => Err(Error::UnsupportedAlphabet(other)),
    }
}

#[derive(Debug, Clone)]
pub struct Constellation<T> {
    order: usize,
    bits_per_axis: usize,
    levels: usize,
    scale: T,
}

impl<T: Real> Constellation<T> {
    pub fn new(order: usize) -> Result<Self> {
        let bits = bits_per_symbol(order)?;
        let levels = 1usize << (bits / 2);
        let mean_energy = 2.0 * (order as f64 - 1.0) / 3.0;
        Ok(Constellation { order, bits_per_axis: bits / 2, levels, scale: T::lit(1.0 / mean_energy.sqrt()) })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.bits_per_axis
    }

    fn level_amplitude(&self, gray: usize) -> T {
        let idx = gray_decode(gray);
        T::from_usize_lossy(self.levels - 1) - T::lit(2.0) * T::from_usize_lossy(idx)
    }

    /// Maps `bits_per_symbol` bits (MSB first) to a symbol.
    pub fn map(&self, bits: &[u8]) -> Cx<T> {
        let b = self.bits_per_axis;
        let gi = pack(&bits[..b]);
        let gq = pack(&bits[b..2 * b]);
        Cx::new(self.level_amplitude(gi), self.level_amplitude(gq)) * self.scale
    }

    /// Index of the nearest level on one axis; ties go to the smaller amplitude.
    fn nearest_level(&self, v: T) -> usize {
        // amplitude a_i = (K-1) - 2i, i = 0..K-1; i = ((K-1) - v) / 2, rounded with
        // ties toward larger i (smaller amplitude).
        let k1 = T::from_usize_lossy(self.levels - 1);
        let pos = (k1 - v / self.scale) / T::lit(2.0);
        let mut i = pos.floor();
        if pos - i >= T::lit(0.5) {
            i = i + T::one();
        }
        let max = T::from_usize_lossy(self.levels - 1);
        let i = if i.is_nan() { T::zero() } else { i.max(T::zero()).min(max) };
        i.to_usize().unwrap_or(0)
    }

    /// Nearest constellation point.
    pub fn decide(&self, s: Cx<T>) -> Cx<T> {
        let ii = self.nearest_level(s.re);
        let iq = self.nearest_level(s.im);
        let amp = |i: usize| T::from_usize_lossy(self.levels - 1) - T::lit(2.0) * T::from_usize_lossy(i);
        Cx::new(amp(ii), amp(iq)) * self.scale
    }

    /// Bits of the nearest constellation point, appended to `out`.
    pub fn demap_into(&self, s: Cx<T>, out: &mut Vec<u8>) {
        let ii = self.nearest_level(s.re);
        let iq = self.nearest_level(s.im);
        unpack(gray_encode(ii), self.bits_per_axis, out);
        unpack(gray_encode(iq), self.bits_per_axis, out);
    }

    /// All constellation points in bit-pattern order.
    pub fn points(&self) -> Vec<Cx<T>> {
        let bps = self.bits_per_symbol();
        (0..self.order)
            .map(|v| {
                let mut bits = Vec::with_capacity(bps);
                unpack(v, bps, &mut bits);
                self.map(&bits)
            })
            .collect()
    }
}

fn gray_encode(i: usize) -> usize {
    i ^ (i >> 1)
}

fn gray_decode(mut g: usize) -> usize {
    let mut i = 0;
    while g != 0 {
        i ^= g;
        g >>= 1;
    }
    i
}

fn pack(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as usize)
}

fn unpack(v: usize, width: usize, out: &mut Vec<u8>) {
    for k in (0..width).rev() {
        out.push(((v >> k) & 1) as u8);
    }
}

/// Maps a bit sequence onto unit-energy Gray QAM symbols.
pub fn qam_modulate<T: Real>(bits: &[u8], q: usize) -> Result<Vec<Cx<T>>> {
    let c = Constellation::<T>::new(q)?;
    let bps = c.bits_per_symbol();
    if !bits.len().is_multiple_of(bps) {
        return Err(Error::Dimension(format!("{} bits is not a multiple of {bps}", bits.len())));
    }
    Ok(bits.chunks(bps).map(|chunk| c.map(chunk)).collect())
}

/// Nearest-point hard decision back to bits.
pub fn qam_demodulate_hard<T: Real>(symbols: &[Cx<T>], q: usize) -> Result<Vec<u8>> {
    let c = Constellation::<T>::new(q)?;
    let mut out = Vec::with_capacity(symbols.len() * c.bits_per_symbol());
    for &s in symbols {
        c.demap_into(s, &mut out);
    }
    Ok(out)
}

/// Nearest-point hard decision returning symbols.
pub fn qam_hard_decision<T: Real>(symbols: &[Cx<T>], q: usize) -> Result<Vec<Cx<T>>> {
    let c = Constellation::<T>::new(q)?;
    Ok(symbols.iter().map(|&s| c.decide(s)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const R2: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn four_qam_zero_bits() {
        let s = qam_modulate::<f64>(&[0, 0], 4).unwrap();
        assert!((s[0] - Cx::new(R2, R2)).norm() < 1e-15);
    }

    #[test]
    fn unit_average_energy() {
        for q in [4, 16, 64] {
            let pts = Constellation::<f64>::new(q).unwrap().points();
            let e: f64 = pts.iter().map(|p| p.norm_sqr()).sum::<f64>() / q as f64;
            assert!((e - 1.0).abs() < 1e-12, "Q={q}: {e}");
        }
    }

    #[test]
    fn round_trip_all_two_bit_patterns() {
        for bits in [[0u8, 0], [0, 1], [1, 0], [1, 1]] {
            let s = qam_modulate::<f64>(&bits, 4).unwrap();
            assert_eq!(qam_demodulate_hard(&s, 4).unwrap(), bits.to_vec());
        }
    }

    #[test]
    fn nearest_point_and_ties() {
        let bits = qam_demodulate_hard(&[Cx::new(0.9 * R2, 0.8 * R2)], 4).unwrap();
        assert_eq!(bits, vec![0, 0]);
        let bits = qam_demodulate_hard(&[Cx::new(0.0, 0.0)], 4).unwrap();
        // (-1 - j)/sqrt(2)
        assert!((qam_modulate::<f64>(&bits, 4).unwrap()[0] - Cx::new(-R2, -R2)).norm() < 1e-12);
        let pt = qam_hard_decision(&[Cx::new(0.0f64, 0.0)], 16).unwrap()[0];
        // all four inner points tie; smaller amplitude on both axes wins
        let s = 1.0 / 10f64.sqrt();
        assert!((pt - Cx::new(-s, -s)).norm() < 1e-12);
    }

    #[test]
    fn gray_neighbours_differ_by_one_bit() {
        for q in [16, 64] {
            let c = Constellation::<f64>::new(q).unwrap();
            let bps = c.bits_per_symbol();
            let pts = c.points();
            let dmin = 2.0 / (2.0 * (q as f64 - 1.0) / 3.0).sqrt();
            for a in 0..q {
                for b in 0..q {
                    if ((pts[a] - pts[b]).norm() - dmin).abs() < 1e-9 {
                        assert_eq!(((a ^ b) as u32).count_ones(), 1, "Q={q} {a} {b} bps={bps}");
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_unsupported() {
        assert_eq!(qam_modulate::<f64>(&[0; 3], 8), Err(Error::UnsupportedAlphabet(8)));
        assert!(qam_modulate::<f64>(&[0; 3], 4).is_err());
    }

    proptest! {
        #[test]
        fn modulate_demodulate_identity(q in prop::sample::select(vec![4usize, 16, 64]),
                                        raw in prop::collection::vec(0u8..2, 0..120)) {
            let bps = bits_per_symbol(q).unwrap();
            let n = raw.len() / bps * bps;
            let bits = &raw[..n];
            let s = qam_modulate::<f64>(bits, q).unwrap();
            prop_assert_eq!(qam_demodulate_hard(&s, q).unwrap(), bits.to_vec());
            let s32 = qam_modulate::<f32>(bits, q).unwrap();
            prop_assert_eq!(qam_demodulate_hard(&s32, q).unwrap(), bits.to_vec());
        }
    }
}
