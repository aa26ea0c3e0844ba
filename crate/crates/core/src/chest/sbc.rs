//! Block-circulant symbol operator: the pilot-region response written as a
//! function of the channel column, `y_p = S h`.

use crate::dd::DdGrid;
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, LinearOperator};
use crate::scalar::{Cx, Real};

/// `LN x LN` operator of `L x L` Toeplitz blocks, block-circulant over Doppler.
///
/// The generator holds rows `r-L+1 ..= r+L-1` of a symbol grid around an anchor row
/// `r`, vectorized per Doppler column. Applying it computes
/// `(S h)[k L + i] = sum_{n, c} X[L-1+i-c, (k-n) mod N] h[n L + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockCirculantSymbols<T> {
    channel_len: usize,
    doppler_bins: usize,
    generator: Vec<Cx<T>>,
}

impl<T: Real> BlockCirculantSymbols<T> {
    pub fn channel_len(&self) -> usize {
        self.channel_len
    }

    pub fn doppler_bins(&self) -> usize {
        self.doppler_bins
    }

    /// Generator entry at offset row `r` (0 ..= 2L-2) and Doppler column `n`.
    pub fn symbol(&self, r: usize, n: usize) -> Cx<T> {
        self.generator[n * (2 * self.channel_len - 1) + r]
    }

    pub fn is_zero(&self) -> bool {
        self.generator.iter().all(|z| z.re == T::zero() && z.im == T::zero())
    }

    /// Materialized matrix, for tests and small sizes.
    pub fn to_dense(&self) -> DenseMatrix<T> {
        let (l, n) = (self.channel_len, self.doppler_bins);
        DenseMatrix::from_fn(l * n, l * n, |row, col| {
            let (k, i) = (row / l, row % l);
            let (np, c) = (col / l, col % l);
            if l - 1 + i < c {
                return Cx::new(T::zero(), T::zero());
            }
            self.symbol(l - 1 + i - c, (k + n - np) % n)
        })
    }
}

/// Builds the operator from a `(2L-1) x N` symbol block given column by column.
pub fn build_sbc<T: Real>(symbols: &[Cx<T>], channel_len: usize, doppler_bins: usize) -> Result<BlockCirculantSymbols<T>> {
    if channel_len == 0 || symbols.len() != (2 * channel_len - 1) * doppler_bins {
        return Err(Error::Dimension(format!(
            "symbol block of length {} is not (2*{channel_len}-1) x {doppler_bins}",
            symbols.len()
        )));
    }
    Ok(BlockCirculantSymbols { channel_len, doppler_bins, generator: symbols.to_vec() })
}

/// Operator for the region whose first row is `anchor_row`, reading rows
/// `anchor_row-L+1 ..= anchor_row+L-1` of `grid`.
pub fn sbc_from_grid<T: Real>(grid: &DdGrid<T>, anchor_row: usize, channel_len: usize) -> Result<BlockCirculantSymbols<T>> {
    if anchor_row + 1 < channel_len {
        return Err(Error::Dimension(format!("anchor row {anchor_row} has fewer than {} rows above", channel_len - 1)));
    }
    let block = grid.region(anchor_row + 1 - channel_len, 2 * channel_len - 1)?;
    build_sbc(&block, channel_len, grid.doppler_bins())
}

impl<T: Real> LinearOperator<T> for BlockCirculantSymbols<T> {
    fn rows(&self) -> usize {
        self.channel_len * self.doppler_bins
    }

    fn cols(&self) -> usize {
        self.channel_len * self.doppler_bins
    }

    fn apply(&self, h: &[Cx<T>], out: &mut [Cx<T>]) {
        let (l, n) = (self.channel_len, self.doppler_bins);
        let rows = 2 * l - 1;
        for k in 0..n {
            for i in 0..l {
                let mut acc = Cx::new(T::zero(), T::zero());
                for np in 0..n {
                    let col = &self.generator[((k + n - np) % n) * rows..][..rows];
                    let hb = &h[np * l..(np + 1) * l];
                    for (c, &hc) in hb.iter().enumerate() {
                        acc = acc + col[l - 1 + i - c] * hc;
                    }
                }
                out[k * l + i] = acc;
            }
        }
    }

    fn apply_adjoint(&self, y: &[Cx<T>], out: &mut [Cx<T>]) {
        let (l, n) = (self.channel_len, self.doppler_bins);
        let rows = 2 * l - 1;
        for np in 0..n {
            for c in 0..l {
                let mut acc = Cx::new(T::zero(), T::zero());
                for k in 0..n {
                    let col = &self.generator[((k + n - np) % n) * rows..][..rows];
                    for i in 0..l {
                        acc = acc + col[l - 1 + i - c].conj() * y[k * l + i];
                    }
                }
                out[np * l + c] = acc;
            }
        }
    }
}
