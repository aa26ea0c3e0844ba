//! Minimal complex linear-algebra layer: the [`LinearOperator`] abstraction used by
//! the matrix-free detector, and a small dense matrix for oracles.

use crate::error::{Error, Result};
use crate::scalar::{Cx, Real};

/// A linear map `C^cols -> C^rows` with forward and adjoint application.
///
/// Implementations must be safe for concurrent read-only use.
pub trait LinearOperator<T: Real>: Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// `out = A x`.
    fn apply(&self, x: &[Cx<T>], out: &mut [Cx<T>]);
    /// `out = A^H y`.
    fn apply_adjoint(&self, y: &[Cx<T>], out: &mut [Cx<T>]);

    fn apply_vec(&self, x: &[Cx<T>]) -> Vec<Cx<T>> {
        let mut out = vec![Cx::new(T::zero(), T::zero()); self.rows()];
        self.apply(x, &mut out);
        out
    }

    fn apply_adjoint_vec(&self, y: &[Cx<T>]) -> Vec<Cx<T>> {
        let mut out = vec![Cx::new(T::zero(), T::zero()); self.cols()];
        self.apply_adjoint(y, &mut out);
        out
    }
}

impl<T: Real, A: LinearOperator<T> + ?Sized> LinearOperator<T> for &A {
    fn rows(&self) -> usize {
        (**self).rows()
    }
    fn cols(&self) -> usize {
        (**self).cols()
    }
    fn apply(&self, x: &[Cx<T>], out: &mut [Cx<T>]) {
        (**self).apply(x, out)
    }
    fn apply_adjoint(&self, y: &[Cx<T>], out: &mut [Cx<T>]) {
        (**self).apply_adjoint(y, out)
    }
}

/// Identity on `C^n`.
#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl<T: Real> LinearOperator<T> for Identity {
    fn rows(&self) -> usize {
        self.0
    }
    fn cols(&self) -> usize {
        self.0
    }
    fn apply(&self, x: &[Cx<T>], out: &mut [Cx<T>]) {
        out.copy_from_slice(x);
    }
    fn apply_adjoint(&self, y: &[Cx<T>], out: &mut [Cx<T>]) {
        out.copy_from_slice(y);
    }
}

/// `A * diag(mask)`: columns outside the mask are forced to zero.
pub struct ColumnMask<'a, T: Real, A: LinearOperator<T> + ?Sized> {
    pub inner: &'a A,
    pub mask: &'a [bool],
    _t: std::marker::PhantomData<T>,
}

impl<'a, T: Real, A: LinearOperator<T> + ?Sized> ColumnMask<'a, T, A> {
    pub fn new(inner: &'a A, mask: &'a [bool]) -> Self {
        assert_eq!(mask.len(), inner.cols(), "mask length must equal operator columns");
        ColumnMask { inner, mask, _t: std::marker::PhantomData }
    }
}

impl<'a, T: Real, A: LinearOperator<T> + ?Sized> LinearOperator<T> for ColumnMask<'a, T, A> {
    fn rows(&self) -> usize {
        self.inner.rows()
    }
    fn cols(&self) -> usize {
        self.inner.cols()
    }
    fn apply(&self, x: &[Cx<T>], out: &mut [Cx<T>]) {
        let masked: Vec<Cx<T>> = x
            .iter()
            .zip(self.mask)
            .map(|(v, &keep)| if keep { *v } else { Cx::new(T::zero(), T::zero()) })
            .collect();
        self.inner.apply(&masked, out);
    }
    fn apply_adjoint(&self, y: &[Cx<T>], out: &mut [Cx<T>]) {
        self.inner.apply_adjoint(y, out);
        for (v, &keep) in out.iter_mut().zip(self.mask) {
            if !keep {
                *v = Cx::new(T::zero(), T::zero());
            }
        }
    }
}

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Cx<T>>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![Cx::new(T::zero(), T::zero()); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Cx::new(T::one(), T::zero()));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Cx<T>) -> Self {
        let mut m = Self::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.data[r * cols + c] = f(r, c);
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Cx<T> {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Cx<T>) {
        self.data[r * self.cols + c] = v;
    }

    pub fn column(&self, c: usize) -> Vec<Cx<T>> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    /// Product skipping zero entries of `self`; the factors used to build the
    /// effective-channel oracle are mostly sparse.
    pub fn matmul(&self, rhs: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            let orow = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let brow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o = *o + a * *b;
                }
            }
        }
        Ok(out)
    }

    pub fn conj_transpose(&self) -> DenseMatrix<T> {
        DenseMatrix::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    pub fn sub(&self, rhs: &DenseMatrix<T>) -> DenseMatrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a - *b).collect(),
        }
    }

    pub fn frobenius_sqr(&self) -> T {
        crate::scalar::norm_sqr(&self.data)
    }

    pub fn as_slice(&self) -> &[Cx<T>] {
        &self.data
    }
}

impl<T: Real> LinearOperator<T> for DenseMatrix<T> {
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }
    fn apply(&self, x: &[Cx<T>], out: &mut [Cx<T>]) {
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            *o = row.iter().zip(x).fold(Cx::new(T::zero(), T::zero()), |acc, (a, b)| acc + *a * *b);
        }
    }
    fn apply_adjoint(&self, y: &[Cx<T>], out: &mut [Cx<T>]) {
        for o in out.iter_mut() {
            *o = Cx::new(T::zero(), T::zero());
        }
        for (r, yr) in y.iter().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (o, a) in out.iter_mut().zip(row) {
                *o = *o + a.conj() * *yr;
            }
        }
    }
}

/// `<a, b> = sum conj(a_i) b_i`.
pub fn inner<T: Real>(a: &[Cx<T>], b: &[Cx<T>]) -> Cx<T> {
    a.iter().zip(b).fold(Cx::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * *y)
}
