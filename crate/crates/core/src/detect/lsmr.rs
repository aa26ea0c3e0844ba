//! LSMR for complex operators (Fong and Saunders, 2011).
//!
//! Golub-Kahan bidiagonalization produces real `alpha`, `beta`, so every rotation is
//! real and only the Krylov vectors are complex.

use crate::error::{Error, Result};
use crate::linalg::LinearOperator;
use crate::scalar::{norm, Cx, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct LsmrOptions<T> {
    pub damping: T,
    /// Used as both `atol` and `btol`.
    pub tolerance: T,
    pub max_iters: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LsmrStop {
    ZeroRhs,
    Consistent,
    LeastSquares,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LsmrOutput<T> {
    pub x: Vec<Cx<T>>,
    pub iterations: usize,
    /// `||b - A x||` (augmented with the damping term) after each iteration,
    /// starting with `||b||`.
    pub residual_history: Vec<T>,
    pub stop: LsmrStop,
}

impl<T: Real> LsmrOutput<T> {
    pub fn residual_norm(&self) -> T {
        *self.residual_history.last().unwrap()
    }
}

fn sym_ortho<T: Real>(a: T, b: T) -> (T, T, T) {
    let zero = T::zero();
    if b == zero {
        let c = if a == zero { T::one() } else { a.signum() };
        (c, zero, a.abs())
    } else if a == zero {
        (zero, b.signum(), b.abs())
    } else if b.abs() > a.abs() {
        let tau = a / b;
        let s = b.signum() / (T::one() + tau * tau).sqrt();
        let c = s * tau;
        (c, s, b / s)
    } else {
        let tau = b / a;
        let c = a.signum() / (T::one() + tau * tau).sqrt();
        let s = c * tau;
        (c, s, a / c)
    }
}

fn scale<T: Real>(v: &mut [Cx<T>], s: T) {
    for z in v.iter_mut() {
        *z = *z * s;
    }
}

/// `min ||A x - b||^2 + damping^2 ||x||^2`.
pub fn lsmr_solve<T: Real, A: LinearOperator<T> + ?Sized>(a: &A, b: &[Cx<T>], opts: &LsmrOptions<T>) -> Result<LsmrOutput<T>> {
    let (m, n) = (a.rows(), a.cols());
    if b.len() != m {
        return Err(Error::Dimension(format!("rhs length {} for {m} x {n} operator", b.len())));
    }
    if b.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Numeric("non-finite right-hand side".into()));
    }
    if !(opts.tolerance > T::zero()) {
        return Err(Error::Parameter("LSMR tolerance must be positive".into()));
    }
    let zero = Cx::new(T::zero(), T::zero());
    let damp = opts.damping;
    let tol = opts.tolerance;

    let mut x = vec![zero; n];
    let mut u = b.to_vec();
    let mut beta = norm(&u);
    let normb = beta;
    if beta == T::zero() {
        return Ok(LsmrOutput { x, iterations: 0, residual_history: vec![T::zero()], stop: LsmrStop::ZeroRhs });
    }
    scale(&mut u, T::one() / beta);
    let mut v = vec![zero; n];
    a.apply_adjoint(&u, &mut v);
    let mut alpha = norm(&v);
    if alpha > T::zero() {
        scale(&mut v, T::one() / alpha);
    }
    let mut history = vec![beta];
    if alpha == T::zero() {
        return Ok(LsmrOutput { x, iterations: 0, residual_history: history, stop: LsmrStop::LeastSquares });
    }

    let mut zetabar = alpha * beta;
    let mut alphabar = alpha;
    let mut rho = T::one();
    let mut rhobar = T::one();
    let mut cbar = T::one();
    let mut sbar = T::zero();
    let mut h = v.clone();
    let mut hbar = vec![zero; n];

    // residual-norm recurrences
    let mut betadd = beta;
    let mut betad = T::zero();
    let mut rhodold = T::one();
    let mut tautildeold = T::zero();
    let mut thetatilde = T::zero();
    let mut zeta = T::zero();
    let mut d = T::zero();
    let mut norm_a2 = alpha * alpha;

    let mut av = vec![zero; m];
    let mut atu = vec![zero; n];
    let mut stop = LsmrStop::IterationLimit;
    let mut iterations = 0;
    while iterations < opts.max_iters {
        iterations += 1;
        a.apply(&v, &mut av);
        for (ui, avi) in u.iter_mut().zip(&av) {
            *ui = *avi - *ui * alpha;
        }
        beta = norm(&u);
        if beta > T::zero() {
            scale(&mut u, T::one() / beta);
            a.apply_adjoint(&u, &mut atu);
            for (vi, ai) in v.iter_mut().zip(&atu) {
                *vi = *ai - *vi * beta;
            }
            alpha = norm(&v);
            if alpha > T::zero() {
                scale(&mut v, T::one() / alpha);
            }
        }

        let (chat, shat, alphahat) = sym_ortho(alphabar, damp);
        let rhoold = rho;
        let (c, s, rho_new) = sym_ortho(alphahat, beta);
        rho = rho_new;
        let thetanew = s * alpha;
        alphabar = c * alpha;

        let rhobarold = rhobar;
        let zetaold = zeta;
        let thetabar = sbar * rho;
        let (cb, sb, rb) = sym_ortho(cbar * rho, thetanew);
        cbar = cb;
        sbar = sb;
        rhobar = rb;
        zeta = cbar * zetabar;
        zetabar = -sbar * zetabar;

        let hcoef = thetabar * rho / (rhoold * rhobarold);
        let xcoef = zeta / (rho * rhobar);
        let vcoef = thetanew / rho;
        for i in 0..n {
            hbar[i] = h[i] - hbar[i] * hcoef;
            x[i] = x[i] + hbar[i] * xcoef;
            h[i] = v[i] - h[i] * vcoef;
        }

        let betaacute = chat * betadd;
        let betacheck = -shat * betadd;
        let betahat = c * betaacute;
        betadd = -s * betaacute;
        let thetatildeold = thetatilde;
        let (ctildeold, stildeold, rhotildeold) = sym_ortho(rhodold, thetabar);
        thetatilde = stildeold * rhobar;
        rhodold = ctildeold * rhobar;
        betad = -stildeold * betad + ctildeold * betahat;
        tautildeold = (zetaold - thetatildeold * tautildeold) / rhotildeold;
        let taud = (zeta - thetatilde * tautildeold) / rhodold;
        d = d + betacheck * betacheck;
        let normr = (d + (betad - taud) * (betad - taud) + betadd * betadd).sqrt();
        history.push(normr);

        norm_a2 = norm_a2 + beta * beta;
        let norm_a = norm_a2.sqrt();
        norm_a2 = norm_a2 + alpha * alpha;
        let normar = zetabar.abs();
        let normx = norm(&x);

        if !normr.is_finite() || !normx.is_finite() {
            return Err(Error::Numeric("LSMR diverged".into()));
        }
        let test1 = normr / normb;
        let test2 = if norm_a * normr > T::zero() { normar / (norm_a * normr) } else { T::infinity() };
        let rtol = tol + tol * norm_a * normx / normb;
        if test1 <= rtol {
            stop = LsmrStop::Consistent;
            break;
        }
        if test2 <= tol {
            stop = LsmrStop::LeastSquares;
            break;
        }
    }
    Ok(LsmrOutput { x, iterations, residual_history: history, stop })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ColumnMask, DenseMatrix, Identity};
    use crate::scalar::max_abs_diff;
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn opts(tol: f64, damping: f64) -> LsmrOptions<f64> {
        LsmrOptions { damping, tolerance: tol, max_iters: 500 }
    }

    fn random_vec(len: usize, rng: &mut ChaCha8Rng) -> Vec<Cx<f64>> {
        (0..len).map(|_| Cx::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect()
    }

    fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DenseMatrix<f64> {
        let mut a = DenseMatrix::from_fn(rows, cols, |_, _| Cx::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        // keep it comfortably conditioned
        for i in 0..rows.min(cols) {
            a.set(i, i, a.get(i, i) + Cx::new(2.0, 0.0));
        }
        a
    }

    /// Least-squares solution through nalgebra's SVD.
    fn dense_lstsq(a: &DenseMatrix<f64>, b: &[Cx<f64>], damping: f64) -> Vec<Cx<f64>> {
        let (r, c) = (a.nrows(), a.ncols());
        let mut stacked = DMatrix::<Complex64>::zeros(r + c, c);
        for i in 0..r {
            for j in 0..c {
                stacked[(i, j)] = a.get(i, j);
            }
        }
        for j in 0..c {
            stacked[(r + j, j)] = Complex64::new(damping, 0.0);
        }
        let mut rhs = nalgebra::DVector::<Complex64>::zeros(r + c);
        for i in 0..r {
            rhs[i] = b[i];
        }
        let sol = stacked.svd(true, true).solve(&rhs, 1e-14).unwrap();
        sol.iter().copied().collect()
    }

    #[test]
    fn identity_returns_rhs() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let b = random_vec(50, &mut rng);
        let out = lsmr_solve(&Identity(50), &b, &opts(1e-6, 0.0)).unwrap();
        assert!(max_abs_diff(&out.x, &b) < 1e-6);
        assert_eq!(out.stop, LsmrStop::Consistent);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let out = lsmr_solve(&Identity(8), &[Cx::new(0.0, 0.0); 8], &opts(1e-6, 0.0)).unwrap();
        assert!(out.x.iter().all(|z| z.norm() == 0.0));
        assert_eq!(out.stop, LsmrStop::ZeroRhs);
    }

    #[test]
    fn rejects_bad_input() {
        let mut b = vec![Cx::new(1.0, 0.0); 4];
        b[2] = Cx::new(f64::NAN, 0.0);
        assert!(matches!(lsmr_solve(&Identity(4), &b, &opts(1e-6, 0.0)), Err(Error::Numeric(_))));
        assert!(matches!(lsmr_solve(&Identity(4), &b[..3], &opts(1e-6, 0.0)), Err(Error::Dimension(_))));
    }

    #[test]
    fn matches_dense_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for (rows, cols, damping) in [(64, 64, 0.0), (64, 40, 0.0), (48, 48, 0.3), (64, 64, 0.1)] {
            let a = random_matrix(rows, cols, &mut rng);
            let b = random_vec(rows, &mut rng);
            let out = lsmr_solve(&a, &b, &opts(1e-12, damping)).unwrap();
            let expect = dense_lstsq(&a, &b, damping);
            assert!(max_abs_diff(&out.x, &expect) < 1e-6, "{rows}x{cols} damping {damping}");
        }
    }

    #[test]
    fn masked_columns_stay_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(32, 32, &mut rng);
        let mask: Vec<bool> = (0..32).map(|i| i % 3 != 0).collect();
        let b = random_vec(32, &mut rng);
        let out = lsmr_solve(&ColumnMask::new(&a, &mask), &b, &opts(1e-10, 0.0)).unwrap();
        for (i, z) in out.x.iter().enumerate() {
            if !mask[i] {
                assert_eq!(z.norm(), 0.0);
            }
        }
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_matrix(40, 40, &mut rng);
        let b = random_vec(40, &mut rng);
        let o1 = lsmr_solve(&a, &b, &opts(1e-8, 0.0)).unwrap();
        let o2 = lsmr_solve(&a, &b, &opts(1e-8, 0.0)).unwrap();
        assert_eq!(o1.x, o2.x);
        assert_eq!(o1.residual_history, o2.residual_history);
    }

    #[test]
    fn residual_estimate_tracks_true_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_matrix(60, 30, &mut rng);
        let b = random_vec(60, &mut rng);
        let out = lsmr_solve(&a, &b, &opts(1e-10, 0.0)).unwrap();
        let ax = a.apply_vec(&out.x);
        let r: Vec<_> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        assert!((norm(&r) - out.residual_norm()).abs() < 1e-8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn residual_history_non_increasing(seed in any::<u64>(), rows in 8usize..40, cols in 4usize..40, damping in 0.0f64..0.5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_matrix(rows, cols, &mut rng);
            let b = random_vec(rows, &mut rng);
            let out = lsmr_solve(&a, &b, &opts(1e-9, damping)).unwrap();
            for w in out.residual_history.windows(2) {
                // rounding only
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-15, "{} > {}", w[1], w[0]);
            }
        }
    }
}
