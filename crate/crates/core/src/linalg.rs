//! Small dense linear-algebra helpers shared across modules.

use crate::scalar::{real, Real};
use ndarray::{Array1, Array2};

/// Spectral radius of a square matrix via normalized repeated squaring:
/// `rho(M) = lim_k ||M^(2^k)||^(1/2^k)`.
///
/// Each squaring halves the weight of the norm's constant factor, so ~60
/// squarings estimate the radius to near machine precision. Works for any
/// real matrix; used here for the nonnegative branching matrices of Hawkes
/// processes, where the Perron root equals the spectral radius.
pub fn spectral_radius<S: Real>(matrix: &Array2<S>) -> S {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols(), "spectral radius needs a square matrix");
    if n == 0 {
        return S::zero();
    }

    let inf_norm = |m: &Array2<S>| -> S {
        m.rows()
            .into_iter()
            .map(|row| row.iter().fold(S::zero(), |acc, &x| acc + x.abs()))
            .fold(S::zero(), S::max)
    };

    let mut h = matrix.clone();
    // acc = sum_j ln(n_j) / 2^j, so rho = exp(acc) in the limit.
    let mut acc = S::zero();
    let mut weight = S::one();
    for _ in 0..60 {
        let norm = inf_norm(&h);
        if norm == S::zero() {
            // Nilpotent: every eigenvalue is zero.
            return S::zero();
        }
        if !norm.is_finite() {
            return S::infinity();
        }
        acc += weight * norm.ln();
        weight *= real::<S>(0.5);
        h = h.mapv(|x| x / norm);
        h = h.dot(&h);
    }
    acc.exp()
}

/// Entrywise L1 distance between two matrices of matching shape.
pub fn l1_distance<S: Real>(a: &Array2<S>, b: &Array2<S>) -> S {
    debug_assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| (x - y).abs())
        .sum()
}

/// Entrywise L1 distance between two vectors of matching length.
pub fn l1_distance_vec<S: Real>(a: &Array1<S>, b: &Array1<S>) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b.iter())
        .map(|(&x, &y)| (x - y).abs())
        .sum()
}

/// Frobenius inner product of two matrices.
pub fn frobenius_inner<S: Real>(a: &Array2<S>, b: &Array2<S>) -> S {
    debug_assert_eq!(a.dim(), b.dim());
    a.iter().zip(b.iter()).map(|(&x, &y)| x * y).sum()
}
