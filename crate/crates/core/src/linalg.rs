//! Dense complex linear algebra: matrix exponential and linear solves.
//!
//! The matrix exponential follows Higham (2005), "The Scaling and Squaring
//! Method for the Matrix Exponential Revisited": Padé(13,13) on the scaled
//! matrix, then repeated squaring. The drift matrices in this crate are at
//! most 11x11, so no effort is spent on blocking or BLAS.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = Array2<Complex64>;
pub type CVector = Array1<Complex64>;

/// Padé(13,13) numerator/denominator coefficients (exact integers, all
/// representable in f64).
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// theta_13 from Higham (2005), Table 2.3: scaling threshold for the 1-norm.
const THETA13: f64 = 5.371920351148152;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Identity matrix.
pub fn eye(n: usize) -> CMatrix {
    Array2::from_diag_elem(n, c(1.0))
}

/// 1-norm (maximum absolute column sum).
pub fn norm_1(a: &CMatrix) -> f64 {
    let mut max = 0.0f64;
    for j in 0..a.ncols() {
        let s: f64 = (0..a.nrows()).map(|i| a[[i, j]].norm()).sum();
        max = max.max(s);
    }
    max
}

/// exp(A) by scaling-and-squaring with Padé(13,13).
///
/// Fails with `SingularPropagation` if the input contains non-finite entries
/// or the Padé denominator cannot be inverted.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SingularPropagation(
            "non-finite entry in exponent matrix".into(),
        ));
    }
    if n == 0 {
        return Ok(Array2::zeros((0, 0)));
    }

    let norm = norm_1(a);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let a_scaled = a.mapv(|z| z / c((1u64 << s) as f64));

    let mut e = pade13(&a_scaled)?;
    for _ in 0..s {
        e = e.dot(&e);
    }
    if e.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SingularPropagation(
            "matrix exponential overflowed (divergent drift?)".into(),
        ));
    }
    Ok(e)
}

/// Padé(13,13) rational approximation of exp(A) for ||A||_1 <= theta_13.
fn pade13(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    let id = eye(n);
    let a2 = a.dot(a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);

    // U = A [ (b13 A6 + b11 A4 + b9 A2) A6 + b7 A6 + b5 A4 + b3 A2 + b1 I ]
    let w1 = &a6 * c(PADE13[13]) + &a4 * c(PADE13[11]) + &a2 * c(PADE13[9]);
    let w = w1.dot(&a6)
        + &a6 * c(PADE13[7])
        + &a4 * c(PADE13[5])
        + &a2 * c(PADE13[3])
        + &id * c(PADE13[1]);
    let u = a.dot(&w);

    // V = (b12 A6 + b10 A4 + b8 A2) A6 + b6 A6 + b4 A4 + b2 A2 + b0 I
    let v1 = &a6 * c(PADE13[12]) + &a4 * c(PADE13[10]) + &a2 * c(PADE13[8]);
    let v = v1.dot(&a6)
        + &a6 * c(PADE13[6])
        + &a4 * c(PADE13[4])
        + &a2 * c(PADE13[2])
        + &id * c(PADE13[0]);

    // exp(A) ~= (V - U)^-1 (V + U)
    solve(&(&v - &u), &(&v + &u))
}

/// Solve A X = B by Gaussian elimination with partial pivoting.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    assert_eq!(n, b.nrows());
    let m = b.ncols();

    let mut lu = a.clone();
    let mut x = b.clone();

    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_mag = lu[[col, col]].norm();
        for row in (col + 1)..n {
            let mag = lu[[row, col]].norm();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = row;
            }
        }
        if pivot_mag == 0.0 || !pivot_mag.is_finite() {
            return Err(Error::SingularPropagation(format!(
                "singular linear system (pivot {pivot_mag:.3e} in column {col})"
            )));
        }
        if pivot_row != col {
            for j in 0..n {
                lu.swap([col, j], [pivot_row, j]);
            }
            for j in 0..m {
                x.swap([col, j], [pivot_row, j]);
            }
        }
        let pivot = lu[[col, col]];
        for row in (col + 1)..n {
            let factor = lu[[row, col]] / pivot;
            if factor == c(0.0) {
                continue;
            }
            for j in (col + 1)..n {
                let v = lu[[col, j]];
                lu[[row, j]] -= factor * v;
            }
            for j in 0..m {
                let v = x[[col, j]];
                x[[row, j]] -= factor * v;
            }
        }
    }
    for col in (0..n).rev() {
        let pivot = lu[[col, col]];
        for j in 0..m {
            let mut sum = x[[col, j]];
            for k in (col + 1)..n {
                sum -= lu[[col, k]] * x[[k, j]];
            }
            x[[col, j]] = sum / pivot;
        }
    }
    Ok(x)
}

/// Solve A x = b for a single right-hand side.
pub fn solve_vec(a: &CMatrix, b: &CVector) -> Result<CVector> {
    let n = b.len();
    let bm = b.clone().into_shape_with_order((n, 1)).expect("shape");
    let x = solve(a, &bm)?;
    Ok(x.column(0).to_owned())
}

/// Matrix-vector product.
pub fn matvec(a: &CMatrix, v: &CVector) -> CVector {
    a.dot(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn assert_close(a: &CMatrix, b: &CMatrix, tol: f64) {
        assert_eq!(a.shape(), b.shape());
        for ((i, j), v) in a.indexed_iter() {
            let d = (v - b[[i, j]]).norm();
            assert!(d < tol, "({i},{j}): {v} vs {} (diff {d:e})", b[[i, j]]);
        }
    }

    /// Brute-force Taylor series with scaling; independent of the Padé path.
    fn expm_series(a: &CMatrix) -> CMatrix {
        let n = a.nrows();
        let s = 10u32; // scale by 2^10 so the series converges fast
        let scaled = a.mapv(|z| z / c(1024.0));
        let mut term = eye(n);
        let mut sum = eye(n);
        for k in 1..40 {
            term = term.dot(&scaled).mapv(|z| z / c(k as f64));
            sum = &sum + &term;
        }
        let mut e = sum;
        for _ in 0..s {
            e = e.dot(&e);
        }
        e
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let z = CMatrix::zeros((5, 5));
        assert_close(&expm(&z).unwrap(), &eye(5), 1e-15);
    }

    #[test]
    fn exp_of_diagonal() {
        let mut a = CMatrix::zeros((2, 2));
        a[[0, 0]] = Complex64::new(1.0, 2.0);
        a[[1, 1]] = Complex64::new(-3.0, 0.5);
        let e = expm(&a).unwrap();
        assert_abs_diff_eq!((e[[0, 0]] - a[[0, 0]].exp()).norm(), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!((e[[1, 1]] - a[[1, 1]].exp()).norm(), 0.0, epsilon = 1e-13);
        assert!(e[[0, 1]].norm() < 1e-15 && e[[1, 0]].norm() < 1e-15);
    }

    #[test]
    fn exp_of_nilpotent() {
        // exp([[0,1],[0,0]]) = [[1,1],[0,1]] exactly
        let mut a = CMatrix::zeros((2, 2));
        a[[0, 1]] = c(1.0);
        let e = expm(&a).unwrap();
        let mut want = eye(2);
        want[[0, 1]] = c(1.0);
        assert_close(&e, &want, 1e-14);
    }

    #[test]
    fn exp_matches_taylor_series_on_random_matrix() {
        // Fixed pseudo-random complex matrix, entries O(1).
        let n = 6;
        let mut a = CMatrix::zeros((n, n));
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        for i in 0..n {
            for j in 0..n {
                a[[i, j]] = Complex64::new(next(), next());
            }
        }
        let e = expm(&a).unwrap();
        let want = expm_series(&a);
        assert_close(&e, &want, 1e-11);
    }

    #[test]
    fn exp_semigroup_property() {
        let mut a = CMatrix::zeros((3, 3));
        a[[0, 1]] = Complex64::new(0.3, -0.7);
        a[[1, 0]] = Complex64::new(-0.2, 0.1);
        a[[1, 2]] = c(2.0);
        a[[2, 2]] = Complex64::new(-0.5, 4.0);
        let e1 = expm(&a.mapv(|z| z * c(0.3))).unwrap();
        let e2 = expm(&a.mapv(|z| z * c(0.7))).unwrap();
        let e = expm(&a).unwrap();
        assert_close(&e1.dot(&e2), &e, 1e-12);
    }

    #[test]
    fn exp_with_large_norm_scales() {
        let mut a = CMatrix::zeros((2, 2));
        a[[0, 0]] = c(-80.0);
        a[[1, 1]] = c(3.0);
        let e = expm(&a).unwrap();
        assert!((e[[0, 0]].re - (-80.0f64).exp()).abs() < 1e-40);
        assert!((e[[1, 1]].re - 3.0f64.exp()).abs() / 3.0f64.exp() < 1e-12);
    }

    #[test]
    fn solve_roundtrip() {
        let mut a = CMatrix::zeros((3, 3));
        a[[0, 0]] = c(2.0);
        a[[0, 1]] = Complex64::new(0.0, 1.0);
        a[[1, 0]] = c(1.0);
        a[[1, 1]] = c(-1.0);
        a[[1, 2]] = c(0.5);
        a[[2, 2]] = Complex64::new(0.0, -2.0);
        let b = eye(3);
        let x = solve(&a, &b).unwrap();
        assert_close(&a.dot(&x), &b, 1e-13);
    }

    #[test]
    fn solve_rejects_singular() {
        let a = CMatrix::zeros((2, 2));
        assert!(matches!(
            solve(&a, &eye(2)),
            Err(Error::SingularPropagation(_))
        ));
    }

    #[test]
    fn expm_rejects_non_finite() {
        let mut a = CMatrix::zeros((2, 2));
        a[[0, 0]] = c(f64::NAN);
        assert!(matches!(expm(&a), Err(Error::SingularPropagation(_))));
    }
}
