//! Solvers for `x = Q x + B` where `I - Q` is nonsingular (every row
//! leaks probability mass eventually).

use crate::scalar::{tol, Scalar};
use crate::CoreError;

/// Sweep cap for the iterative float solver.
pub const MAX_SWEEPS: usize = 5_000_000;

/// Solves `x = Q x + B` with `Q` sparse (rows of `(col, value)`) and `B`
/// dense with `k` right-hand sides.  The exact engine uses Gaussian
/// elimination; the float engine uses Gauss-Seidel until the max-norm
/// residual drops below [`tol::RESIDUAL`].
pub fn solve_fixpoint<T: Scalar>(
    q: &[Vec<(usize, T)>],
    b: &[Vec<T>],
) -> Result<Vec<Vec<T>>, CoreError> {
    if q.is_empty() {
        return Ok(Vec::new());
    }
    if T::EXACT {
        Ok(gauss_fixpoint(q, b))
    } else {
        gauss_seidel(q, b)
    }
}

fn gauss_fixpoint<T: Scalar>(q: &[Vec<(usize, T)>], b: &[Vec<T>]) -> Vec<Vec<T>> {
    let n = q.len();
    let k = b.first().map_or(0, Vec::len);
    // Dense augmented matrix [I - Q | B], eliminating only nonzeros.
    let mut a: Vec<Vec<T>> = vec![vec![T::zero(); n + k]; n];
    for i in 0..n {
        a[i][i] = T::one();
        for (j, p) in &q[i] {
            a[i][*j] = a[i][*j].clone() - p.clone();
        }
        for (r, v) in b[i].iter().enumerate() {
            a[i][n + r] = v.clone();
        }
    }
    for col in 0..n {
        let piv = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .expect("I - Q is nonsingular on transient states");
        a.swap(col, piv);
        let inv = T::one() / a[col][col].clone();
        let nz: Vec<usize> = (col..n + k).filter(|&j| !a[col][j].is_zero()).collect();
        for &j in &nz {
            a[col][j] = a[col][j].clone() * inv.clone();
        }
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for &j in &nz {
                let v = f.clone() * a[col][j].clone();
                a[r][j] = a[r][j].clone() - v;
            }
        }
    }
    a.into_iter().map(|row| row[n..].to_vec()).collect()
}

fn gauss_seidel<T: Scalar>(
    q: &[Vec<(usize, T)>],
    b: &[Vec<T>],
) -> Result<Vec<Vec<T>>, CoreError> {
    let n = q.len();
    let k = b.first().map_or(0, Vec::len);
    let mut x: Vec<Vec<T>> = b.to_vec();
    let eps = T::from_f64(tol::RESIDUAL);
    for _ in 0..MAX_SWEEPS {
        let mut residual = T::zero();
        for i in 0..n {
            let mut diag = T::zero();
            let mut acc = b[i].clone();
            for (j, p) in &q[i] {
                if *j == i {
                    diag = diag + p.clone();
                } else {
                    for r in 0..k {
                        acc[r] = acc[r].clone() + p.clone() * x[*j][r].clone();
                    }
                }
            }
            let scale = T::one() / (T::one() - diag);
            for r in 0..k {
                let v = acc[r].clone() * scale.clone();
                let d = (v.clone() - x[i][r].clone()).abs();
                if d > residual {
                    residual = d;
                }
                x[i][r] = v;
            }
        }
        if residual <= eps {
            return Ok(x);
        }
    }
    Err(CoreError::NoConvergence)
}

/// Solves the dense square system `A x = b` exactly (or with partial
/// pivoting for floats).  Returns `None` for singular matrices.
pub fn solve_dense<T: Scalar>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = a.len();
    for col in 0..n {
        let piv = if T::EXACT {
            (col..n).find(|&r| !a[r][col].is_zero())?
        } else {
            let r = (col..n).max_by(|&x, &y| {
                a[x][col]
                    .abs()
                    .partial_cmp(&a[y][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })?;
            if a[r][col].abs() <= T::from_f64(1e-13) {
                return None;
            }
            r
        };
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone() / a[col][col].clone();
            for j in col..n {
                let v = f.clone() * a[col][j].clone();
                a[r][j] = a[r][j].clone() - v;
            }
            let v = f * b[col].clone();
            b[r] = b[r].clone() - v;
        }
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut acc = b[i].clone();
        for j in i + 1..n {
            acc = acc - a[i][j].clone() * x[j].clone();
        }
        x[i] = acc / a[i][i].clone();
    }
    Some(x)
}
