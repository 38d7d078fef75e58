//! Dense row-major matrix helpers for stochastic-matrix work.
//!
//! Everything in this crate that is not a labelled channel works on plain
//! `Vec<Vec<f64>>` rows; dimensions stay in the tens to low thousands, so no
//! external linear-algebra dependency is warranted.

use crate::{Error, Result};

/// A dense matrix as a list of rows.
pub type Mat = Vec<Vec<f64>>;

pub fn identity(n: usize) -> Mat {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// The s-ary symmetric matrix with diagonal `rho` and uniform off-diagonal.
pub fn uniform_noise(s: usize, rho: f64) -> Mat {
    let off = if s > 1 { (1.0 - rho) / (s - 1) as f64 } else { 0.0 };
    (0..s)
        .map(|i| (0..s).map(|j| if i == j { rho } else { off }).collect())
        .collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    debug_assert!(a.is_empty() || a[0].len() == b.len());
    let cols = if b.is_empty() { 0 } else { b[0].len() };
    a.iter()
        .map(|row| {
            let mut out = vec![0.0; cols];
            for (k, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    for (o, &w) in out.iter_mut().zip(&b[k]) {
                        *o += v * w;
                    }
                }
            }
            out
        })
        .collect()
}

pub fn mat_pow(a: &Mat, e: usize) -> Mat {
    let mut out = identity(a.len());
    for _ in 0..e {
        out = matmul(&out, a);
    }
    out
}

/// Largest absolute entry difference.
pub fn inf_norm_diff(a: &Mat, b: &Mat) -> f64 {
    let mut d: f64 = 0.0;
    for (ra, rb) in a.iter().zip(b) {
        for (&x, &y) in ra.iter().zip(rb) {
            d = d.max((x - y).abs());
        }
    }
    d
}

/// Checks entries are non-negative and every row sums to one within `tol`.
pub fn check_row_stochastic(m: &Mat, tol: f64) -> Result<()> {
    for (i, row) in m.iter().enumerate() {
        if row.iter().any(|&p| p < -tol) {
            return Err(Error::NotStochastic(format!("row {i} has a negative entry")));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > tol {
            return Err(Error::NotStochastic(format!("row {i} sums to {s}")));
        }
    }
    Ok(())
}

/// Inverts a square matrix by Gauss-Jordan elimination with partial pivoting.
pub fn invert(a: &Mat) -> Result<Mat> {
    let n = a.len();
    let mut work: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| work[i][col].abs().total_cmp(&work[j][col].abs()))
            .unwrap();
        if work[pivot][col].abs() < 1e-12 {
            return Err(Error::RankDeficient(format!("pivot {col} below threshold")));
        }
        work.swap(col, pivot);
        let inv = 1.0 / work[col][col];
        for v in work[col].iter_mut() {
            *v *= inv;
        }
        for row in 0..n {
            if row != col {
                let f = work[row][col];
                if f != 0.0 {
                    for j in 0..2 * n {
                        work[row][j] -= f * work[col][j];
                    }
                }
            }
        }
    }
    Ok(work.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Numerical row rank by modified Gram-Schmidt with a pivot threshold on the
/// residual norm.
pub fn row_rank(a: &Mat, tol: f64) -> usize {
    greedy_independent_rows(a, a.len(), tol).len()
}

/// Greedily selects up to `want` rows of `a` with maximal residual norm after
/// projecting out previously selected rows. Returns the selected indices in
/// selection order; stops early when no residual exceeds `tol`.
pub fn greedy_independent_rows(a: &Mat, want: usize, tol: f64) -> Vec<usize> {
    let mut residuals: Vec<Vec<f64>> = a.clone();
    let mut available: Vec<usize> = (0..a.len()).collect();
    let mut picked = Vec::new();
    while picked.len() < want && !available.is_empty() {
        let (slot, &idx) = available
            .iter()
            .enumerate()
            .max_by(|(_, &i), (_, &j)| norm2(&residuals[i]).total_cmp(&norm2(&residuals[j])))
            .unwrap();
        let norm = norm2(&residuals[idx]).sqrt();
        if norm <= tol {
            break;
        }
        let dir: Vec<f64> = residuals[idx].iter().map(|&v| v / norm).collect();
        available.remove(slot);
        for &other in &available {
            let dot: f64 = residuals[other].iter().zip(&dir).map(|(&x, &d)| x * d).sum();
            for (v, &d) in residuals[other].iter_mut().zip(&dir) {
                *v -= dot * d;
            }
        }
        picked.push(idx);
    }
    picked
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|&x| x * x).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invert_round_trip() {
        let a = vec![vec![0.8, 0.2], vec![0.3, 0.7]];
        let inv = invert(&a).unwrap();
        let prod = matmul(&a, &inv);
        assert!(inf_norm_diff(&prod, &identity(2)) < 1e-12);
    }

    #[test]
    fn invert_rejects_singular() {
        let a = vec![vec![0.5, 0.5], vec![0.5, 0.5]];
        assert!(matches!(invert(&a), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn rank_of_duplicated_rows() {
        let a = vec![vec![0.5, 0.5, 0.0], vec![0.5, 0.5, 0.0], vec![0.0, 0.0, 1.0]];
        assert_eq!(row_rank(&a, 1e-9), 2);
    }

    #[test]
    fn uniform_noise_rows_sum_to_one() {
        let m = uniform_noise(4, 0.7);
        check_row_stochastic(&m, 1e-12).unwrap();
        assert_eq!(m[2][2], 0.7);
        assert!((m[2][0] - 0.1).abs() < 1e-15);
    }
}
