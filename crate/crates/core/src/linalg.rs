//! Small dense and tridiagonal linear algebra kernels.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("singular system: pivot {pivot:e} at column {column} (scale {scale:e})")]
    Singular { column: usize, pivot: f64, scale: f64 },
    #[error("dimension mismatch: matrix {rows}x{rows}, right-hand side {rhs}")]
    Dimension { rows: usize, rhs: usize },
    #[error("{reason} (condition estimate {condition:e})")]
    Eigen { reason: String, condition: f64 },
}

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] += v;
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// Outcome of a successful solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveInfo<T> {
    /// `min |pivot| / max |pivot|`, a cheap inverse condition indicator.
    pub pivot_ratio: T,
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
/// `a` is consumed as workspace.
pub fn lu_solve<T: Scalar>(mut a: DenseMatrix<T>, mut b: Vec<T>) -> Result<(Vec<T>, SolveInfo<T>), LinalgError> {
    let n = a.n;
    if b.len() != n {
        return Err(LinalgError::Dimension { rows: n, rhs: b.len() });
    }
    let scale = a.max_abs();
    let tiny = T::from_index(n.max(1)) * T::epsilon() * scale;
    let mut min_piv = T::infinity();
    let mut max_piv = T::zero();
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, a.get(i, k).abs()))
            .fold((k, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(pmax > tiny) {
            return Err(LinalgError::Singular {
                column: k,
                pivot: pmax.to_f64().unwrap_or(f64::NAN),
                scale: scale.to_f64().unwrap_or(f64::NAN),
            });
        }
        min_piv = min_piv.min(pmax);
        max_piv = max_piv.max(pmax);
        if p != k {
            for j in 0..n {
                a.data.swap(k * n + j, p * n + j);
            }
            b.swap(k, p);
        }
        let pivot = a.get(k, k);
        let (head, tail) = a.data.split_at_mut((k + 1) * n);
        let prow = &head[k * n..];
        let bk = b[k];
        for (ri, row) in tail.chunks_exact_mut(n).enumerate() {
            let factor = row[k] / pivot;
            if factor == T::zero() {
                continue;
            }
            row[k] = T::zero();
            for j in k + 1..n {
                row[j] -= factor * prow[j];
            }
            b[k + 1 + ri] -= factor * bk;
        }
    }
    for k in (0..n).rev() {
        let mut s = b[k];
        for (j, &bj) in b.iter().enumerate().skip(k + 1) {
            s -= a.get(k, j) * bj;
        }
        b[k] = s / a.get(k, k);
    }
    Ok((
        b,
        SolveInfo {
            pivot_ratio: if n == 0 { T::one() } else { min_piv / max_piv },
        },
    ))
}

/// Number of eigenvalues strictly below `x` of the symmetric tridiagonal
/// matrix with diagonal `d` and off-diagonal `e` (Sturm sequence).
fn sturm_count<T: Scalar>(d: &[T], e2: &[T], x: T, pivmin: T) -> usize {
    let mut count = 0;
    let mut q = d[0] - x;
    if q.abs() < pivmin {
        q = -pivmin;
    }
    if q < T::zero() {
        count += 1;
    }
    for i in 1..d.len() {
        q = d[i] - x - e2[i - 1] / q;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < T::zero() {
            count += 1;
        }
    }
    count
}

/// The `k` largest eigenvalues, in descending order, of the symmetric
/// tridiagonal matrix with diagonal `d` and off-diagonal `e`, by bisection.
pub fn symmetric_tridiagonal_largest<T: Scalar>(d: &[T], e: &[T], k: usize) -> Vec<T> {
    let n = d.len();
    assert_eq!(e.len() + 1, n.max(1), "off-diagonal length");
    let e2: Vec<T> = e.iter().map(|&v| v * v).collect();
    // Gershgorin interval.
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { T::zero() } + if i + 1 < n { e[i].abs() } else { T::zero() };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    let norm = lo.abs().max(hi.abs()).max(T::min_positive_value());
    let pivmin = T::min_positive_value() * norm.max(T::one());
    let two = T::lit(2.0);
    (0..k.min(n))
        .map(|j| {
            // Index in ascending order.
            let target = n - 1 - j;
            let (mut a, mut b) = (lo, hi);
            for _ in 0..300 {
                let mid = (a + b) / two;
                if b - a <= two * T::epsilon() * norm || mid <= a || mid >= b {
                    break;
                }
                if sturm_count(d, &e2, mid, pivmin) > target {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            (a + b) / two
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let mut a = DenseMatrix::zeros(3);
        let rows = [[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [3.0, 0.0, 1.0]];
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                a.set(i, j, v);
            }
        }
        let x_true = vec![1.0f64, -2.0, 0.5];
        let b = a.mul_vec(&x_true);
        let (x, info) = lu_solve(a, b).unwrap();
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-14);
        }
        assert!(info.pivot_ratio > 0.0);
    }

    #[test]
    fn detects_singularity() {
        let mut a = DenseMatrix::zeros(2);
        a.set(0, 0, 1.0);
        a.set(0, 1, 2.0);
        a.set(1, 0, 2.0);
        a.set(1, 1, 4.0);
        assert!(matches!(lu_solve(a, vec![1.0, 1.0]), Err(LinalgError::Singular { .. })));
        assert!(lu_solve(DenseMatrix::<f64>::zeros(2), vec![1.0]).is_err());
    }

    #[test]
    fn tridiagonal_eigenvalues_of_second_difference() {
        // tridiag(1, -2, 1) of size n has eigenvalues -4 sin^2(kπ/(2(n+1))).
        let n = 50;
        let d = vec![-2.0f64; n];
        let e = vec![1.0f64; n - 1];
        let eig = symmetric_tridiagonal_largest(&d, &e, 5);
        for (k, &v) in eig.iter().enumerate() {
            let x: f64 = (k + 1) as f64 * std::f64::consts::PI / (2.0 * (n + 1) as f64);
            let exact = -4.0 * x.sin().powi(2);
            assert!((v - exact).abs() < 1e-13, "{k}: {v} vs {exact}");
        }
    }
}
