//! Dense vectors and full (unpacked) symmetric matrices.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Inner product, accumulated in four lanes so the loop vectorizes.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// `y += a * x`
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn scaled(a: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| a * v).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Returns `x / ‖x‖` together with `‖x‖`; `None` for the zero vector.
pub fn normalized(x: &[f64]) -> Option<(Vec<f64>, f64)> {
    let nrm = norm(x);
    if nrm > 0.0 && nrm.is_finite() {
        Some((scaled(1.0 / nrm, x), nrm))
    } else {
        None
    }
}

pub fn unit_vector(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Dense symmetric matrix stored row-major in full.
///
/// Symmetry is bit-exact: every constructor and in-place update writes `(i, j)` and
/// `(j, i)` with the same value.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.data[i * d.len() + i] = v;
        }
        m
    }

    /// Builds a matrix from its upper triangle: `f(i, j)` is called once for each `i <= j`
    /// in row-major order and mirrored below the diagonal.
    pub fn from_upper<F: FnMut(usize, usize) -> f64>(n: usize, mut f: F) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    /// Wraps row-major data, rejecting anything that is not exactly symmetric.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        check_len(n * n, data.len())?;
        for i in 0..n {
            for j in (i + 1)..n {
                if data[i * n + j].to_bits() != data[j * n + i].to_bits() {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(SymMatrix { n, data })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, x.len())?;
        Ok((0..self.n).map(|i| dot(self.row(i), x)).collect())
    }

    /// `x^T M x`
    pub fn quad_form(&self, x: &[f64]) -> Result<f64> {
        let mx = self.matvec(x)?;
        Ok(dot(x, &mx))
    }

    /// `a * M + b * u u^T`, entrywise `a*M_ij + b*(u_i u_j)` so symmetry stays exact.
    pub fn scaled_plus_rank_one(&self, a: f64, b: f64, u: &[f64]) -> Result<SymMatrix> {
        check_len(self.n, u.len())?;
        let n = self.n;
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            let row = self.row(i);
            for j in 0..n {
                data.push(a * row[j] + b * (u[i] * u[j]));
            }
        }
        Ok(SymMatrix { n, data })
    }

    /// Congruence by the rank-one projector: `M <- (I - z z^T) M (I - z z^T)` for unit `z`.
    ///
    /// Expanded as `M - (z w^T + w z^T) + c (z z^T)` with `w = M z`, `c = z^T w`; each
    /// entry is a commutative expression in `(i, j)`, so the result is bit-symmetric.
    pub fn project_out(&mut self, z: &[f64]) -> Result<()> {
        let w = self.matvec(z)?;
        let c = dot(z, &w);
        let n = self.n;
        for i in 0..n {
            let (zi, wi) = (z[i], w[i]);
            let row = &mut self.data[i * n..(i + 1) * n];
            for j in 0..n {
                row[j] = row[j] - (zi * w[j] + wi * z[j]) + c * (zi * z[j]);
            }
        }
        Ok(())
    }

    /// Principal submatrix on `idx` (in the given order).
    pub fn principal_submatrix(&self, idx: &[usize]) -> SymMatrix {
        let m = idx.len();
        let mut data = Vec::with_capacity(m * m);
        for &i in idx {
            let row = self.row(i);
            data.extend(idx.iter().map(|&j| row[j]));
        }
        SymMatrix { n: m, data }
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (a, b)| f64::max(acc, libm::fabs(a - b)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_matvec(m: &SymMatrix, x: &[f64]) -> Vec<f64> {
        let n = m.n();
        let mut y = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                y[i] += m.get(i, j) * x[j];
            }
        }
        y
    }

    #[test]
    fn dot_handles_remainders() {
        let a: Vec<f64> = (0..7).map(|i| i as f64).collect();
        assert_eq!(dot(&a, &a), 91.0);
    }

    #[test]
    fn matvec_matches_naive() {
        let m = SymMatrix::from_upper(5, |i, j| (i * 5 + j) as f64 * 0.1 - 1.0);
        let x = [1.0, -2.0, 0.5, 3.0, 0.0];
        let y = m.matvec(&x).unwrap();
        let r = naive_matvec(&m, &x);
        for (a, b) in y.iter().zip(&r) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn from_row_major_rejects_asymmetry() {
        let err = SymMatrix::from_row_major(2, vec![1.0, 2.0, 3.0, 4.0]).unwrap_err();
        assert_eq!(err, Error::NotSymmetric { row: 0, col: 1 });
    }

    #[test]
    fn project_out_kills_direction_and_stays_symmetric() {
        let m = SymMatrix::from_upper(4, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let (z, _) = normalized(&[1.0, 2.0, -1.0, 0.5]).unwrap();
        let mut p = m.clone();
        p.project_out(&z).unwrap();
        let pz = p.matvec(&z).unwrap();
        assert!(norm(&pz) < 1e-14);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(p.get(i, j).to_bits(), p.get(j, i).to_bits());
            }
        }
    }

    #[test]
    fn principal_submatrix_picks_entries() {
        let m = SymMatrix::from_upper(3, |i, j| (10 * i + j) as f64);
        let s = m.principal_submatrix(&[0, 2]);
        assert_eq!(s.as_slice(), &[0.0, 2.0, 2.0, 22.0]);
    }
}
