//! Symmetric band storage and a band Cholesky factorization.
//!
//! Operators are assembled densely; before time stepping they are compressed to
//! their actual bandwidth so that each step costs `O(n·bandwidth)`. A fully dense
//! matrix is simply the case `bandwidth = n - 1`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot} = {value:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Lower band of a symmetric matrix: `band[i][k] = A[i, i - k]` for `k ≤ bandwidth`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSym {
    n: usize,
    bandwidth: usize,
    band: Vec<f64>,
}

impl BandedSym {
    /// Largest `|i - j|` with a nonzero entry.
    pub fn detect_bandwidth(a: &DMatrix<f64>) -> usize {
        let n = a.nrows();
        let mut bw = 0;
        for j in 0..n {
            for i in (j + bw + 1..n).rev() {
                if a[(i, j)] != 0.0 || a[(j, i)] != 0.0 {
                    bw = i - j;
                    break;
                }
            }
        }
        bw
    }

    /// Compress the lower band of a square matrix (the upper triangle is ignored).
    pub fn from_dense(a: &DMatrix<f64>) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "band storage needs a square matrix");
        let n = a.nrows();
        let bandwidth = Self::detect_bandwidth(a);
        let w = bandwidth + 1;
        let mut band = vec![0.0; n * w];
        for i in 0..n {
            for k in 0..=bandwidth.min(i) {
                band[i * w + k] = a[(i, i - k)];
            }
        }
        Self { n, bandwidth, band }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    fn at(&self, i: usize, k: usize) -> f64 {
        self.band[i * (self.bandwidth + 1) + k]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bandwidth {
            0.0
        } else {
            self.at(i, i - j)
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        let w = self.bandwidth + 1;
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            let row = &self.band[i * w..(i + 1) * w];
            y[i] += row[0] * x[i];
            for k in 1..=self.bandwidth.min(i) {
                let a = row[k];
                y[i] += a * x[i - k];
                y[i - k] += a * x[i];
            }
        }
    }

    /// `xᵀ A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let y = self.matvec(x);
        x.iter().zip(&y).map(|(a, b)| a * b).sum()
    }

    /// In-band Cholesky `A = L Lᵀ`.
    pub fn cholesky(&self) -> Result<BandCholesky, LinalgError> {
        let n = self.n;
        let bw = self.bandwidth;
        let w = bw + 1;
        let mut l = self.band.clone();
        let scale = (0..n).map(|i| self.at(i, 0).abs()).fold(0.0_f64, f64::max);
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                // l[i][j] lives at l[i*w + (i-j)]
                let kmin = j0.max(j.saturating_sub(bw));
                let mut s = l[i * w + (i - j)];
                for k in kmin..j {
                    s -= l[i * w + (i - k)] * l[j * w + (j - k)];
                }
                if i == j {
                    if !(s > scale * 1e-14) {
                        return Err(LinalgError::NotPositiveDefinite {
                            row: i,
                            pivot: i,
                            value: s,
                        });
                    }
                    l[i * w] = s.sqrt();
                } else {
                    l[i * w + (i - j)] = s / l[j * w];
                }
            }
        }
        Ok(BandCholesky {
            n,
            bandwidth: bw,
            l,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bandwidth: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) -> Result<(), LinalgError> {
        if b.len() != self.n {
            return Err(LinalgError::DimensionMismatch {
                expected: self.n,
                got: b.len(),
            });
        }
        let w = self.bandwidth + 1;
        // L y = b
        for i in 0..self.n {
            let mut s = b[i];
            for k in 1..=self.bandwidth.min(i) {
                s -= self.l[i * w + k] * b[i - k];
            }
            b[i] = s / self.l[i * w];
        }
        // Lᵀ x = y
        for i in (0..self.n).rev() {
            let xi = b[i] / self.l[i * w];
            b[i] = xi;
            for k in 1..=self.bandwidth.min(i) {
                b[i - k] -= self.l[i * w + k] * xi;
            }
        }
        Ok(())
    }

    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>, LinalgError> {
        let mut x = b.as_slice().to_vec();
        self.solve_in_place(&mut x)?;
        Ok(DVector::from_vec(x))
    }
}
