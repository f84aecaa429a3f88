//! Dense rectangular matrices of [`HPReal`], row-major, dimensions fixed at
//! construction. Straightforward kernels — the matrices here stay small
//! (n <= ~40), so clarity and deterministic evaluation order win over
//! blocked/BLAS-style tricks.

use super::real::HPReal;
use super::HpError;

#[derive(Debug, Clone, PartialEq)]
pub struct HPMatrix {
    rows: usize,
    cols: usize,
    data: Vec<HPReal>,
}

impl HPMatrix {
    pub fn zeros(rows: usize, cols: usize, prec: u32) -> HPMatrix {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        HPMatrix {
            rows,
            cols,
            data: vec![HPReal::zero(prec); rows * cols],
        }
    }

    pub fn identity(n: usize, prec: u32) -> HPMatrix {
        let mut m = HPMatrix::zeros(n, n, prec);
        for i in 0..n {
            *m.at_mut(i, i) = HPReal::one(prec);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> HPReal) -> HPMatrix {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        HPMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> &HPReal {
        &self.data[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut HPReal {
        &mut self.data[i * self.cols + j]
    }

    pub fn transpose(&self) -> HPMatrix {
        HPMatrix::from_fn(self.cols, self.rows, |i, j| self.at(j, i).clone())
    }

    /// Largest |entry|.
    pub fn max_abs(&self) -> HPReal {
        let mut best = self.data[0].abs();
        for v in &self.data[1..] {
            let a = v.abs();
            if a > best {
                best = a;
            }
        }
        best
    }

    /// max-norm of (self - selfᵀ); zero for exactly symmetric matrices.
    pub fn max_asymmetry(&self) -> HPReal {
        assert!(self.is_square());
        let mut best = HPReal::zero(self.data[0].prec());
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let d = self.at(i, j).sub(self.at(j, i)).abs();
                if d > best {
                    best = d;
                }
            }
        }
        best
    }

    /// max-norm of (self - other).
    pub fn max_diff(&self, other: &HPMatrix) -> HPReal {
        assert!(self.rows == other.rows && self.cols == other.cols);
        let mut best = HPReal::zero(self.data[0].prec());
        for (a, b) in self.data.iter().zip(&other.data) {
            let d = a.sub(b).abs();
            if d > best {
                best = d;
            }
        }
        best
    }

    pub fn symmetrized(&self) -> HPMatrix {
        assert!(self.is_square());
        HPMatrix::from_fn(self.rows, self.cols, |i, j| {
            self.at(i, j).add(self.at(j, i)).ldexp(-1)
        })
    }

    pub fn add(&self, other: &HPMatrix) -> HPMatrix {
        assert!(self.rows == other.rows && self.cols == other.cols);
        HPMatrix::from_fn(self.rows, self.cols, |i, j| self.at(i, j).add(other.at(i, j)))
    }

    /// Divide every entry by `d` (round to nearest).
    pub fn scale_div(&self, d: &HPReal) -> HPMatrix {
        HPMatrix::from_fn(self.rows, self.cols, |i, j| self.at(i, j).div(d))
    }

    /// Multiply every entry by 2^k exactly.
    pub fn ldexp(&self, k: i32) -> HPMatrix {
        HPMatrix::from_fn(self.rows, self.cols, |i, j| self.at(i, j).ldexp(k))
    }

    pub fn matmul(&self, other: &HPMatrix) -> Result<HPMatrix, HpError> {
        if self.cols != other.rows {
            return Err(HpError::DimensionMismatch(format!(
                "matmul: {}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let prec = self.data[0].prec().max(other.data[0].prec());
        let mut out = HPMatrix::zeros(self.rows, other.cols, prec);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = HPReal::zero(prec);
                for k in 0..self.cols {
                    acc.add_mul_assign(self.at(i, k), other.at(k, j));
                }
                *out.at_mut(i, j) = acc;
            }
        }
        Ok(out)
    }

    /// self * diag(d) — scales column j by d[j].
    pub fn mul_diag(&self, d: &[HPReal]) -> HPMatrix {
        assert_eq!(self.cols, d.len());
        HPMatrix::from_fn(self.rows, self.cols, |i, j| self.at(i, j).mul(&d[j]))
    }

    /// diag(d) * self — scales row i by d[i].
    pub fn scale_rows(&self, d: &[HPReal]) -> HPMatrix {
        assert_eq!(self.rows, d.len());
        HPMatrix::from_fn(self.rows, self.cols, |i, j| self.at(i, j).mul(&d[i]))
    }

    /// The first `k` columns, as a rows × k matrix.
    pub fn leading_columns(&self, k: usize) -> HPMatrix {
        assert!(k <= self.cols);
        HPMatrix::from_fn(self.rows, k, |i, j| self.at(i, j).clone())
    }

    pub fn trace(&self) -> HPReal {
        assert!(self.is_square());
        let mut acc = HPReal::zero(self.data[0].prec());
        for i in 0..self.rows {
            acc = acc.add(self.at(i, i));
        }
        acc
    }

    /// Keep the leading `keep` rows and columns.
    pub fn truncate(&self, keep: usize) -> HPMatrix {
        assert!(keep <= self.rows && keep <= self.cols);
        HPMatrix::from_fn(keep, keep.min(self.cols), |i, j| self.at(i, j).clone())
    }
}
