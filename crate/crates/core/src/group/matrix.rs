//! Square integer matrices with overflow-checked arithmetic.

use crate::error::{Error, Result};
use crate::rat::Rat;
use num_traits::{One, Zero};

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct IntMatrix {
    dim: usize,
    entries: Vec<i64>,
}

impl IntMatrix {
    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1;
        }
        IntMatrix { dim, entries }
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidPresentation("matrix must be square and nonempty".into()));
        }
        Ok(IntMatrix { dim, entries: rows.concat() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[i64] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> i64 {
        self.entries[row * self.dim + col]
    }

    pub fn is_identity(&self) -> bool {
        *self == IntMatrix::identity(self.dim)
    }

    pub fn checked_mul(&self, other: &IntMatrix) -> Result<IntMatrix> {
        let n = self.dim;
        let mut out = vec![0i64; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == 0 {
                    continue;
                }
                for j in 0..n {
                    let b = other.entries[k * n + j];
                    let prod = a.checked_mul(b).ok_or_else(|| Error::Overflow("matrix product".into()))?;
                    out[i * n + j] =
                        out[i * n + j].checked_add(prod).ok_or_else(|| Error::Overflow("matrix product".into()))?;
                }
            }
        }
        Ok(IntMatrix { dim: n, entries: out })
    }

    /// Inverse over the integers; fails unless the determinant is ±1.
    pub fn inverse(&self) -> Result<IntMatrix> {
        let n = self.dim;
        let mut a: Vec<Vec<Rat>> = (0..n)
            .map(|i| {
                let mut row: Vec<Rat> = (0..n).map(|j| Rat::from_integer(self.get(i, j))).collect();
                row.extend((0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }));
                row
            })
            .collect();
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| !a[r][col].is_zero())
                .ok_or_else(|| Error::InvalidPresentation("singular matrix".into()))?;
            a.swap(col, pivot);
            let p = a[col][col];
            for v in a[col].iter_mut() {
                *v /= p;
            }
            for r in 0..n {
                if r != col && !a[r][col].is_zero() {
                    let f = a[r][col];
                    let pivot_row = a[col].clone();
                    for (x, y) in a[r].iter_mut().zip(&pivot_row) {
                        *x -= *y * f;
                    }
                }
            }
        }
        let mut entries = Vec::with_capacity(n * n);
        for row in &a {
            for v in &row[n..] {
                if !v.is_integer() {
                    return Err(Error::InvalidPresentation("matrix is not invertible over Z".into()));
                }
                entries.push(v.to_integer());
            }
        }
        Ok(IntMatrix { dim: n, entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_unipotent() {
        let x = IntMatrix::from_rows(&[vec![1, 1, 0], vec![0, 1, 0], vec![0, 0, 1]]).unwrap();
        let xi = x.inverse().unwrap();
        assert!(x.checked_mul(&xi).unwrap().is_identity());
        let two = IntMatrix::from_rows(&[vec![2, 0], vec![0, 1]]).unwrap();
        assert!(two.inverse().is_err());
    }

    #[test]
    fn overflow_is_reported() {
        let big = IntMatrix::from_rows(&[vec![1, i64::MAX], vec![0, 1]]).unwrap();
        assert!(matches!(big.checked_mul(&big), Err(Error::Overflow(_))));
    }
}
