use crate::error::{Error, Result};
use crate::math::{DenseMatrix, Scalar};

/// A `c × n` matrix over `{-1, +1}`: one `c`-bit hash code per column.
///
/// Stored column-major so each point's code is a contiguous slice.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CodeMatrix {
    bits: usize,
    points: usize,
    signs: Vec<i8>,
}

impl CodeMatrix {
    /// All-`+1` codes.
    pub fn ones(bits: usize, points: usize) -> Self {
        Self {
            bits,
            points,
            signs: vec![1; bits * points],
        }
    }

    /// Builds from column-major signs (code of point 0 first).
    pub fn from_columns_flat(bits: usize, points: usize, signs: Vec<i8>) -> Result<Self> {
        if signs.len() != bits * points {
            return Err(Error::invalid(format!(
                "code data has {} entries, expected {bits}x{points}",
                signs.len()
            )));
        }
        if let Some(v) = signs.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::invalid(format!("code entry {v} is not -1 or +1")));
        }
        Ok(Self {
            bits,
            points,
            signs,
        })
    }

    pub fn from_columns(bits: usize, columns: &[Vec<i8>]) -> Result<Self> {
        if columns.iter().any(|c| c.len() != bits) {
            return Err(Error::invalid(format!("every code must have {bits} bits")));
        }
        Self::from_columns_flat(bits, columns.len(), columns.concat())
    }

    /// Code length `c`.
    #[inline]
    pub fn bits(&self) -> usize {
        self.bits
    }

    /// Number of coded points `n`.
    #[inline]
    pub fn points(&self) -> usize {
        self.points
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[i8] {
        &self.signs[j * self.bits..(j + 1) * self.bits]
    }

    pub fn columns(&self) -> impl ExactSizeIterator<Item = &[i8]> + '_ {
        // chunks_exact panics on a zero chunk size
        (0..self.points).map(move |j| self.column(j))
    }

    #[inline]
    pub fn get(&self, bit: usize, point: usize) -> i8 {
        self.signs[point * self.bits + bit]
    }

    pub fn as_columns_flat(&self) -> &[i8] {
        &self.signs
    }

    pub fn select_columns(&self, indices: &[usize]) -> Result<Self> {
        let mut signs = Vec::with_capacity(indices.len() * self.bits);
        for &j in indices {
            if j >= self.points {
                return Err(Error::invalid(format!(
                    "code column {j} out of range for {} points",
                    self.points
                )));
            }
            signs.extend_from_slice(self.column(j));
        }
        Ok(Self {
            bits: self.bits,
            points: indices.len(),
            signs,
        })
    }

    /// `c × n` real matrix with the same entries.
    pub fn to_dense<T: Scalar>(&self) -> DenseMatrix<T> {
        DenseMatrix::from_fn(self.bits, self.points, |r, c| {
            if self.get(r, c) > 0 {
                T::one()
            } else {
                -T::one()
            }
        })
    }

    /// `tr(selfᵀ V) = Σ_ij B_ij V_ij`.
    pub fn trace_product<T: Scalar>(&self, v: &DenseMatrix<T>) -> Result<T> {
        if v.shape() != (self.bits, self.points) {
            return Err(Error::invalid(format!(
                "trace product shape mismatch: {}x{} codes vs {:?}",
                self.bits,
                self.points,
                v.shape()
            )));
        }
        let mut acc = T::zero();
        for r in 0..self.bits {
            for c in 0..self.points {
                let x = v[(r, c)];
                acc = if self.get(r, c) > 0 { acc + x } else { acc - x };
            }
        }
        Ok(acc)
    }
}

/// Element-wise sign with `sign(0) = +1` (negative zero included).
pub fn sign_matrix<T: Scalar>(m: &DenseMatrix<T>) -> CodeMatrix {
    let (bits, points) = m.shape();
    let mut signs = Vec::with_capacity(bits * points);
    for c in 0..points {
        for r in 0..bits {
            signs.push(if m[(r, c)] >= T::zero() { 1 } else { -1 });
        }
    }
    CodeMatrix {
        bits,
        points,
        signs,
    }
}
