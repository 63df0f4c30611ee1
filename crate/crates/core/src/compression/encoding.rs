use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const MAX_ENCODING_BITS: usize = 20;

/// `n x 2^n` binary matrix whose column `i` (zero-based) is `i` in binary,
/// most significant bit in the first row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodingMatrix {
    n: usize,
}

impl EncodingMatrix {
    pub fn new(n: usize) -> Result<Self> {
        if !(1..=MAX_ENCODING_BITS).contains(&n) {
            return Err(Error::InvalidArgument(format!("encoding width must be in 1..={MAX_ENCODING_BITS}, got {n}")));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn columns(&self) -> usize {
        1 << self.n
    }

    #[inline]
    pub fn bit(&self, row: usize, col: usize) -> u8 {
        ((col >> (self.n - 1 - row)) & 1) as u8
    }

    /// Column holding a single one, in `row`.
    pub fn singleton_column(&self, row: usize) -> usize {
        1 << (self.n - 1 - row)
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.columns(), |r, c| f64::from(self.bit(r, c)))
    }

    /// `[T_n; 1 ... 1]`, the `(n+1) x 2^n` matrix used in `V = U T`.
    pub fn extended(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n + 1, self.columns(), |r, c| if r == self.n { 1.0 } else { f64::from(self.bit(r, c)) })
    }
}

pub fn encoding_matrix(n: usize) -> Result<EncodingMatrix> {
    EncodingMatrix::new(n)
}
