//! `V = U T` factorization between `2^n` threshold units and `n` rectifier units.

use nalgebra::DMatrix;

use super::encoding::EncodingMatrix;
use crate::error::{Error, Result};
use crate::network::{AffineUnit, ReluNetwork, ThresholdNetwork};

/// Per-entry tolerance for [`exact_factorize`].
pub const EXACT_FACTOR_TOLERANCE: f64 = 1e-9;

fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    match m.iter().find(|v| !v.is_finite()) {
        Some(&v) => Err(Error::NonFinite(v)),
        None => Ok(()),
    }
}

fn column_unit(m: &DMatrix<f64>, c: usize) -> Result<AffineUnit> {
    let d = m.nrows() - 1;
    AffineUnit::new(m.column(c).rows(0, d).iter().copied().collect(), m[(d, c)])
}

/// `n` such that `2^n == m`.
pub fn log2_exact(m: usize) -> Result<usize> {
    if m.is_power_of_two() {
        Ok(m.trailing_zeros() as usize)
    } else {
        Err(Error::NotPowerOfTwo(m))
    }
}

/// Threshold-unit matrix: column `k` stacks `(v_k; d_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VMatrix(DMatrix<f64>);

impl VMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(Error::InvalidArgument("V must have at least one row and column".into()));
        }
        check_finite(&m)?;
        Ok(Self(m))
    }

    pub fn from_units(units: &[AffineUnit]) -> Result<Self> {
        let d = units.first().map(AffineUnit::dim).ok_or_else(|| Error::InvalidArgument("no units".into()))?;
        for u in units {
            if u.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: u.dim() });
            }
        }
        Self::new(DMatrix::from_fn(d + 1, units.len(), |r, c| {
            if r == d {
                units[c].bias()
            } else {
                units[c].weights()[r]
            }
        }))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// Input dimension `d` (rows minus the bias row).
    pub fn dim(&self) -> usize {
        self.0.nrows() - 1
    }

    pub fn num_units(&self) -> usize {
        self.0.ncols()
    }

    pub fn unit(&self, k: usize) -> Result<AffineUnit> {
        column_unit(&self.0, k)
    }

    pub fn units(&self) -> Result<Vec<AffineUnit>> {
        (0..self.num_units()).map(|k| self.unit(k)).collect()
    }
}

/// Rectifier matrix: columns `0..n` stack `(u_k; b_k)`, the last column is `(0; w0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UMatrix(DMatrix<f64>);

impl UMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() < 2 {
            return Err(Error::InvalidArgument("U needs at least one row and two columns".into()));
        }
        check_finite(&m)?;
        let last = m.ncols() - 1;
        if let Some(r) = (0..m.nrows() - 1).find(|&r| m[(r, last)] != 0.0) {
            return Err(Error::InvalidArgument(format!(
                "U's last column must have a zero weight block (row {r} is {})",
                m[(r, last)]
            )));
        }
        Ok(Self(m))
    }

    pub fn from_parts(units: &[AffineUnit], w0: f64) -> Result<Self> {
        let d = units.first().map(AffineUnit::dim).ok_or_else(|| Error::InvalidArgument("no units".into()))?;
        for u in units {
            if u.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: u.dim() });
            }
        }
        let n = units.len();
        Self::new(DMatrix::from_fn(d + 1, n + 1, |r, c| match (r == d, c == n) {
            (true, true) => w0,
            (false, true) => 0.0,
            (true, false) => units[c].bias(),
            (false, false) => units[c].weights()[r],
        }))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows() - 1
    }

    /// Number of rectifier units.
    pub fn n(&self) -> usize {
        self.0.ncols() - 1
    }

    pub fn w0(&self) -> f64 {
        self.0[(self.dim(), self.n())]
    }

    pub fn unit(&self, k: usize) -> Result<AffineUnit> {
        column_unit(&self.0, k)
    }

    pub fn encoding(&self) -> Result<EncodingMatrix> {
        EncodingMatrix::new(self.n())
    }

    /// `U T` with the extended encoding matrix.
    pub fn times_encoding(&self) -> Result<DMatrix<f64>> {
        Ok(&self.0 * self.encoding()?.extended())
    }

    /// `sgn(w0 + sum_k R(u_k . x + b_k))`.
    pub fn relu_network(&self) -> Result<ReluNetwork> {
        let units = (0..self.n()).map(|k| self.unit(k)).collect::<Result<_>>()?;
        ReluNetwork::new(self.dim(), units, vec![], self.w0())
    }
}

/// `V = U T`, computed entry by entry as sums of `U` columns.
pub fn expand(u: &UMatrix) -> Result<VMatrix> {
    VMatrix::new(u.times_encoding()?)
}

/// `V = U T` and the disjunction threshold network `sgn(2^n - 1 + sum_k sgn(v_k . x + d_k))`.
///
/// The network needs `d >= 1`; use [`expand`] for bias-only matrices.
pub fn expand_compressed(u: &UMatrix) -> Result<(VMatrix, ThresholdNetwork)> {
    let v = expand(u)?;
    if v.dim() == 0 {
        return Err(Error::InvalidArgument("networks need at least one input dimension".into()));
    }
    let net = ThresholdNetwork::disjunction(v.dim(), &v.units()?)?;
    Ok((v, net))
}

/// Recovers `U` from `V = U T`, reading `w0` from column 0 and `u_k` from the
/// singleton-bit columns, then checking every column against the implied sum.
pub fn exact_factorize(v: &VMatrix) -> Result<UMatrix> {
    let m = v.matrix();
    let n = log2_exact(m.ncols())?;
    if n == 0 {
        return Err(Error::InvalidArgument("V needs at least two columns".into()));
    }
    let enc = EncodingMatrix::new(n)?;
    let d = v.dim();
    let weight_dev = (0..d).map(|r| m[(r, 0)].abs()).fold(0.0, f64::max);
    if weight_dev > EXACT_FACTOR_TOLERANCE {
        return Err(Error::NotFactorable { column: 0, deviation: weight_dev });
    }
    let w0 = m[(d, 0)];
    let mut u = DMatrix::zeros(d + 1, n + 1);
    u[(d, n)] = w0;
    for k in 0..n {
        let c = enc.singleton_column(k);
        for r in 0..=d {
            u[(r, k)] = m[(r, c)] - if r == d { w0 } else { 0.0 };
        }
    }
    let u = UMatrix::new(u)?;
    let implied = u.times_encoding()?;
    for c in 0..m.ncols() {
        let dev = (0..=d).map(|r| (m[(r, c)] - implied[(r, c)]).abs()).fold(0.0, f64::max);
        if dev > EXACT_FACTOR_TOLERANCE {
            return Err(Error::NotFactorable { column: c, deviation: dev });
        }
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sign::Sign;

    #[test]
    fn one_unit_expansion() {
        let u = UMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5])).unwrap();
        let (v, net) = expand_compressed(&u).unwrap();
        assert_eq!(v.matrix(), &DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -0.5, -0.5]));
        assert_eq!(net.layers()[0].outputs(), 2);
        assert_eq!(net.layers()[1].bias(), &[1.0]);
        let relu = u.relu_network().unwrap();
        for x in [-1.0, 0.0, 0.4, 0.5, 0.6, 2.0] {
            assert_eq!(net.eval(&[x]).unwrap(), relu.eval(&[x]).unwrap());
        }
        assert_eq!(relu.eval(&[0.5]).unwrap(), Sign::Pos);
        assert_eq!(relu.eval(&[0.4]).unwrap(), Sign::Neg);
    }

    #[test]
    fn first_column_is_bias_only() {
        let u = UMatrix::new(DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, -3.0, 0.5, 0.0, 0.25, 0.75, 1.5])).unwrap();
        let v = expand(&u).unwrap();
        assert_eq!(v.matrix().column(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.0, 1.5]);
        assert_eq!(exact_factorize(&v).unwrap(), u);
    }

    #[test]
    fn zero_block_enforced() {
        assert!(UMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 0.0])).is_err());
    }

    #[test]
    fn nonzero_first_weight_column_is_not_factorable() {
        let v = VMatrix::new(DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 0.0])).unwrap();
        assert!(matches!(exact_factorize(&v), Err(Error::NotFactorable { column: 0, .. })));
    }

    #[test]
    fn violating_column_reported() {
        let u = UMatrix::new(DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 0.0, 0.5, -0.5, 0.1])).unwrap();
        let mut m = expand(&u).unwrap().matrix().clone();
        m[(1, 3)] += 0.1;
        match exact_factorize(&VMatrix::new(m).unwrap()) {
            Err(Error::NotFactorable { column, deviation }) => {
                assert_eq!(column, 3);
                assert!((deviation - 0.1).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn column_count_must_be_power_of_two() {
        let v = VMatrix::new(DMatrix::zeros(2, 3)).unwrap();
        assert_eq!(exact_factorize(&v), Err(Error::NotPowerOfTwo(3)));
    }

    #[test]
    fn bias_only_matrices() {
        let u = UMatrix::new(DMatrix::from_row_slice(1, 3, &[0.5, -1.0, 2.0])).unwrap();
        let v = expand(&u).unwrap();
        assert_eq!(v.matrix(), &DMatrix::from_row_slice(1, 4, &[2.0, 1.0, 2.5, 1.5]));
        assert!(expand_compressed(&u).is_err());
        assert_eq!(exact_factorize(&v).unwrap(), u);
    }
}
