//! Region count of a generic hyperplane arrangement.

use num_integer::Integer;

use crate::error::{Error, Result};

/// `C(n, k)` with overflow detection; zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) is exact; reduce first so the product never exceeds the result.
        let (num, den) = (u128::from(n - i), u128::from(i + 1));
        let g = num.gcd(&den);
        acc = (acc / (den / g))
            .checked_mul(num / g)
            .ok_or_else(|| Error::Overflow(format!("C({n}, {k})")))?;
    }
    Ok(acc)
}

/// Number of regions cut out by `n` hyperplanes in general position in `d` dimensions:
/// `sum_{s=0}^{d} C(n, s)`.
pub fn region_count(n: u64, d: u64) -> Result<u128> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    let mut total: u128 = 0;
    for s in 0..=d.min(n) {
        total = total
            .checked_add(binomial(n, s)?)
            .ok_or_else(|| Error::Overflow(format!("region count for n={n}, d={d}")))?;
    }
    Ok(total)
}
