//! The sign and rectifier activations.
//!
//! Every module evaluates threshold units through [`sgn`]; there is no other
//! definition of the sign function in the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Output of a threshold unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Pos,
    Neg,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Pos => 1.0,
            Sign::Neg => -1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Pos => 1,
            Sign::Neg => -1,
        }
    }

    pub fn is_pos(self) -> bool {
        self == Sign::Pos
    }

    pub fn from_bool(positive: bool) -> Self {
        if positive {
            Sign::Pos
        } else {
            Sign::Neg
        }
    }

    /// Parses a `+1` / `-1` label.
    pub fn from_label(v: f64) -> Result<Self> {
        if v == 1.0 {
            Ok(Sign::Pos)
        } else if v == -1.0 {
            Ok(Sign::Neg)
        } else {
            Err(Error::Parse(format!("label must be +1 or -1, got {v}")))
        }
    }
}

impl std::ops::Neg for Sign {
    type Output = Sign;
    fn neg(self) -> Sign {
        match self {
            Sign::Pos => Sign::Neg,
            Sign::Neg => Sign::Pos,
        }
    }
}

/// `+1` iff `z >= 0`, with no tolerance. Non-finite input is rejected.
#[inline]
pub fn sgn(z: f64) -> Result<Sign> {
    if !z.is_finite() {
        return Err(Error::NonFinite(z));
    }
    Ok(if z >= 0.0 { Sign::Pos } else { Sign::Neg })
}

#[inline]
pub fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_is_positive() {
        assert_eq!(sgn(0.0).unwrap(), Sign::Pos);
        assert_eq!(sgn(-0.0).unwrap(), Sign::Pos);
    }

    #[test]
    fn tiny_negative_is_negative() {
        assert_eq!(sgn(-1e-300).unwrap(), Sign::Neg);
        assert_eq!(sgn(-f64::MIN_POSITIVE / 4.0).unwrap(), Sign::Neg);
    }

    #[test]
    fn positive() {
        assert_eq!(sgn(3.7).unwrap(), Sign::Pos);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(sgn(f64::NAN), Err(Error::NonFinite(_))));
        assert!(sgn(f64::INFINITY).is_err());
        assert!(sgn(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn relu_clamps() {
        assert_eq!(relu(-2.0), 0.0);
        assert_eq!(relu(0.0), 0.0);
        assert_eq!(relu(1.5), 1.5);
    }
}
