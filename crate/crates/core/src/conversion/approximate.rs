//! Rectifier networks built from threshold networks: the `2n`-unit surrogate and
//! the three-sign-to-two-rectifier compression.

use crate::error::{Error, Result};
use crate::network::{normalize_to_general_form, AffineUnit, ReluNetwork, ThresholdNetwork};
use crate::sign::relu;

/// Tolerance for the coplanarity residual and the bias-independence gap.
pub const THREE_SIGN_TOLERANCE: f64 = 1e-9;

/// Units `(v, d + eps)` and `(v, d - eps)` whose rescaled difference
/// `(R(plus) - R(minus)) / eps - 1` equals `sgn(v.x + d)` off the band `|v.x + d| < eps`.
pub fn sign_unit_to_relu_pair(v: &AffineUnit, eps: f64) -> Result<(AffineUnit, AffineUnit)> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    Ok((v.with_bias(v.bias() + eps)?, v.with_bias(v.bias() - eps)?))
}

/// Value of the rectifier surrogate for a pre-activation `z`; always in `[-1, 1]`.
pub fn sign_surrogate(z: f64, eps: f64) -> f64 {
    (relu(z + eps) - relu(z - eps)) / eps - 1.0
}

/// Replaces every hidden sign unit of a two-layer threshold network by a rectifier pair.
///
/// The result has `2m` units and agrees with `net` wherever every hidden
/// pre-activation satisfies `|v_k . x + d_k| >= eps`.
pub fn threshold2_to_relu(net: &ThresholdNetwork, eps: f64) -> Result<ReluNetwork> {
    if !net.is_two_layer() {
        return Err(Error::InvalidNetwork(format!(
            "expected a two-layer threshold network, got {} layers",
            net.layers().len()
        )));
    }
    let out = &net.layers()[1];
    let (w, w0) = (out.weight_row(0), out.bias()[0]);
    let mut hidden = Vec::with_capacity(2 * w.len());
    let mut out_weights = Vec::with_capacity(2 * w.len());
    for (unit, &wk) in net.first_layer_units().iter().zip(&w) {
        let (plus, minus) = sign_unit_to_relu_pair(unit, eps)?;
        hidden.push(plus);
        out_weights.push(wk / eps);
        hidden.push(minus);
        out_weights.push(-wk / eps);
    }
    // Each surrogate carries a "-1" that moves into the output bias.
    let bias = w0 - w.iter().sum::<f64>();
    normalize_to_general_form(net.dim(), &hidden, &out_weights, bias)
}

/// Coefficients with `v3 = p v1 + q v2` and `r = 1 / (d3 - p d1 - q d2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeSignFactors {
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

impl ThreeSignFactors {
    /// The two-rectifier network reproduces the three-sign disjunction when
    /// `p`, `q` and `r` are all positive; otherwise the unit signs flip.
    pub fn preserves_disjunction(&self) -> bool {
        self.p > 0.0 && self.q > 0.0 && self.r > 0.0
    }
}

/// Solves `v3 = p v1 + q v2` by the 2x2 normal equations and checks the bias gap.
pub fn three_sign_factors(v1: &AffineUnit, v2: &AffineUnit, v3: &AffineUnit) -> Result<ThreeSignFactors> {
    let d = v1.dim();
    for u in [v2, v3] {
        if u.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: u.dim() });
        }
    }
    let (a, b, c) = (v1.weights(), v2.weights(), v3.weights());
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(s, t)| s * t).sum::<f64>();
    let gram = nalgebra::Matrix2::new(dot(a, a), dot(a, b), dot(a, b), dot(b, b));
    let rhs = nalgebra::Vector2::new(dot(a, c), dot(b, c));
    let sol = gram
        .lu()
        .solve(&rhs)
        .filter(|s| s.iter().all(|v| v.is_finite()))
        .ok_or(Error::NotCoplanar { residual: f64::INFINITY })?;
    let (p, q) = (sol[0], sol[1]);
    let residual = a
        .iter()
        .zip(b)
        .zip(c)
        .map(|((x, y), z)| (p * x + q * y - z).powi(2))
        .sum::<f64>()
        .sqrt();
    if residual > THREE_SIGN_TOLERANCE {
        return Err(Error::NotCoplanar { residual });
    }
    let gap = v3.bias() - p * v1.bias() - q * v2.bias();
    if gap.abs() <= THREE_SIGN_TOLERANCE {
        return Err(Error::BiasDependent { gap: gap.abs() });
    }
    Ok(ThreeSignFactors { p, q, r: 1.0 / gap })
}

/// Two-rectifier network `sgn(-1 + R(u1.x + b1) + R(u2.x + b2))` standing in for
/// `sgn(2 + sgn(v1.x + d1) + sgn(v2.x + d2) + sgn(v3.x + d3))`.
pub fn three_sign_to_two_relu(v1: &AffineUnit, v2: &AffineUnit, v3: &AffineUnit) -> Result<ReluNetwork> {
    let ThreeSignFactors { p, q, r } = three_sign_factors(v1, v2, v3)?;
    let u1 = AffineUnit::new(v1.weights().iter().map(|w| p * r * w).collect(), p * r * v1.bias() + 1.0)?;
    let u2 = AffineUnit::new(v2.weights().iter().map(|w| q * r * w).collect(), q * r * v2.bias() + 1.0)?;
    ReluNetwork::new(v1.dim(), vec![u1, u2], vec![], -1.0)
}
