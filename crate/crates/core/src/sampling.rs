//! Test-point generators shared by the verifier and the tests.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::network::AffineUnit;

pub fn normal_point(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// Projection of `x` onto the hyperplane `u . x + b = 0`.
pub fn project_onto(u: &AffineUnit, x: &[f64]) -> Result<Vec<f64>> {
    let norm2: f64 = u.weights().iter().map(|w| w * w).sum();
    if norm2 == 0.0 {
        return Err(Error::InvalidArgument("unit has zero weight vector".into()));
    }
    let t = u.apply(x) / norm2;
    Ok(x.iter().zip(u.weights()).map(|(xi, wi)| xi - t * wi).collect())
}

/// `count` points, cycling through the units with non-zero weights, each a
/// standard-normal draw projected onto that unit's hyperplane.
pub fn hyperplane_points(units: &[AffineUnit], count: usize, rng: &mut impl Rng) -> Result<Vec<Vec<f64>>> {
    let usable: Vec<&AffineUnit> = units.iter().filter(|u| u.weights().iter().any(|&w| w != 0.0)).collect();
    if usable.is_empty() {
        return Ok(Vec::new());
    }
    (0..count).map(|i| {
        let u = usable[i % usable.len()];
        project_onto(u, &normal_point(rng, u.dim()))
    })
    .collect()
}
