//! Three-layer threshold networks equivalent to a two-layer rectifier network.
//!
//! The first hidden layer holds every Boolean unit `B_{S1,S2}`. In DNF form the
//! units are grouped by `S1` and each group feeds a conjunction unit, with a
//! disjunction on top; CNF groups by `S2` and swaps the roles.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::boolean::{boolean_unit, BooleanUnitIndex};
use crate::error::{Error, Result};
use crate::network::{AffineUnit, Layer, ReluNetwork, ThresholdNetwork};

/// Default refusal threshold for `2^(n1+n2)` first-layer units.
pub const DEFAULT_MAX_FIRST_LAYER_UNITS: usize = 1 << 16;

/// Even with `force`, exponents above this are refused outright.
pub const HARD_MAX_EXPONENT: usize = 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalForm {
    Dnf,
    Cnf,
}

impl std::str::FromStr for NormalForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dnf" => Ok(NormalForm::Dnf),
            "cnf" => Ok(NormalForm::Cnf),
            other => Err(Error::InvalidArgument(format!("unknown form {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversionReport {
    pub n1: usize,
    pub n2: usize,
    pub first_layer_units: usize,
    pub second_layer_units: usize,
    pub form: NormalForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConversionOptions {
    pub max_first_layer_units: usize,
    pub force: bool,
}

impl Default for ConversionOptions {
    fn default() -> Self {
        Self { max_first_layer_units: DEFAULT_MAX_FIRST_LAYER_UNITS, force: false }
    }
}

impl ConversionOptions {
    pub fn forced() -> Self {
        Self { force: true, ..Self::default() }
    }

    fn check(&self, exponent: usize) -> Result<()> {
        if exponent > HARD_MAX_EXPONENT {
            return Err(Error::SizeGuard(format!(
                "2^{exponent} first-layer units exceeds the hard limit 2^{HARD_MAX_EXPONENT}"
            )));
        }
        if !self.force && (1usize << exponent) > self.max_first_layer_units {
            return Err(Error::SizeGuard(format!(
                "2^{exponent} first-layer units exceeds {} (use force to override)",
                self.max_first_layer_units
            )));
        }
        Ok(())
    }
}

/// Conjunction of `m` `+-1` inputs: positive iff all inputs are `+1`.
fn and_bias(m: usize) -> f64 {
    1.0 - m as f64
}

/// Disjunction of `m` `+-1` inputs: positive iff any input is `+1`.
fn or_bias(m: usize) -> f64 {
    m as f64 - 1.0
}

/// Layer of `groups` units, unit `g` summing inputs `g*size .. (g+1)*size`.
fn grouping_layer(groups: usize, size: usize, bias: f64) -> Result<Layer> {
    let rows = (0..groups).map(|g| (g * size..(g + 1) * size).map(|j| (j, 1.0)).collect()).collect();
    Layer::sparse(groups * size, rows, vec![bias; groups])
}

fn boolean_layer(net: &ReluNetwork, index_of: impl Fn(usize) -> BooleanUnitIndex + Sync) -> Result<Layer> {
    let count = 1usize << net.num_units();
    let units: Vec<AffineUnit> = (0..count)
        .into_par_iter()
        .map(|i| boolean_unit(net, index_of(i)))
        .collect::<Result<_>>()?;
    Layer::from_units(&units)
}

pub fn relu_to_threshold(
    net: &ReluNetwork,
    form: NormalForm,
    opts: ConversionOptions,
) -> Result<(ThresholdNetwork, ConversionReport)> {
    let (n1, n2) = (net.n1(), net.n2());
    opts.check(n1 + n2)?;
    let (p_sets, n_sets) = (1usize << n1, 1usize << n2);
    let (first, second, output, groups) = match form {
        NormalForm::Dnf => {
            // Unit s1 * 2^n2 + s2.
            let first = boolean_layer(net, |i| BooleanUnitIndex::new((i >> n2) as u64, (i & (n_sets - 1)) as u64))?;
            let second = grouping_layer(p_sets, n_sets, and_bias(n_sets))?;
            let output = Layer::output(vec![1.0; p_sets], or_bias(p_sets))?;
            (first, second, output, p_sets)
        }
        NormalForm::Cnf => {
            // Unit s2 * 2^n1 + s1.
            let first = boolean_layer(net, |i| BooleanUnitIndex::new((i & (p_sets - 1)) as u64, (i >> n1) as u64))?;
            let second = grouping_layer(n_sets, p_sets, or_bias(p_sets))?;
            let output = Layer::output(vec![1.0; n_sets], and_bias(n_sets))?;
            (first, second, output, n_sets)
        }
    };
    let report = ConversionReport {
        n1,
        n2,
        first_layer_units: p_sets * n_sets,
        second_layer_units: groups,
        form,
    };
    Ok((ThresholdNetwork::new(net.dim(), vec![first, second, output])?, report))
}

pub fn relu_to_threshold_dnf(net: &ReluNetwork, opts: ConversionOptions) -> Result<(ThresholdNetwork, ConversionReport)> {
    relu_to_threshold(net, NormalForm::Dnf, opts)
}

pub fn relu_to_threshold_cnf(net: &ReluNetwork, opts: ConversionOptions) -> Result<(ThresholdNetwork, ConversionReport)> {
    relu_to_threshold(net, NormalForm::Cnf, opts)
}

/// Two-layer OR network over one Boolean unit per `S1`, valid when `N` is empty.
pub fn pure_disjunction(net: &ReluNetwork, opts: ConversionOptions) -> Result<ThresholdNetwork> {
    if net.n2() != 0 {
        return Err(Error::InvalidArgument("pure disjunction requires an empty negative set".into()));
    }
    opts.check(net.n1())?;
    let units = boolean_layer(net, |i| BooleanUnitIndex::new(i as u64, 0))?.units();
    ThresholdNetwork::disjunction(net.dim(), &units)
}

/// Two-layer AND network over one Boolean unit per `S2`, valid when `P` is empty.
pub fn pure_conjunction(net: &ReluNetwork, opts: ConversionOptions) -> Result<ThresholdNetwork> {
    if net.n1() != 0 {
        return Err(Error::InvalidArgument("pure conjunction requires an empty positive set".into()));
    }
    opts.check(net.n2())?;
    let units = boolean_layer(net, |i| BooleanUnitIndex::new(0, i as u64))?.units();
    let m = units.len();
    ThresholdNetwork::two_layer(net.dim(), &units, vec![1.0; m], and_bias(m))
}

/// Removes exact duplicates, keeping first occurrences in order.
pub fn dedup_units(units: &[AffineUnit]) -> Vec<AffineUnit> {
    let mut out: Vec<AffineUnit> = Vec::with_capacity(units.len());
    for u in units {
        if !out.iter().any(|v| v == u) {
            out.push(u.clone());
        }
    }
    out
}
