//! Multiclass readout of a hidden layer and the margin condition under which a
//! compressed layer keeps every prediction.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::factor::{UMatrix, VMatrix};
use super::infnorm::residual_norm;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Prediction {
    Reject,
    Label(usize),
}

fn check_augmented(x_aug: &[f64], rows: usize) -> Result<()> {
    if x_aug.len() != rows {
        return Err(Error::DimensionMismatch { expected: rows, got: x_aug.len() });
    }
    if let Some(&v) = x_aug.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(v));
    }
    if x_aug.last() != Some(&1.0) {
        return Err(Error::InvalidArgument("augmented input must end with 1".into()));
    }
    Ok(())
}

/// `M^T x_aug`.
fn scores(m: &DMatrix<f64>, x_aug: &[f64]) -> Vec<f64> {
    m.column_iter().map(|c| c.iter().zip(x_aug).map(|(a, b)| a * b).sum()).collect()
}

/// Index of the largest entry, lowest index on ties.
fn argmax(s: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in s.iter().enumerate().skip(1) {
        if v > s[best] {
            best = i;
        }
    }
    best
}

/// Highest minus second-highest score; infinite with a single class.
fn margin(s: &[f64]) -> f64 {
    if s.len() < 2 {
        return f64::INFINITY;
    }
    let top = argmax(s);
    let second = s.iter().enumerate().filter(|&(i, _)| i != top).map(|(_, &v)| v).fold(f64::NEG_INFINITY, f64::max);
    s[top] - second
}

/// Columns of `m` are units; rejects when every score is negative.
pub fn hidden_layer_predict(m: &DMatrix<f64>, x_aug: &[f64]) -> Result<Prediction> {
    check_augmented(x_aug, m.nrows())?;
    if m.ncols() == 0 {
        return Err(Error::InvalidArgument("no units".into()));
    }
    let s = scores(m, x_aug);
    if s.iter().all(|&v| v < 0.0) {
        Ok(Prediction::Reject)
    } else {
        Ok(Prediction::Label(argmax(&s)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditOptions {
    /// Count the trailing constant feature in `||x||_inf`.
    pub include_bias_in_norm: bool,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self { include_bias_in_norm: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginRecord {
    pub gamma: f64,
    pub x_inf_norm: f64,
    pub bound: f64,
    pub residual_norm: f64,
    pub passes: bool,
    pub argmax_v: usize,
    pub argmax_ut: usize,
    /// The compressed scores at both argmaxes agree to rounding, so a
    /// different lowest-index choice does not contradict the bound.
    pub tied: bool,
}

impl MarginRecord {
    /// A passing record whose argmaxes differ outside of a rounding tie.
    pub fn is_violation(&self) -> bool {
        self.passes && self.argmax_v != self.argmax_ut && !self.tied
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginAudit {
    pub residual_norm: f64,
    pub records: Vec<MarginRecord>,
}

impl MarginAudit {
    pub fn violations(&self) -> Vec<usize> {
        self.records.iter().enumerate().filter(|(_, r)| r.is_violation()).map(|(i, _)| i).collect()
    }

    pub fn holds(&self) -> bool {
        self.records.iter().all(|r| !r.is_violation())
    }

    pub fn passing(&self) -> usize {
        self.records.iter().filter(|r| r.passes).count()
    }
}

pub fn margin_audit(v: &VMatrix, u: &UMatrix, data: &[Vec<f64>], opts: AuditOptions) -> Result<MarginAudit> {
    let residual = residual_norm(v, u)?;
    let ut = u.times_encoding()?;
    let vm = v.matrix();
    let records = data
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            check_augmented(x, vm.nrows())?;
            let feats = if opts.include_bias_in_norm { &x[..] } else { &x[..x.len() - 1] };
            let x_inf = feats.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if x_inf == 0.0 {
                return Err(Error::ZeroNorm(i));
            }
            let sv = scores(vm, x);
            let su = scores(&ut, x);
            let gamma = margin(&sv);
            let bound = gamma / (2.0 * x_inf);
            let (argmax_v, argmax_ut) = (argmax(&sv), argmax(&su));
            let scale = su.iter().map(|s| s.abs()).fold(1.0, f64::max);
            let tied = (su[argmax_v] - su[argmax_ut]).abs() <= 1e-12 * scale;
            Ok(MarginRecord {
                gamma,
                x_inf_norm: x_inf,
                bound,
                residual_norm: residual,
                passes: residual <= bound,
                argmax_v,
                argmax_ut,
                tied,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MarginAudit { residual_norm: residual, records })
}
