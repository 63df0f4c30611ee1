//! Random rectifier networks as concept generators and the labelled samples they produce.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::rng::{stream_id, stream_rng, DATASET_STREAM, GENERATOR_STREAM, PROBE_STREAM};
use crate::error::{Error, Result};
use crate::network::{AffineUnit, ReluNetwork};
use crate::sign::Sign;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorOptions {
    pub max_retries: usize,
    pub probe_size: usize,
    /// Smallest acceptable share of the rarer class on the probe sample.
    pub min_minority: f64,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        Self { max_retries: 1000, probe_size: 10_000, min_minority: 0.05 }
    }
}

fn normal_vec(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// Fraction of positive labels on `size` standard-normal points.
pub fn positive_fraction(net: &ReluNetwork, size: usize, seed: u64, stream: u64) -> Result<f64> {
    let mut rng = stream_rng(seed, stream);
    let mut pos = 0usize;
    for _ in 0..size {
        if net.eval(&normal_vec(&mut rng, net.dim()))?.is_pos() {
            pos += 1;
        }
    }
    Ok(pos as f64 / size as f64)
}

pub fn generate_network(n: usize, d: usize, seed: u64) -> Result<ReluNetwork> {
    generate_network_with(n, d, seed, GeneratorOptions::default())
}

/// Standard-normal units and `w0`, each unit joining `P` or `N` with probability 1/2,
/// redrawn until the probe sample is not too unbalanced.
pub fn generate_network_with(n: usize, d: usize, seed: u64, opts: GeneratorOptions) -> Result<ReluNetwork> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument(format!("need n >= 1 and d >= 1, got n = {n}, d = {d}")));
    }
    let mut rng = stream_rng(seed, GENERATOR_STREAM);
    for attempt in 0..opts.max_retries {
        let (mut pos, mut neg) = (Vec::new(), Vec::new());
        for _ in 0..n {
            let unit = AffineUnit::new(normal_vec(&mut rng, d), rng.sample(StandardNormal))?;
            if rng.random::<bool>() {
                pos.push(unit);
            } else {
                neg.push(unit);
            }
        }
        let net = ReluNetwork::new(d, pos, neg, rng.sample(StandardNormal))?;
        let frac = positive_fraction(&net, opts.probe_size, seed, stream_id(PROBE_STREAM, attempt as u64, 0))?;
        if frac.min(1.0 - frac) >= opts.min_minority {
            return Ok(net);
        }
    }
    Err(Error::RetryBudget(opts.max_retries))
}

/// Labelled points; the last `test_size` rows form the test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<Sign>,
    pub test_size: usize,
}

impl Dataset {
    pub fn new(dim: usize, points: Vec<Vec<f64>>, labels: Vec<Sign>, test_size: usize) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), got: labels.len() });
        }
        if test_size >= points.len() {
            return Err(Error::InvalidArgument(format!(
                "test split {test_size} leaves no training data out of {}",
                points.len()
            )));
        }
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
            }
            if let Some(&v) = p.iter().find(|v| !v.is_finite()) {
                return Err(Error::NonFinite(v));
            }
        }
        Ok(Self { dim, points, labels, test_size })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn train_size(&self) -> usize {
        self.len() - self.test_size
    }

    pub fn train_range(&self) -> std::ops::Range<usize> {
        0..self.train_size()
    }

    pub fn test_range(&self) -> std::ops::Range<usize> {
        self.train_size()..self.len()
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i].as_f64()
    }
}

/// `total` standard-normal points labelled by `net`.
pub fn generate_dataset(net: &ReluNetwork, total: usize, test: usize, seed: u64) -> Result<Dataset> {
    let mut rng = stream_rng(seed, DATASET_STREAM);
    let points: Vec<Vec<f64>> = (0..total).map(|_| normal_vec(&mut rng, net.dim())).collect();
    let labels = points.iter().map(|p| net.eval(p)).collect::<Result<_>>()?;
    Dataset::new(net.dim(), points, labels, test)
}
