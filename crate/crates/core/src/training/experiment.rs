//! The rectifier versus compressed-tanh comparison over a grid of generators.

use serde::{Deserialize, Serialize};

use super::data::{generate_dataset, generate_network, Dataset};
use super::model::{train, HiddenActivation, TrainConfig, TrainResult, DEFAULT_TANH_SCALE};
use super::rng::{derive_seed, stream_id, EXPERIMENT_STREAM};
use crate::error::{Error, Result};
use crate::network::ReluNetwork;

/// Largest hidden layer an experiment may request.
pub const MAX_HIDDEN_UNITS: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOptions {
    pub total: usize,
    pub test: usize,
    pub tanh_scale: f64,
    /// Settings inherit everything from here except the hidden layer and seed.
    pub base: TrainConfig,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self {
            total: 10_000,
            test: 1_500,
            tanh_scale: DEFAULT_TANH_SCALE,
            base: TrainConfig::new(1, HiddenActivation::Relu, 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n: usize,
    pub d: usize,
    pub setting: String,
    pub train_error: f64,
    pub test_error: f64,
    pub chosen_lr: f64,
    pub epochs: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentGroup {
    pub n: usize,
    pub d: usize,
    pub generator: ReluNetwork,
    pub dataset: Dataset,
    pub results: Vec<(String, TrainResult)>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub groups: Vec<ExperimentGroup>,
}

impl ExperimentReport {
    pub fn rows(&self) -> Vec<ReportRow> {
        self.groups
            .iter()
            .flat_map(|g| {
                g.results.iter().map(move |(setting, r)| ReportRow {
                    n: g.n,
                    d: g.d,
                    setting: setting.clone(),
                    train_error: r.train_error,
                    test_error: r.test_error,
                    chosen_lr: r.chosen_lr,
                    epochs: r.epochs_run,
                })
            })
            .collect()
    }
}

/// `relu(n)`, `ctanh(n)` and `ctanh(2^n)`.
pub fn settings(n: usize, tanh_scale: f64) -> Result<Vec<(String, usize, HiddenActivation)>> {
    let wide = u32::try_from(n)
        .ok()
        .and_then(|n| 1usize.checked_shl(n))
        .filter(|&w| w <= MAX_HIDDEN_UNITS)
        .ok_or_else(|| Error::SizeGuard(format!("2^{n} hidden units exceeds the cap of {MAX_HIDDEN_UNITS}")))?;
    let tanh = HiddenActivation::CompressedTanh { c: tanh_scale };
    Ok(vec![
        (format!("relu({n})"), n, HiddenActivation::Relu),
        (format!("ctanh({n})"), n, tanh),
        (format!("ctanh({wide})"), wide, tanh),
    ])
}

/// One generator per `(n, d)`, shared data and splits across the three settings.
pub fn run_experiment(dims: &[usize], ns: &[usize], seed: u64, opts: &ExperimentOptions) -> Result<ExperimentReport> {
    for &n in ns {
        settings(n, opts.tanh_scale)?;
    }
    let mut groups = Vec::new();
    for &n in ns {
        for &d in dims {
            let group_seed = derive_seed(seed, stream_id(EXPERIMENT_STREAM, n as u64, d as u64));
            let generator = generate_network(n, d, group_seed)?;
            let dataset = generate_dataset(&generator, opts.total, opts.test, group_seed)?;
            let mut results = Vec::new();
            for (k, (name, hidden, act)) in settings(n, opts.tanh_scale)?.into_iter().enumerate() {
                let cfg = TrainConfig {
                    hidden_units: hidden,
                    activation: act,
                    seed: derive_seed(group_seed, k as u64),
                    ..opts.base.clone()
                };
                results.push((name, train(&dataset, &cfg)?));
            }
            groups.push(ExperimentGroup { n, d, generator, dataset, results });
        }
    }
    Ok(ExperimentReport { groups })
}
