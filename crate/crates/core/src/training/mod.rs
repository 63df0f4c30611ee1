//! Synthetic concepts from random rectifier networks and the learning comparison run on them.

mod data;
mod experiment;
mod model;
pub mod rng;

pub use data::{generate_dataset, generate_network, generate_network_with, positive_fraction, Dataset, GeneratorOptions};
pub use experiment::{
    run_experiment, settings, ExperimentGroup, ExperimentOptions, ExperimentReport, ReportRow, MAX_HIDDEN_UNITS,
};
pub use model::{
    train, HiddenActivation, LrScore, Mlp, TrainConfig, TrainResult, Validation, DEFAULT_TANH_SCALE,
};
