//! Rectifier and threshold networks: exact conversion between the two,
//! compression of threshold layers into rectifier layers, and the training
//! experiments that compare them.

pub mod cli;
pub mod compression;
pub mod conversion;
pub mod error;
pub mod io;
pub mod network;
pub mod regions;
pub mod sampling;
pub mod sign;
pub mod training;

pub use error::{Error, Result};
pub use network::{
    Activation, AffineUnit, GeneralLayer, GeneralNetwork, Layer, ReluNetwork, ThresholdNetwork,
};
pub use sign::{relu, sgn, Sign};
pub use nalgebra;
