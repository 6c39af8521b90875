//! Voxelized protein-ligand scoring with a small 3D CNN and per-atom explanations of
//! its predictions: masking, coordinate gradients and conserved layer-wise relevance
//! propagation, plus first-layer filter summaries and score-comparison analyses.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! crate root fix it to `f64`, which is what the CLI uses.

pub mod analysis;
pub mod attribution;
pub mod cli;
pub mod error;
pub mod filterviz;
pub mod gridder;
pub mod molio;
pub mod scalar;
pub mod tensornet;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type DensityGrid = gridder::DensityGrid<f64>;
pub type ModelWeights = tensornet::ModelWeights<f64>;
pub type Network = tensornet::Network<f64>;
pub type ActivationTape = tensornet::ActivationTape<f64>;
pub type HeadOutputs = tensornet::HeadOutputs<f64>;
pub type AtomScoreMap = attribution::AtomScoreMap<f64>;
pub type RelevanceTape = attribution::RelevanceTape<f64>;
pub type EmptySpaceGrid = attribution::EmptySpaceGrid<f64>;
