//! Minimal 3D CNN: declarative spec, forward pass with activation recording, backward
//! pass to the input and parameters, losses, model files and a toy trainer.

mod io;
pub(crate) mod layers;
mod loss;
mod network;
mod spec;
mod train;
mod weights;

pub use io::{load_model, model_from_bytes, model_to_bytes, save_model, FORMAT_VERSION, MAGIC};
pub use layers::softmax2;
pub use loss::{affinity_loss, affinity_loss_grad, pose_loss, pose_loss_grad};
pub use network::{ActivationTape, Backward, Head, HeadGradient, HeadOutputs, Network, Target};
pub use spec::{Layer, ModelSpec, Shape, TensorInfo, LOW_RMSD_CLASS, POSE_UNITS};
pub use train::{synthetic_dataset, toy_architecture, train_toy, ToyExample, TrainConfig, TrainReport};
pub use weights::ModelWeights;
