use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use super::layers::*;
use super::spec::{Layer, ModelSpec, Shape, LOW_RMSD_CLASS};
use super::weights::ModelWeights;
use crate::error::{Error, Result};
use crate::gridder::DensityGrid;
use crate::scalar::Scalar;

/// Which output a gradient, relevance or masking score is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    Pose,
    Affinity,
}

impl Head {
    pub fn name(self) -> &'static str {
        match self {
            Head::Pose => "pose",
            Head::Affinity => "affinity",
        }
    }
}

impl std::str::FromStr for Head {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pose" => Ok(Head::Pose),
            "affinity" => Ok(Head::Affinity),
            _ => Err(Error::InvalidArgument(format!("unknown head {s:?}"))),
        }
    }
}

/// For the pose head: explain the low-RMSD logit or the softmax probability.
/// Ignored for the affinity head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    #[default]
    Logit,
    Probability,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadOutputs<T> {
    pub pose_logits: [T; 2],
    /// Softmax probability of the low-RMSD class.
    pub pose_probability: T,
    /// Predicted affinity in log units.
    pub affinity: T,
}

impl<T: Scalar> HeadOutputs<T> {
    fn from_logits(pose_logits: [T; 2], affinity: T) -> Self {
        HeadOutputs {
            pose_logits,
            pose_probability: softmax2(pose_logits)[LOW_RMSD_CLASS],
            affinity,
        }
    }

    /// The scalar an explanation starts from.
    pub fn head_scalar(&self, head: Head, target: Target) -> T {
        match (head, target) {
            (Head::Affinity, _) => self.affinity,
            (Head::Pose, Target::Logit) => self.pose_logits[LOW_RMSD_CLASS],
            (Head::Pose, Target::Probability) => self.pose_probability,
        }
    }
}

/// Per-layer activations recorded during a forward pass.
///
/// `activation(0)` is the network input and `activation(i + 1)` the output of trunk
/// layer `i`. The pre-activation of a ReLU is its input.
#[derive(Debug, Clone)]
pub struct ActivationTape<T> {
    fingerprint: u64,
    activations: Vec<Vec<T>>,
    argmax: Vec<Option<Vec<usize>>>,
    outputs: HeadOutputs<T>,
}

impl<T: Scalar> ActivationTape<T> {
    pub fn outputs(&self) -> &HeadOutputs<T> {
        &self.outputs
    }

    pub fn num_layers(&self) -> usize {
        self.activations.len() - 1
    }

    pub fn activation(&self, i: usize) -> &[T] {
        &self.activations[i]
    }

    pub fn input(&self) -> &[T] {
        &self.activations[0]
    }

    pub fn layer_input(&self, layer: usize) -> &[T] {
        &self.activations[layer]
    }

    pub fn layer_output(&self, layer: usize) -> &[T] {
        &self.activations[layer + 1]
    }

    pub fn trunk_output(&self) -> &[T] {
        self.activations.last().expect("tape holds the input")
    }

    pub fn argmax(&self, layer: usize) -> Option<&[usize]> {
        self.argmax[layer].as_deref()
    }
}

/// Gradient of some objective with respect to the three head outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadGradient<T> {
    pub pose_logits: [T; 2],
    pub affinity: T,
}

impl<T: Scalar> HeadGradient<T> {
    pub fn zero() -> Self {
        HeadGradient {
            pose_logits: [T::zero(); 2],
            affinity: T::zero(),
        }
    }

    /// `seed × d(head scalar)/d(outputs)`.
    pub fn of_head_scalar(outputs: &HeadOutputs<T>, head: Head, target: Target, seed: T) -> Self {
        let mut g = Self::zero();
        match (head, target) {
            (Head::Affinity, _) => g.affinity = seed,
            (Head::Pose, Target::Logit) => g.pose_logits[LOW_RMSD_CLASS] = seed,
            (Head::Pose, Target::Probability) => {
                let p = softmax2(outputs.pose_logits);
                for k in 0..2 {
                    let onehot = if k == LOW_RMSD_CLASS { T::one() } else { T::zero() };
                    g.pose_logits[k] = seed * p[LOW_RMSD_CLASS] * (onehot - p[k]);
                }
            }
        }
        g
    }
}

/// Result of a backward pass.
#[derive(Debug, Clone)]
pub struct Backward<T> {
    pub input: Vec<T>,
    pub params: Option<ModelWeights<T>>,
}

/// A validated architecture with its weights.
#[derive(Debug, Clone)]
pub struct Network<T> {
    spec: ModelSpec,
    weights: ModelWeights<T>,
    shapes: Vec<Shape>,
    fingerprint: u64,
}

impl<T: Scalar> Network<T> {
    pub fn new(spec: ModelSpec, weights: ModelWeights<T>) -> Result<Self> {
        let shapes = spec.shapes()?;
        let layout = spec.tensor_layout()?;
        if weights.layout() != layout.as_slice() {
            return Err(Error::Shape("weights were built for a different model spec".into()));
        }
        if !weights.all_finite() {
            return Err(Error::Domain("model weights contain non-finite values".into()));
        }
        let fingerprint = fingerprint(&spec, &weights);
        Ok(Network {
            spec,
            weights,
            shapes,
            fingerprint,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn weights(&self) -> &ModelWeights<T> {
        &self.weights
    }

    pub fn into_parts(self) -> (ModelSpec, ModelWeights<T>) {
        (self.spec, self.weights)
    }

    pub(crate) fn input_shape_of(&self, layer: usize) -> Shape {
        if layer == 0 {
            self.spec.input_shape()
        } else {
            self.shapes[layer - 1]
        }
    }

    fn check_input(&self, input: &[T]) -> Result<()> {
        let want = self.spec.input_shape().len();
        if input.len() != want {
            return Err(Error::Shape(format!(
                "network expects {want} input values, got {}",
                input.len()
            )));
        }
        Ok(())
    }

    fn check_grid(&self, grid: &DensityGrid<T>) -> Result<()> {
        let s = &grid.spec;
        if s.channels != self.spec.input_channels || s.points_per_side != self.spec.input_size {
            return Err(Error::Shape(format!(
                "grid is {}×{}³, network expects {}×{}³",
                s.channels, s.points_per_side, self.spec.input_channels, self.spec.input_size
            )));
        }
        Ok(())
    }

    fn run_layer(&self, layer: usize, input: &[T]) -> (Vec<T>, Option<Vec<usize>>) {
        match (self.spec.trunk[layer], self.input_shape_of(layer)) {
            (Layer::MaxPool3d, Shape::Volume { channels, size }) => {
                let (out, arg) = maxpool_forward(input, channels, size);
                (out, Some(arg))
            }
            (Layer::Conv3d { out_channels }, Shape::Volume { channels, size }) => {
                let (w, b) = self.weights.layer(layer).expect("conv has params");
                (conv3d_forward(input, channels, size, w, b, out_channels), None)
            }
            (Layer::Dense { .. }, _) => {
                let (w, b) = self.weights.layer(layer).expect("dense has params");
                (dense_forward(input, w, b), None)
            }
            (Layer::Relu, _) => (relu(input), None),
            (Layer::Flatten, _) => (input.to_vec(), None),
            (l, s) => unreachable!("validated spec: {l:?} after {s:?}"),
        }
    }

    fn heads(&self, features: &[T]) -> HeadOutputs<T> {
        let (pw, pb) = self.weights.pose();
        let (aw, ab) = self.weights.affinity();
        let logits = dense_forward(features, pw, pb);
        let aff = dense_forward(features, aw, ab);
        HeadOutputs::from_logits([logits[0], logits[1]], aff[0])
    }

    pub fn forward(&self, grid: &DensityGrid<T>) -> Result<HeadOutputs<T>> {
        self.check_grid(grid)?;
        self.forward_values(&grid.values)
    }

    pub fn forward_values(&self, input: &[T]) -> Result<HeadOutputs<T>> {
        self.check_input(input)?;
        let mut cur: Vec<T> = input.to_vec();
        for layer in 0..self.spec.trunk.len() {
            cur = self.run_layer(layer, &cur).0;
        }
        Ok(self.heads(&cur))
    }

    /// Forward pass that keeps every intermediate activation.
    pub fn forward_recorded(&self, grid: &DensityGrid<T>) -> Result<(HeadOutputs<T>, ActivationTape<T>)> {
        self.check_grid(grid)?;
        self.forward_values_recorded(&grid.values)
    }

    pub fn forward_values_recorded(&self, input: &[T]) -> Result<(HeadOutputs<T>, ActivationTape<T>)> {
        self.check_input(input)?;
        let mut activations = Vec::with_capacity(self.spec.trunk.len() + 1);
        let mut argmax = Vec::with_capacity(self.spec.trunk.len());
        activations.push(input.to_vec());
        for layer in 0..self.spec.trunk.len() {
            let (out, arg) = self.run_layer(layer, &activations[layer]);
            activations.push(out);
            argmax.push(arg);
        }
        let outputs = self.heads(activations.last().expect("input present"));
        let tape = ActivationTape {
            fingerprint: self.fingerprint,
            activations,
            argmax,
            outputs,
        };
        Ok((outputs, tape))
    }

    pub(crate) fn check_tape(&self, tape: &ActivationTape<T>) -> Result<()> {
        if tape.fingerprint != self.fingerprint || tape.activations.len() != self.spec.trunk.len() + 1 {
            return Err(Error::StaleTape);
        }
        Ok(())
    }

    /// Re-runs every layer on its recorded input and checks the outputs are bit-identical.
    pub fn replay(&self, tape: &ActivationTape<T>) -> Result<bool> {
        self.check_tape(tape)?;
        for layer in 0..self.spec.trunk.len() {
            let (out, arg) = self.run_layer(layer, tape.layer_input(layer));
            let same = out.len() == tape.layer_output(layer).len()
                && out
                    .iter()
                    .zip(tape.layer_output(layer))
                    .all(|(a, b)| a.to_bits_eq(*b))
                && arg.as_deref() == tape.argmax(layer);
            if !same {
                return Ok(false);
            }
        }
        let heads = self.heads(tape.trunk_output());
        Ok(heads.pose_logits[0].to_bits_eq(tape.outputs.pose_logits[0])
            && heads.pose_logits[1].to_bits_eq(tape.outputs.pose_logits[1])
            && heads.affinity.to_bits_eq(tape.outputs.affinity))
    }

    /// Backpropagates `head_grad` to the input and, optionally, to every parameter.
    pub fn backward(&self, tape: &ActivationTape<T>, head_grad: &HeadGradient<T>, with_params: bool) -> Result<Backward<T>> {
        self.check_tape(tape)?;
        let features = tape.trunk_output();
        let (pw, _) = self.weights.pose();
        let (aw, _) = self.weights.affinity();
        let mut grad = dense_backward_input(&head_grad.pose_logits, pw, features.len());
        let ga = dense_backward_input(&[head_grad.affinity], aw, features.len());
        for (g, a) in grad.iter_mut().zip(ga) {
            *g += a;
        }
        let mut params = with_params.then(|| self.weights.zeros_like());
        if let Some(p) = params.as_mut() {
            let (dw, db) = dense_backward_params(&head_grad.pose_logits, features);
            let (w, b) = p.pose_mut();
            *w = dw;
            *b = db;
            let (dw, db) = dense_backward_params(&[head_grad.affinity], features);
            let (w, b) = p.affinity_mut();
            *w = dw;
            *b = db;
        }

        for layer in (0..self.spec.trunk.len()).rev() {
            let input = tape.layer_input(layer);
            grad = match (self.spec.trunk[layer], self.input_shape_of(layer)) {
                (Layer::MaxPool3d, _) => {
                    maxpool_backward(&grad, tape.argmax(layer).expect("pool argmax"), input.len())
                }
                (Layer::Conv3d { out_channels }, Shape::Volume { channels, size }) => {
                    let (w, _) = self.weights.layer(layer).expect("conv params");
                    if let Some(p) = params.as_mut() {
                        let (dw, db) = conv3d_backward_params(&grad, input, channels, size, out_channels);
                        let (pw, pb) = p.layer_mut(layer).expect("conv params");
                        *pw = dw;
                        *pb = db;
                    }
                    conv3d_backward_input(&grad, channels, size, w, out_channels)
                }
                (Layer::Dense { .. }, _) => {
                    let (w, _) = self.weights.layer(layer).expect("dense params");
                    if let Some(p) = params.as_mut() {
                        let (dw, db) = dense_backward_params(&grad, input);
                        let (pw, pb) = p.layer_mut(layer).expect("dense params");
                        *pw = dw;
                        *pb = db;
                    }
                    dense_backward_input(&grad, w, input.len())
                }
                (Layer::Relu, _) => relu_backward(&grad, input),
                (Layer::Flatten, _) => grad,
                (l, s) => unreachable!("validated spec: {l:?} after {s:?}"),
            };
        }
        Ok(Backward {
            input: grad,
            params,
        })
    }

    /// Gradient of `seed × head scalar` with respect to every input voxel.
    pub fn backward_to_input(&self, tape: &ActivationTape<T>, head: Head, target: Target, seed: T) -> Result<Vec<T>> {
        let g = HeadGradient::of_head_scalar(&tape.outputs, head, target, seed);
        Ok(self.backward(tape, &g, false)?.input)
    }
}

trait BitsEq {
    fn to_bits_eq(self, other: Self) -> bool;
}

impl<T: Scalar> BitsEq for T {
    fn to_bits_eq(self, other: Self) -> bool {
        // f32 widens exactly, so comparing the f64 bit patterns is bit equality
        self.as_f64().to_bits() == other.as_f64().to_bits() || (self.is_nan() && other.is_nan())
    }
}

fn fingerprint<T: Scalar>(spec: &ModelSpec, weights: &ModelWeights<T>) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    serde_json::to_string(spec).expect("spec serializes").hash(&mut h);
    std::any::type_name::<T>().hash(&mut h);
    for t in weights.tensors() {
        t.len().hash(&mut h);
        for v in t {
            v.as_f64().to_bits().hash(&mut h);
        }
    }
    h.finish()
}
