use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gridder::GridSpec;

/// A trunk layer. Convolutions are 3×3×3, stride 1, zero padding 1; pooling is 2×2×2
/// max pooling with stride 2 (odd trailing planes are dropped).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Layer {
    MaxPool3d,
    Conv3d { out_channels: usize },
    Relu,
    Flatten,
    Dense { out_units: usize },
}

/// Activation shape between layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Volume { channels: usize, size: usize },
    Flat(usize),
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Volume { channels, size } => channels * size * size * size,
            Shape::Flat(n) => n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub const POSE_UNITS: usize = 2;
/// Index of the low-RMSD ("good pose") class in the pose head.
pub const LOW_RMSD_CLASS: usize = 1;

/// Declarative network: a shared trunk ending in a flat feature vector, feeding a
/// two-unit softmax pose head and a one-unit affinity head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub input_channels: usize,
    /// Grid points per side of the input.
    pub input_size: usize,
    /// Grid resolution in Å the model expects.
    pub resolution: f64,
    pub trunk: Vec<Layer>,
}

/// Dimensions of one parameter tensor, in storage order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorInfo {
    pub name: String,
    pub dims: Vec<usize>,
}

impl TensorInfo {
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl ModelSpec {
    /// Pool → Conv(32) → ReLU → Pool → Conv(64) → ReLU → Pool → Conv(128) → ReLU → Flatten.
    pub fn default_architecture(input_channels: usize, input_size: usize, resolution: f64) -> Self {
        Self::pooled_conv_stack(input_channels, input_size, resolution, &[32, 64, 128])
    }

    pub fn pooled_conv_stack(
        input_channels: usize,
        input_size: usize,
        resolution: f64,
        filters: &[usize],
    ) -> Self {
        let mut trunk = Vec::new();
        for &f in filters {
            trunk.push(Layer::MaxPool3d);
            trunk.push(Layer::Conv3d { out_channels: f });
            trunk.push(Layer::Relu);
        }
        trunk.push(Layer::Flatten);
        ModelSpec {
            input_channels,
            input_size,
            resolution,
            trunk,
        }
    }

    pub fn input_shape(&self) -> Shape {
        Shape::Volume {
            channels: self.input_channels,
            size: self.input_size,
        }
    }

    pub fn grid_dimension(&self) -> f64 {
        self.input_size as f64 * self.resolution
    }

    /// Grid matching this model's input, centered at `center`.
    pub fn grid(&self, center: [f64; 3]) -> Result<GridSpec> {
        GridSpec::new(self.grid_dimension(), self.resolution, self.input_channels, center)
    }

    /// Output shape of every trunk layer, validating that the layers chain.
    pub fn shapes(&self) -> Result<Vec<Shape>> {
        if self.input_channels == 0 || self.input_size == 0 {
            return Err(Error::Shape("model input must be non-empty".into()));
        }
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(Error::Shape(format!("bad model resolution {}", self.resolution)));
        }
        let mut cur = self.input_shape();
        let mut out = Vec::with_capacity(self.trunk.len());
        for (i, layer) in self.trunk.iter().enumerate() {
            cur = match (*layer, cur) {
                (Layer::MaxPool3d, Shape::Volume { channels, size }) => {
                    if size < 2 {
                        return Err(Error::Shape(format!("layer {i}: cannot pool a {size}³ volume")));
                    }
                    Shape::Volume {
                        channels,
                        size: size / 2,
                    }
                }
                (Layer::Conv3d { out_channels }, Shape::Volume { size, .. }) if out_channels > 0 => {
                    Shape::Volume {
                        channels: out_channels,
                        size,
                    }
                }
                (Layer::Relu, s) => s,
                (Layer::Flatten, s) => Shape::Flat(s.len()),
                (Layer::Dense { out_units }, Shape::Flat(_)) if out_units > 0 => Shape::Flat(out_units),
                (l, s) => {
                    return Err(Error::Shape(format!("layer {i}: {l:?} cannot follow shape {s:?}")));
                }
            };
            out.push(cur);
        }
        match cur {
            Shape::Flat(n) if n > 0 => Ok(out),
            s => Err(Error::Shape(format!(
                "trunk must end in a non-empty flat vector, got {s:?}"
            ))),
        }
    }

    pub fn trunk_output_len(&self) -> Result<usize> {
        Ok(self.shapes()?.last().map(Shape::len).unwrap_or(0))
    }

    /// Parameter tensors in canonical order: trunk layers, then pose head, then
    /// affinity head; each weight before its bias. Conv weights are
    /// `[out, in, z, y, x]`, dense weights `[out, in]`.
    pub fn tensor_layout(&self) -> Result<Vec<TensorInfo>> {
        let shapes = self.shapes()?;
        let mut prev = self.input_shape();
        let mut out = Vec::new();
        for (i, layer) in self.trunk.iter().enumerate() {
            match (*layer, prev) {
                (Layer::Conv3d { out_channels }, Shape::Volume { channels, .. }) => {
                    out.push(TensorInfo {
                        name: format!("trunk.{i}.weight"),
                        dims: vec![out_channels, channels, 3, 3, 3],
                    });
                    out.push(TensorInfo {
                        name: format!("trunk.{i}.bias"),
                        dims: vec![out_channels],
                    });
                }
                (Layer::Dense { out_units }, Shape::Flat(n)) => {
                    out.push(TensorInfo {
                        name: format!("trunk.{i}.weight"),
                        dims: vec![out_units, n],
                    });
                    out.push(TensorInfo {
                        name: format!("trunk.{i}.bias"),
                        dims: vec![out_units],
                    });
                }
                _ => {}
            }
            prev = shapes[i];
        }
        let features = prev.len();
        for (head, units) in [("pose", POSE_UNITS), ("affinity", 1)] {
            out.push(TensorInfo {
                name: format!("{head}.weight"),
                dims: vec![units, features],
            });
            out.push(TensorInfo {
                name: format!("{head}.bias"),
                dims: vec![units],
            });
        }
        Ok(out)
    }

    /// Index of the first convolution in the trunk.
    pub fn first_conv(&self) -> Option<usize> {
        self.trunk
            .iter()
            .position(|l| matches!(l, Layer::Conv3d { .. }))
    }
}
