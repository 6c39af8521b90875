use rayon::prelude::*;

use super::{AtomScore, AtomScoreMap, Method};
use crate::error::{Error, Result};
use crate::gridder::{atom_footprint, DxGrid, GridSpec};
use crate::molio::Complex;
use crate::scalar::Scalar;
use crate::tensornet::layers::{conv3d_backward_input, conv3d_forward, dense_backward_input, dense_forward};
use crate::tensornet::{ActivationTape, Head, Layer, ModelSpec, Network, Shape, Target, LOW_RMSD_CLASS};

/// Below this magnitude the summed pre-activation of a layer cannot absorb dead-node
/// relevance; that relevance is recorded as lost.
pub const DEGENERATE_Z: f64 = 1e-12;

/// Outcome of moving relevance off dead nodes within one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Redistribution<T> {
    /// Relevance per node after redistribution; dead nodes hold zero.
    pub relevance: Vec<T>,
    /// Relevance each dead node held before redistribution.
    pub dead: Vec<T>,
    pub dead_count: usize,
    pub dead_relevance: T,
    pub lost: T,
}

/// Moves the relevance of nodes with a zero pre-activation (`z[j] == 0`) onto the
/// others in proportion to `z[j] / Σz`. The layer total is unchanged unless `Σz` is
/// degenerate, in which case the dead relevance is dropped and reported as lost.
pub fn redistribute_dead<T: Scalar>(z: &[T], r: &[T]) -> Result<Redistribution<T>> {
    if z.len() != r.len() {
        return Err(Error::Shape(format!("{} pre-activations for {} relevances", z.len(), r.len())));
    }
    let mut dead = vec![T::zero(); r.len()];
    let mut dead_count = 0;
    let mut s = T::zero();
    let mut total_z = T::zero();
    for (j, (&zj, &rj)) in z.iter().zip(r).enumerate() {
        total_z += zj;
        if zj == T::zero() {
            dead[j] = rj;
            dead_count += 1;
            s += rj;
        }
    }
    let mut relevance = r.to_vec();
    let mut lost = T::zero();
    if s != T::zero() {
        let degenerate = total_z.abs() < T::of(DEGENERATE_Z);
        if degenerate {
            lost = s;
        }
        for (rj, &zj) in relevance.iter_mut().zip(z) {
            if zj == T::zero() {
                *rj = T::zero();
            } else if !degenerate {
                *rj += zj / total_z * s;
            }
        }
    }
    Ok(Redistribution {
        relevance,
        dead,
        dead_count,
        dead_relevance: s,
        lost,
    })
}

/// Which set of nodes a [`LayerRelevance`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelevanceLayer {
    Head(Head),
    Trunk(usize),
}

/// Relevance on the output nodes of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerRelevance<T> {
    pub layer: RelevanceLayer,
    /// After dead-node redistribution, for layers with parameters.
    pub relevance: Vec<T>,
    /// Relevance held by dead nodes before redistribution; empty for parameter-free layers.
    pub dead: Vec<T>,
    pub dead_count: usize,
    pub dead_relevance: T,
    pub lost: T,
}

impl<T: Scalar> LayerRelevance<T> {
    fn passthrough(layer: RelevanceLayer, relevance: Vec<T>) -> Self {
        LayerRelevance {
            layer,
            relevance,
            dead: Vec::new(),
            dead_count: 0,
            dead_relevance: T::zero(),
            lost: T::zero(),
        }
    }

    fn redistributed(layer: RelevanceLayer, r: Redistribution<T>) -> Self {
        LayerRelevance {
            layer,
            relevance: r.relevance,
            dead: r.dead,
            dead_count: r.dead_count,
            dead_relevance: r.dead_relevance,
            lost: r.lost,
        }
    }

    pub fn has_parameters(&self) -> bool {
        !self.dead.is_empty()
    }

    pub fn total(&self) -> T {
        self.relevance.iter().copied().sum()
    }
}

/// Relevance of every layer for one explained head scalar.
#[derive(Debug, Clone, PartialEq)]
pub struct RelevanceTape<T> {
    pub head: Head,
    pub target: Target,
    /// The head scalar the propagation started from.
    pub start: T,
    /// Head first, then trunk layers from the last to the first.
    pub layers: Vec<LayerRelevance<T>>,
    /// Relevance per input voxel.
    pub input: Vec<T>,
}

impl<T: Scalar> RelevanceTape<T> {
    pub fn trunk_layer(&self, index: usize) -> Option<&LayerRelevance<T>> {
        self.layers.iter().find(|l| l.layer == RelevanceLayer::Trunk(index))
    }

    /// Total relevance dropped at degenerate layers.
    pub fn lost(&self) -> T {
        self.layers.iter().map(|l| l.lost).sum()
    }

    pub fn input_total(&self) -> T {
        self.input.iter().copied().sum()
    }
}

/// `x_i Σ_j w_ij R_j / z_j`, with zero-`z` nodes contributing nothing.
fn ratios<T: Scalar>(z: &[T], r: &[T]) -> Vec<T> {
    z.iter()
        .zip(r)
        .map(|(&zj, &rj)| if zj == T::zero() { T::zero() } else { rj / zj })
        .collect()
}

fn times_input<T: Scalar>(mut v: Vec<T>, x: &[T]) -> Vec<T> {
    v.iter_mut().zip(x).for_each(|(a, &b)| *a *= b);
    v
}

fn note_lost<T: Scalar>(layer: RelevanceLayer, lost: T) {
    if lost != T::zero() {
        log::warn!("relevance {lost} lost at {layer:?}: summed pre-activation is degenerate");
    }
}

/// Conserved relevance propagation from one head scalar down to the input voxels.
///
/// Relevance moves through a weighted layer by each input's share `x_i w_ij / z_j` of
/// the bias-free pre-activation `z_j`. Relevance reaching nodes with `z_j = 0` is first
/// handed to the layer's other nodes in proportion to their `z_j`, so every layer holds
/// the starting relevance. ReLU and flatten pass relevance through; max pooling routes
/// it to the winning input.
pub fn relevance<T: Scalar>(net: &Network<T>, tape: &ActivationTape<T>, head: Head, target: Target) -> Result<RelevanceTape<T>> {
    net.check_tape(tape)?;
    let weights = net.weights();
    let start = tape.outputs().head_scalar(head, target);
    let features = tape.trunk_output();
    let (w, units, selected) = match head {
        Head::Pose => (weights.pose().0, 2, LOW_RMSD_CLASS),
        Head::Affinity => (weights.affinity().0, 1, 0),
    };
    let mut r_head = vec![T::zero(); units];
    r_head[selected] = start;
    let z = dense_forward(features, w, &vec![T::zero(); units]);
    let red = redistribute_dead(&z, &r_head)?;
    let head_layer = RelevanceLayer::Head(head);
    note_lost(head_layer, red.lost);
    let mut r = times_input(dense_backward_input(&ratios(&z, &red.relevance), w, features.len()), features);
    let mut layers = vec![LayerRelevance::redistributed(head_layer, red)];

    for layer in (0..net.spec().trunk.len()).rev() {
        let id = RelevanceLayer::Trunk(layer);
        let x = tape.layer_input(layer);
        match (net.spec().trunk[layer], net.input_shape_of(layer)) {
            (Layer::MaxPool3d, _) => {
                let arg = tape.argmax(layer).expect("pool argmax");
                let mut down = vec![T::zero(); x.len()];
                for (&src, &ro) in arg.iter().zip(&r) {
                    down[src] += ro;
                }
                layers.push(LayerRelevance::passthrough(id, std::mem::replace(&mut r, down)));
            }
            (Layer::Conv3d { out_channels }, Shape::Volume { channels, size }) => {
                let (w, _) = weights.layer(layer).expect("conv params");
                let z = conv3d_forward(x, channels, size, w, &vec![T::zero(); out_channels], out_channels);
                let red = redistribute_dead(&z, &r)?;
                note_lost(id, red.lost);
                let q = ratios(&z, &red.relevance);
                r = times_input(conv3d_backward_input(&q, channels, size, w, out_channels), x);
                layers.push(LayerRelevance::redistributed(id, red));
            }
            (Layer::Dense { out_units }, _) => {
                let (w, _) = weights.layer(layer).expect("dense params");
                let z = dense_forward(x, w, &vec![T::zero(); out_units]);
                let red = redistribute_dead(&z, &r)?;
                note_lost(id, red.lost);
                let q = ratios(&z, &red.relevance);
                r = times_input(dense_backward_input(&q, w, x.len()), x);
                layers.push(LayerRelevance::redistributed(id, red));
            }
            (Layer::Relu | Layer::Flatten, _) => {
                layers.push(LayerRelevance::passthrough(id, r.clone()));
            }
            (l, s) => unreachable!("validated spec: {l:?} after {s:?}"),
        }
    }
    Ok(RelevanceTape {
        head,
        target,
        start,
        layers,
        input: r,
    })
}

/// Splits each voxel's relevance over atoms by their share of that voxel's density.
fn pool_to_atoms<T: Scalar>(complex: &Complex, spec: &GridSpec, grid: &[T], voxel_relevance: &[T]) -> Vec<T> {
    (0..complex.len())
        .into_par_iter()
        .map(|a| {
            atom_footprint::<T>(complex, spec, a, None)
                .into_iter()
                .filter(|&(idx, _)| grid[idx] != T::zero())
                .map(|(idx, g)| voxel_relevance[idx] * g / grid[idx])
                .sum()
        })
        .collect()
}

/// Relevance propagation for a recorded forward pass of `complex` on `spec`, pooled
/// onto atoms. Atom scores sum to the head scalar minus any lost relevance.
pub fn clrp<T: Scalar>(
    net: &Network<T>,
    tape: &ActivationTape<T>,
    complex: &Complex,
    spec: &GridSpec,
    head: Head,
    target: Target,
) -> Result<(RelevanceTape<T>, AtomScoreMap<T>)> {
    if tape.input().len() != spec.len() {
        return Err(Error::Shape(format!(
            "tape input has {} values, grid spec {}",
            tape.input().len(),
            spec.len()
        )));
    }
    let rt = relevance(net, tape, head, target)?;
    let per_atom = pool_to_atoms(complex, spec, tape.input(), &rt.input);
    let scores = per_atom
        .into_iter()
        .enumerate()
        .map(|(atom, score)| AtomScore { atom, score, vector: None })
        .collect();
    let map = AtomScoreMap::new(Method::Clrp, head, rt.start, scores);
    Ok((rt, map))
}

/// Dead-node statistics for one weighted layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeadLayerStat<T> {
    pub layer: RelevanceLayer,
    pub nodes: usize,
    pub dead_count: usize,
    /// Relevance on dead nodes before redistribution.
    pub dead_relevance: T,
    /// `dead_relevance` over the starting relevance; zero when that is zero.
    pub relevance_fraction: T,
}

impl<T: Scalar> DeadLayerStat<T> {
    pub fn count_fraction(&self) -> f64 {
        if self.nodes == 0 {
            0.0
        } else {
            self.dead_count as f64 / self.nodes as f64
        }
    }
}

/// Relevance that reached first-convolution nodes with zero pre-activation, summed over
/// filters: the places where empty space mattered to the prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct EmptySpaceGrid<T> {
    /// Points per side.
    pub size: usize,
    /// Center of the first point.
    pub origin: [f64; 3],
    pub spacing: f64,
    /// `(z, y, x)` order, x fastest.
    pub values: Vec<T>,
    pub total: T,
    /// Every weighted layer, head first.
    pub layers: Vec<DeadLayerStat<T>>,
}

impl<T: Scalar> EmptySpaceGrid<T> {
    pub fn to_dx(&self) -> DxGrid {
        DxGrid {
            origin: self.origin,
            spacing: self.spacing,
            counts: [self.size; 3],
            values: self.values.iter().map(|v| v.as_f64()).collect(),
        }
    }
}

/// Builds the empty-space map from the first convolution's dead-node relevance.
pub fn empty_space_relevance<T: Scalar>(rt: &RelevanceTape<T>, model: &ModelSpec, grid: &GridSpec) -> Result<EmptySpaceGrid<T>> {
    let first = model
        .first_conv()
        .ok_or_else(|| Error::InvalidArgument("model has no convolution layer".into()))?;
    let conv = rt
        .trunk_layer(first)
        .ok_or_else(|| Error::InvalidArgument("relevance tape does not cover the first convolution".into()))?;
    let pools = model.trunk[..first]
        .iter()
        .filter(|l| matches!(l, Layer::MaxPool3d))
        .count();
    let size = (0..pools).fold(model.input_size, |n, _| n / 2);
    let vol = size * size * size;
    if vol == 0 || conv.dead.len() % vol != 0 {
        return Err(Error::Shape("first convolution output does not match the grid".into()));
    }
    let mut values = vec![T::zero(); vol];
    for filter in conv.dead.chunks(vol) {
        values.iter_mut().zip(filter).for_each(|(v, &d)| *v += d);
    }
    let spacing = grid.resolution * f64::from(1u32 << pools);
    let half = grid.dimension / 2.0;
    let origin = grid.center.map(|c| c - half + spacing / 2.0);
    let layers = rt
        .layers
        .iter()
        .filter(|l| l.has_parameters())
        .map(|l| DeadLayerStat {
            layer: l.layer,
            nodes: l.dead.len(),
            dead_count: l.dead_count,
            dead_relevance: l.dead_relevance,
            relevance_fraction: if rt.start == T::zero() {
                T::zero()
            } else {
                l.dead_relevance / rt.start
            },
        })
        .collect();
    Ok(EmptySpaceGrid {
        size,
        origin,
        spacing,
        total: values.iter().copied().sum(),
        values,
        layers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensornet::ModelWeights;

    #[test]
    fn redistribution_fixture() {
        let red = redistribute_dead::<f64>(&[3.0, 0.0, 1.0], &[0.5, 0.2, 0.3]).unwrap();
        assert!((red.relevance[0] - 0.65).abs() < 1e-15);
        assert_eq!(red.relevance[1], 0.0);
        assert!((red.relevance[2] - 0.35).abs() < 1e-15);
        assert_eq!(red.dead_count, 1);
        assert_eq!(red.dead, vec![0.0, 0.2, 0.0]);
        assert_eq!(red.lost, 0.0);
    }

    #[test]
    fn degenerate_layer_loses_dead_relevance() {
        let red = redistribute_dead(&[1.0, -1.0, 0.0], &[0.1, 0.2, 0.4]).unwrap();
        assert_eq!(red.relevance, vec![0.1, 0.2, 0.0]);
        assert_eq!(red.lost, 0.4);
        assert!(redistribute_dead(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn no_dead_relevance_is_identity() {
        let red = redistribute_dead(&[0.0, 2.0], &[0.0, 1.5]).unwrap();
        assert_eq!(red.relevance, vec![0.0, 1.5]);
        assert_eq!(red.dead_count, 1);
    }

    #[test]
    fn dense_hand_example() {
        // Two inputs, one hidden unit that never fires, one live hidden unit.
        let spec = ModelSpec {
            input_channels: 2,
            input_size: 1,
            resolution: 1.0,
            trunk: vec![Layer::Flatten, Layer::Dense { out_units: 2 }, Layer::Relu],
        };
        let tensors = vec![
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0],
            vec![0.0, 0.0, 1.0, 1.0],
            vec![0.0, 0.0],
            vec![2.0, 0.0],
            vec![0.0],
        ];
        let net = Network::new(spec.clone(), ModelWeights::new(&spec, tensors).unwrap()).unwrap();
        let (out, tape) = net.forward_values_recorded(&[1.0, 3.0]).unwrap();
        assert_eq!(out.affinity, 2.0);
        let rt = relevance(&net, &tape, Head::Affinity, Target::Logit).unwrap();
        // Hidden: x = (1, 0); layer z = (1, 0) so hidden unit 1 is dead but holds nothing.
        assert_eq!(rt.input, vec![2.0, 0.0]);
        assert_eq!(rt.lost(), 0.0);
        let (_, tape) = net.forward_values_recorded(&[1.0, 3.0]).unwrap();
        let rt = relevance(&net, &tape, Head::Pose, Target::Logit).unwrap();
        // Pose logit 1 has weight (1, 1) on hidden (1, 0): z = 1, R = 1 to hidden 0.
        assert_eq!(rt.start, 1.0);
        assert_eq!(rt.input, vec![1.0, 0.0]);
    }
}
