//! Small-scale SGD trainer used to produce non-trivial fixture weights.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::loss::{affinity_loss, affinity_loss_grad, pose_loss, pose_loss_grad};
use super::network::{HeadGradient, Network};
use super::spec::{Layer, ModelSpec, LOW_RMSD_CLASS};
use super::weights::ModelWeights;
use crate::error::{Error, Result};
use crate::gridder::{random_transform_with, voxelize, DensityGrid};
use crate::molio::{Atom, AtomTypeTable, Complex, Role};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct ToyExample {
    pub complex: Complex,
    /// Low-RMSD pose.
    pub good_pose: bool,
    pub affinity: f64,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Random rotation and translation of every example at every iteration.
    pub augment: bool,
    pub max_translate: f64,
    /// Pseudo-Huber delta.
    pub delta: f64,
    /// Examples per step; 0 uses the whole dataset.
    pub batch_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            iterations: 500,
            seed: 0,
            augment: false,
            max_translate: 2.0,
            delta: 1.0,
            batch_size: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport<T> {
    pub weights: ModelWeights<T>,
    /// Mean pose loss over the dataset before the first update.
    pub initial_pose_loss: f64,
    /// Mean pose loss over the dataset after the last update.
    pub final_pose_loss: f64,
    /// Mean batch loss (pose + affinity) at each iteration.
    pub loss_history: Vec<f64>,
}

fn label(e: &ToyExample) -> usize {
    if e.good_pose {
        LOW_RMSD_CLASS
    } else {
        1 - LOW_RMSD_CLASS
    }
}

fn grid_for<T: Scalar>(spec: &ModelSpec, e: &ToyExample, rng: Option<(&mut ChaCha8Rng, f64)>) -> Result<DensityGrid<T>> {
    let gs = spec.grid(e.complex.center())?;
    match rng {
        Some((rng, max_t)) => {
            let t = random_transform_with(rng, max_t)?;
            voxelize(&e.complex, &gs, Some(&t))
        }
        None => voxelize(&e.complex, &gs, None),
    }
}

fn mean_pose_loss<T: Scalar>(net: &Network<T>, grids: &[DensityGrid<T>], data: &[ToyExample]) -> Result<f64> {
    let mut total = 0.0;
    for (g, e) in grids.iter().zip(data) {
        let out = net.forward(g)?;
        total += pose_loss(out.pose_logits, label(e))?.as_f64();
    }
    Ok(total / data.len() as f64)
}

/// Plain SGD on pose loss + affinity loss, starting from seeded He-normal weights.
pub fn train_toy<T: Scalar>(data: &[ToyExample], spec: &ModelSpec, config: &TrainConfig) -> Result<TrainReport<T>> {
    if data.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut net = Network::new(spec.clone(), ModelWeights::<T>::random(spec, config.seed)?)?;
    let fixed: Vec<DensityGrid<T>> = data
        .iter()
        .map(|e| grid_for(spec, e, None))
        .collect::<Result<_>>()?;
    let initial_pose_loss = mean_pose_loss(&net, &fixed, data)?;

    let lr = T::of(config.learning_rate);
    let delta = T::of(config.delta);
    let mut history = Vec::with_capacity(config.iterations);
    for iteration in 0..config.iterations {
        let batch: Vec<usize> = if config.batch_size == 0 || config.batch_size >= data.len() {
            (0..data.len()).collect()
        } else {
            (0..config.batch_size).map(|_| rng.random_range(0..data.len())).collect()
        };
        let mut grads = net.weights().zeros_like();
        let mut loss = 0.0;
        for &i in &batch {
            let e = &data[i];
            let augmented;
            let grid = if config.augment {
                augmented = grid_for(spec, e, Some((&mut rng, config.max_translate)))?;
                &augmented
            } else {
                &fixed[i]
            };
            let (out, tape) = net.forward_recorded(grid)?;
            let y = T::of(e.affinity);
            loss += (pose_loss(out.pose_logits, label(e))? + affinity_loss(y, out.affinity, delta, e.good_pose)?).as_f64();
            let head = HeadGradient {
                pose_logits: pose_loss_grad(out.pose_logits, label(e))?,
                affinity: affinity_loss_grad(y, out.affinity, delta, e.good_pose)?,
            };
            let back = net.backward(&tape, &head, true)?;
            grads.axpy(T::one(), back.params.as_ref().expect("requested params"));
        }
        loss /= batch.len() as f64;
        if !loss.is_finite() {
            return Err(Error::Divergence { iteration, loss });
        }
        history.push(loss);
        let (spec, mut weights) = net.into_parts();
        weights.axpy(-lr / T::of(batch.len() as f64), &grads);
        if !weights.all_finite() {
            return Err(Error::Divergence { iteration, loss });
        }
        net = Network::new(spec, weights)?;
    }

    let final_pose_loss = mean_pose_loss(&net, &fixed, data)?;
    Ok(TrainReport {
        weights: net.into_parts().1,
        initial_pose_loss,
        final_pose_loss,
        loss_history: history,
    })
}

/// Pool → Conv(4) → ReLU → Flatten on an 8 Å grid at 1 Å.
pub fn toy_architecture(channels: usize) -> ModelSpec {
    ModelSpec {
        input_channels: channels,
        input_size: 8,
        resolution: 1.0,
        trunk: vec![
            Layer::MaxPool3d,
            Layer::Conv3d { out_channels: 4 },
            Layer::Relu,
            Layer::Flatten,
        ],
    }
}

/// Separable synthetic poses: a small receptor pocket with a three-atom ligand either
/// sitting in it (good pose, affinity ≈ 6) or pushed 2.5 Å out along z (bad pose,
/// affinity ≈ 3). Alternates good and bad.
pub fn synthetic_dataset(n: usize, seed: u64, types: Arc<AtomTypeTable>) -> Result<Vec<ToyExample>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ty = |name: &str, role| {
        types
            .index_of(name, role)
            .ok_or_else(|| Error::InvalidArgument(format!("type table lacks {role} type {name}")))
    };
    let pocket = [
        ("O", ty("OxygenXSAcceptor", Role::Receptor)?),
        ("N", ty("NitrogenXSDonor", Role::Receptor)?),
        ("C", ty("AliphaticCarbonXSHydrophobe", Role::Receptor)?),
    ];
    let ligand = [
        ("N", ty("NitrogenXSDonorAcceptor", Role::Ligand)?),
        ("C", ty("AliphaticCarbonXSNonHydrophobe", Role::Ligand)?),
        ("O", ty("OxygenXSAcceptor", Role::Ligand)?),
    ];
    let mut jitter = |s: f64| rng.random_range(-s..=s);
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let good = k % 2 == 0;
        let mut atoms = Vec::new();
        for j in 0..6 {
            let a = std::f64::consts::TAU * j as f64 / 6.0;
            let (el, t) = pocket[j % 3];
            atoms.push(Atom {
                id: atoms.len(),
                element: el.into(),
                type_index: t,
                position: [2.6 * a.cos() + jitter(0.2), 2.6 * a.sin() + jitter(0.2), -1.0 + jitter(0.2)],
                residue_id: Some(j as i64 + 1),
                is_ligand: false,
            });
        }
        let lift = if good { 0.0 } else { 2.5 };
        let first = atoms.len();
        for (j, &(el, t)) in ligand.iter().enumerate() {
            atoms.push(Atom {
                id: atoms.len(),
                element: el.into(),
                type_index: t,
                position: [-1.3 + 1.3 * j as f64 + jitter(0.15), jitter(0.15), lift + jitter(0.15)],
                residue_id: None,
                is_ligand: true,
            });
        }
        let bonds = vec![(first, first + 1), (first + 1, first + 2)];
        let complex = Complex::new(atoms, bonds, Some([0.0, 0.0, 0.5]), Arc::clone(&types))?;
        let affinity = if good { 6.0 } else { 3.0 } + jitter(0.3);
        out.push(ToyExample {
            complex,
            good_pose: good,
            affinity,
        });
    }
    Ok(out)
}
