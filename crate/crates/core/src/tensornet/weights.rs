use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::spec::{Layer, ModelSpec, TensorInfo};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Parameters for every Conv3d/Dense layer and both heads, stored as flat tensors in
/// [`ModelSpec::tensor_layout`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights<T> {
    layout: Vec<TensorInfo>,
    tensors: Vec<Vec<T>>,
    /// Trunk layer index -> position of its weight tensor.
    slots: Vec<Option<usize>>,
}

impl<T: Scalar> ModelWeights<T> {
    pub fn new(spec: &ModelSpec, tensors: Vec<Vec<T>>) -> Result<Self> {
        let layout = spec.tensor_layout()?;
        if tensors.len() != layout.len() {
            return Err(Error::Shape(format!(
                "{} tensors supplied, model needs {}",
                tensors.len(),
                layout.len()
            )));
        }
        for (info, t) in layout.iter().zip(&tensors) {
            if t.len() != info.len() {
                return Err(Error::Shape(format!(
                    "{} has {} values, expected {} for dims {:?}",
                    info.name,
                    t.len(),
                    info.len(),
                    info.dims
                )));
            }
        }
        let mut slots = vec![None; spec.trunk.len()];
        let mut next = 0;
        for (i, layer) in spec.trunk.iter().enumerate() {
            if matches!(layer, Layer::Conv3d { .. } | Layer::Dense { .. }) {
                slots[i] = Some(next);
                next += 2;
            }
        }
        Ok(ModelWeights {
            layout,
            tensors,
            slots,
        })
    }

    pub fn zeros(spec: &ModelSpec) -> Result<Self> {
        let layout = spec.tensor_layout()?;
        let tensors = layout.iter().map(|i| vec![T::zero(); i.len()]).collect();
        Self::new(spec, tensors)
    }

    /// He-normal weights (std = √(2 / fan_in)) and zero biases, seeded.
    pub fn random(spec: &ModelSpec, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = spec.tensor_layout()?;
        let tensors = layout
            .iter()
            .map(|info| {
                if info.dims.len() == 1 {
                    return vec![T::zero(); info.len()];
                }
                let fan_in: usize = info.dims[1..].iter().product();
                let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
                (0..info.len()).map(|_| T::of(normal.sample(&mut rng))).collect()
            })
            .collect();
        Self::new(spec, tensors)
    }

    pub fn layout(&self) -> &[TensorInfo] {
        &self.layout
    }

    pub fn tensors(&self) -> &[Vec<T>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Vec<T>] {
        &mut self.tensors
    }

    /// `(weight, bias)` of trunk layer `layer`, if it has parameters.
    pub fn layer(&self, layer: usize) -> Option<(&[T], &[T])> {
        let s = (*self.slots.get(layer)?)?;
        Some((&self.tensors[s], &self.tensors[s + 1]))
    }

    pub fn layer_mut(&mut self, layer: usize) -> Option<(&mut Vec<T>, &mut Vec<T>)> {
        let s = (*self.slots.get(layer)?)?;
        let (a, b) = self.tensors.split_at_mut(s + 1);
        Some((&mut a[s], &mut b[0]))
    }

    fn head_slot(&self, affinity: bool) -> usize {
        self.tensors.len() - if affinity { 2 } else { 4 }
    }

    pub fn pose(&self) -> (&[T], &[T]) {
        let s = self.head_slot(false);
        (&self.tensors[s], &self.tensors[s + 1])
    }

    pub fn affinity(&self) -> (&[T], &[T]) {
        let s = self.head_slot(true);
        (&self.tensors[s], &self.tensors[s + 1])
    }

    pub fn pose_mut(&mut self) -> (&mut Vec<T>, &mut Vec<T>) {
        let s = self.head_slot(false);
        let (a, b) = self.tensors.split_at_mut(s + 1);
        (&mut a[s], &mut b[0])
    }

    pub fn affinity_mut(&mut self) -> (&mut Vec<T>, &mut Vec<T>) {
        let s = self.head_slot(true);
        let (a, b) = self.tensors.split_at_mut(s + 1);
        (&mut a[s], &mut b[0])
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().flatten().all(|v| v.is_finite())
    }

    pub fn zeros_like(&self) -> Self {
        ModelWeights {
            layout: self.layout.clone(),
            tensors: self.tensors.iter().map(|t| vec![T::zero(); t.len()]).collect(),
            slots: self.slots.clone(),
        }
    }

    /// `self += alpha * other`, tensor by tensor.
    pub fn axpy(&mut self, alpha: T, other: &Self) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x += alpha * y;
            }
        }
    }

    pub fn scale(&mut self, alpha: T) {
        for x in self.tensors.iter_mut().flatten() {
            *x *= alpha;
        }
    }

    pub fn cast<U: Scalar>(&self) -> ModelWeights<U> {
        ModelWeights {
            layout: self.layout.clone(),
            tensors: self
                .tensors
                .iter()
                .map(|t| t.iter().map(|v| U::of(v.as_f64())).collect())
                .collect(),
            slots: self.slots.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ModelSpec {
        ModelSpec {
            input_channels: 2,
            input_size: 4,
            resolution: 1.0,
            trunk: vec![
                Layer::MaxPool3d,
                Layer::Conv3d { out_channels: 3 },
                Layer::Relu,
                Layer::Flatten,
                Layer::Dense { out_units: 5 },
            ],
        }
    }

    #[test]
    fn accessors_follow_layout() {
        let w = ModelWeights::<f64>::random(&tiny(), 1).unwrap();
        assert!(w.layer(0).is_none());
        let (cw, cb) = w.layer(1).unwrap();
        assert_eq!((cw.len(), cb.len()), (3 * 2 * 27, 3));
        let (dw, db) = w.layer(4).unwrap();
        assert_eq!((dw.len(), db.len()), (5 * 24, 5));
        assert_eq!(w.pose().0.len(), 10);
        assert_eq!(w.affinity().1.len(), 1);
        assert!(cb.iter().all(|&b| b == 0.0));
        assert_eq!(w, ModelWeights::random(&tiny(), 1).unwrap());
        assert_ne!(w, ModelWeights::random(&tiny(), 2).unwrap());
    }

    #[test]
    fn shape_mismatch() {
        let mut t = ModelWeights::<f64>::zeros(&tiny()).unwrap().tensors().to_vec();
        t[0].pop();
        assert!(matches!(ModelWeights::new(&tiny(), t), Err(Error::Shape(_))));
    }
}
