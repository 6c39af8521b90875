//! Per-atom explanations of a network prediction: masking, coordinate gradients and
//! conserved layer-wise relevance propagation (CLRP), plus empty-space relevance.

mod clrp;
mod gradient;
mod masking;
mod table;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gridder::{voxelize, GridSpec};
use crate::molio::Complex;
use crate::scalar::Scalar;
use crate::tensornet::{Head, Network, Target};

pub use clrp::{
    clrp, empty_space_relevance, redistribute_dead, relevance, DeadLayerStat, EmptySpaceGrid, LayerRelevance,
    Redistribution, RelevanceLayer, RelevanceTape, DEGENERATE_Z,
};
pub use gradient::coordinate_gradients;
pub use masking::{combine_masking, mask_atoms, mask_fragments, mask_residues, masking_combined};
pub use table::{parse_score_table, read_score_table, score_table, write_score_table, ScoreRow, SCORE_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    AtomMasking,
    FragmentMasking,
    ResidueMasking,
    /// Ligand: mean of atom and fragment masking. Receptor: residue masking.
    Masking,
    Gradient,
    Clrp,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::AtomMasking => "mask_atom",
            Method::FragmentMasking => "mask_fragment",
            Method::ResidueMasking => "mask_residue",
            Method::Masking => "masking",
            Method::Gradient => "gradient",
            Method::Clrp => "clrp",
        }
    }

    pub fn from_name(s: &str) -> Option<Method> {
        [
            Method::AtomMasking,
            Method::FragmentMasking,
            Method::ResidueMasking,
            Method::Masking,
            Method::Gradient,
            Method::Clrp,
        ]
        .into_iter()
        .find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomScore<T> {
    /// Index into the complex's atom list.
    pub atom: usize,
    /// Signed score, or the gradient norm for [`Method::Gradient`].
    pub score: T,
    pub vector: Option<[T; 3]>,
}

/// One method's per-atom attribution for one head.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomScoreMap<T> {
    pub method: Method,
    pub head: Head,
    /// Head scalar of the unmodified complex.
    pub baseline_score: T,
    pub scores: Vec<AtomScore<T>>,
}

impl<T: Scalar> AtomScoreMap<T> {
    pub fn new(method: Method, head: Head, baseline_score: T, scores: Vec<AtomScore<T>>) -> Self {
        AtomScoreMap {
            method,
            head,
            baseline_score,
            scores,
        }
    }

    pub fn get(&self, atom: usize) -> Option<T> {
        self.scores.iter().find(|s| s.atom == atom).map(|s| s.score)
    }

    pub fn sum(&self) -> T {
        self.scores.iter().map(|s| s.score).sum()
    }

    pub fn max_abs(&self) -> T {
        self.scores
            .iter()
            .map(|s| s.score.abs())
            .fold(T::zero(), T::max)
    }
}

/// Divides every score (and vector) by the largest absolute score, mapping into
/// `[-1, 1]` with signs kept. All-zero maps are returned unchanged.
pub fn normalize_scores<T: Scalar>(map: &AtomScoreMap<T>) -> AtomScoreMap<T> {
    let m = map.max_abs();
    let mut out = map.clone();
    if m == T::zero() || !m.is_finite() {
        return out;
    }
    for s in &mut out.scores {
        s.score = (s.score / m).max(-T::one()).min(T::one());
        if let Some(v) = s.vector.as_mut() {
            *v = v.map(|c| c / m);
        }
    }
    out
}

/// Evaluates one head scalar on voxelized complexes with the untransformed frame.
#[derive(Debug, Clone, Copy)]
pub struct Scorer<'a, T> {
    pub net: &'a Network<T>,
    pub head: Head,
    pub target: Target,
}

impl<'a, T: Scalar> Scorer<'a, T> {
    pub fn new(net: &'a Network<T>, head: Head, target: Target) -> Self {
        Scorer { net, head, target }
    }

    /// Grid for this network centered on the complex's binding site.
    pub fn grid_spec(&self, complex: &Complex) -> Result<GridSpec> {
        self.net.spec().grid(complex.center())
    }

    pub fn score(&self, complex: &Complex) -> Result<T> {
        let spec = self.grid_spec(complex)?;
        let grid = voxelize(complex, &spec, None)?;
        Ok(self.net.forward(&grid)?.head_scalar(self.head, self.target))
    }
}
