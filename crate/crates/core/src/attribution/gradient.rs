use super::{AtomScore, AtomScoreMap, Method};
use crate::error::Result;
use crate::gridder::{grid_gradient_to_atoms, voxelize, AtomGradientOptions};
use crate::molio::Complex;
use crate::scalar::Scalar;
use crate::tensornet::{softmax2, Head, HeadGradient, HeadOutputs, Network, Target, LOW_RMSD_CLASS};

/// Gradient of the explained objective with respect to the head outputs.
///
/// Pose/logit: the low-RMSD logit. Pose/probability: `log p(low RMSD)`, i.e. the
/// negative pose loss for the low-RMSD label. Affinity: the predicted affinity.
fn objective_gradient<T: Scalar>(out: &HeadOutputs<T>, head: Head, target: Target) -> HeadGradient<T> {
    match (head, target) {
        (Head::Pose, Target::Probability) => {
            let p = softmax2(out.pose_logits);
            let mut g = HeadGradient::zero();
            for (k, (gk, pk)) in g.pose_logits.iter_mut().zip(p).enumerate() {
                let onehot = if k == LOW_RMSD_CLASS { T::one() } else { T::zero() };
                *gk = onehot - pk;
            }
            g
        }
        _ => HeadGradient::of_head_scalar(out, head, target, T::one()),
    }
}

/// Per-atom coordinate gradient of the head objective: the direction each atom would
/// move to raise the pose objective or the predicted affinity. Scores are the vector
/// norms. Receptor atoms are included only when `include_receptor` is set.
pub fn coordinate_gradients<T: Scalar>(
    complex: &Complex,
    net: &Network<T>,
    head: Head,
    target: Target,
    include_receptor: bool,
) -> Result<AtomScoreMap<T>> {
    let spec = net.spec().grid(complex.center())?;
    let grid = voxelize(complex, &spec, None)?;
    let (out, tape) = net.forward_recorded(&grid)?;
    let seed = objective_gradient(&out, head, target);
    let grid_grad = net.backward(&tape, &seed, false)?.input;
    let vectors = grid_gradient_to_atoms(
        &grid_grad,
        complex,
        &spec,
        AtomGradientOptions {
            include_receptor,
            transform: None,
        },
    )?;
    let scores = vectors
        .into_iter()
        .enumerate()
        .filter(|&(i, _)| include_receptor || complex.atoms()[i].is_ligand)
        .map(|(atom, v)| AtomScore {
            atom,
            score: (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt(),
            vector: Some(v),
        })
        .collect();
    Ok(AtomScoreMap::new(Method::Gradient, head, out.head_scalar(head, target), scores))
}
