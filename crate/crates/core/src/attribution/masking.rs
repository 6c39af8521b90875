use rayon::prelude::*;

use super::{AtomScore, AtomScoreMap, Method, Scorer};
use crate::error::Result;
use crate::molio::{enumerate_fragments, Complex};
use crate::scalar::Scalar;
use crate::tensornet::{Head, Network, Target};

fn removal_deltas<T: Scalar>(scorer: &Scorer<'_, T>, complex: &Complex, groups: &[Vec<usize>], baseline: T) -> Result<Vec<T>> {
    groups
        .par_iter()
        .map(|g| Ok(baseline - scorer.score(&complex.remove_atoms(g)?)?))
        .collect()
}

/// `f(full) - f(without atom i)` for every ligand atom.
pub fn mask_atoms<T: Scalar>(complex: &Complex, net: &Network<T>, head: Head, target: Target) -> Result<AtomScoreMap<T>> {
    let scorer = Scorer::new(net, head, target);
    let baseline = scorer.score(complex)?;
    let ligand = complex.ligand_indices();
    let groups: Vec<Vec<usize>> = ligand.iter().map(|&i| vec![i]).collect();
    let deltas = removal_deltas(&scorer, complex, &groups, baseline)?;
    let scores = ligand
        .into_iter()
        .zip(deltas)
        .map(|(atom, score)| AtomScore { atom, score, vector: None })
        .collect();
    Ok(AtomScoreMap::new(Method::AtomMasking, head, baseline, scores))
}

/// Removes every connected ligand fragment of up to `bond_budget` bonds, splits each
/// score change evenly over the fragment's atoms and sums the shares per atom.
pub fn mask_fragments<T: Scalar>(
    complex: &Complex,
    net: &Network<T>,
    head: Head,
    target: Target,
    bond_budget: usize,
) -> Result<AtomScoreMap<T>> {
    let scorer = Scorer::new(net, head, target);
    let baseline = scorer.score(complex)?;
    let fragments = enumerate_fragments(complex, bond_budget);
    let deltas = removal_deltas(&scorer, complex, &fragments.fragments, baseline)?;
    let mut per_atom = vec![T::zero(); complex.len()];
    for (frag, delta) in fragments.fragments.iter().zip(deltas) {
        let share = delta / T::of(frag.len() as f64);
        for &a in frag {
            per_atom[a] += share;
        }
    }
    let scores = complex
        .ligand_indices()
        .into_iter()
        .map(|atom| AtomScore { atom, score: per_atom[atom], vector: None })
        .collect();
    Ok(AtomScoreMap::new(Method::FragmentMasking, head, baseline, scores))
}

/// Removes each receptor residue and spreads the score change evenly over its atoms.
pub fn mask_residues<T: Scalar>(complex: &Complex, net: &Network<T>, head: Head, target: Target) -> Result<AtomScoreMap<T>> {
    let scorer = Scorer::new(net, head, target);
    let baseline = scorer.score(complex)?;
    let groups: Vec<Vec<usize>> = complex.residue_groups().into_iter().map(|(_, g)| g).collect();
    let deltas = removal_deltas(&scorer, complex, &groups, baseline)?;
    let mut scores = Vec::new();
    for (g, delta) in groups.iter().zip(deltas) {
        let share = delta / T::of(g.len() as f64);
        scores.extend(g.iter().map(|&atom| AtomScore { atom, score: share, vector: None }));
    }
    scores.sort_by_key(|s| s.atom);
    Ok(AtomScoreMap::new(Method::ResidueMasking, head, baseline, scores))
}

/// Ligand atoms get the mean of their atom and fragment masking scores, receptor atoms
/// their residue score. Atoms missing from a map count as zero there.
pub fn combine_masking<T: Scalar>(
    complex: &Complex,
    atoms: &AtomScoreMap<T>,
    fragments: &AtomScoreMap<T>,
    residues: &AtomScoreMap<T>,
) -> AtomScoreMap<T> {
    let half = T::of(0.5);
    let scores = (0..complex.len())
        .map(|atom| {
            let score = if complex.atoms()[atom].is_ligand {
                (atoms.get(atom).unwrap_or_default() + fragments.get(atom).unwrap_or_default()) * half
            } else {
                residues.get(atom).unwrap_or_default()
            };
            AtomScore { atom, score, vector: None }
        })
        .collect();
    AtomScoreMap::new(Method::Masking, atoms.head, atoms.baseline_score, scores)
}

pub fn masking_combined<T: Scalar>(
    complex: &Complex,
    net: &Network<T>,
    head: Head,
    target: Target,
    bond_budget: usize,
) -> Result<AtomScoreMap<T>> {
    let a = mask_atoms(complex, net, head, target)?;
    let f = mask_fragments(complex, net, head, target, bond_budget)?;
    let r = mask_residues(complex, net, head, target)?;
    Ok(combine_masking(complex, &a, &f, &r))
}
