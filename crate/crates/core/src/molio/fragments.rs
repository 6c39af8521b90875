use std::collections::BTreeSet;

use super::complex::Complex;

/// Connected ligand fragments, identified by their atom sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FragmentSet {
    /// Sorted atom-index sets, ordered by size then lexicographically.
    pub fragments: Vec<Vec<usize>>,
    pub bond_budget: usize,
}

impl FragmentSet {
    pub fn len(&self) -> usize {
        self.fragments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fragments.is_empty()
    }
}

/// Every connected subgraph of the ligand bond graph with between one and
/// `bond_budget` bonds, reported once per distinct atom set.
///
/// A bond subset is connected exactly when it induces a connected subgraph of the
/// line graph, so this runs the ESU enumeration over the line graph, which visits each
/// connected bond subset exactly once.
pub fn enumerate_fragments(complex: &Complex, bond_budget: usize) -> FragmentSet {
    enumerate_bond_subgraphs(complex.bonds(), bond_budget)
}

pub fn enumerate_bond_subgraphs(bonds: &[(usize, usize)], bond_budget: usize) -> FragmentSet {
    let m = bonds.len();
    let mut adjacent: Vec<Vec<usize>> = vec![Vec::new(); m];
    for e in 0..m {
        for f in (e + 1)..m {
            let (a, b) = bonds[e];
            let (c, d) = bonds[f];
            if a == c || a == d || b == c || b == d {
                adjacent[e].push(f);
                adjacent[f].push(e);
            }
        }
    }

    let mut found: BTreeSet<(usize, Vec<usize>)> = BTreeSet::new();
    if bond_budget > 0 {
        let mut chosen = Vec::with_capacity(bond_budget);
        for root in 0..m {
            chosen.push(root);
            let ext: Vec<usize> = adjacent[root].iter().copied().filter(|&u| u > root).collect();
            extend(root, &mut chosen, ext, &adjacent, bond_budget, bonds, &mut found);
            chosen.pop();
        }
    }

    FragmentSet {
        fragments: found.into_iter().map(|(_, atoms)| atoms).collect(),
        bond_budget,
    }
}

fn extend(
    root: usize,
    chosen: &mut Vec<usize>,
    mut ext: Vec<usize>,
    adjacent: &[Vec<usize>],
    budget: usize,
    bonds: &[(usize, usize)],
    found: &mut BTreeSet<(usize, Vec<usize>)>,
) {
    let atoms: BTreeSet<usize> = chosen
        .iter()
        .flat_map(|&e| [bonds[e].0, bonds[e].1])
        .collect();
    found.insert((atoms.len(), atoms.into_iter().collect()));
    if chosen.len() == budget {
        return;
    }
    while let Some(w) = ext.pop() {
        // Exclusive neighbours of w: above the root, not chosen, not adjacent to any
        // chosen edge.
        let mut next = ext.clone();
        for &u in &adjacent[w] {
            if u > root
                && !chosen.contains(&u)
                && !next.contains(&u)
                && !chosen.iter().any(|&c| adjacent[c].contains(&u))
            {
                next.push(u);
            }
        }
        chosen.push(w);
        extend(root, chosen, next, adjacent, budget, bonds, found);
        chosen.pop();
    }
}
