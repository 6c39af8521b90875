mod common;

use proptest::prelude::*;
use voxattr::molio::{enumerate_bond_subgraphs, enumerate_fragments, AtomTypeTable, Complex};
use voxattr::Error;

use common::*;

const TEXT: &str = include_str!("fixtures/masking_10.txt");

fn fixture() -> Complex {
    Complex::parse_str(TEXT, types()).unwrap()
}

#[test]
fn fixture_parses_with_ligand_centroid() {
    let c = fixture();
    assert_eq!(c.ligand_indices(), vec![0, 1, 2, 3, 4]);
    let xs: f64 = c.atoms()[..5].iter().map(|a| a.position[0]).sum::<f64>() / 5.0;
    assert!((c.center()[0] - xs).abs() < 1e-15);
    assert_eq!(c.residue_groups(), vec![(21, vec![5, 6, 7]), (22, vec![8, 9])]);
}

#[test]
fn text_round_trip_is_exact() {
    let c = fixture();
    let again = Complex::parse_str(&c.to_text(), types()).unwrap();
    assert_eq!(again.to_text(), c.to_text());
    assert_eq!(again.center(), c.center());
    assert_eq!(again.bonds(), c.bonds());
}

#[test]
fn fragments_of_a_path_of_three() {
    let frags = enumerate_bond_subgraphs(&[(0, 1), (1, 2)], 6);
    assert_eq!(frags.fragments, vec![vec![0, 1], vec![1, 2], vec![0, 1, 2]]);
}

#[test]
fn fixture_fragments_match_brute_force() {
    let c = fixture();
    for budget in 0..=4 {
        let got: std::collections::BTreeSet<Vec<usize>> = enumerate_fragments(&c, budget).fragments.into_iter().collect();
        assert_eq!(got, brute_force_fragments(c.bonds(), budget), "budget {budget}");
    }
}

#[test]
fn unknown_type_is_a_parse_error() {
    let err = Complex::parse_str("ATOM 1 C Carbonium 0 0 0 L\n", types()).unwrap_err();
    assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
}

#[test]
fn type_override_changes_radius_only() {
    let mut t = AtomTypeTable::default();
    t.apply_overrides("TYPE Sulfur R 2.5\n").unwrap();
    let i = t.index_of("Sulfur", voxattr::molio::Role::Receptor).unwrap();
    assert_eq!(t.radius(i), 2.5);
    assert_eq!(t.len(), 35);
}

fn graph() -> impl Strategy<Value = Vec<(usize, usize)>> {
    proptest::collection::btree_set((0usize..8, 0usize..8), 0..10).prop_map(|s| {
        s.into_iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect()
    })
}

proptest! {
    #[test]
    fn fragments_equal_brute_force(bonds in graph(), budget in 0usize..5) {
        let got: std::collections::BTreeSet<Vec<usize>> =
            enumerate_bond_subgraphs(&bonds, budget).fragments.into_iter().collect();
        prop_assert_eq!(got, brute_force_fragments(&bonds, budget));
    }

    #[test]
    fn fragments_are_sorted_and_connected(bonds in graph()) {
        let f = enumerate_bond_subgraphs(&bonds, 3).fragments;
        for w in f.windows(2) {
            prop_assert!((w[0].len(), &w[0]) < (w[1].len(), &w[1]));
        }
        for frag in &f {
            prop_assert!(frag.len() >= 2 && frag.len() <= 4);
        }
    }

    #[test]
    fn removal_composes(a in 0usize..10, b in 0usize..10) {
        let c = fixture();
        let once = c.remove_atoms(&[a, b]).unwrap();
        let first = c.remove_atoms(&[a]).unwrap();
        let b_after = if b > a { b - 1 } else { b };
        let twice = if a == b { first.clone() } else { first.remove_atoms(&[b_after]).unwrap() };
        prop_assert_eq!(once.to_text(), twice.to_text());
        prop_assert_eq!(once.center(), c.center());
    }

    #[test]
    fn parsing_never_panics(text in "(ATOM|BOND|CENTER|#)?[ 0-9A-Za-z.\\-]{0,40}(\n[ 0-9A-Za-z.\\-]{0,30}){0,3}") {
        let _ = Complex::parse_str(&text, types());
    }
}
