//! Protein-ligand complexes: atom types, parsing, atom removal and fragment enumeration.

mod complex;
mod fragments;
mod types;

pub use complex::{parse_complex, Atom, Complex};
pub use fragments::{enumerate_bond_subgraphs, enumerate_fragments, FragmentSet};
pub use types::{AtomType, AtomTypeTable, Role};
