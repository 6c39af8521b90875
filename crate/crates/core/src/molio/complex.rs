use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use super::types::{AtomTypeTable, Role};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    /// Identifier from the input file; bonds refer to atoms by this id.
    pub id: usize,
    pub element: String,
    /// Index into the complex's [`AtomTypeTable`], which is also the grid channel.
    pub type_index: usize,
    /// Cartesian position in Å.
    pub position: [f64; 3],
    pub residue_id: Option<i64>,
    pub is_ligand: bool,
}

/// A protein-ligand complex: typed atoms, ligand bonds and a binding-site center.
///
/// Bonds are stored as pairs of indices into `atoms`, not file ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Complex {
    atoms: Vec<Atom>,
    bonds: Vec<(usize, usize)>,
    center: [f64; 3],
    types: Arc<AtomTypeTable>,
}

impl Complex {
    pub fn new(
        atoms: Vec<Atom>,
        bonds: Vec<(usize, usize)>,
        center: Option<[f64; 3]>,
        types: Arc<AtomTypeTable>,
    ) -> Result<Self> {
        let mut ids = HashSet::with_capacity(atoms.len());
        for atom in &atoms {
            if !ids.insert(atom.id) {
                return Err(Error::Domain(format!("duplicate atom id {}", atom.id)));
            }
            let ty = types.get(atom.type_index).ok_or_else(|| {
                Error::Domain(format!("atom {}: type index {} out of range", atom.id, atom.type_index))
            })?;
            let expected = if atom.is_ligand { Role::Ligand } else { Role::Receptor };
            if ty.role != expected {
                return Err(Error::Domain(format!(
                    "atom {}: type {} is a {} type but the atom is marked {}",
                    atom.id, ty.name, ty.role, expected
                )));
            }
            if atom.position.iter().any(|c| !c.is_finite()) {
                return Err(Error::Domain(format!("atom {}: non-finite position", atom.id)));
            }
        }
        let mut seen = HashSet::with_capacity(bonds.len());
        for &(i, j) in &bonds {
            if i >= atoms.len() || j >= atoms.len() {
                return Err(Error::Domain(format!("bond ({i}, {j}) out of range")));
            }
            if i == j {
                return Err(Error::Domain(format!("self bond on atom {}", atoms[i].id)));
            }
            if !atoms[i].is_ligand || !atoms[j].is_ligand {
                return Err(Error::Domain(format!(
                    "bond {}-{} touches a receptor atom",
                    atoms[i].id, atoms[j].id
                )));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::Domain(format!(
                    "duplicate bond {}-{}",
                    atoms[i].id, atoms[j].id
                )));
            }
        }
        if let Some(c) = center {
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain("non-finite center".into()));
            }
        }
        let center = center.unwrap_or_else(|| default_center(&atoms));
        Ok(Complex {
            atoms,
            bonds,
            center,
            types,
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[(usize, usize)] {
        &self.bonds
    }

    pub fn center(&self) -> [f64; 3] {
        self.center
    }

    pub fn types(&self) -> &AtomTypeTable {
        &self.types
    }

    pub fn types_arc(&self) -> &Arc<AtomTypeTable> {
        &self.types
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn radius_of(&self, atom_index: usize) -> f64 {
        self.types.radius(self.atoms[atom_index].type_index)
    }

    pub fn type_name(&self, atom_index: usize) -> &str {
        &self.types.entries()[self.atoms[atom_index].type_index].name
    }

    pub fn ligand_indices(&self) -> Vec<usize> {
        (0..self.atoms.len()).filter(|&i| self.atoms[i].is_ligand).collect()
    }

    pub fn receptor_indices(&self) -> Vec<usize> {
        (0..self.atoms.len()).filter(|&i| !self.atoms[i].is_ligand).collect()
    }

    /// Copy with the given atom indices removed. Survivors keep their type, position
    /// and id; bonds touching a removed atom are dropped; the center is unchanged.
    pub fn remove_atoms(&self, victims: &[usize]) -> Result<Complex> {
        let mut gone = vec![false; self.atoms.len()];
        for &v in victims {
            if v >= self.atoms.len() {
                return Err(Error::InvalidArgument(format!(
                    "atom index {v} out of range for {} atoms",
                    self.atoms.len()
                )));
            }
            gone[v] = true;
        }
        let mut remap = vec![usize::MAX; self.atoms.len()];
        let mut atoms = Vec::with_capacity(self.atoms.len());
        for (i, atom) in self.atoms.iter().enumerate() {
            if !gone[i] {
                remap[i] = atoms.len();
                atoms.push(atom.clone());
            }
        }
        let bonds = self
            .bonds
            .iter()
            .filter(|&&(i, j)| !gone[i] && !gone[j])
            .map(|&(i, j)| (remap[i], remap[j]))
            .collect();
        Ok(Complex {
            atoms,
            bonds,
            center: self.center,
            types: Arc::clone(&self.types),
        })
    }

    /// Receptor atoms partitioned by residue id, ascending.
    pub fn residue_groups(&self) -> Vec<(i64, Vec<usize>)> {
        let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for (i, atom) in self.atoms.iter().enumerate() {
            if !atom.is_ligand {
                groups.entry(atom.residue_id.unwrap_or(0)).or_default().push(i);
            }
        }
        groups.into_iter().collect()
    }

    /// Replaces atom positions, keeping everything else.
    pub fn with_positions(&self, positions: &[[f64; 3]]) -> Result<Complex> {
        if positions.len() != self.atoms.len() {
            return Err(Error::Shape(format!(
                "{} positions for {} atoms",
                positions.len(),
                self.atoms.len()
            )));
        }
        let mut out = self.clone();
        for (a, p) in out.atoms.iter_mut().zip(positions) {
            a.position = *p;
        }
        Ok(out)
    }

    pub fn parse_str(text: &str, types: Arc<AtomTypeTable>) -> Result<Complex> {
        let mut atoms: Vec<Atom> = Vec::new();
        let mut id_index: HashMap<usize, usize> = HashMap::new();
        let mut raw_bonds: Vec<(usize, usize, usize)> = Vec::new();
        let mut center = None;

        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let f: Vec<&str> = content.split_whitespace().collect();
            match f[0] {
                "ATOM" => {
                    if !(f.len() == 8 || f.len() == 9) {
                        return Err(Error::parse(
                            line,
                            "expected ATOM <id> <element> <type> <x> <y> <z> <L|R> [residue_id]",
                        ));
                    }
                    let id: usize = parse_field(line, f[1], "atom id")?;
                    let role = Role::from_flag(f[7]).ok_or_else(|| {
                        Error::parse(line, format!("role must be L or R, got {:?}", f[7]))
                    })?;
                    let type_index = types.index_of(f[3], role).ok_or_else(|| {
                        Error::parse(line, format!("unknown {role} atom type {:?}", f[3]))
                    })?;
                    let mut position = [0.0; 3];
                    for (k, p) in position.iter_mut().enumerate() {
                        *p = parse_finite(line, f[4 + k], "coordinate")?;
                    }
                    let residue_id = match f.get(8) {
                        Some(s) => Some(parse_field::<i64>(line, s, "residue id")?),
                        None if role == Role::Receptor => {
                            return Err(Error::parse(line, "receptor atom without residue id"));
                        }
                        None => None,
                    };
                    if id_index.insert(id, atoms.len()).is_some() {
                        return Err(Error::parse(line, format!("duplicate atom id {id}")));
                    }
                    atoms.push(Atom {
                        id,
                        element: f[2].to_string(),
                        type_index,
                        position,
                        residue_id,
                        is_ligand: role == Role::Ligand,
                    });
                }
                "BOND" => {
                    if f.len() != 3 {
                        return Err(Error::parse(line, "expected BOND <i> <j>"));
                    }
                    let i = parse_field(line, f[1], "bond atom id")?;
                    let j = parse_field(line, f[2], "bond atom id")?;
                    raw_bonds.push((line, i, j));
                }
                "CENTER" => {
                    if f.len() != 4 {
                        return Err(Error::parse(line, "expected CENTER <x> <y> <z>"));
                    }
                    if center.is_some() {
                        return Err(Error::parse(line, "duplicate CENTER record"));
                    }
                    let mut c = [0.0; 3];
                    for (k, v) in c.iter_mut().enumerate() {
                        *v = parse_finite(line, f[1 + k], "center coordinate")?;
                    }
                    center = Some(c);
                }
                other => {
                    return Err(Error::parse(line, format!("unknown record {other:?}")));
                }
            }
        }

        let mut bonds = Vec::with_capacity(raw_bonds.len());
        let mut seen = HashSet::new();
        for (line, i, j) in raw_bonds {
            let look = |id: usize| {
                id_index
                    .get(&id)
                    .copied()
                    .ok_or_else(|| Error::parse(line, format!("bond refers to unknown atom {id}")))
            };
            let (a, b) = (look(i)?, look(j)?);
            if a == b {
                return Err(Error::parse(line, "self bond"));
            }
            if !atoms[a].is_ligand || !atoms[b].is_ligand {
                return Err(Error::parse(line, "bonds must join two ligand atoms"));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::parse(line, "duplicate bond"));
            }
            bonds.push((a, b));
        }

        Complex::new(atoms, bonds, center, types)
            .map_err(|e| Error::parse(0, e.to_string()))
    }

    /// Serializes in the text format read by [`Complex::parse_str`]. Coordinates use the
    /// shortest representation that round-trips exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, a) in self.atoms.iter().enumerate() {
            let role = if a.is_ligand { "L" } else { "R" };
            let _ = write!(
                out,
                "ATOM {} {} {} {:?} {:?} {:?} {}",
                a.id,
                a.element,
                self.type_name(i),
                a.position[0],
                a.position[1],
                a.position[2],
                role
            );
            if let Some(r) = a.residue_id {
                let _ = write!(out, " {r}");
            }
            out.push('\n');
        }
        for &(i, j) in &self.bonds {
            let _ = writeln!(out, "BOND {} {}", self.atoms[i].id, self.atoms[j].id);
        }
        let c = self.center;
        let _ = writeln!(out, "CENTER {:?} {:?} {:?}", c[0], c[1], c[2]);
        out
    }

    /// Union of atom index sets, sorted; convenience for callers composing victims.
    pub fn union_indices(sets: &[&[usize]]) -> Vec<usize> {
        let all: BTreeSet<usize> = sets.iter().flat_map(|s| s.iter().copied()).collect();
        all.into_iter().collect()
    }
}

fn default_center(atoms: &[Atom]) -> [f64; 3] {
    let ligand: Vec<&Atom> = atoms.iter().filter(|a| a.is_ligand).collect();
    let pool: Vec<&Atom> = if ligand.is_empty() {
        atoms.iter().collect()
    } else {
        ligand
    };
    if pool.is_empty() {
        return [0.0; 3];
    }
    let mut c = [0.0; 3];
    for a in &pool {
        for (ck, p) in c.iter_mut().zip(a.position) {
            *ck += p;
        }
    }
    c.map(|v| v / pool.len() as f64)
}

fn parse_field<T: std::str::FromStr>(line: usize, s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(line, format!("bad {what} {s:?}")))
}

fn parse_finite(line: usize, s: &str, what: &str) -> Result<f64> {
    let v: f64 = parse_field(line, s, what)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::parse(line, format!("non-finite {what} {s:?}")))
    }
}

/// Reads and validates a complex file.
pub fn parse_complex(path: &Path, types: Arc<AtomTypeTable>) -> Result<Complex> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Complex::parse_str(&text, types)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Arc<AtomTypeTable> {
        Arc::new(AtomTypeTable::default())
    }

    const RING: &str = "\
# benzene-like ring plus two receptor residues
ATOM 1 C AromaticCarbonXSHydrophobe 1.4 0 0 L
ATOM 2 C AromaticCarbonXSHydrophobe 0.7 1.212 0 L
ATOM 3 C AromaticCarbonXSHydrophobe -0.7 1.212 0 L
ATOM 4 C AromaticCarbonXSHydrophobe -1.4 0 0 L
ATOM 5 N NitrogenXSAcceptor 4.0 0 0 R 7
ATOM 6 O OxygenXSAcceptor 4.0 1.5 0 R 7
ATOM 7 S Sulfur -4.0 0 0 R 3
BOND 1 2
BOND 2 3
BOND 3 4
";

    #[test]
    fn single_ligand_atom_centroid() {
        let c = Complex::parse_str("ATOM 0 O Oxygen 0 0 0 L\n", table()).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.center(), [0.0; 3]);
    }

    #[test]
    fn receptor_iodine_is_rejected() {
        let err = Complex::parse_str("ATOM 0 O Oxygen 0 0 0 L\nATOM 1 I Iodine 1 1 1 R 4\n", table())
            .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("ATOM 0 O Oxygen 0 0 L\n", 1),
            ("# c\nATOM 0 O Oxygen 0 0 x L\n", 2),
            ("ATOM 0 O Oxygen 0 0 0 L\nHETATM\n", 2),
            ("ATOM 0 O Oxygen 0 0 0 L\nBOND 0 5\n", 2),
            ("ATOM 0 O Oxygen 0 0 0 L\nATOM 1 N Nitrogen 0 0 0 R\n", 2),
            ("ATOM 0 O Oxygen 0 0 0 Q\n", 1),
            ("CENTER 0 0\n", 1),
        ];
        for (text, line) in cases {
            match Complex::parse_str(text, table()) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text:?} -> {other:?}"),
            }
        }
    }

    #[test]
    fn round_trip() {
        let c = Complex::parse_str(RING, table()).unwrap();
        let again = Complex::parse_str(&c.to_text(), table()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn remove_keeps_types_and_center() {
        let c = Complex::parse_str(RING, table()).unwrap();
        assert_eq!(c.remove_atoms(&[]).unwrap(), c);
        let arom = c.atoms()[0].type_index;
        let cut = c.remove_atoms(&[1]).unwrap();
        assert_eq!(cut.len(), 6);
        assert!(cut.ligand_indices().iter().all(|&i| cut.atoms()[i].type_index == arom));
        assert_eq!(cut.bonds().len(), 1);
        assert_eq!(cut.center(), c.center());
        let receptor_only = c.remove_atoms(&c.ligand_indices()).unwrap();
        assert!(receptor_only.atoms().iter().all(|a| !a.is_ligand));
        assert_eq!(receptor_only.len(), 3);
        assert!(c.remove_atoms(&[99]).is_err());
    }

    #[test]
    fn residues_partition_receptor() {
        let c = Complex::parse_str(RING, table()).unwrap();
        let groups = c.residue_groups();
        assert_eq!(groups, vec![(3, vec![6]), (7, vec![4, 5])]);
        let lig = Complex::parse_str("ATOM 0 O Oxygen 0 0 0 L\n", table()).unwrap();
        assert!(lig.residue_groups().is_empty());
    }
}
