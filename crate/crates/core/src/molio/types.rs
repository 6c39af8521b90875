use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether an atom type belongs to the receptor or the ligand channel block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    Receptor,
    Ligand,
}

impl Role {
    pub fn from_flag(flag: &str) -> Option<Role> {
        match flag {
            "R" => Some(Role::Receptor),
            "L" => Some(Role::Ligand),
            _ => None,
        }
    }

    pub fn flag(self) -> &'static str {
        match self {
            Role::Receptor => "R",
            Role::Ligand => "L",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Receptor => "receptor",
            Role::Ligand => "ligand",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomType {
    pub name: String,
    pub role: Role,
    /// Van der Waals radius in Å.
    pub vdw_radius: f64,
}

const RECEPTOR_TYPES: [(&str, f64); 16] = [
    ("AliphaticCarbonXSHydrophobe", 1.9),
    ("AliphaticCarbonXSNonHydrophobe", 1.9),
    ("AromaticCarbonXSHydrophobe", 1.9),
    ("AromaticCarbonXSNonHydrophobe", 1.9),
    ("Calcium", 1.2),
    ("Iron", 1.2),
    ("Magnesium", 1.2),
    ("Nitrogen", 1.8),
    ("NitrogenXSAcceptor", 1.8),
    ("NitrogenXSDonor", 1.8),
    ("NitrogenXSDonorAcceptor", 1.8),
    ("OxygenXSAcceptor", 1.7),
    ("OxygenXSDonorAcceptor", 1.7),
    ("Phosphorus", 2.1),
    ("Sulfur", 2.0),
    ("Zinc", 1.2),
];

const LIGAND_TYPES: [(&str, f64); 19] = [
    ("AliphaticCarbonXSHydrophobe", 1.9),
    ("AliphaticCarbonXSNonHydrophobe", 1.9),
    ("AromaticCarbonXSHydrophobe", 1.9),
    ("AromaticCarbonXSNonHydrophobe", 1.9),
    ("Bromine", 2.0),
    ("Chlorine", 1.8),
    ("Fluorine", 1.5),
    ("Nitrogen", 1.8),
    ("NitrogenXSAcceptor", 1.8),
    ("NitrogenXSDonor", 1.8),
    ("NitrogenXSDonorAcceptor", 1.8),
    ("Oxygen", 1.7),
    ("OxygenXSAcceptor", 1.7),
    ("OxygenXSDonorAcceptor", 1.7),
    ("Phosphorus", 2.1),
    ("Sulfur", 2.0),
    ("SulfurAcceptor", 2.0),
    ("Iodine", 2.2),
    ("Boron", 1.92),
];

/// Ordered list of atom types; the position of an entry is its grid channel.
///
/// Receptor and ligand types share names (both blocks start with the four carbon
/// types), so entries are keyed by `(name, role)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomTypeTable {
    entries: Vec<AtomType>,
}

impl Default for AtomTypeTable {
    /// The 35 standard types: 16 receptor types followed by 19 ligand types.
    fn default() -> Self {
        let entries = RECEPTOR_TYPES
            .iter()
            .map(|&(n, r)| (n, Role::Receptor, r))
            .chain(LIGAND_TYPES.iter().map(|&(n, r)| (n, Role::Ligand, r)))
            .map(|(name, role, vdw_radius)| AtomType {
                name: name.to_string(),
                role,
                vdw_radius,
            })
            .collect();
        AtomTypeTable { entries }
    }
}

impl AtomTypeTable {
    pub fn new(entries: Vec<AtomType>) -> Result<Self> {
        for (i, e) in entries.iter().enumerate() {
            if !(e.vdw_radius > 0.0 && e.vdw_radius.is_finite()) {
                return Err(Error::Domain(format!(
                    "atom type {} has non-positive radius {}",
                    e.name, e.vdw_radius
                )));
            }
            if entries[..i]
                .iter()
                .any(|o| o.name == e.name && o.role == e.role)
            {
                return Err(Error::Domain(format!(
                    "duplicate {} atom type {}",
                    e.role, e.name
                )));
            }
        }
        Ok(AtomTypeTable { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[AtomType] {
        &self.entries
    }

    pub fn get(&self, index: usize) -> Option<&AtomType> {
        self.entries.get(index)
    }

    pub fn radius(&self, index: usize) -> f64 {
        self.entries[index].vdw_radius
    }

    pub fn max_radius(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.vdw_radius)
            .fold(0.0, f64::max)
    }

    pub fn index_of(&self, name: &str, role: Role) -> Option<usize> {
        self.entries
            .iter()
            .position(|e| e.name == name && e.role == role)
    }

    /// Applies `TYPE <name> <L|R> <radius>` overrides to the radii of existing types.
    pub fn apply_overrides(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            if fields[0] != "TYPE" {
                return Err(Error::parse(
                    line,
                    format!("unknown record {:?}, expected TYPE", fields[0]),
                ));
            }
            if fields.len() != 4 {
                return Err(Error::parse(line, "expected TYPE <name> <L|R> <radius>"));
            }
            let role = Role::from_flag(fields[2])
                .ok_or_else(|| Error::parse(line, format!("bad role {:?}", fields[2])))?;
            let radius: f64 = fields[3]
                .parse()
                .map_err(|_| Error::parse(line, format!("bad radius {:?}", fields[3])))?;
            if !(radius > 0.0 && radius.is_finite()) {
                return Err(Error::parse(line, format!("radius must be positive, got {radius}")));
            }
            let idx = self.index_of(fields[1], role).ok_or_else(|| {
                Error::parse(line, format!("unknown {} atom type {:?}", role, fields[1]))
            })?;
            self.entries[idx].vdw_radius = radius;
        }
        Ok(())
    }

    pub fn load_overrides(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut table = AtomTypeTable::default();
        table.apply_overrides(&text)?;
        Ok(table)
    }
}
