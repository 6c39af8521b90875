//! Files for external viewers: score-annotated structures and gradient arrows.

use std::fmt::Write as _;
use std::path::Path;

use crate::attribution::{normalize_scores, AtomScoreMap};
use crate::error::{Error, Result};
use crate::molio::Complex;
use crate::scalar::Scalar;

pub const DEFAULT_ARROW_SCALE: f64 = 2.0;
pub const DEFAULT_ARROW_THRESHOLD: f64 = 1e-6;

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// PDB records with the max-abs normalized score in the B-factor column. Atoms absent
/// from the map get 0.00. Ligand atoms are `HETATM` in chain L, receptor atoms `ATOM`
/// in chain R.
pub fn bfactor_structure<T: Scalar>(complex: &Complex, map: &AtomScoreMap<T>, remarks: &[String]) -> String {
    let normalized = normalize_scores(map);
    let mut b = vec![0.0; complex.len()];
    for s in &normalized.scores {
        if let Some(v) = b.get_mut(s.atom) {
            *v = s.score.as_f64();
        }
    }
    let mut out = String::new();
    for r in remarks {
        writeln!(out, "REMARK   1 {r}").unwrap();
    }
    for (i, atom) in complex.atoms().iter().enumerate() {
        let (record, resname, chain, resseq) = if atom.is_ligand {
            ("HETATM", "LIG", 'L', 1)
        } else {
            ("ATOM", "RES", 'R', atom.residue_id.unwrap_or(0).rem_euclid(10_000))
        };
        let p = atom.position;
        let element: String = atom.element.chars().take(2).collect();
        writeln!(
            out,
            "{record:<6}{serial:>5} {name:<4} {resname:>3} {chain}{resseq:>4}    {x:>8.3}{y:>8.3}{z:>8.3}{occ:>6.2}{bf:>6.2}          {element:>2}",
            serial = atom.id % 100_000,
            name = element,
            x = p[0],
            y = p[1],
            z = p[2],
            occ = 1.0,
            bf = b[i],
        )
        .unwrap();
    }
    out.push_str("END\n");
    out
}

pub fn write_bfactor_structure<T: Scalar>(complex: &Complex, map: &AtomScoreMap<T>, path: &Path, remarks: &[String]) -> Result<()> {
    write_file(path, &bfactor_structure(complex, map, remarks))
}

/// B-factor column of every `ATOM`/`HETATM` record, in file order.
pub fn parse_bfactors(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        if !(line.starts_with("ATOM") || line.starts_with("HETATM")) {
            continue;
        }
        let field = line
            .get(60..66)
            .ok_or_else(|| Error::parse(k + 1, "record too short for a B-factor"))?;
        out.push(
            field
                .trim()
                .parse()
                .map_err(|_| Error::parse(k + 1, format!("bad B-factor `{field}`")))?,
        );
    }
    Ok(out)
}

/// One rendered gradient arrow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrow {
    pub atom_id: usize,
    pub origin: [f64; 3],
    /// Unit vector.
    pub direction: [f64; 3],
    pub magnitude: f64,
    /// Magnitude over the largest magnitude, times the arrow scale.
    pub length: f64,
}

/// Arrows for every atom of `map` whose vector norm exceeds `threshold`.
pub fn vector_arrows<T: Scalar>(complex: &Complex, map: &AtomScoreMap<T>, scale: f64, threshold: f64) -> Vec<Arrow> {
    let mut arrows: Vec<Arrow> = map
        .scores
        .iter()
        .filter_map(|s| {
            let v = s.vector?.map(|c| c.as_f64());
            let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            let atom = complex.atoms().get(s.atom)?;
            (norm > threshold).then(|| Arrow {
                atom_id: atom.id,
                origin: atom.position,
                direction: v.map(|c| c / norm),
                magnitude: norm,
                length: 0.0,
            })
        })
        .collect();
    let max = arrows.iter().map(|a| a.magnitude).fold(0.0, f64::max);
    for a in &mut arrows {
        a.length = a.magnitude / max * scale;
    }
    arrows
}

pub fn arrows_csv(arrows: &[Arrow], comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        writeln!(out, "# {c}").unwrap();
    }
    out.push_str("atom_id,x,y,z,dx,dy,dz,magnitude,length\n");
    for a in arrows {
        let [x, y, z] = a.origin;
        let [dx, dy, dz] = a.direction;
        writeln!(
            out,
            "{},{x:.4},{y:.4},{z:.4},{dx:.9},{dy:.9},{dz:.9},{:.9e},{:.6}",
            a.atom_id, a.magnitude, a.length
        )
        .unwrap();
    }
    out
}

/// PyMOL script drawing each arrow as a CGO cylinder with a cone tip.
pub fn arrows_pymol_script(arrows: &[Arrow], name: &str, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        writeln!(out, "# {c}").unwrap();
    }
    out.push_str("from pymol import cmd\nfrom pymol.cgo import CYLINDER, CONE\n\nobj = [\n");
    for a in arrows {
        let tip = |f: f64| -> [f64; 3] { std::array::from_fn(|k| a.origin[k] + a.direction[k] * a.length * f) };
        let [ox, oy, oz] = a.origin;
        let [sx, sy, sz] = tip(0.75);
        let [tx, ty, tz] = tip(1.0);
        writeln!(
            out,
            "    CYLINDER, {ox:.4}, {oy:.4}, {oz:.4}, {sx:.4}, {sy:.4}, {sz:.4}, 0.08, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0,"
        )
        .unwrap();
        writeln!(
            out,
            "    CONE, {sx:.4}, {sy:.4}, {sz:.4}, {tx:.4}, {ty:.4}, {tz:.4}, 0.2, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0,"
        )
        .unwrap();
    }
    writeln!(out, "]\n\ncmd.load_cgo(obj, \"{name}\")").unwrap();
    out
}

/// Writes the arrow table to `csv_path` and, when given, a PyMOL script to `script_path`.
pub fn write_vector_script<T: Scalar>(
    complex: &Complex,
    map: &AtomScoreMap<T>,
    scale: f64,
    threshold: f64,
    csv_path: &Path,
    script_path: Option<&Path>,
    comments: &[String],
) -> Result<Vec<Arrow>> {
    let arrows = vector_arrows(complex, map, scale, threshold);
    write_file(csv_path, &arrows_csv(&arrows, comments))?;
    if let Some(p) = script_path {
        write_file(p, &arrows_pymol_script(&arrows, "gradients", comments))?;
    }
    Ok(arrows)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::attribution::{AtomScore, Method};
    use crate::molio::AtomTypeTable;
    use crate::tensornet::Head;

    fn complex() -> Complex {
        let text = "ATOM 1 C AliphaticCarbonXSHydrophobe 0 0 0 L\n\
                    ATOM 2 N Nitrogen 1.5 0 0 L\n\
                    ATOM 3 O OxygenXSAcceptor -3 1 2.25 R 12\n";
        Complex::parse_str(text, Arc::new(AtomTypeTable::default())).unwrap()
    }

    fn map(scores: &[(usize, f64, Option<[f64; 3]>)]) -> AtomScoreMap<f64> {
        AtomScoreMap::new(
            Method::Gradient,
            Head::Pose,
            0.0,
            scores
                .iter()
                .map(|&(atom, score, vector)| AtomScore { atom, score, vector })
                .collect(),
        )
    }

    #[test]
    fn bfactors_round_trip_normalized() {
        let c = complex();
        let text = bfactor_structure(&c, &map(&[(0, 2.0, None), (2, -4.0, None)]), &["seed 0".into()]);
        assert_eq!(parse_bfactors(&text).unwrap(), vec![0.5, 0.0, -1.0]);
        assert!(text.lines().all(|l| l.len() <= 80));
        assert!(text.starts_with("REMARK   1 seed 0\nHETATM    1 C    LIG L   1"));
        let zero = bfactor_structure(&c, &map(&[(0, 0.0, None)]), &[]);
        assert!(parse_bfactors(&zero).unwrap().iter().all(|&b| b == 0.0));
    }

    #[test]
    fn arrows() {
        let c = complex();
        assert!(vector_arrows(&c, &map(&[(0, 0.0, Some([0.0; 3]))]), 2.0, 1e-6).is_empty());
        let a = vector_arrows(&c, &map(&[(0, 1.0, Some([1.0, 0.0, 0.0])), (1, 0.5, Some([0.0, -0.5, 0.0]))]), 2.0, 1e-6);
        assert_eq!(a.len(), 2);
        assert_eq!(a[0].direction, [1.0, 0.0, 0.0]);
        assert_eq!(a[0].length, 2.0);
        assert_eq!(a[1].length, 1.0);
        let script = arrows_pymol_script(&a, "g", &[]);
        assert_eq!(script.matches("CONE,").count(), 2);
    }
}
