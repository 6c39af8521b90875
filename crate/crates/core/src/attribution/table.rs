//! Per-atom score tables: `atom_id,element,type_name,x,y,z,method,head,score[,gx,gy,gz]`.

use std::fmt::Write as _;
use std::path::Path;

use super::{AtomScoreMap, Method};
use crate::error::{Error, Result};
use crate::molio::Complex;
use crate::scalar::Scalar;
use crate::tensornet::Head;

pub const SCORE_HEADER: &str = "atom_id,element,type_name,x,y,z,method,head,score";

/// One parsed row of a score table.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub atom_id: usize,
    pub element: String,
    pub type_name: String,
    pub position: [f64; 3],
    pub method: Method,
    pub head: Head,
    pub score: f64,
    pub gradient: Option<[f64; 3]>,
}

/// Renders `map` for `complex`. `comments` become leading `# ` lines.
pub fn score_table<T: Scalar>(complex: &Complex, map: &AtomScoreMap<T>, comments: &[String]) -> Result<String> {
    let with_vectors = map.scores.iter().any(|s| s.vector.is_some());
    let mut out = String::new();
    for c in comments {
        writeln!(out, "# {c}").unwrap();
    }
    out.push_str(SCORE_HEADER);
    if with_vectors {
        out.push_str(",gx,gy,gz");
    }
    out.push('\n');
    for s in &map.scores {
        let atom = complex.atoms().get(s.atom).ok_or_else(|| {
            Error::Shape(format!("score for atom {} but complex has {} atoms", s.atom, complex.len()))
        })?;
        let p = atom.position;
        write!(
            out,
            "{},{},{},{:.4},{:.4},{:.4},{},{},{:.15e}",
            atom.id,
            atom.element,
            complex.type_name(s.atom),
            p[0],
            p[1],
            p[2],
            map.method.name(),
            map.head.name(),
            s.score.as_f64()
        )
        .unwrap();
        if with_vectors {
            let v = s.vector.unwrap_or([T::zero(); 3]);
            write!(out, ",{:.15e},{:.15e},{:.15e}", v[0].as_f64(), v[1].as_f64(), v[2].as_f64()).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_score_table<T: Scalar>(path: &Path, complex: &Complex, map: &AtomScoreMap<T>, comments: &[String]) -> Result<()> {
    std::fs::write(path, score_table(complex, map, comments)?).map_err(|e| Error::io(path, e))
}

fn field<'a>(fields: &[&'a str], i: usize, line: usize) -> Result<&'a str> {
    fields
        .get(i)
        .copied()
        .ok_or_else(|| Error::parse(line, format!("missing column {}", i + 1)))
}

fn number(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("bad number `{s}`")))
}

/// Parses a table written by [`score_table`]; comment lines are skipped.
pub fn parse_score_table(text: &str) -> Result<Vec<ScoreRow>> {
    let mut rows = Vec::new();
    let mut width = None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let Some(w) = width else {
            let w = match t {
                SCORE_HEADER => 9,
                _ if t == format!("{SCORE_HEADER},gx,gy,gz") => 12,
                _ => return Err(Error::parse(line, "unrecognized score table header")),
            };
            width = Some(w);
            continue;
        };
        let f: Vec<&str> = t.split(',').collect();
        if f.len() != w {
            return Err(Error::parse(line, format!("expected {w} columns, found {}", f.len())));
        }
        let atom_id = field(&f, 0, line)?
            .parse()
            .map_err(|_| Error::parse(line, "bad atom id"))?;
        let method = Method::from_name(f[6]).ok_or_else(|| Error::parse(line, format!("unknown method `{}`", f[6])))?;
        let head = f[7].parse().map_err(|_| Error::parse(line, format!("unknown head `{}`", f[7])))?;
        let gradient = if w == 12 {
            Some([number(f[9], line)?, number(f[10], line)?, number(f[11], line)?])
        } else {
            None
        };
        rows.push(ScoreRow {
            atom_id,
            element: f[1].to_string(),
            type_name: f[2].to_string(),
            position: [number(f[3], line)?, number(f[4], line)?, number(f[5], line)?],
            method,
            head,
            score: number(f[8], line)?,
            gradient,
        });
    }
    if width.is_none() {
        return Err(Error::parse(1, "empty score table"));
    }
    Ok(rows)
}

pub fn read_score_table(path: &Path) -> Result<Vec<ScoreRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_score_table(&text)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::attribution::AtomScore;
    use crate::molio::AtomTypeTable;

    fn complex() -> Complex {
        let text = "ATOM 1 C AliphaticCarbonXSHydrophobe 0 0 0 L\nATOM 2 O OxygenXSAcceptor 1.5 0 0 R 7\n";
        Complex::parse_str(text, Arc::new(AtomTypeTable::default())).unwrap()
    }

    #[test]
    fn round_trip_with_vectors() {
        let c = complex();
        let map = AtomScoreMap::new(
            Method::Gradient,
            Head::Affinity,
            1.0,
            vec![AtomScore { atom: 1, score: 0.25, vector: Some([0.25, 0.0, -1e-9]) }],
        );
        let text = score_table(&c, &map, &["seed 3".into()]).unwrap();
        assert!(text.starts_with("# seed 3\n"));
        let rows = parse_score_table(&text).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].atom_id, 2);
        assert_eq!(rows[0].method, Method::Gradient);
        assert_eq!(rows[0].score, 0.25);
        assert_eq!(rows[0].gradient, Some([0.25, 0.0, -1e-9]));
    }

    #[test]
    fn rejects_malformed_rows() {
        let err = parse_score_table(&format!("{SCORE_HEADER}\n1,C,C,0,0,0,clrp,pose\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(parse_score_table("").is_err());
        assert!(parse_score_table(&format!("{SCORE_HEADER}\n1,C,C,0,0,0,lrp,pose,1\n")).is_err());
    }
}
