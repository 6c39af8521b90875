//! OpenDX scalar field files, as read by PyMOL, VMD and Chimera.
//!
//! Data is written x-major (z varies fastest), three values per line.

use std::fmt::Write as _;
use std::path::Path;

use super::grid::{DensityGrid, GridSpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct DxGrid {
    /// Position of the first grid point.
    pub origin: [f64; 3],
    pub spacing: f64,
    pub counts: [usize; 3],
    /// Values in internal (z, y, x) order with x fastest.
    pub values: Vec<f64>,
}

impl DxGrid {
    pub fn from_spec_values<T: Scalar>(spec: &GridSpec, values: &[T]) -> Result<Self> {
        let n = spec.points_per_side;
        if values.len() != n * n * n {
            return Err(Error::Shape(format!(
                "{} values for a {n}³ grid",
                values.len()
            )));
        }
        Ok(DxGrid {
            origin: spec.origin(),
            spacing: spec.resolution,
            counts: [n; 3],
            values: values.iter().map(|v| v.as_f64()).collect(),
        })
    }

    pub fn channel<T: Scalar>(grid: &DensityGrid<T>, channel: usize) -> Result<Self> {
        if channel >= grid.spec.channels {
            return Err(Error::InvalidArgument(format!(
                "channel {channel} out of range ({} channels)",
                grid.spec.channels
            )));
        }
        Self::from_spec_values(&grid.spec, grid.channel(channel))
    }

    pub fn summed<T: Scalar>(grid: &DensityGrid<T>) -> Result<Self> {
        Self::from_spec_values(&grid.spec, &grid.summed())
    }

    fn at(&self, x: usize, y: usize, z: usize) -> f64 {
        let [nx, ny, _] = self.counts;
        self.values[(z * ny + y) * nx + x]
    }

    pub fn to_dx_string(&self, comment: &str) -> String {
        let [nx, ny, nz] = self.counts;
        let mut s = String::new();
        for line in comment.lines() {
            let _ = writeln!(s, "# {line}");
        }
        let _ = writeln!(s, "object 1 class gridpositions counts {nx} {ny} {nz}");
        let _ = writeln!(
            s,
            "origin {:.6} {:.6} {:.6}",
            self.origin[0], self.origin[1], self.origin[2]
        );
        let d = self.spacing;
        let _ = writeln!(s, "delta {d:.6} 0.000000 0.000000");
        let _ = writeln!(s, "delta 0.000000 {d:.6} 0.000000");
        let _ = writeln!(s, "delta 0.000000 0.000000 {d:.6}");
        let _ = writeln!(s, "object 2 class gridconnections counts {nx} {ny} {nz}");
        let total = nx * ny * nz;
        let _ = writeln!(
            s,
            "object 3 class array type double rank 0 items {total} data follows"
        );
        let mut col = 0;
        for x in 0..nx {
            for y in 0..ny {
                for z in 0..nz {
                    let _ = write!(s, "{:.9e}", self.at(x, y, z));
                    col += 1;
                    s.push(if col % 3 == 0 { '\n' } else { ' ' });
                }
            }
        }
        if col % 3 != 0 {
            s.pop();
            s.push('\n');
        }
        s.push_str("attribute \"dep\" string \"positions\"\n");
        s.push_str("object \"density\" class field\n");
        s.push_str("component \"positions\" value 1\n");
        s.push_str("component \"connections\" value 2\n");
        s.push_str("component \"data\" value 3\n");
        s
    }

    pub fn write(&self, path: &Path, comment: &str) -> Result<()> {
        std::fs::write(path, self.to_dx_string(comment)).map_err(|e| Error::io(path, e))
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut counts = None;
        let mut origin = None;
        let mut deltas: Vec<[f64; 3]> = Vec::new();
        let mut items = None;
        let mut data: Vec<f64> = Vec::new();
        let mut in_data = false;

        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = t.split_whitespace().collect();
            if in_data {
                if f[0] == "attribute" || f[0] == "object" || f[0] == "component" {
                    in_data = false;
                } else {
                    for v in f {
                        data.push(num(line, v)?);
                    }
                    continue;
                }
            }
            match f[0] {
                "object" if t.contains("class gridpositions") => {
                    let i = f.iter().position(|&w| w == "counts").ok_or_else(|| Error::parse(line, "missing counts"))?;
                    if f.len() < i + 4 {
                        return Err(Error::parse(line, "expected three counts"));
                    }
                    let mut c = [0usize; 3];
                    for k in 0..3 {
                        c[k] = f[i + 1 + k]
                            .parse()
                            .map_err(|_| Error::parse(line, "bad count"))?;
                    }
                    counts = Some(c);
                }
                "object" if t.contains("class array") => {
                    let i = f.iter().position(|&w| w == "items").ok_or_else(|| Error::parse(line, "missing items"))?;
                    let n: usize = f
                        .get(i + 1)
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| Error::parse(line, "bad item count"))?;
                    items = Some(n);
                    in_data = true;
                }
                "origin" if f.len() == 4 => {
                    origin = Some([num(line, f[1])?, num(line, f[2])?, num(line, f[3])?]);
                }
                "delta" if f.len() == 4 => {
                    deltas.push([num(line, f[1])?, num(line, f[2])?, num(line, f[3])?]);
                }
                _ => {}
            }
        }
        let counts = counts.ok_or_else(|| Error::parse(0, "missing gridpositions object"))?;
        let origin = origin.ok_or_else(|| Error::parse(0, "missing origin"))?;
        if deltas.len() != 3 {
            return Err(Error::parse(0, "expected three delta lines"));
        }
        let spacing = deltas[0][0];
        for (k, d) in deltas.iter().enumerate() {
            for (j, &v) in d.iter().enumerate() {
                let want = if j == k { spacing } else { 0.0 };
                if (v - want).abs() > 1e-9 {
                    return Err(Error::parse(0, "only isotropic axis-aligned grids are supported"));
                }
            }
        }
        let [nx, ny, nz] = counts;
        let total = nx * ny * nz;
        if items != Some(total) || data.len() != total {
            return Err(Error::parse(
                0,
                format!("expected {total} data values, found {}", data.len()),
            ));
        }
        let mut values = vec![0.0; total];
        let mut k = 0;
        for x in 0..nx {
            for y in 0..ny {
                for z in 0..nz {
                    values[(z * ny + y) * nx + x] = data[k];
                    k += 1;
                }
            }
        }
        Ok(DxGrid {
            origin,
            spacing,
            counts,
            values,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text)
    }
}

fn num(line: usize, s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::parse(line, format!("bad number {s:?}")))
}
