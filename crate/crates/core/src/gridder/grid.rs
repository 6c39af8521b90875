use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::density::{density_ddist_unchecked, density_unchecked};
use super::transform::RigidTransform;
use crate::error::{Error, Result};
use crate::molio::Complex;
use crate::scalar::Scalar;

/// Cubic, cell-centered grid geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Edge length in Å.
    pub dimension: f64,
    /// Voxel edge in Å.
    pub resolution: f64,
    pub points_per_side: usize,
    pub channels: usize,
    /// Grid center in Å.
    pub center: [f64; 3],
}

impl GridSpec {
    pub const DEFAULT_DIMENSION: f64 = 24.0;
    pub const DEFAULT_RESOLUTION: f64 = 0.5;

    pub fn new(dimension: f64, resolution: f64, channels: usize, center: [f64; 3]) -> Result<Self> {
        if !(dimension > 0.0 && resolution > 0.0 && dimension.is_finite() && resolution.is_finite()) {
            return Err(Error::Domain(format!(
                "grid dimension {dimension} and resolution {resolution} must be positive"
            )));
        }
        let n = (dimension / resolution).round();
        if n < 1.0 || (n * resolution - dimension).abs() > 1e-9 * dimension.max(1.0) {
            return Err(Error::Domain(format!(
                "grid dimension {dimension} is not a multiple of resolution {resolution}"
            )));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("non-finite grid center".into()));
        }
        Ok(GridSpec {
            dimension,
            resolution,
            points_per_side: n as usize,
            channels,
            center,
        })
    }

    /// 24 Å at 0.5 Å over `channels` channels.
    pub fn standard(channels: usize, center: [f64; 3]) -> Self {
        GridSpec::new(Self::DEFAULT_DIMENSION, Self::DEFAULT_RESOLUTION, channels, center)
            .expect("default grid is valid")
    }

    pub fn with_center(mut self, center: [f64; 3]) -> Self {
        self.center = center;
        self
    }

    pub fn voxels_per_channel(&self) -> usize {
        self.points_per_side.pow(3)
    }

    pub fn len(&self) -> usize {
        self.channels * self.voxels_per_channel()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Center of the first voxel along each axis.
    pub fn origin(&self) -> [f64; 3] {
        let off = -self.dimension / 2.0 + 0.5 * self.resolution;
        self.center.map(|c| c + off)
    }

    pub fn voxel_coordinate(&self, axis: usize, i: usize) -> f64 {
        self.origin()[axis] + i as f64 * self.resolution
    }

    /// Flat index of `(channel, z, y, x)`; x varies fastest.
    #[inline]
    pub fn index(&self, channel: usize, z: usize, y: usize, x: usize) -> usize {
        let n = self.points_per_side;
        ((channel * n + z) * n + y) * n + x
    }
}

/// Multi-channel atom density on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid<T> {
    pub spec: GridSpec,
    pub values: Vec<T>,
}

impl<T: Scalar> DensityGrid<T> {
    pub fn zeros(spec: GridSpec) -> Self {
        DensityGrid {
            spec,
            values: vec![T::zero(); spec.len()],
        }
    }

    pub fn channel(&self, c: usize) -> &[T] {
        let v = self.spec.voxels_per_channel();
        &self.values[c * v..(c + 1) * v]
    }

    /// Sum over channels, one value per spatial voxel.
    pub fn summed(&self) -> Vec<T> {
        let v = self.spec.voxels_per_channel();
        let mut out = vec![T::zero(); v];
        for c in 0..self.spec.channels {
            for (o, &x) in out.iter_mut().zip(self.channel(c)) {
                *o += x;
            }
        }
        out
    }
}

#[derive(Clone, Copy)]
struct PlacedAtom<T> {
    index: usize,
    pos: [T; 3],
    radius: T,
    cutoff: T,
}

fn placed_atoms<T: Scalar>(
    complex: &Complex,
    spec: &GridSpec,
    transform: Option<&RigidTransform>,
) -> Vec<PlacedAtom<T>> {
    complex
        .atoms()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let p = match transform {
                Some(t) => t.apply_about(a.position, spec.center),
                None => a.position,
            };
            let r = complex.radius_of(i);
            PlacedAtom {
                index: i,
                pos: p.map(T::of),
                radius: T::of(r),
                cutoff: T::of(1.5 * r),
            }
        })
        .collect()
}

/// Inclusive voxel index range along one axis that may lie within `cutoff` of `p`.
fn axis_range(p: f64, cutoff: f64, spec: &GridSpec, axis: usize) -> Option<(usize, usize)> {
    let n = spec.points_per_side as f64;
    let first = spec.origin()[axis];
    let lo = ((p - cutoff - first) / spec.resolution).floor();
    let hi = ((p + cutoff - first) / spec.resolution).ceil();
    if hi < 0.0 || lo > n - 1.0 {
        return None;
    }
    Some((lo.max(0.0) as usize, hi.min(n - 1.0) as usize))
}

struct Lattice<T> {
    coords: [Vec<T>; 3],
}

impl<T: Scalar> Lattice<T> {
    fn new(spec: &GridSpec) -> Self {
        let n = spec.points_per_side;
        let axis = |a: usize| (0..n).map(|i| T::of(spec.voxel_coordinate(a, i))).collect();
        Lattice {
            coords: [axis(0), axis(1), axis(2)],
        }
    }
}

/// Visits every voxel of the atom's own channel with distance below the cutoff, in
/// ascending (z, y, x) order, passing the flat spatial index, the displacement
/// atom − voxel and the distance.
fn for_each_voxel<T: Scalar>(
    atom: &PlacedAtom<T>,
    spec: &GridSpec,
    lattice: &Lattice<T>,
    mut visit: impl FnMut(usize, [T; 3], T),
) {
    let n = spec.points_per_side;
    let cut = atom.cutoff.as_f64();
    let p = atom.pos.map(|v| v.as_f64());
    let (Some((x0, x1)), Some((y0, y1)), Some((z0, z1))) = (
        axis_range(p[0], cut, spec, 0),
        axis_range(p[1], cut, spec, 1),
        axis_range(p[2], cut, spec, 2),
    ) else {
        return;
    };
    for z in z0..=z1 {
        let dz = atom.pos[2] - lattice.coords[2][z];
        for y in y0..=y1 {
            let dy = atom.pos[1] - lattice.coords[1][y];
            for x in x0..=x1 {
                let dx = atom.pos[0] - lattice.coords[0][x];
                let d = (dx * dx + dy * dy + dz * dz).sqrt();
                if d < atom.cutoff {
                    visit((z * n + y) * n + x, [dx, dy, dz], d);
                }
            }
        }
    }
}

fn check_channels(complex: &Complex, spec: &GridSpec) -> Result<()> {
    if spec.channels != complex.types().len() {
        return Err(Error::Shape(format!(
            "grid has {} channels but the type table has {} types",
            spec.channels,
            complex.types().len()
        )));
    }
    Ok(())
}

/// Discretizes the complex onto the grid, optionally after a rigid transform about the
/// grid center.
///
/// Each (channel, z-plane) slab is filled independently and every voxel accumulates
/// atoms in ascending index order, so the result does not depend on thread count.
pub fn voxelize<T: Scalar>(
    complex: &Complex,
    spec: &GridSpec,
    transform: Option<&RigidTransform>,
) -> Result<DensityGrid<T>> {
    check_channels(complex, spec)?;
    let mut grid = DensityGrid::zeros(*spec);
    let n = spec.points_per_side;
    if n == 0 || complex.is_empty() {
        return Ok(grid);
    }
    let placed = placed_atoms::<T>(complex, spec, transform);
    let lattice = Lattice::new(spec);
    let mut by_channel: Vec<Vec<PlacedAtom<T>>> = vec![Vec::new(); spec.channels];
    for atom in &placed {
        by_channel[complex.atoms()[atom.index].type_index].push(*atom);
    }

    grid.values
        .par_chunks_mut(n * n)
        .enumerate()
        .for_each(|(slab, plane)| {
            let (c, z) = (slab / n, slab % n);
            let vz = lattice.coords[2][z];
            for atom in &by_channel[c] {
                let dz = atom.pos[2] - vz;
                if dz.abs() >= atom.cutoff {
                    continue;
                }
                let p = atom.pos.map(|v| v.as_f64());
                let cut = atom.cutoff.as_f64();
                let (Some((x0, x1)), Some((y0, y1))) =
                    (axis_range(p[0], cut, spec, 0), axis_range(p[1], cut, spec, 1))
                else {
                    continue;
                };
                for y in y0..=y1 {
                    let dy = atom.pos[1] - lattice.coords[1][y];
                    for x in x0..=x1 {
                        let dx = atom.pos[0] - lattice.coords[0][x];
                        let d = (dx * dx + dy * dy + dz * dz).sqrt();
                        if d < atom.cutoff {
                            plane[y * n + x] += density_unchecked(d, atom.radius);
                        }
                    }
                }
            }
        });
    Ok(grid)
}

/// Density contributions of a single atom as `(flat grid index, value)` pairs.
pub fn atom_footprint<T: Scalar>(
    complex: &Complex,
    spec: &GridSpec,
    atom_index: usize,
    transform: Option<&RigidTransform>,
) -> Vec<(usize, T)> {
    let atom = placed_atoms::<T>(complex, spec, transform)[atom_index];
    let lattice = Lattice::new(spec);
    let base = complex.atoms()[atom_index].type_index * spec.voxels_per_channel();
    let mut out = Vec::new();
    for_each_voxel(&atom, spec, &lattice, |v, _, d| {
        out.push((base + v, density_unchecked(d, atom.radius)));
    });
    out
}

/// Options for mapping grid gradients back onto atoms.
#[derive(Debug, Clone, Copy, Default)]
pub struct AtomGradientOptions<'a> {
    /// Also differentiate with respect to receptor atom positions.
    pub include_receptor: bool,
    /// Transform that was applied when voxelizing; gradients are reported in the
    /// untransformed frame.
    pub transform: Option<&'a RigidTransform>,
}

/// Chain rule from per-voxel gradients to per-atom coordinate gradients. Atoms that are
/// not differentiated (receptor atoms by default) get zero vectors.
pub fn grid_gradient_to_atoms<T: Scalar>(
    grid_grad: &[T],
    complex: &Complex,
    spec: &GridSpec,
    options: AtomGradientOptions<'_>,
) -> Result<Vec<[T; 3]>> {
    check_channels(complex, spec)?;
    if grid_grad.len() != spec.len() {
        return Err(Error::Shape(format!(
            "grid gradient has {} values, grid has {}",
            grid_grad.len(),
            spec.len()
        )));
    }
    let placed = placed_atoms::<T>(complex, spec, options.transform);
    let lattice = Lattice::new(spec);
    let per_channel = spec.voxels_per_channel();
    let grads = placed
        .par_iter()
        .map(|atom| {
            let a = &complex.atoms()[atom.index];
            let mut g = [T::zero(); 3];
            if !a.is_ligand && !options.include_receptor {
                return g;
            }
            let chan = &grid_grad[a.type_index * per_channel..(a.type_index + 1) * per_channel];
            for_each_voxel(atom, spec, &lattice, |v, delta, d| {
                let upstream = chan[v];
                if d > T::zero() && upstream != T::zero() {
                    let s = upstream * density_ddist_unchecked(d, atom.radius) / d;
                    for k in 0..3 {
                        g[k] += s * delta[k];
                    }
                }
            });
            match options.transform {
                Some(t) => t.rotate_back(g),
                None => g,
            }
        })
        .collect();
    Ok(grads)
}
