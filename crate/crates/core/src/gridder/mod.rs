//! Gaussian density voxelization, its analytic coordinate gradient, rigid transforms
//! and OpenDX export.

mod density;
mod dx;
mod grid;
mod transform;

pub use density::{atom_density, atom_density_ddist};
pub use dx::DxGrid;
pub use grid::{
    atom_footprint, grid_gradient_to_atoms, voxelize, AtomGradientOptions, DensityGrid, GridSpec,
};
pub use transform::{random_transform, random_transform_with, RigidTransform};
