//! Mesh ingestion, TSDF voxelization, marching cubes and surface sampling.

mod bounds;
mod bvh;
pub mod io;
mod marching;
mod mesh;
mod sample;
pub mod synth;
mod tsdf;
pub mod vec3;

pub use bounds::SceneBounds;
pub use bvh::{closest_point_on_triangle, triangle_winding, Bvh, Nearest};
pub use marching::marching_cubes;
pub use mesh::{TriangleMesh, DEGENERATE_AREA};
pub use sample::sample_surface;
pub use tsdf::mesh_to_tsdf;
