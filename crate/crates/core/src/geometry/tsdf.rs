use rayon::prelude::*;

use crate::error::{Result, T4dtError};
use crate::tensor::DenseVolume;

use super::bounds::SceneBounds;
use super::bvh::Bvh;
use super::mesh::TriangleMesh;
use super::vec3::{dot, sub};

/// Winding numbers this close to 0.5 are treated as undecided.
const AMBIGUOUS_BAND: f64 = 0.25;

/// Samples the truncated signed distance of `mesh` at voxel centers.
///
/// Values are `clamp(sign · distance, -tau, tau)` with the sign positive
/// inside. Inside means a generalized winding number of at least 0.5; when
/// the winding number is within 0.25 of that threshold (open or badly holed
/// meshes) the side of the nearest face decides instead.
pub fn mesh_to_tsdf(mesh: &TriangleMesh, bounds: &SceneBounds, res: [usize; 3], tau: f64) -> Result<DenseVolume> {
    if mesh.is_empty() {
        return Err(T4dtError::validation("cannot voxelize an empty mesh"));
    }
    if res.contains(&0) {
        return Err(T4dtError::validation("grid resolution must be positive"));
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(T4dtError::validation(format!("tau must be positive, got {tau}")));
    }
    let bvh = Bvh::new(mesh);
    let slab = res[1] * res[2];
    let mut data = vec![0.0; res[0] * slab];
    data.par_chunks_mut(slab).enumerate().for_each(|(x, out)| {
        for y in 0..res[1] {
            for z in 0..res[2] {
                let p = bounds.voxel_center(res, [x, y, z]);
                out[y * res[2] + z] = tsdf_at(&bvh, p, tau);
            }
        }
    });
    DenseVolume::new(res.to_vec(), data)
}

fn tsdf_at(bvh: &Bvh<'_>, p: [f64; 3], tau: f64) -> f64 {
    let near = bvh.nearest(p, tau);
    let w = bvh.winding_number(p);
    let inside = if (w - 0.5).abs() < AMBIGUOUS_BAND {
        match near.or_else(|| bvh.nearest(p, f64::INFINITY)) {
            Some(n) => dot(bvh.mesh().normal(n.triangle), sub(p, n.point)) < 0.0,
            None => w >= 0.5,
        }
    } else {
        w >= 0.5
    };
    let d = near.map_or(tau, |n| n.dist2.sqrt().min(tau));
    if inside {
        d
    } else {
        -d
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::synth::{icosphere, quad};

    #[test]
    fn clamps_far_inside_and_outside() {
        let m = icosphere([0.0; 3], 0.5, 2);
        let b = SceneBounds::cube([0.0; 3], 1.0).unwrap();
        let v = mesh_to_tsdf(&m, &b, [9, 9, 9], 0.05).unwrap();
        assert_eq!(v.get(&[4, 4, 4]).unwrap(), 0.05);
        assert_eq!(v.get(&[0, 0, 0]).unwrap(), -0.05);
    }

    #[test]
    fn open_quad_is_a_signed_plane() {
        let m = quad([-10.0, 10.0], [-10.0, 10.0], 0.0);
        let b = SceneBounds::new([-0.5, -0.5, -0.5], [0.5, 0.5, 0.5]).unwrap();
        let tau = 0.2;
        let res = [4, 4, 16];
        let v = mesh_to_tsdf(&m, &b, res, tau).unwrap();
        for z in 0..16 {
            let p = b.voxel_center(res, [1, 2, z]);
            // normal +z: the half-space below the quad is inside
            let expect = (-p[2]).clamp(-tau, tau);
            assert!((v.get(&[1, 2, z]).unwrap() - expect).abs() < 1e-6, "z={} got {}", p[2], v.get(&[1, 2, z]).unwrap());
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let b = SceneBounds::unit();
        assert!(mesh_to_tsdf(&TriangleMesh::default(), &b, [4; 3], 0.1).is_err());
        assert!(mesh_to_tsdf(&quad([0.0, 1.0], [0.0, 1.0], 0.5), &b, [0, 4, 4], 0.1).is_err());
    }
}
