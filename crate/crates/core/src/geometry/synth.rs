//! Analytic test geometry: icospheres, quads and moving-sphere TSDF scenes.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::tensor::DenseVolume;

use super::bounds::SceneBounds;
use super::mesh::TriangleMesh;
use super::vec3::{add, norm, scale, sub};

/// Icosahedron refined `subdivisions` times and projected onto the sphere;
/// triangles wind counter-clockwise seen from outside.
pub fn icosphere(center: [f64; 3], radius: f64, subdivisions: u32) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = vec![
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    for v in verts.iter_mut() {
        *v = scale(*v, 1.0 / norm(*v));
    }
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<[f64; 3]>| -> usize {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let m = scale(add(verts[a], verts[b]), 0.5);
                verts.push(scale(m, 1.0 / norm(m)));
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let verts = verts.into_iter().map(|v| add(center, scale(v, radius))).collect();
    let mesh = TriangleMesh::from_raw(verts, faces);
    if mesh.translated(scale(center, -1.0)).signed_volume() < 0.0 {
        mesh.flipped()
    } else {
        mesh
    }
}

/// Square `[x0, x1] × [y0, y1]` in the plane `z = z0`, normal `+z`.
pub fn quad(x: [f64; 2], y: [f64; 2], z0: f64) -> TriangleMesh {
    let v = vec![[x[0], y[0], z0], [x[1], y[0], z0], [x[1], y[1], z0], [x[0], y[1], z0]];
    TriangleMesh::from_raw(v, vec![[0, 1, 2], [0, 2, 3]])
}

/// Truncated signed distance to a sphere, positive inside.
pub fn sphere_tsdf(p: [f64; 3], center: [f64; 3], radius: f64, tau: f64) -> f64 {
    (radius - norm(sub(p, center))).clamp(-tau, tau)
}

/// `n` points drawn uniformly on a sphere surface.
pub fn sample_sphere(center: [f64; 3], radius: f64, n: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            // uniform height and azimuth give a uniform sphere (Archimedes)
            let z: f64 = rng.gen_range(-1.0..=1.0);
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let s = (1.0 - z * z).max(0.0).sqrt();
            add(center, scale([s * phi.cos(), s * phi.sin(), z], radius))
        })
        .collect()
}

/// A sphere translating linearly between two centers, sampled as TSDF frames.
#[derive(Debug, Clone)]
pub struct MovingSphere {
    pub bounds: SceneBounds,
    pub resolution: [usize; 3],
    pub frames: usize,
    pub radius: f64,
    pub start: [f64; 3],
    pub end: [f64; 3],
    pub tau: f64,
}

impl MovingSphere {
    /// Radius-0.25 sphere crossing the unit cube along x.
    pub fn standard(resolution: usize, frames: usize, tau: f64) -> Self {
        MovingSphere {
            bounds: SceneBounds::unit(),
            resolution: [resolution; 3],
            frames,
            radius: 0.25,
            start: [0.35, 0.5, 0.5],
            end: [0.65, 0.5, 0.5],
            tau,
        }
    }

    pub fn center(&self, t: usize) -> [f64; 3] {
        let s = if self.frames > 1 { t as f64 / (self.frames - 1) as f64 } else { 0.0 };
        add(self.start, scale(sub(self.end, self.start), s))
    }

    pub fn frame(&self, t: usize) -> Result<DenseVolume> {
        let c = self.center(t);
        let res = self.resolution;
        DenseVolume::from_fn(res.to_vec(), |i| {
            let p = self.bounds.voxel_center(res, [i[0], i[1], i[2]]);
            sphere_tsdf(p, c, self.radius, self.tau)
        })
    }

    /// Frames produced lazily, one at a time.
    pub fn stream(&self) -> impl Iterator<Item = Result<DenseVolume>> + '_ {
        (0..self.frames).map(move |t| self.frame(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_counts_and_orientation() {
        let m = icosphere([1.0, 2.0, 3.0], 0.5, 4);
        assert_eq!(m.triangles().len(), 20 * 4usize.pow(4));
        assert_eq!(m.vertices().len(), 2562);
        let v = m.translated([-1.0, -2.0, -3.0]).signed_volume();
        let exact = 4.0 / 3.0 * std::f64::consts::PI * 0.125;
        assert!(v > 0.0 && (v - exact).abs() / exact < 0.01);
        for p in m.vertices() {
            assert!((norm(sub(*p, [1.0, 2.0, 3.0])) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn moving_sphere_endpoints() {
        let s = MovingSphere::standard(8, 3, 0.05);
        assert_eq!(s.center(0), [0.35, 0.5, 0.5]);
        assert_eq!(s.center(2), [0.65, 0.5, 0.5]);
        assert_eq!(s.stream().count(), 3);
    }
}
