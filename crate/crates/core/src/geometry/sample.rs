use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, T4dtError};

use super::mesh::TriangleMesh;
use super::vec3::{add, scale, sub};

/// `n` points distributed uniformly by area over the mesh surface.
pub fn sample_surface(m: &TriangleMesh, n: usize, seed: u64) -> Result<Vec<[f64; 3]>> {
    if m.is_empty() {
        return Err(T4dtError::validation("cannot sample an empty mesh"));
    }
    let mut cdf = Vec::with_capacity(m.triangles().len());
    let mut total = 0.0;
    for t in 0..m.triangles().len() {
        total += m.area(t);
        cdf.push(total);
    }
    if total <= 0.0 {
        return Err(T4dtError::validation("mesh has zero surface area"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let u: f64 = rng.gen_range(0.0..total);
            let t = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
            let [a, b, c] = m.corners(t);
            // square-root warp keeps the barycentric samples uniform
            let r1: f64 = rng.gen::<f64>().sqrt();
            let r2: f64 = rng.gen();
            add(a, add(scale(sub(b, a), r1 * (1.0 - r2)), scale(sub(c, a), r1 * r2)))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_stay_in_a_single_triangle() {
        let (m, _) = TriangleMesh::new(vec![[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 1.0, 0.0]], vec![[0, 1, 2]]).unwrap();
        for p in sample_surface(&m, 1000, 3).unwrap() {
            assert!(p[0] >= 0.0 && p[1] >= 0.0 && p[0] / 2.0 + p[1] <= 1.0 + 1e-12 && p[2] == 0.0);
        }
    }

    #[test]
    fn seeded_and_rejects_empty() {
        let (m, _) = TriangleMesh::new(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], vec![[0, 1, 2]]).unwrap();
        assert_eq!(sample_surface(&m, 50, 9).unwrap(), sample_surface(&m, 50, 9).unwrap());
        assert!(sample_surface(&TriangleMesh::default(), 5, 0).is_err());
    }
}
