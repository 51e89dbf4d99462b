use crate::error::{Result, T4dtError};

use super::bounds::SceneBounds;
use super::vec3::{add, cross, dot, norm, scale, sub};

/// Triangles with area at or below this are dropped on construction.
pub const DEGENERATE_AREA: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriangleMesh {
    vertices: Vec<[f64; 3]>,
    triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    /// Validates indices and drops degenerate triangles; returns the mesh and
    /// how many triangles were dropped.
    pub fn new(vertices: Vec<[f64; 3]>, triangles: Vec<[usize; 3]>) -> Result<(Self, usize)> {
        if let Some(p) = vertices.iter().find(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(T4dtError::validation(format!("vertex {p:?} is not finite")));
        }
        let n = vertices.len();
        if let Some((i, t)) = triangles.iter().enumerate().find(|(_, t)| t.iter().any(|&v| v >= n)) {
            return Err(T4dtError::validation(format!(
                "triangle {i} references vertex {:?} but the mesh has {n} vertices",
                t
            )));
        }
        let before = triangles.len();
        let mut mesh = TriangleMesh { vertices, triangles };
        let keep: Vec<[usize; 3]> =
            (0..before).filter(|&i| mesh.area(i) > DEGENERATE_AREA).map(|i| mesh.triangles[i]).collect();
        let dropped = before - keep.len();
        mesh.triangles = keep;
        Ok((mesh, dropped))
    }

    /// No validation; for marching-cubes output and other trusted producers.
    pub(crate) fn from_raw(vertices: Vec<[f64; 3]>, triangles: Vec<[usize; 3]>) -> Self {
        TriangleMesh { vertices, triangles }
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn corners(&self, t: usize) -> [[f64; 3]; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        0.5 * norm(cross(sub(b, a), sub(c, a)))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.area(t)).sum()
    }

    /// Unit normal from the counter-clockwise winding.
    pub fn normal(&self, t: usize) -> [f64; 3] {
        let [a, b, c] = self.corners(t);
        let n = cross(sub(b, a), sub(c, a));
        let l = norm(n);
        if l > 0.0 {
            scale(n, 1.0 / l)
        } else {
            [0.0; 3]
        }
    }

    /// Volume enclosed by a closed mesh; positive when normals point outward.
    pub fn signed_volume(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.corners(t);
                dot(a, cross(b, c)) / 6.0
            })
            .sum()
    }

    pub fn centroid(&self) -> Option<[f64; 3]> {
        if self.vertices.is_empty() {
            return None;
        }
        let s = self.vertices.iter().fold([0.0; 3], |acc, &p| add(acc, p));
        Some(scale(s, 1.0 / self.vertices.len() as f64))
    }

    pub fn bounds(&self, margin: f64) -> Result<SceneBounds> {
        SceneBounds::around(self.vertices.iter(), margin)
    }

    pub fn translated(&self, d: [f64; 3]) -> TriangleMesh {
        TriangleMesh { vertices: self.vertices.iter().map(|&p| add(p, d)).collect(), triangles: self.triangles.clone() }
    }

    pub fn flipped(&self) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.clone(),
            triangles: self.triangles.iter().map(|&[a, b, c]| [a, c, b]).collect(),
        }
    }
}
