use serde::{Deserialize, Serialize};

use crate::error::{Result, T4dtError};

/// Axis-aligned box in world units. Voxel `i` of an `n`-cell axis has its
/// center at `min + (i + 0.5) · (max - min) / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneBounds {
    min: [f64; 3],
    max: [f64; 3],
}

impl SceneBounds {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Result<Self> {
        for a in 0..3 {
            if !(min[a].is_finite() && max[a].is_finite()) {
                return Err(T4dtError::validation("bounds must be finite"));
            }
            if min[a] >= max[a] {
                return Err(T4dtError::validation(format!(
                    "bounds have zero or negative extent on axis {a}: [{}, {}]",
                    min[a], max[a]
                )));
            }
        }
        Ok(SceneBounds { min, max })
    }

    pub fn unit() -> Self {
        SceneBounds { min: [0.0; 3], max: [1.0; 3] }
    }

    pub fn cube(center: [f64; 3], half: f64) -> Result<Self> {
        SceneBounds::new(
            [center[0] - half, center[1] - half, center[2] - half],
            [center[0] + half, center[1] + half, center[2] + half],
        )
    }

    /// Tight box around `points` grown by `margin` on every side.
    pub fn around<'a>(points: impl IntoIterator<Item = &'a [f64; 3]>, margin: f64) -> Result<Self> {
        let mut min = [f64::INFINITY; 3];
        let mut max = [f64::NEG_INFINITY; 3];
        for p in points {
            for a in 0..3 {
                min[a] = min[a].min(p[a]);
                max[a] = max[a].max(p[a]);
            }
        }
        if min[0] == f64::INFINITY {
            return Err(T4dtError::validation("cannot bound an empty point set"));
        }
        SceneBounds::new(min.map(|v| v - margin), max.map(|v| v + margin))
    }

    pub fn min(&self) -> [f64; 3] {
        self.min
    }

    pub fn max(&self) -> [f64; 3] {
        self.max
    }

    pub fn extent(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| self.max[a] - self.min[a])
    }

    pub fn longest_edge(&self) -> f64 {
        self.extent().into_iter().fold(0.0, f64::max)
    }

    pub fn union(&self, other: &SceneBounds) -> SceneBounds {
        SceneBounds {
            min: [0, 1, 2].map(|a| self.min[a].min(other.min[a])),
            max: [0, 1, 2].map(|a| self.max[a].max(other.max[a])),
        }
    }

    pub fn expanded(&self, margin: f64) -> Result<SceneBounds> {
        SceneBounds::new(self.min.map(|v| v - margin), self.max.map(|v| v + margin))
    }

    pub fn translated(&self, d: [f64; 3]) -> SceneBounds {
        SceneBounds {
            min: [0, 1, 2].map(|a| self.min[a] + d[a]),
            max: [0, 1, 2].map(|a| self.max[a] + d[a]),
        }
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        (0..3).all(|a| p[a] >= self.min[a] && p[a] <= self.max[a])
    }

    /// Voxel size per axis for a grid of `res` cells.
    pub fn pitch(&self, res: [usize; 3]) -> [f64; 3] {
        let e = self.extent();
        [0, 1, 2].map(|a| e[a] / res[a] as f64)
    }

    pub fn voxel_center(&self, res: [usize; 3], idx: [usize; 3]) -> [f64; 3] {
        let h = self.pitch(res);
        [0, 1, 2].map(|a| self.min[a] + (idx[a] as f64 + 0.5) * h[a])
    }

    /// Continuous grid coordinate of `p`: voxel centers sit at integers.
    pub fn grid_coord(&self, res: [usize; 3], p: [f64; 3]) -> [f64; 3] {
        let h = self.pitch(res);
        [0, 1, 2].map(|a| (p[a] - self.min[a]) / h[a] - 0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centers_and_grid_coords_agree() {
        let b = SceneBounds::new([-1.0, 0.0, 2.0], [1.0, 4.0, 3.0]).unwrap();
        let res = [4, 8, 2];
        let c = b.voxel_center(res, [1, 7, 0]);
        assert_eq!(c, [-0.25, 3.75, 2.25]);
        assert_eq!(b.grid_coord(res, c), [1.0, 7.0, 0.0]);
        assert_eq!(b.longest_edge(), 4.0);
    }

    #[test]
    fn rejects_flat_boxes() {
        assert!(SceneBounds::new([0.0; 3], [1.0, 0.0, 1.0]).is_err());
        assert!(SceneBounds::around(std::iter::empty(), 0.1).is_err());
    }
}
