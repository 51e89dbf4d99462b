//! Reconstruction quality: tensor-space L2, occupancy IoU, symmetric
//! Hausdorff and sampled symmetric Chamfer distances.

mod kdtree;

pub use kdtree::KdTree;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, T4dtError};
use crate::geometry::{marching_cubes, sample_surface, Bvh, SceneBounds, TriangleMesh};
use crate::tensor::DenseVolume;

/// Frobenius norm of `a - b`.
pub fn l2(a: &DenseVolume, b: &DenseVolume) -> Result<f64> {
    a.distance(b)
}

/// `|A ∩ B| / |A ∪ B|` over occupancies `value ≥ iso`; 1 when both are empty.
pub fn iou(a: &DenseVolume, b: &DenseVolume, iso: f64) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(T4dtError::shape(format!("shapes {:?} and {:?} differ", a.shape(), b.shape())));
    }
    let (mut inter, mut union) = (0u64, 0u64);
    for (&x, &y) in a.data().iter().zip(b.data()) {
        let (oa, ob) = (x >= iso, y >= iso);
        inter += (oa && ob) as u64;
        union += (oa || ob) as u64;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// Squared distance from every point of `from` to its nearest point of `to`.
fn nearest_sq(from: &[[f64; 3]], to: &KdTree) -> Vec<f64> {
    from.par_iter().map(|&p| to.nearest(p).expect("nonempty target").1).collect()
}

fn require_points(a: &[[f64; 3]], b: &[[f64; 3]]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(T4dtError::validation("distance between point sets needs both sets nonempty"));
    }
    Ok(())
}

/// One-sided Hausdorff distance `max_a min_b ‖a - b‖`.
pub fn directed_hausdorff(a: &[[f64; 3]], b: &[[f64; 3]]) -> Result<f64> {
    require_points(a, b)?;
    let tree = KdTree::new(b);
    Ok(nearest_sq(a, &tree).into_iter().fold(0.0, f64::max).sqrt())
}

/// Symmetric Hausdorff distance between point sets.
pub fn hausdorff(a: &[[f64; 3]], b: &[[f64; 3]]) -> Result<f64> {
    Ok(directed_hausdorff(a, b)?.max(directed_hausdorff(b, a)?))
}

/// Symmetric Hausdorff distance from each mesh's vertices to the other
/// mesh's surface.
pub fn hausdorff_to_surface(a: &TriangleMesh, b: &TriangleMesh) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(T4dtError::validation("surface Hausdorff distance needs two nonempty meshes"));
    }
    let one_side = |from: &TriangleMesh, to: &TriangleMesh| -> f64 {
        let bvh = Bvh::new(to);
        let d: Vec<f64> =
            from.vertices().par_iter().map(|&p| bvh.nearest(p, f64::INFINITY).expect("nonempty mesh").dist2).collect();
        d.into_iter().fold(0.0, f64::max).sqrt()
    };
    Ok(one_side(a, b).max(one_side(b, a)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ChamferNorm {
    /// Each directed sum divided by its point count.
    #[default]
    Mean,
    /// Plain sums.
    Sum,
}

/// Symmetric Chamfer distance `Σ_a min_b ‖a-b‖² + Σ_b min_a ‖a-b‖²`,
/// optionally with each sum averaged over its point count.
pub fn chamfer(a: &[[f64; 3]], b: &[[f64; 3]], norm: ChamferNorm) -> Result<f64> {
    require_points(a, b)?;
    let side = |from: &[[f64; 3]], to: &[[f64; 3]]| -> f64 {
        let s: f64 = nearest_sq(from, &KdTree::new(to)).into_iter().sum();
        match norm {
            ChamferNorm::Mean => s / from.len() as f64,
            ChamferNorm::Sum => s,
        }
    };
    Ok(side(a, b) + side(b, a))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HausdorffMode {
    /// Between the two meshes' vertex sets.
    #[default]
    Vertices,
    /// From each mesh's vertices to the other's triangles.
    PointToTriangle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricOptions {
    pub iso: f64,
    /// Surface samples per mesh for Chamfer.
    pub samples: usize,
    pub seed: u64,
    pub chamfer: ChamferNorm,
    pub hausdorff: HausdorffMode,
}

impl Default for MetricOptions {
    fn default() -> Self {
        MetricOptions { iso: 0.0, samples: 30_000, seed: 0, chamfer: ChamferNorm::Mean, hausdorff: HausdorffMode::Vertices }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameMetrics {
    pub frame: usize,
    pub l2: f64,
    pub iou: f64,
    /// Absent when exactly one of the two surfaces is empty.
    pub hausdorff: Option<f64>,
    pub chamfer: Option<f64>,
}

/// Metrics between an original frame and its reconstruction.
pub fn evaluate_frame(
    frame: usize,
    original: &DenseVolume,
    reconstruction: &DenseVolume,
    bounds: &SceneBounds,
    opts: &MetricOptions,
) -> Result<FrameMetrics> {
    let l2 = l2(original, reconstruction)?;
    let iou = iou(original, reconstruction, opts.iso)?;
    let ma = marching_cubes(original, opts.iso, bounds)?;
    let mb = marching_cubes(reconstruction, opts.iso, bounds)?;
    let (hausdorff, chamfer) = match (ma.is_empty(), mb.is_empty()) {
        (true, true) => (Some(0.0), Some(0.0)),
        (false, false) => {
            let h = match opts.hausdorff {
                HausdorffMode::Vertices => hausdorff(ma.vertices(), mb.vertices())?,
                HausdorffMode::PointToTriangle => hausdorff_to_surface(&ma, &mb)?,
            };
            let sa = sample_surface(&ma, opts.samples, opts.seed)?;
            let sb = sample_surface(&mb, opts.samples, opts.seed)?;
            (Some(h), Some(chamfer(&sa, &sb, opts.chamfer)?))
        }
        _ => (None, None),
    };
    Ok(FrameMetrics { frame, l2, iou, hausdorff, chamfer })
}

/// Per-frame metrics and their means over the evaluated frames.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub l2: f64,
    pub iou: f64,
    pub hausdorff: Option<f64>,
    pub chamfer: Option<f64>,
    pub chamfer_normalization: ChamferNorm,
    pub hausdorff_operands: HausdorffMode,
    pub samples: usize,
    pub frames_evaluated: Vec<usize>,
    pub per_frame: Vec<FrameMetrics>,
}

impl MetricReport {
    pub fn from_frames(per_frame: Vec<FrameMetrics>, opts: &MetricOptions) -> Result<Self> {
        if per_frame.is_empty() {
            return Err(T4dtError::validation("no frames evaluated"));
        }
        let n = per_frame.len() as f64;
        let mean_opt = |f: fn(&FrameMetrics) -> Option<f64>| -> Option<f64> {
            per_frame.iter().map(f).sum::<Option<f64>>().map(|s| s / n)
        };
        Ok(MetricReport {
            l2: per_frame.iter().map(|m| m.l2).sum::<f64>() / n,
            iou: per_frame.iter().map(|m| m.iou).sum::<f64>() / n,
            hausdorff: mean_opt(|m| m.hausdorff),
            chamfer: mean_opt(|m| m.chamfer),
            chamfer_normalization: opts.chamfer,
            hausdorff_operands: opts.hausdorff,
            samples: opts.samples,
            frames_evaluated: per_frame.iter().map(|m| m.frame).collect(),
            per_frame,
        })
    }

    /// One header line and one row per frame, then a `mean` row.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:e}"));
        let mut out = String::from("frame,l2,iou,hausdorff,chamfer\n");
        for m in &self.per_frame {
            out += &format!("{},{:e},{},{},{}\n", m.frame, m.l2, m.iou, opt(m.hausdorff), opt(m.chamfer));
        }
        out += &format!("mean,{:e},{},{},{}\n", self.l2, self.iou, opt(self.hausdorff), opt(self.chamfer));
        out
    }
}

/// First, middle and last frame of a `frames`-frame scene, deduplicated.
pub fn default_frames(frames: usize) -> Vec<usize> {
    let mut v = vec![0, frames / 2, frames.saturating_sub(1)];
    v.dedup();
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_examples() {
        assert_eq!(hausdorff(&[[0.0; 3]], &[[1.0, 0.0, 0.0]]).unwrap(), 1.0);
        let a = [[0.0; 3], [1.0, 0.0, 0.0]];
        let b = [[0.0; 3], [1.0, 0.0, 0.0], [0.0, 5.0, 0.0]];
        assert_eq!(hausdorff(&a, &b).unwrap(), 5.0);
        assert_eq!(directed_hausdorff(&a, &b).unwrap(), 0.0);
        let (p, q) = ([[0.0; 3]], [[2.0, 0.0, 0.0]]);
        assert_eq!(chamfer(&p, &q, ChamferNorm::Sum).unwrap(), 8.0);
        assert_eq!(chamfer(&p, &q, ChamferNorm::Mean).unwrap(), 8.0);
        assert!(hausdorff(&[], &q).is_err());
    }

    #[test]
    fn iou_cases() {
        let a = DenseVolume::from_fn(vec![4, 4], |i| if i[0] < 2 { 1.0 } else { -1.0 }).unwrap();
        let b = DenseVolume::from_fn(vec![4, 4], |i| if i[0] >= 1 && i[0] < 3 { 1.0 } else { -1.0 }).unwrap();
        assert_eq!(iou(&a, &b, 0.0).unwrap(), 1.0 / 3.0);
        let empty = DenseVolume::filled(vec![4, 4], -1.0).unwrap();
        assert_eq!(iou(&empty, &empty, 0.0).unwrap(), 1.0);
        assert_eq!(iou(&a, &a, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn default_frame_choice() {
        assert_eq!(default_frames(16), vec![0, 8, 15]);
        assert_eq!(default_frames(1), vec![0]);
        assert_eq!(default_frames(2), vec![0, 1]);
    }
}
