//! Frame sources: mesh sequences (voxelized on the fly), NPY volume
//! sequences, and the synthetic translating sphere.

use std::path::{Path, PathBuf};

use t4dt_core::geometry::io::read_mesh;
use t4dt_core::geometry::synth::{icosphere, MovingSphere};
use t4dt_core::geometry::{mesh_to_tsdf, SceneBounds};
use t4dt_core::tensor::DenseVolume;
use t4dt_core::{Result, T4dtError};

use crate::npy;

#[derive(Debug, Clone)]
pub enum InputKind {
    Meshes(Vec<PathBuf>),
    Volumes(Vec<PathBuf>),
    Synthetic(MovingSphere),
}

/// A frame sequence together with the grid it is sampled on.
#[derive(Debug, Clone)]
pub struct SceneInput {
    pub kind: InputKind,
    pub bounds: SceneBounds,
    pub resolution: [usize; 3],
    /// World units.
    pub tau: f64,
}

fn validation(msg: impl Into<String>) -> T4dtError {
    T4dtError::Validation(msg.into())
}

fn extension(p: &Path) -> Option<String> {
    p.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase())
}

/// Files of a directory (sorted by name) or the single file given.
fn list_inputs(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        files.retain(|p| p.is_file() && matches!(extension(p).as_deref(), Some("obj" | "ply" | "npy")));
        files.sort();
        Ok(files)
    } else if path.is_file() {
        Ok(vec![path.to_path_buf()])
    } else {
        Err(T4dtError::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{}: no such file or directory", path.display()),
        )))
    }
}

impl SceneInput {
    /// The translating sphere in the unit cube; `tau_rel` is relative to the
    /// cube's edge, so it is also the world value.
    pub fn synthetic(resolution: usize, frames: usize, tau_rel: f64) -> Result<Self> {
        if resolution == 0 || frames == 0 {
            return Err(validation("synthetic scenes need a positive resolution and frame count"));
        }
        let s = MovingSphere::standard(resolution, frames, tau_rel);
        Ok(SceneInput { bounds: s.bounds, resolution: s.resolution, tau: tau_rel, kind: InputKind::Synthetic(s) })
    }

    /// Opens a mesh or NPY sequence (a directory, frames sorted by file name)
    /// or a single file. `tau_rel` is relative to the longest edge of the
    /// scene bounds. Mesh scenes default to a cube around the union of all
    /// frames' boxes with a `2τ` margin; volume scenes default to the unit cube.
    pub fn open(path: &Path, resolution: usize, tau_rel: f64, bounds: Option<SceneBounds>) -> Result<Self> {
        if !(tau_rel.is_finite() && tau_rel > 0.0) {
            return Err(validation(format!("tau must be positive, got {tau_rel}")));
        }
        let files = list_inputs(path)?;
        if files.is_empty() {
            return Err(validation(format!("{}: no .obj, .ply or .npy frames found", path.display())));
        }
        let volumes = files.iter().filter(|p| extension(p).as_deref() == Some("npy")).count();
        if volumes == files.len() {
            let first = npy::read(&files[0])?;
            let shape: [usize; 3] = first
                .shape()
                .try_into()
                .map_err(|_| T4dtError::ShapeMismatch(format!("{}: expected a 3D volume", files[0].display())))?;
            let bounds = bounds.unwrap_or_else(SceneBounds::unit);
            let tau = tau_rel * bounds.longest_edge();
            return Ok(SceneInput { kind: InputKind::Volumes(files), bounds, resolution: shape, tau });
        }
        if volumes > 0 {
            return Err(validation(format!("{}: mixes mesh and volume frames", path.display())));
        }
        if resolution == 0 {
            return Err(validation("resolution must be positive"));
        }
        let bounds = match bounds {
            Some(b) => b,
            None => {
                let mut union: Option<SceneBounds> = None;
                for f in &files {
                    let (m, _) = read_mesh(f)?;
                    if m.is_empty() {
                        return Err(validation(format!("{}: mesh has no triangles", f.display())));
                    }
                    let b = m.bounds(0.0)?;
                    union = Some(union.map_or(b, |u| u.union(&b)));
                }
                let union = union.expect("at least one mesh");
                let edge = union.longest_edge();
                let c = [0, 1, 2].map(|a| 0.5 * (union.min()[a] + union.max()[a]));
                SceneBounds::cube(c, 0.5 * edge + 2.0 * tau_rel * edge)?
            }
        };
        let tau = tau_rel * bounds.longest_edge();
        Ok(SceneInput { kind: InputKind::Meshes(files), bounds, resolution: [resolution; 3], tau })
    }

    /// Same frames, sampled on another scene's grid (used to rebuild
    /// reference frames for a stored scene).
    pub fn on_grid(mut self, bounds: SceneBounds, resolution: [usize; 3], tau: f64) -> Result<Self> {
        match &mut self.kind {
            InputKind::Volumes(_) => {
                if self.resolution != resolution {
                    return Err(T4dtError::ShapeMismatch(format!(
                        "reference volumes are {:?}, scene is {resolution:?}",
                        self.resolution
                    )));
                }
            }
            InputKind::Synthetic(s) => {
                s.bounds = bounds;
                s.resolution = resolution;
                s.tau = tau;
            }
            InputKind::Meshes(_) => {}
        }
        self.bounds = bounds;
        self.resolution = resolution;
        self.tau = tau;
        Ok(self)
    }

    pub fn frame_count(&self) -> usize {
        match &self.kind {
            InputKind::Meshes(f) | InputKind::Volumes(f) => f.len(),
            InputKind::Synthetic(s) => s.frames,
        }
    }

    pub fn frame(&self, i: usize) -> Result<DenseVolume> {
        if i >= self.frame_count() {
            return Err(T4dtError::Range(format!("frame {i} of a {}-frame input", self.frame_count())));
        }
        match &self.kind {
            InputKind::Synthetic(s) => s.frame(i),
            InputKind::Volumes(files) => {
                let v = npy::read(&files[i])?;
                if v.shape() != self.resolution {
                    return Err(T4dtError::ShapeMismatch(format!(
                        "{} has shape {:?}, expected {:?}",
                        files[i].display(),
                        v.shape(),
                        self.resolution
                    )));
                }
                Ok(v)
            }
            InputKind::Meshes(files) => {
                let (m, dropped) = read_mesh(&files[i])?;
                if dropped > 0 {
                    eprintln!("{}: dropped {dropped} degenerate triangles", files[i].display());
                }
                mesh_to_tsdf(&m, &self.bounds, self.resolution, self.tau)
            }
        }
    }

    /// Frames one at a time, in order.
    pub fn frames(&self) -> impl Iterator<Item = Result<DenseVolume>> + '_ {
        (0..self.frame_count()).map(move |i| self.frame(i))
    }
}

/// Writes the synthetic sphere sequence as NPY volumes or OBJ icospheres.
pub fn write_synthetic(dir: &Path, s: &MovingSphere, meshes: bool, subdivisions: u32) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    for t in 0..s.frames {
        let path = if meshes {
            let p = dir.join(format!("frame_{t:04}.obj"));
            t4dt_core::geometry::io::save_obj(&icosphere(s.center(t), s.radius, subdivisions), &p)?;
            p
        } else {
            let p = dir.join(format!("frame_{t:04}.npy"));
            npy::write(&s.frame(t)?, &p, false)?;
            p
        };
        out.push(path);
    }
    Ok(out)
}
