use crate::error::{Result, T4dtError};

use super::scene::CompressedScene;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// One element evaluation at the nearest voxel center.
    #[default]
    Nearest,
    /// Eight element evaluations blended trilinearly between voxel centers.
    Trilinear,
}

/// TSDF value at world point `p` in frame `t`.
pub fn query_point(s: &CompressedScene, p: [f64; 3], t: usize, sampling: Sampling) -> Result<f64> {
    s.check_frame(t)?;
    let b = s.bounds();
    if !b.contains(p) {
        return Err(T4dtError::range(format!(
            "point {p:?} outside scene bounds {:?}..{:?}",
            b.min(),
            b.max()
        )));
    }
    let res = s.resolution();
    let g = b.grid_coord(res, p);
    match sampling {
        Sampling::Nearest => {
            let [x, y, z] = [0, 1, 2].map(|a| (g[a].round().max(0.0) as usize).min(res[a] - 1));
            s.element(x, y, z, t)
        }
        Sampling::Trilinear => {
            let mut lo = [0usize; 3];
            let mut w = [0.0f64; 3];
            for a in 0..3 {
                if res[a] == 1 {
                    continue;
                }
                let base = g[a].floor().clamp(0.0, (res[a] - 2) as f64);
                lo[a] = base as usize;
                w[a] = (g[a] - base).clamp(0.0, 1.0);
            }
            let mut acc = 0.0;
            for corner in 0..8usize {
                let mut weight = 1.0;
                let mut idx = [0usize; 3];
                for a in 0..3 {
                    let up = (corner >> (2 - a)) & 1 == 1;
                    idx[a] = (lo[a] + up as usize).min(res[a] - 1);
                    weight *= if up { w[a] } else { 1.0 - w[a] };
                }
                if weight != 0.0 {
                    acc += weight * s.element(idx[0], idx[1], idx[2], t)?;
                }
            }
            Ok(acc)
        }
    }
}

/// Central-difference gradient of the TSDF with a one-voxel step per axis.
pub fn query_gradient(s: &CompressedScene, p: [f64; 3], t: usize, sampling: Sampling) -> Result<[f64; 3]> {
    let b = s.bounds();
    let h = b.pitch(s.resolution());
    for a in 0..3 {
        if p[a] - h[a] < b.min()[a] || p[a] + h[a] > b.max()[a] {
            return Err(T4dtError::range(format!(
                "point {p:?} is within one voxel of the scene boundary on axis {a}"
            )));
        }
    }
    let mut grad = [0.0; 3];
    for a in 0..3 {
        let mut fwd = p;
        let mut bwd = p;
        fwd[a] += h[a];
        bwd[a] -= h[a];
        grad[a] = (query_point(s, fwd, t, sampling)? - query_point(s, bwd, t, sampling)?) / (2.0 * h[a]);
    }
    Ok(grad)
}
