use crate::error::{Result, T4dtError};

/// A dense D-dimensional grid of scalars stored row-major (last index fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVolume {
    shape: Vec<usize>,
    data: Vec<f64>,
}

/// A volume padded to power-of-two mode sizes, remembering the shape it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedVolume {
    pub volume: DenseVolume,
    pub original_shape: Vec<usize>,
}

impl PaddedVolume {
    pub fn crop(&self) -> DenseVolume {
        self.volume
            .crop(&self.original_shape)
            .expect("original shape fits inside its padding")
    }
}

pub(crate) fn row_major_strides(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; shape.len()];
    for d in (0..shape.len().saturating_sub(1)).rev() {
        strides[d] = strides[d + 1] * shape[d + 1];
    }
    strides
}

fn validate_shape(shape: &[usize]) -> Result<()> {
    if shape.is_empty() {
        return Err(T4dtError::validation("tensor must have at least one mode"));
    }
    if let Some(d) = shape.iter().position(|&s| s == 0) {
        return Err(T4dtError::validation(format!("mode {d} has size 0")));
    }
    Ok(())
}

impl DenseVolume {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        validate_shape(&shape)?;
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(T4dtError::shape(format!(
                "data length {} does not match shape {:?} ({} elements)",
                data.len(),
                shape,
                n
            )));
        }
        Ok(DenseVolume { shape, data })
    }

    pub fn filled(shape: Vec<usize>, value: f64) -> Result<Self> {
        validate_shape(&shape)?;
        let n = shape.iter().product();
        Ok(DenseVolume { shape, data: vec![value; n] })
    }

    pub fn zeros(shape: Vec<usize>) -> Result<Self> {
        Self::filled(shape, 0.0)
    }

    /// Builds a volume by evaluating `f` at every multi-index in row-major order.
    pub fn from_fn(shape: Vec<usize>, mut f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        validate_shape(&shape)?;
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..n {
            data.push(f(&idx));
            increment(&mut idx, &shape);
        }
        Ok(DenseVolume { shape, data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn strides(&self) -> Vec<usize> {
        row_major_strides(&self.shape)
    }

    /// Linear offset of a multi-index, with bounds checking per mode.
    pub fn offset(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.shape.len() {
            return Err(T4dtError::shape(format!(
                "index has {} modes, tensor has {}",
                index.len(),
                self.shape.len()
            )));
        }
        let mut off = 0;
        for (mode, (&i, &s)) in index.iter().zip(&self.shape).enumerate() {
            if i >= s {
                return Err(T4dtError::ModeIndex { mode, index: i, size: s });
            }
            off = off * s + i;
        }
        Ok(off)
    }

    pub fn get(&self, index: &[usize]) -> Result<f64> {
        Ok(self.data[self.offset(index)?])
    }

    pub fn set(&mut self, index: &[usize], value: f64) -> Result<()> {
        let off = self.offset(index)?;
        self.data[off] = value;
        Ok(())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Frobenius norm of `self - other`.
    pub fn distance(&self, other: &DenseVolume) -> Result<f64> {
        if self.shape != other.shape {
            return Err(T4dtError::shape(format!(
                "shapes {:?} and {:?} differ",
                self.shape, other.shape
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        DenseVolume::new(shape, self.data)
    }

    /// Reorders modes so that output mode `k` is input mode `axes[k]`.
    pub fn permute(&self, axes: &[usize]) -> Result<Self> {
        let d = self.ndim();
        let mut seen = vec![false; d];
        if axes.len() != d || axes.iter().any(|&a| a >= d || std::mem::replace(&mut seen[a], true)) {
            return Err(T4dtError::validation(format!(
                "{axes:?} is not a permutation of {d} modes"
            )));
        }
        let in_strides = self.strides();
        let out_shape: Vec<usize> = axes.iter().map(|&a| self.shape[a]).collect();
        let gather: Vec<usize> = axes.iter().map(|&a| in_strides[a]).collect();
        let n = self.len();
        let mut data = Vec::with_capacity(n);
        let mut idx = vec![0usize; d];
        let mut src = 0usize;
        for _ in 0..n {
            data.push(self.data[src]);
            // odometer increment that keeps `src` in sync
            for k in (0..d).rev() {
                idx[k] += 1;
                src += gather[k];
                if idx[k] < out_shape[k] {
                    break;
                }
                src -= gather[k] * out_shape[k];
                idx[k] = 0;
            }
        }
        Ok(DenseVolume { shape: out_shape, data })
    }

    /// Mode-`mode` unfolding as a row-major `(I_mode, rest)` matrix.
    pub fn unfold(&self, mode: usize) -> Result<(usize, usize, Vec<f64>)> {
        if mode >= self.ndim() {
            return Err(T4dtError::range(format!("mode {mode} out of range for {}-D tensor", self.ndim())));
        }
        let mut axes: Vec<usize> = vec![mode];
        axes.extend((0..self.ndim()).filter(|&a| a != mode));
        let p = self.permute(&axes)?;
        let rows = self.shape[mode];
        let cols = self.len() / rows;
        Ok((rows, cols, p.data))
    }

    /// Inverse of [`unfold`](Self::unfold): `shape` is the target shape, with
    /// `shape[mode] == rows`.
    pub fn fold(rows_data: Vec<f64>, mode: usize, shape: &[usize]) -> Result<Self> {
        let mut moved: Vec<usize> = vec![shape[mode]];
        moved.extend(shape.iter().enumerate().filter(|&(a, _)| a != mode).map(|(_, &s)| s));
        let t = DenseVolume::new(moved, rows_data)?;
        // inverse of [mode, others...]
        let d = shape.len();
        let mut inv = vec![0usize; d];
        let mut forward: Vec<usize> = vec![mode];
        forward.extend((0..d).filter(|&a| a != mode));
        for (k, &a) in forward.iter().enumerate() {
            inv[a] = k;
        }
        t.permute(&inv)
    }

    /// Pads into `target` (componentwise ≥ current shape); the original data
    /// stays in the low-index corner and new cells hold `fill`.
    pub fn pad_to_shape(&self, target: &[usize], fill: f64) -> Result<Self> {
        if target.len() != self.ndim() || target.iter().zip(&self.shape).any(|(t, s)| t < s) {
            return Err(T4dtError::shape(format!(
                "cannot pad {:?} into {:?}",
                self.shape, target
            )));
        }
        if target == self.shape.as_slice() {
            return Ok(self.clone());
        }
        let mut out = DenseVolume::filled(target.to_vec(), fill)?;
        let out_strides = out.strides();
        let mut idx = vec![0usize; self.ndim()];
        for &v in &self.data {
            let off: usize = idx.iter().zip(&out_strides).map(|(i, s)| i * s).sum();
            out.data[off] = v;
            increment(&mut idx, &self.shape);
        }
        Ok(out)
    }

    /// Pads every mode to the next power of two with `fill`.
    pub fn pad_to_pow2(&self, fill: f64) -> Result<PaddedVolume> {
        let target: Vec<usize> = self.shape.iter().map(|s| s.next_power_of_two()).collect();
        Ok(PaddedVolume {
            volume: self.pad_to_shape(&target, fill)?,
            original_shape: self.shape.clone(),
        })
    }

    /// The low-index corner of shape `shape`.
    pub fn crop(&self, shape: &[usize]) -> Result<Self> {
        if shape.len() != self.ndim() || shape.iter().zip(&self.shape).any(|(c, s)| c > s) {
            return Err(T4dtError::shape(format!("cannot crop {:?} to {:?}", self.shape, shape)));
        }
        let strides = self.strides();
        DenseVolume::from_fn(shape.to_vec(), |idx| {
            let off: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
            self.data[off]
        })
    }

    /// Fixes the last mode at `i`, yielding a tensor with one fewer mode.
    pub fn slice_last(&self, i: usize) -> Result<Self> {
        let d = self.ndim();
        if d < 2 {
            return Err(T4dtError::validation("cannot slice a 1-D tensor"));
        }
        let last = self.shape[d - 1];
        if i >= last {
            return Err(T4dtError::ModeIndex { mode: d - 1, index: i, size: last });
        }
        let data = self.data.iter().skip(i).step_by(last).copied().collect();
        DenseVolume::new(self.shape[..d - 1].to_vec(), data)
    }

    /// Stacks equally shaped volumes along a new trailing mode.
    pub fn stack_last(frames: &[DenseVolume]) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| T4dtError::validation("cannot stack zero volumes"))?;
        if let Some(bad) = frames.iter().position(|f| f.shape != first.shape) {
            return Err(T4dtError::shape(format!(
                "volume {bad} has shape {:?}, expected {:?}",
                frames[bad].shape, first.shape
            )));
        }
        let t = frames.len();
        let mut data = vec![0.0; first.len() * t];
        for (k, f) in frames.iter().enumerate() {
            for (j, &v) in f.data.iter().enumerate() {
                data[j * t + k] = v;
            }
        }
        let mut shape = first.shape.clone();
        shape.push(t);
        DenseVolume::new(shape, data)
    }
}

/// Row-major odometer step.
pub(crate) fn increment(idx: &mut [usize], shape: &[usize]) {
    for k in (0..shape.len()).rev() {
        idx[k] += 1;
        if idx[k] < shape[k] {
            return;
        }
        idx[k] = 0;
    }
}
