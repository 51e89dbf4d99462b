use nalgebra::DMatrix;

use crate::error::{Result, T4dtError};
use crate::linalg::{from_row_major, to_row_major};
use crate::tensor::budget::MemoryBudget;
use crate::tensor::dense::DenseVolume;

/// One order-3 TT core of shape `(left, size, right)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Core3 {
    left: usize,
    size: usize,
    right: usize,
    data: Vec<f64>,
}

impl Core3 {
    pub fn new(left: usize, size: usize, right: usize, data: Vec<f64>) -> Result<Self> {
        if left == 0 || size == 0 || right == 0 {
            return Err(T4dtError::validation(format!(
                "core shape ({left}, {size}, {right}) has a zero dimension"
            )));
        }
        if data.len() != left * size * right {
            return Err(T4dtError::shape(format!(
                "core data length {} does not match ({left}, {size}, {right})",
                data.len()
            )));
        }
        Ok(Core3 { left, size, right, data })
    }

    pub fn zeros(left: usize, size: usize, right: usize) -> Self {
        Core3 { left, size, right, data: vec![0.0; left * size * right] }
    }

    /// `(r, 1, r)` identity core: a pass-through mode of size one.
    pub fn identity(r: usize) -> Self {
        let mut c = Core3::zeros(r, 1, r);
        for a in 0..r {
            c.data[a * r + a] = 1.0;
        }
        c
    }

    pub fn left(&self) -> usize {
        self.left
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn right(&self) -> usize {
        self.right
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.left, self.size, self.right]
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

    #[inline]
    pub fn at(&self, a: usize, i: usize, b: usize) -> f64 {
        self.data[(a * self.size + i) * self.right + b]
    }

    #[inline]
    pub fn at_mut(&mut self, a: usize, i: usize, b: usize) -> &mut f64 {
        &mut self.data[(a * self.size + i) * self.right + b]
    }

    /// `(left * size, right)` unfolding.
    pub fn left_unfolding(&self) -> DMatrix<f64> {
        from_row_major(self.left * self.size, self.right, &self.data)
    }

    /// `(left, size * right)` unfolding.
    pub fn right_unfolding(&self) -> DMatrix<f64> {
        from_row_major(self.left, self.size * self.right, &self.data)
    }

    pub fn from_left_unfolding(m: &DMatrix<f64>, size: usize) -> Result<Self> {
        let (rows, right) = m.shape();
        if rows % size != 0 {
            return Err(T4dtError::shape(format!("{rows} rows not divisible by mode size {size}")));
        }
        Core3::new(rows / size, size, right, to_row_major(m))
    }

    pub fn from_right_unfolding(m: &DMatrix<f64>, size: usize) -> Result<Self> {
        let (left, cols) = m.shape();
        if cols % size != 0 {
            return Err(T4dtError::shape(format!("{cols} columns not divisible by mode size {size}")));
        }
        Core3::new(left, size, cols / size, to_row_major(m))
    }

    /// The `(left, right)` matrix at mode index `i`.
    pub fn slice(&self, i: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.left, self.right, |a, b| self.at(a, i, b))
    }

    /// `row * core[:, i, :]`, written into `out` (length `right`).
    #[inline]
    pub fn vec_mul_slice(&self, row: &[f64], i: usize, out: &mut [f64]) {
        debug_assert_eq!(row.len(), self.left);
        debug_assert_eq!(out.len(), self.right);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (a, &va) in row.iter().enumerate() {
            let base = (a * self.size + i) * self.right;
            let slice = &self.data[base..base + self.right];
            for (o, &c) in out.iter_mut().zip(slice) {
                *o += va * c;
            }
        }
    }

    /// Contracts the right rank with `m` (`right x k`), giving `(left, size, k)`.
    pub fn mul_right(&self, m: &DMatrix<f64>) -> Core3 {
        let prod = self.left_unfolding() * m;
        Core3::from_left_unfolding(&prod, self.size).expect("shapes agree by construction")
    }

    /// Contracts the left rank with `m` (`k x left`), giving `(k, size, right)`.
    pub fn mul_left(&self, m: &DMatrix<f64>) -> Core3 {
        let prod = m * self.right_unfolding();
        Core3::from_right_unfolding(&prod, self.size).expect("shapes agree by construction")
    }
}

/// Tensor-train: a chain of order-3 cores with boundary ranks 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TTTensor {
    cores: Vec<Core3>,
}

impl TTTensor {
    pub fn new(cores: Vec<Core3>) -> Result<Self> {
        if cores.is_empty() {
            return Err(T4dtError::validation("a tensor train needs at least one core"));
        }
        if cores[0].left != 1 {
            return Err(T4dtError::validation(format!(
                "first core has leading rank {}, expected 1",
                cores[0].left
            )));
        }
        let last = cores.len() - 1;
        if cores[last].right != 1 {
            return Err(T4dtError::validation(format!(
                "last core has trailing rank {}, expected 1",
                cores[last].right
            )));
        }
        for d in 0..last {
            if cores[d].right != cores[d + 1].left {
                return Err(T4dtError::shape(format!(
                    "core {d} trailing rank {} does not match core {} leading rank {}",
                    cores[d].right,
                    d + 1,
                    cores[d + 1].left
                )));
            }
        }
        Ok(TTTensor { cores })
    }

    /// Rank-1 train from one vector per mode (outer product).
    pub fn rank_one(vectors: &[Vec<f64>]) -> Result<Self> {
        let cores = vectors
            .iter()
            .map(|v| Core3::new(1, v.len(), 1, v.clone()))
            .collect::<Result<Vec<_>>>()?;
        TTTensor::new(cores)
    }

    pub fn cores(&self) -> &[Core3] {
        &self.cores
    }

    pub fn core(&self, d: usize) -> &Core3 {
        &self.cores[d]
    }

    pub fn into_cores(self) -> Vec<Core3> {
        self.cores
    }

    pub fn ndim(&self) -> usize {
        self.cores.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.size).collect()
    }

    /// `r_0, r_1, ..., r_D`.
    pub fn ranks(&self) -> Vec<usize> {
        let mut r = Vec::with_capacity(self.cores.len() + 1);
        r.push(1);
        r.extend(self.cores.iter().map(|c| c.right));
        r
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    /// Σ r_{d-1} I_d r_d.
    pub fn parameter_count(&self) -> usize {
        self.cores.iter().map(|c| c.data.len()).sum()
    }

    pub(crate) fn check_index(&self, index: &[usize]) -> Result<()> {
        if index.len() != self.cores.len() {
            return Err(T4dtError::shape(format!(
                "index has {} modes, tensor train has {}",
                index.len(),
                self.cores.len()
            )));
        }
        for (mode, (&i, c)) in index.iter().zip(&self.cores).enumerate() {
            if i >= c.size {
                return Err(T4dtError::ModeIndex { mode, index: i, size: c.size });
            }
        }
        Ok(())
    }

    /// Chain product `Q_1[0, i_1, :] Q_2[:, i_2, :] ... Q_D[:, i_D, 0]`.
    pub fn element(&self, index: &[usize]) -> Result<f64> {
        self.check_index(index)?;
        Ok(self.element_unchecked(index))
    }

    pub(crate) fn element_unchecked(&self, index: &[usize]) -> f64 {
        let width = self.max_rank();
        let mut cur = vec![0.0; width];
        let mut next = vec![0.0; width];
        cur[0] = 1.0;
        let mut len = 1;
        for (c, &i) in self.cores.iter().zip(index) {
            c.vec_mul_slice(&cur[..len], i, &mut next[..c.right]);
            std::mem::swap(&mut cur, &mut next);
            len = c.right;
        }
        cur[0]
    }

    /// Full reconstruction, refused when it would exceed `budget`.
    pub fn to_dense(&self, budget: &MemoryBudget) -> Result<DenseVolume> {
        let shape = self.shape();
        budget.check_shape(&shape)?;
        let mut acc = DMatrix::from_element(1, 1, 1.0);
        let mut rows = 1usize;
        for c in &self.cores {
            // (rows, r) x (r, n*r') viewed as (rows*n, r')
            let prod = acc * c.right_unfolding();
            rows *= c.size;
            acc = from_row_major(rows, c.right, &to_row_major(&prod));
        }
        DenseVolume::new(shape, to_row_major(&acc))
    }

    /// Gram matrix sweep `Σ_i M_iᵀ G M_i`, left to right.
    pub fn dot(&self, other: &TTTensor) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(T4dtError::shape(format!(
                "shapes {:?} and {:?} differ",
                self.shape(),
                other.shape()
            )));
        }
        let mut g = DMatrix::from_element(1, 1, 1.0);
        for (a, b) in self.cores.iter().zip(&other.cores) {
            let mut next = DMatrix::zeros(a.right, b.right);
            for i in 0..a.size {
                next += a.slice(i).transpose() * &g * b.slice(i);
            }
            g = next;
        }
        Ok(g[(0, 0)])
    }

    /// Frobenius norm evaluated in compressed form.
    pub fn norm(&self) -> f64 {
        self.dot(self).expect("same shape").max(0.0).sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        if let Some(c) = self.cores.last_mut() {
            c.data.iter_mut().for_each(|v| *v *= factor);
        }
    }

    /// Fixes mode `mode` at `i`, absorbing the selected slice into a
    /// neighbouring core; the result has one fewer mode.
    pub fn fix_mode(&self, mode: usize, i: usize) -> Result<TTTensor> {
        if mode >= self.ndim() {
            return Err(T4dtError::range(format!("mode {mode} out of range for {} modes", self.ndim())));
        }
        if self.ndim() == 1 {
            return Err(T4dtError::validation("cannot remove the only mode of a tensor train"));
        }
        let size = self.cores[mode].size;
        if i >= size {
            return Err(T4dtError::ModeIndex { mode, index: i, size });
        }
        let slice = self.cores[mode].slice(i);
        let mut cores = self.cores.clone();
        cores.remove(mode);
        if mode > 0 {
            cores[mode - 1] = cores[mode - 1].mul_right(&slice);
        } else {
            cores[0] = cores[0].mul_left(&slice);
        }
        TTTensor::new(cores)
    }

    pub fn is_finite(&self) -> bool {
        self.cores.iter().all(|c| c.data.iter().all(|v| v.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_ones_rank_one() {
        let t = TTTensor::rank_one(&[vec![1.0; 3], vec![1.0; 4], vec![1.0; 2]]).unwrap();
        for i in 0..3 {
            for j in 0..4 {
                for k in 0..2 {
                    assert_eq!(t.element(&[i, j, k]).unwrap(), 1.0);
                }
            }
        }
    }

    #[test]
    fn separable_elements_and_dense() {
        let u = vec![1.0, -2.0, 0.5];
        let v = vec![3.0, 4.0];
        let w = vec![0.25, 1.0, -1.0, 2.0];
        let t = TTTensor::rank_one(&[u.clone(), v.clone(), w.clone()]).unwrap();
        let dense = t.to_dense(&MemoryBudget::default()).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                for k in 0..4 {
                    let expect = u[i] * v[j] * w[k];
                    assert_eq!(t.element(&[i, j, k]).unwrap(), expect);
                    assert_eq!(dense.get(&[i, j, k]).unwrap(), expect);
                }
            }
        }
    }

    #[test]
    fn identity_matrix_tt() {
        // rank-2: Q1[0,i,a] = δ_ia, Q2[a,j,0] = δ_aj
        let c1 = Core3::new(1, 2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let c2 = Core3::new(2, 2, 1, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let t = TTTensor::new(vec![c1, c2]).unwrap();
        let d = t.to_dense(&MemoryBudget::default()).unwrap();
        assert_eq!(d.shape(), &[2, 2]);
        assert_eq!(d.data(), &[1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn boundary_and_adjacency_checked() {
        let bad_left = Core3::new(2, 2, 1, vec![0.0; 4]).unwrap();
        assert!(TTTensor::new(vec![bad_left]).is_err());
        let a = Core3::new(1, 2, 3, vec![0.0; 6]).unwrap();
        let b = Core3::new(2, 2, 1, vec![0.0; 4]).unwrap();
        assert!(matches!(TTTensor::new(vec![a, b]), Err(T4dtError::ShapeMismatch(_))));
    }

    #[test]
    fn out_of_range_names_mode() {
        let t = TTTensor::rank_one(&[vec![1.0; 2], vec![1.0; 3]]).unwrap();
        match t.element(&[1, 3]) {
            Err(T4dtError::ModeIndex { mode: 1, index: 3, size: 3 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn budget_refusal() {
        let t = TTTensor::rank_one(&[vec![1.0; 8], vec![1.0; 8]]).unwrap();
        assert!(matches!(
            t.to_dense(&MemoryBudget::new(100)),
            Err(T4dtError::Budget { required: 512, allowed: 100 })
        ));
    }

    #[test]
    fn compressed_norm_matches_dense() {
        let t = TTTensor::rank_one(&[vec![1.0, 2.0], vec![3.0, -1.0, 0.5]]).unwrap();
        let d = t.to_dense(&MemoryBudget::default()).unwrap();
        assert!((t.norm() - d.frobenius_norm()).abs() < 1e-12);
    }

    #[test]
    fn fix_mode_matches_elements() {
        let t = TTTensor::rank_one(&[vec![1.0, 2.0], vec![3.0, -1.0], vec![0.5, 4.0]]).unwrap();
        for mode in 0..3 {
            for i in 0..2 {
                let f = t.fix_mode(mode, i).unwrap();
                for a in 0..2 {
                    for b in 0..2 {
                        let mut full = vec![a, b];
                        full.insert(mode, i);
                        assert_eq!(f.element(&[a, b]).unwrap(), t.element(&full).unwrap());
                    }
                }
            }
        }
    }
}
