use nalgebra::DMatrix;

use crate::error::{Result, T4dtError};
use crate::tensor::budget::MemoryBudget;
use crate::tensor::dense::DenseVolume;
use crate::tensor::tt::{Core3, TTTensor};

/// Tucker format: a dense core of shape `(r_1..r_D)` and one `(I_d, r_d)`
/// factor per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct TuckerTensor {
    core: DenseVolume,
    factors: Vec<DMatrix<f64>>,
}

impl TuckerTensor {
    pub fn new(core: DenseVolume, factors: Vec<DMatrix<f64>>) -> Result<Self> {
        if factors.len() != core.ndim() {
            return Err(T4dtError::shape(format!(
                "{} factors for a {}-D core",
                factors.len(),
                core.ndim()
            )));
        }
        for (d, f) in factors.iter().enumerate() {
            if f.ncols() != core.shape()[d] {
                return Err(T4dtError::shape(format!(
                    "factor {d} has {} columns, core mode {d} has size {}",
                    f.ncols(),
                    core.shape()[d]
                )));
            }
            if f.nrows() == 0 {
                return Err(T4dtError::validation(format!("factor {d} has no rows")));
            }
        }
        Ok(TuckerTensor { core, factors })
    }

    pub fn core(&self) -> &DenseVolume {
        &self.core
    }

    pub fn factors(&self) -> &[DMatrix<f64>] {
        &self.factors
    }

    pub fn ndim(&self) -> usize {
        self.factors.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.nrows()).collect()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.core.shape().to_vec()
    }

    pub fn parameter_count(&self) -> usize {
        self.core.len() + self.factors.iter().map(|f| f.len()).sum::<usize>()
    }

    fn check_index(&self, index: &[usize]) -> Result<()> {
        if index.len() != self.ndim() {
            return Err(T4dtError::shape(format!(
                "index has {} modes, tensor has {}",
                index.len(),
                self.ndim()
            )));
        }
        for (mode, (&i, f)) in index.iter().zip(&self.factors).enumerate() {
            if i >= f.nrows() {
                return Err(T4dtError::ModeIndex { mode, index: i, size: f.nrows() });
            }
        }
        Ok(())
    }

    /// Contracts the core with `A_d[i_d, :]` mode by mode, last mode first.
    pub fn element(&self, index: &[usize]) -> Result<f64> {
        self.check_index(index)?;
        let mut cur: Vec<f64> = self.core.data().to_vec();
        for d in (0..self.ndim()).rev() {
            let r = self.core.shape()[d];
            let row = self.factors[d].row(index[d]);
            let outer = cur.len() / r;
            let mut next = vec![0.0; outer];
            for (j, n) in next.iter_mut().enumerate() {
                let block = &cur[j * r..(j + 1) * r];
                *n = block.iter().zip(row.iter()).map(|(a, b)| a * b).sum();
            }
            cur = next;
        }
        Ok(cur[0])
    }

    pub fn to_dense(&self, budget: &MemoryBudget) -> Result<DenseVolume> {
        budget.check_shape(&self.shape())?;
        let mut cur = self.core.clone();
        for d in 0..self.ndim() {
            cur = mode_product(&cur, d, &self.factors[d])?;
        }
        Ok(cur)
    }

    /// Fixes mode `mode` at `i`; the result has one fewer mode.
    pub fn fix_mode(&self, mode: usize, i: usize) -> Result<TuckerTensor> {
        if mode >= self.ndim() || self.ndim() == 1 {
            return Err(T4dtError::range(format!("cannot fix mode {mode} of a {}-D Tucker tensor", self.ndim())));
        }
        let size = self.factors[mode].nrows();
        if i >= size {
            return Err(T4dtError::ModeIndex { mode, index: i, size });
        }
        let row = self.factors[mode].rows(i, 1).into_owned();
        let contracted = mode_product(&self.core, mode, &row)?;
        let mut shape = contracted.shape().to_vec();
        shape.remove(mode);
        let core = contracted.reshape(shape)?;
        let mut factors = self.factors.clone();
        factors.remove(mode);
        TuckerTensor::new(core, factors)
    }
}

/// `t ×_mode m`: replaces mode `mode` (size `m.ncols()`) with `m.nrows()`.
pub fn mode_product(t: &DenseVolume, mode: usize, m: &DMatrix<f64>) -> Result<DenseVolume> {
    if t.shape()[mode] != m.ncols() {
        return Err(T4dtError::shape(format!(
            "mode {mode} has size {}, matrix has {} columns",
            t.shape()[mode],
            m.ncols()
        )));
    }
    let (rows, cols, data) = t.unfold(mode)?;
    let unfolded = crate::linalg::from_row_major(rows, cols, &data);
    let prod = m * unfolded;
    let mut shape = t.shape().to_vec();
    shape[mode] = m.nrows();
    DenseVolume::fold(crate::linalg::to_row_major(&prod), mode, &shape)
}

/// TT cores whose spatial modes are compressed by orthonormal factor
/// matrices; modes without a factor use the raw core.
#[derive(Debug, Clone, PartialEq)]
pub struct TTTuckerTensor {
    tt: TTTensor,
    factors: Vec<Option<DMatrix<f64>>>,
}

impl TTTuckerTensor {
    pub fn new(tt: TTTensor, factors: Vec<Option<DMatrix<f64>>>) -> Result<Self> {
        if factors.len() != tt.ndim() {
            return Err(T4dtError::shape(format!(
                "{} factor slots for {} TT cores",
                factors.len(),
                tt.ndim()
            )));
        }
        for (d, f) in factors.iter().enumerate() {
            if let Some(f) = f {
                if f.ncols() != tt.core(d).size() {
                    return Err(T4dtError::shape(format!(
                        "factor {d} has {} columns, TT core {d} has mode size {}",
                        f.ncols(),
                        tt.core(d).size()
                    )));
                }
                if f.nrows() == 0 {
                    return Err(T4dtError::validation(format!("factor {d} has no rows")));
                }
            }
        }
        Ok(TTTuckerTensor { tt, factors })
    }

    pub fn tt(&self) -> &TTTensor {
        &self.tt
    }

    pub fn factors(&self) -> &[Option<DMatrix<f64>>] {
        &self.factors
    }

    pub fn ndim(&self) -> usize {
        self.tt.ndim()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.factors
            .iter()
            .zip(self.tt.cores())
            .map(|(f, c)| f.as_ref().map_or(c.size(), |f| f.nrows()))
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.tt.parameter_count() + self.factors.iter().flatten().map(|f| f.len()).sum::<usize>()
    }

    pub fn element(&self, index: &[usize]) -> Result<f64> {
        let shape = self.shape();
        if index.len() != shape.len() {
            return Err(T4dtError::shape(format!(
                "index has {} modes, tensor has {}",
                index.len(),
                shape.len()
            )));
        }
        for (mode, (&i, &s)) in index.iter().zip(&shape).enumerate() {
            if i >= s {
                return Err(T4dtError::ModeIndex { mode, index: i, size: s });
            }
        }
        let mut cur = vec![1.0];
        for ((core, f), &i) in self.tt.cores().iter().zip(&self.factors).zip(index) {
            let mut next = vec![0.0; core.right()];
            match f {
                None => core.vec_mul_slice(&cur, i, &mut next),
                Some(f) => {
                    let mut tmp = vec![0.0; core.right()];
                    for j in 0..core.size() {
                        let w = f[(i, j)];
                        core.vec_mul_slice(&cur, j, &mut tmp);
                        for (n, t) in next.iter_mut().zip(&tmp) {
                            *n += w * t;
                        }
                    }
                }
            }
            cur = next;
        }
        Ok(cur[0])
    }

    /// Applies every factor to its core, giving an equivalent plain TT.
    pub fn to_tt(&self) -> TTTensor {
        let cores = self
            .tt
            .cores()
            .iter()
            .zip(&self.factors)
            .map(|(c, f)| match f {
                None => c.clone(),
                Some(f) => expand_core(c, f),
            })
            .collect();
        TTTensor::new(cores).expect("factor application preserves ranks")
    }

    pub fn to_dense(&self, budget: &MemoryBudget) -> Result<DenseVolume> {
        budget.check_shape(&self.shape())?;
        self.to_tt().to_dense(budget)
    }

    /// Fixes mode `mode` at `i`; the result has one fewer mode.
    pub fn fix_mode(&self, mode: usize, i: usize) -> Result<TTTuckerTensor> {
        if mode >= self.ndim() {
            return Err(T4dtError::range(format!("mode {mode} out of range")));
        }
        let (tt, mut factors) = match &self.factors[mode] {
            None => (self.tt.fix_mode(mode, i)?, self.factors.clone()),
            Some(f) => {
                if i >= f.nrows() {
                    return Err(T4dtError::ModeIndex { mode, index: i, size: f.nrows() });
                }
                let mut cores = self.tt.cores().to_vec();
                cores[mode] = expand_core(&cores[mode], &f.rows(i, 1).into_owned());
                (TTTensor::new(cores)?.fix_mode(mode, 0)?, self.factors.clone())
            }
        };
        factors.remove(mode);
        TTTuckerTensor::new(tt, factors)
    }
}

/// `core'[a, i, b] = Σ_j f[i, j] core[a, j, b]`.
pub(crate) fn expand_core(core: &Core3, f: &DMatrix<f64>) -> Core3 {
    let (l, n, r) = (core.left(), f.nrows(), core.right());
    let mut out = Core3::zeros(l, n, r);
    for a in 0..l {
        for i in 0..n {
            for j in 0..core.size() {
                let w = f[(i, j)];
                if w == 0.0 {
                    continue;
                }
                for b in 0..r {
                    *out.at_mut(a, i, b) += w * core.at(a, j, b);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ones_tucker() {
        let core = DenseVolume::filled(vec![1, 1, 1], 1.0).unwrap();
        let factors = vec![DMatrix::from_element(3, 1, 1.0); 3];
        let t = TuckerTensor::new(core, factors).unwrap();
        for idx in [[0, 0, 0], [2, 1, 0], [1, 2, 2]] {
            assert_eq!(t.element(&idx).unwrap(), 1.0);
        }
        let d = t.to_dense(&MemoryBudget::default()).unwrap();
        assert!(d.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn factor_column_mismatch() {
        let core = DenseVolume::filled(vec![2, 1], 1.0).unwrap();
        let factors = vec![DMatrix::from_element(3, 1, 1.0), DMatrix::from_element(3, 1, 1.0)];
        assert!(TuckerTensor::new(core, factors).is_err());
    }

    #[test]
    fn tttucker_identity_factors_match_inner_tt() {
        let tt = TTTensor::rank_one(&[vec![1.0, 2.0, 3.0], vec![-1.0, 0.5], vec![2.0, 4.0]]).unwrap();
        let factors = vec![Some(DMatrix::identity(3, 3)), Some(DMatrix::identity(2, 2)), None];
        let tk = TTTuckerTensor::new(tt.clone(), factors).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                for k in 0..2 {
                    assert_eq!(tk.element(&[i, j, k]).unwrap(), tt.element(&[i, j, k]).unwrap());
                }
            }
        }
        assert_eq!(tk.parameter_count(), tt.parameter_count() + 9 + 4);
    }

    #[test]
    fn tucker_fix_mode() {
        let core = DenseVolume::from_fn(vec![2, 2, 2], |i| (i[0] + 2 * i[1] + 4 * i[2]) as f64).unwrap();
        let factors = vec![
            DMatrix::from_row_slice(3, 2, &[1., 0., 0., 1., 1., 1.]),
            DMatrix::from_row_slice(2, 2, &[2., 1., 0., 1.]),
            DMatrix::from_row_slice(2, 2, &[1., -1., 3., 0.5]),
        ];
        let t = TuckerTensor::new(core, factors).unwrap();
        let f = t.fix_mode(2, 1).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                let a = f.element(&[i, j]).unwrap();
                let b = t.element(&[i, j, 1]).unwrap();
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
