use crate::decompose::TruncationSpec;
use crate::error::{Result, T4dtError};
use crate::linalg::{from_row_major, select_rank, to_row_major, Svd};
use crate::tensor::{Core3, DenseVolume, TTTensor};

/// TT-SVD: sequential truncated SVDs of the unfoldings, left to right.
///
/// Cores `1..D-1` come out left-orthonormal. With an error budget `ε` each of
/// the `D - 1` truncations may discard a tail of `ε‖v‖ / √(D-1)`, so the
/// total error stays within `ε‖v‖`.
pub fn tt_svd(v: &DenseVolume, spec: &TruncationSpec) -> Result<TTTensor> {
    if !v.is_finite() {
        return Err(T4dtError::validation("input tensor contains NaN or Inf"));
    }
    let shape = v.shape().to_vec();
    let d = shape.len();
    if d == 1 {
        return TTTensor::new(vec![Core3::new(1, shape[0], 1, v.data().to_vec())?]);
    }
    let budget = spec.step_budget(v.frobenius_norm(), d - 1);

    let mut cores = Vec::with_capacity(d);
    let mut rest: Vec<f64> = v.data().to_vec();
    let mut left = 1usize;
    let mut cols = v.len();
    for &n in &shape[..d - 1] {
        let rows = left * n;
        cols /= n;
        let svd = Svd::new(from_row_major(rows, cols, &rest));
        let r = select_rank(&svd.s, budget, spec.max_rank());
        let svd = svd.truncate(r);
        cores.push(Core3::new(left, n, r, to_row_major(&svd.u))?);
        rest = to_row_major(&svd.s_vt());
        left = r;
    }
    cores.push(Core3::new(left, shape[d - 1], 1, rest)?);
    TTTensor::new(cores)
}
