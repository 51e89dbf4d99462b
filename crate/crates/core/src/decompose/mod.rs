//! SVD-based construction and truncation of the compressed formats.

mod concat;
mod orth;
mod round;
mod tt_svd;
mod tucker;

pub use concat::{insert_time_mode, tt_concat};
pub use orth::{left_orthogonality_defect, orthogonalize_around, right_orthogonality_defect};
pub use round::{tt_round, tt_round_bonds};
pub use tt_svd::tt_svd;
pub use tucker::{to_tt_tucker, tucker_hosvd, tucker_hosvd_ranks};

use crate::error::{Result, T4dtError};

/// How aggressively to truncate: a rank cap, a relative Frobenius error
/// budget, or both (the cap wins when both bind).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationSpec {
    max_rank: Option<usize>,
    eps: Option<f64>,
}

impl TruncationSpec {
    pub fn new(max_rank: Option<usize>, eps: Option<f64>) -> Result<Self> {
        if max_rank.is_none() && eps.is_none() {
            return Err(T4dtError::validation("truncation needs a rank cap, an error budget, or both"));
        }
        if max_rank == Some(0) {
            return Err(T4dtError::validation("rank cap must be positive"));
        }
        if let Some(e) = eps {
            if !(e.is_finite() && e >= 0.0) {
                return Err(T4dtError::validation(format!("error budget {e} must be finite and ≥ 0")));
            }
        }
        Ok(TruncationSpec { max_rank, eps })
    }

    /// Exact up to the degenerate-singular-value cutoff.
    pub fn lossless() -> Self {
        TruncationSpec { max_rank: None, eps: Some(0.0) }
    }

    pub fn rank(max_rank: usize) -> Self {
        TruncationSpec::new(Some(max_rank), None).expect("positive rank")
    }

    pub fn eps(eps: f64) -> Self {
        TruncationSpec::new(None, Some(eps)).expect("valid budget")
    }

    pub fn max_rank(&self) -> Option<usize> {
        self.max_rank
    }

    pub fn eps_value(&self) -> Option<f64> {
        self.eps
    }

    /// Per-step tail budget `ε‖x‖ / √steps`.
    pub(crate) fn step_budget(&self, norm: f64, steps: usize) -> Option<f64> {
        self.eps.map(|e| e * norm / (steps.max(1) as f64).sqrt())
    }
}
