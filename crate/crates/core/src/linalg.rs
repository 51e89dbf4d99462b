//! Dense SVD and QR with the conventions the decompositions rely on:
//! descending singular values, a fixed sign for every singular pair, and a
//! single rank-selection rule.
//!
//! Matrices are nalgebra `DMatrix` throughout; the SVD itself runs on faer
//! (nalgebra 0.33's SVD mis-factors exactly rank-deficient inputs), pinned
//! to sequential execution so results do not depend on the thread count.

use std::sync::Once;

use nalgebra::DMatrix;

/// Singular values below this fraction of the largest one are always dropped.
pub const DEGENERATE_RTOL: f64 = 1e-14;

/// Row-major `(rows, cols)` buffer to an nalgebra matrix.
pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
    debug_assert_eq!(rows * cols, data.len());
    DMatrix::from_row_slice(rows, cols, data)
}

pub fn to_row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let (rows, cols) = m.shape();
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Thin SVD `a = u * diag(s) * vt` with `s` sorted descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub vt: DMatrix<f64>,
}

impl Svd {
    pub fn new(a: DMatrix<f64>) -> Svd {
        static SEQUENTIAL: Once = Once::new();
        SEQUENTIAL.call_once(|| faer::set_global_parallelism(faer::Par::Seq));

        let (m, n) = a.shape();
        let k = m.min(n);
        let fa = faer::Mat::<f64>::from_fn(m, n, |i, j| a[(i, j)]);
        let svd = fa.thin_svd().expect("SVD of a finite matrix converges");
        let (fu, fv, fs) = (svd.U(), svd.V(), svd.S().column_vector());
        let u_raw = DMatrix::from_fn(m, k, |i, j| fu[(i, j)]);
        let vt_raw = DMatrix::from_fn(k, n, |i, j| fv[(j, i)]);
        let s_raw: Vec<f64> = (0..k).map(|i| fs[i]).collect();

        let mut order: Vec<usize> = (0..k).collect();
        // stable sort keeps ties in the solver's order
        order.sort_by(|&i, &j| s_raw[j].partial_cmp(&s_raw[i]).unwrap_or(std::cmp::Ordering::Equal));

        let mut u = DMatrix::zeros(m, k);
        let mut vt = DMatrix::zeros(k, n);
        let mut s = Vec::with_capacity(k);
        for (dst, &src) in order.iter().enumerate() {
            s.push(s_raw[src]);
            let col = u_raw.column(src);
            // sign: largest-magnitude entry of u positive, ties to lowest index
            let mut best = 0;
            for i in 1..m {
                if col[i].abs() > col[best].abs() {
                    best = i;
                }
            }
            let sign = if col[best] < 0.0 { -1.0 } else { 1.0 };
            for i in 0..m {
                u[(i, dst)] = sign * col[i];
            }
            for j in 0..n {
                vt[(dst, j)] = sign * vt_raw[(src, j)];
            }
        }
        Svd { u, s, vt }
    }

    /// Keeps the leading `r` singular triplets.
    pub fn truncate(self, r: usize) -> Svd {
        let r = r.min(self.s.len());
        Svd {
            u: self.u.columns(0, r).into_owned(),
            s: self.s[..r].to_vec(),
            vt: self.vt.rows(0, r).into_owned(),
        }
    }

    /// `diag(s) * vt`
    pub fn s_vt(&self) -> DMatrix<f64> {
        let mut out = self.vt.clone();
        for (i, &sv) in self.s.iter().enumerate() {
            out.row_mut(i).scale_mut(sv);
        }
        out
    }
}

/// Frobenius norm of the discarded tail when keeping `r` values.
pub fn tail_norm(s: &[f64], r: usize) -> f64 {
    s[r.min(s.len())..].iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Picks how many singular values to keep.
///
/// The smallest rank whose discarded tail is within `tail_budget` (all values
/// when no budget), minus degenerate values, clamped to `max_rank`, at least 1.
pub fn select_rank(s: &[f64], tail_budget: Option<f64>, max_rank: Option<usize>) -> usize {
    if s.is_empty() {
        return 1;
    }
    let mut r = s.len();
    if let Some(budget) = tail_budget {
        let mut tail_sq = 0.0;
        let budget_sq = budget * budget;
        // walk from the back, dropping while the tail stays in budget
        while r > 0 {
            let next = tail_sq + s[r - 1] * s[r - 1];
            if next > budget_sq {
                break;
            }
            tail_sq = next;
            r -= 1;
        }
    }
    let smax = s[0];
    let nondegenerate = s.iter().take_while(|&&v| v > 0.0 && v >= DEGENERATE_RTOL * smax).count();
    r = r.min(nondegenerate);
    if let Some(cap) = max_rank {
        r = r.min(cap);
    }
    r.max(1)
}

/// Thin QR `a = q * r`; `q` has `min(m, n)` orthonormal columns.
pub fn thin_qr(a: DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let qr = a.qr();
    (qr.q(), qr.r())
}


#[cfg(test)]
mod rank_deficient {
    use super::*;

    #[test]
    fn constant_matrices_factor_exactly() {
        for (m, n) in [(3usize, 20usize), (20, 3), (64, 64), (2, 16), (1, 5), (5, 1)] {
            let a = from_row_major(m, n, &vec![0.7; m * n]);
            let svd = Svd::new(a.clone());
            let back = &svd.u * svd.s_vt();
            assert!((back - &a).norm() < 1e-12, "{m}x{n}");
            assert_eq!(select_rank(&svd.s, Some(0.0), None), 1, "{m}x{n} {:?}", svd.s);
        }
    }
}
