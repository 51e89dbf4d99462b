use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::decompose::orth::orthogonalize_around;
use crate::decompose::TruncationSpec;
use crate::error::{Result, T4dtError};
use crate::linalg::{from_row_major, select_rank, to_row_major, Svd};
use crate::tensor::{Core3, DenseVolume, TTTensor, TTTuckerTensor, TuckerTensor};

/// Sequentially truncated HOSVD with the same cap for every mode.
pub fn tucker_hosvd(v: &DenseVolume, spec: &TruncationSpec) -> Result<TuckerTensor> {
    let caps = vec![spec.max_rank(); v.ndim()];
    tucker_hosvd_ranks(v, &caps, spec.eps_value())
}

/// Sequentially truncated HOSVD: mode by mode, the factor is the leading left
/// singular vectors of the current (partially projected) core's unfolding.
/// Each mode may discard `ε‖v‖ / √D`.
pub fn tucker_hosvd_ranks(v: &DenseVolume, caps: &[Option<usize>], eps: Option<f64>) -> Result<TuckerTensor> {
    if !v.is_finite() {
        return Err(T4dtError::validation("input tensor contains NaN or Inf"));
    }
    let d = v.ndim();
    if caps.len() != d {
        return Err(T4dtError::validation(format!("{} rank caps for {d} modes", caps.len())));
    }
    let budget = eps.map(|e| e * v.frobenius_norm() / (d as f64).sqrt());
    let mut core = v.clone();
    let mut factors = Vec::with_capacity(d);
    for (mode, cap) in caps.iter().enumerate() {
        let (rows, cols, data) = core.unfold(mode)?;
        let svd = Svd::new(from_row_major(rows, cols, &data));
        let r = select_rank(&svd.s, budget, *cap);
        let svd = svd.truncate(r);
        let mut shape = core.shape().to_vec();
        shape[mode] = r;
        core = DenseVolume::fold(to_row_major(&svd.s_vt()), mode, &shape)?;
        factors.push(svd.u);
    }
    TuckerTensor::new(core, factors)
}

/// Compresses the mode dimension of each listed TT core with an orthonormal
/// factor, leaving the remaining cores (the time mode) untouched.
///
/// Before each factorization the train is orthogonalized around that core,
/// so the SVD of the core's mode unfolding carries the singular values of the
/// full tensor's unfolding; each mode may discard `ε‖t‖ / √|modes|`.
pub fn to_tt_tucker(t: &TTTensor, spatial_modes: &BTreeSet<usize>, spec: &TruncationSpec) -> Result<TTTuckerTensor> {
    let d = t.ndim();
    if let Some(&bad) = spatial_modes.iter().find(|&&m| m >= d) {
        return Err(T4dtError::range(format!("mode {bad} out of range for {d} modes")));
    }
    let budget = spec.step_budget(t.norm(), spatial_modes.len());
    let mut factors: Vec<Option<DMatrix<f64>>> = vec![None; d];
    let mut cur = t.clone();
    for &mode in spatial_modes {
        cur = orthogonalize_around(&cur, mode);
        let core = cur.core(mode);
        let (l, n, r) = (core.left(), core.size(), core.right());
        // mode unfolding: rows = mode index, cols = (left, right)
        let mut m = DMatrix::zeros(n, l * r);
        for a in 0..l {
            for i in 0..n {
                for b in 0..r {
                    m[(i, a * r + b)] = core.at(a, i, b);
                }
            }
        }
        let svd = Svd::new(m);
        let rho = select_rank(&svd.s, budget, spec.max_rank());
        let svd = svd.truncate(rho);
        let reduced = svd.s_vt();
        let mut new_core = Core3::zeros(l, rho, r);
        for a in 0..l {
            for j in 0..rho {
                for b in 0..r {
                    *new_core.at_mut(a, j, b) = reduced[(j, a * r + b)];
                }
            }
        }
        let mut cores = cur.into_cores();
        cores[mode] = new_core;
        cur = TTTensor::new(cores)?;
        factors[mode] = Some(svd.u);
    }
    TTTuckerTensor::new(cur, factors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::tt_svd;
    use crate::tensor::{mode_product, MemoryBudget};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(shape: Vec<usize>, seed: u64) -> DenseVolume {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseVolume::from_fn(shape, |_| rng.gen_range(-1.0..1.0)).unwrap()
    }

    fn orthonormal_defect(f: &DMatrix<f64>) -> f64 {
        let g = f.transpose() * f;
        (g - DMatrix::identity(f.ncols(), f.ncols())).amax()
    }

    #[test]
    fn separable_is_rank_one() {
        let u = [1.0, 2.0, -1.0];
        let v = [0.5, 0.5, 3.0, 1.0];
        let w = [2.0, -2.0];
        let x = DenseVolume::from_fn(vec![3, 4, 2], |i| u[i[0]] * v[i[1]] * w[i[2]]).unwrap();
        let t = tucker_hosvd(&x, &TruncationSpec::lossless()).unwrap();
        assert_eq!(t.ranks(), vec![1, 1, 1]);
        // factor proportional to u
        let f = &t.factors()[0];
        let ratio = f[(0, 0)] / u[0];
        for i in 0..3 {
            assert!((f[(i, 0)] - ratio * u[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn full_rank_lossless_and_orthonormal() {
        let x = random(vec![4, 4, 4], 2);
        let t = tucker_hosvd(&x, &TruncationSpec::rank(4)).unwrap();
        assert_eq!(t.ranks(), vec![4, 4, 4]);
        for f in t.factors() {
            assert!(orthonormal_defect(f) < 1e-8);
        }
        let back = t.to_dense(&MemoryBudget::default()).unwrap();
        assert!(x.distance(&back).unwrap() <= 1e-12 * x.frobenius_norm() * 10.0);
        for idx in [[0, 0, 0], [3, 2, 1], [1, 3, 3]] {
            let e = t.element(&idx).unwrap();
            assert!((e - x.get(&idx).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn radial_field_error_nonincreasing() {
        let x = DenseVolume::from_fn(vec![8, 8, 8], |i| {
            let r2: f64 = i.iter().map(|&c| (c as f64 - 3.5).powi(2)).sum();
            (r2.sqrt() - 2.5).clamp(-1.0, 1.0)
        })
        .unwrap();
        let e2 = x
            .distance(&tucker_hosvd(&x, &TruncationSpec::rank(2)).unwrap().to_dense(&MemoryBudget::default()).unwrap())
            .unwrap();
        let e4 = x
            .distance(&tucker_hosvd(&x, &TruncationSpec::rank(4)).unwrap().to_dense(&MemoryBudget::default()).unwrap())
            .unwrap();
        assert!(e4 <= e2);
    }

    #[test]
    fn eps_bound() {
        let x = random(vec![6, 5, 4], 3);
        for eps in [0.3, 0.1] {
            let t = tucker_hosvd(&x, &TruncationSpec::eps(eps)).unwrap();
            let err = x.distance(&t.to_dense(&MemoryBudget::default()).unwrap()).unwrap();
            assert!(err <= eps * x.frobenius_norm());
        }
    }

    #[test]
    fn tt_tucker_full_factor_is_exact() {
        let x = random(vec![5, 4, 3, 2], 4);
        let tt = tt_svd(&x, &TruncationSpec::lossless()).unwrap();
        let modes: BTreeSet<usize> = [0, 1, 2].into();
        let tk = to_tt_tucker(&tt, &modes, &TruncationSpec::lossless()).unwrap();
        assert!(tk.factors()[3].is_none());
        let back = tk.to_dense(&MemoryBudget::default()).unwrap();
        assert!(x.distance(&back).unwrap() <= 1e-12 * x.frobenius_norm() * 10.0);
        let idx = [4, 3, 2, 1];
        assert!((tk.element(&idx).unwrap() - x.get(&idx).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn tt_tucker_separable_rank_one_factors() {
        let tt = TTTensor::rank_one(&[vec![1.0, 2.0, 3.0], vec![1.0, -1.0], vec![0.5; 4], vec![1.0, 2.0]]).unwrap();
        let modes: BTreeSet<usize> = [0, 1, 2].into();
        let tk = to_tt_tucker(&tt, &modes, &TruncationSpec::lossless()).unwrap();
        for m in 0..3 {
            assert_eq!(tk.factors()[m].as_ref().unwrap().ncols(), 1);
        }
    }

    #[test]
    fn tt_tucker_capped_equals_dense_projection() {
        let x = random(vec![8, 8, 8, 4], 9);
        let tt = tt_svd(&x, &TruncationSpec::lossless()).unwrap();
        let modes: BTreeSet<usize> = [0, 1, 2].into();
        let tk = to_tt_tucker(&tt, &modes, &TruncationSpec::rank(4)).unwrap();
        // dense oracle: project x onto the produced factor subspaces
        let mut proj = x.clone();
        for m in 0..3 {
            let f = tk.factors()[m].as_ref().unwrap();
            assert!(orthonormal_defect(f) < 1e-8);
            proj = mode_product(&proj, m, &(f * f.transpose())).unwrap();
        }
        let got = tk.to_dense(&MemoryBudget::default()).unwrap();
        assert!(got.distance(&proj).unwrap() <= 1e-10 * x.frobenius_norm());
        let oracle_err = x.distance(&proj).unwrap();
        let err = x.distance(&got).unwrap();
        assert!((err - oracle_err).abs() <= 1e-10 * x.frobenius_norm());
        for idx in [[0, 0, 0, 0], [7, 3, 5, 2]] {
            assert!((tk.element(&idx).unwrap() - proj.get(&idx).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn tt_tucker_bad_mode() {
        let tt = TTTensor::rank_one(&[vec![1.0; 2], vec![1.0; 2]]).unwrap();
        let modes: BTreeSet<usize> = [2].into();
        assert!(matches!(
            to_tt_tucker(&tt, &modes, &TruncationSpec::lossless()),
            Err(T4dtError::Range(_))
        ));
    }
}
