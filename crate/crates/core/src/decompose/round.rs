use crate::decompose::orth::right_orthogonalize;
use crate::decompose::TruncationSpec;
use crate::error::{Result, T4dtError};
use crate::linalg::{select_rank, Svd};
use crate::tensor::{Core3, TTTensor};

/// TT rounding with one cap (and optional error budget) for every bond.
pub fn tt_round(t: &TTTensor, spec: &TruncationSpec) -> Result<TTTensor> {
    let caps = vec![spec.max_rank(); t.ndim().saturating_sub(1)];
    tt_round_bonds(t, &caps, spec.eps_value())
}

/// TT rounding with a per-bond rank cap.
///
/// `caps[d]` bounds the rank between cores `d` and `d + 1` (`None` leaves it
/// to the error budget and the degenerate cutoff). A right-to-left
/// orthogonalization sweep is followed by a left-to-right truncation sweep,
/// each truncation allowed a tail of `ε‖t‖ / √(D-1)`.
pub fn tt_round_bonds(t: &TTTensor, caps: &[Option<usize>], eps: Option<f64>) -> Result<TTTensor> {
    let d = t.ndim();
    if caps.len() != d.saturating_sub(1) {
        return Err(T4dtError::validation(format!(
            "{} bond caps given for {} bonds",
            caps.len(),
            d.saturating_sub(1)
        )));
    }
    if caps.contains(&Some(0)) {
        return Err(T4dtError::validation("bond caps must be positive"));
    }
    if d == 1 {
        return Ok(t.clone());
    }
    let mut cores: Vec<Core3> = t.cores().to_vec();
    for k in (1..d).rev() {
        right_orthogonalize(&mut cores, k);
    }
    // the whole norm now sits in the first core
    let norm = cores[0].data().iter().map(|v| v * v).sum::<f64>().sqrt();
    let budget = eps.map(|e| e * norm / ((d - 1) as f64).sqrt());

    for k in 0..d - 1 {
        let size = cores[k].size();
        let svd = Svd::new(cores[k].left_unfolding());
        let r = select_rank(&svd.s, budget, caps[k]);
        let svd = svd.truncate(r);
        cores[k] = Core3::from_left_unfolding(&svd.u, size)?;
        cores[k + 1] = cores[k + 1].mul_left(&svd.s_vt());
    }
    TTTensor::new(cores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::{left_orthogonality_defect, tt_svd};
    use crate::linalg::{from_row_major, tail_norm};
    use crate::tensor::{DenseVolume, MemoryBudget};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tt(shape: &[usize], rank: usize, seed: u64) -> TTTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = shape.len();
        let cores = (0..d)
            .map(|k| {
                let l = if k == 0 { 1 } else { rank };
                let r = if k == d - 1 { 1 } else { rank };
                let data = (0..l * shape[k] * r).map(|_| rng.gen_range(-1.0..1.0)).collect();
                Core3::new(l, shape[k], r, data).unwrap()
            })
            .collect();
        TTTensor::new(cores).unwrap()
    }

    fn dense(t: &TTTensor) -> DenseVolume {
        t.to_dense(&MemoryBudget::default()).unwrap()
    }

    #[test]
    fn loose_cap_is_identity() {
        let t = random_tt(&[3, 4, 3], 2, 1);
        let r = tt_round(&t, &TruncationSpec::rank(10)).unwrap();
        let (a, b) = (dense(&t), dense(&r));
        assert!(a.distance(&b).unwrap() <= 1e-12 * a.frobenius_norm());
    }

    #[test]
    fn inflated_rank_one_collapses() {
        let base = TTTensor::rank_one(&[vec![1.0, 2.0, 3.0], vec![0.5, -1.0], vec![2.0, 1.0, 0.0, 4.0]]).unwrap();
        // pad every bond to rank 3 with zero slices
        let cores: Vec<Core3> = base
            .cores()
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let l = if k == 0 { 1 } else { 3 };
                let r = if k == 2 { 1 } else { 3 };
                let mut out = Core3::zeros(l, c.size(), r);
                for i in 0..c.size() {
                    *out.at_mut(0, i, 0) = c.at(0, i, 0);
                }
                out
            })
            .collect();
        let inflated = TTTensor::new(cores).unwrap();
        assert_eq!(inflated.ranks(), vec![1, 3, 3, 1]);
        let r = tt_round(&inflated, &TruncationSpec::lossless()).unwrap();
        assert_eq!(r.ranks(), vec![1, 1, 1, 1]);
        assert!(dense(&r).distance(&dense(&base)).unwrap() < 1e-12);
    }

    #[test]
    fn cap_two_quasi_optimal() {
        let t = random_tt(&[5, 5, 5, 5], 4, 7);
        let full = dense(&t);
        let r = tt_round(&t, &TruncationSpec::rank(2)).unwrap();
        assert!(r.ranks().iter().all(|&x| x <= 2));
        let err = full.distance(&dense(&r)).unwrap();
        // dense oracle: the best rank-2 error of each unfolding lower-bounds
        // any rank-(2,2,2) TT; TT-SVD is within √(D-1) of the best
        let mut worst_tail: f64 = 0.0;
        for k in 1..4 {
            let rows: usize = full.shape()[..k].iter().product();
            let cols = full.len() / rows;
            let s = Svd::new(from_row_major(rows, cols, full.data())).s;
            worst_tail = worst_tail.max(tail_norm(&s, 2));
        }
        assert!(err >= worst_tail - 1e-10);
        assert!(err <= 3f64.sqrt() * worst_tail + 1e-10, "err {err} bound {}", 3f64.sqrt() * worst_tail);
    }

    #[test]
    fn eps_bound_and_orthogonality() {
        let v = {
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            DenseVolume::from_fn(vec![6, 6, 6, 6], |_| rng.gen_range(-1.0..1.0)).unwrap()
        };
        let t = tt_svd(&v, &TruncationSpec::lossless()).unwrap();
        for eps in [0.1, 0.01] {
            let r = tt_round(&t, &TruncationSpec::eps(eps)).unwrap();
            let err = v.distance(&dense(&r)).unwrap();
            assert!(err <= eps * v.frobenius_norm());
            for c in &r.cores()[..3] {
                assert!(left_orthogonality_defect(c) < 1e-8);
            }
        }
    }

    #[test]
    fn never_increases_ranks() {
        let t = random_tt(&[4, 3, 5, 2], 3, 13);
        let r = tt_round(&t, &TruncationSpec::rank(8)).unwrap();
        for (a, b) in r.ranks().iter().zip(t.ranks()) {
            assert!(*a <= b);
        }
        assert!(r.parameter_count() <= t.parameter_count());
    }

    #[test]
    fn per_bond_caps() {
        let t = random_tt(&[4, 4, 4, 4], 4, 3);
        let r = tt_round_bonds(&t, &[Some(3), None, Some(1)], Some(0.0)).unwrap();
        let ranks = r.ranks();
        assert!(ranks[1] <= 3 && ranks[3] == 1);
        assert!(tt_round_bonds(&t, &[Some(3)], None).is_err());
    }
}
