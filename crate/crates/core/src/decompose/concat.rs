use crate::error::{Result, T4dtError};
use crate::tensor::{Core3, TTTensor};

/// Stacks `b` after `a` along `mode`.
///
/// Implemented as the TT sum of `a` and `b`, each zero-extended along `mode`,
/// so every internal rank becomes the sum of the operand ranks while the
/// boundary ranks stay 1.
pub fn tt_concat(a: &TTTensor, b: &TTTensor, mode: usize) -> Result<TTTensor> {
    let d = a.ndim();
    if b.ndim() != d {
        return Err(T4dtError::shape(format!("operands have {} and {} modes", d, b.ndim())));
    }
    if mode >= d {
        return Err(T4dtError::range(format!("concat mode {mode} out of range for {d} modes")));
    }
    let (sa, sb) = (a.shape(), b.shape());
    if let Some(k) = (0..d).find(|&k| k != mode && sa[k] != sb[k]) {
        return Err(T4dtError::shape(format!(
            "mode {k} differs: {} vs {}",
            sa[k], sb[k]
        )));
    }
    let offset = sa[mode];

    if d == 1 {
        let mut data = a.core(0).data().to_vec();
        data.extend_from_slice(b.core(0).data());
        return TTTensor::new(vec![Core3::new(1, sa[0] + sb[0], 1, data)?]);
    }

    let mut cores = Vec::with_capacity(d);
    for k in 0..d {
        let (ca, cb) = (a.core(k), b.core(k));
        let n = if k == mode { sa[k] + sb[k] } else { sa[k] };
        let (first, last) = (k == 0, k == d - 1);
        let left = if first { 1 } else { ca.left() + cb.left() };
        let right = if last { 1 } else { ca.right() + cb.right() };
        // where b's block starts inside the combined rank dimensions
        let b_left = if first { 0 } else { ca.left() };
        let b_right = if last { 0 } else { ca.right() };
        let mut out = Core3::zeros(left, n, right);
        for i in 0..n {
            let ia = if k == mode { (i < offset).then_some(i) } else { Some(i) };
            let ib = if k == mode { i.checked_sub(offset) } else { Some(i) };
            if let Some(ia) = ia {
                for x in 0..ca.left() {
                    for y in 0..ca.right() {
                        *out.at_mut(x, i, y) = ca.at(x, ia, y);
                    }
                }
            }
            if let Some(ib) = ib {
                for x in 0..cb.left() {
                    for y in 0..cb.right() {
                        *out.at_mut(b_left + x, i, b_right + y) += cb.at(x, ib, y);
                    }
                }
            }
        }
        cores.push(out);
    }
    TTTensor::new(cores)
}

/// Splices a size-1 pass-through mode at `position` (`0..=D`): an `(r, 1, r)`
/// identity core where `r` is the rank of the bond being split.
pub fn insert_time_mode(t: &TTTensor, position: usize) -> Result<TTTensor> {
    let d = t.ndim();
    if position > d {
        return Err(T4dtError::range(format!("insert position {position} out of range 0..={d}")));
    }
    let r = t.ranks()[position];
    let mut cores = t.cores().to_vec();
    cores.insert(position, Core3::identity(r));
    TTTensor::new(cores)
}
