use nalgebra::DMatrix;

use crate::linalg::thin_qr;
use crate::tensor::{Core3, TTTensor};

/// QR of core `d`'s left unfolding; `R` moves into core `d + 1`.
pub(crate) fn left_orthogonalize(cores: &mut [Core3], d: usize) {
    let size = cores[d].size();
    let (q, r) = thin_qr(cores[d].left_unfolding());
    cores[d] = Core3::from_left_unfolding(&q, size).expect("thin QR keeps row count");
    cores[d + 1] = cores[d + 1].mul_left(&r);
}

/// LQ of core `d`'s right unfolding (via QR of the transpose); `L` moves into core `d - 1`.
pub(crate) fn right_orthogonalize(cores: &mut [Core3], d: usize) {
    let size = cores[d].size();
    let (q, r) = thin_qr(cores[d].right_unfolding().transpose());
    cores[d] = Core3::from_right_unfolding(&q.transpose(), size).expect("thin QR keeps column count");
    cores[d - 1] = cores[d - 1].mul_right(&r.transpose());
}

/// Makes cores left of `center` left-orthonormal and cores right of it
/// right-orthonormal; the tensor is unchanged.
pub fn orthogonalize_around(t: &TTTensor, center: usize) -> TTTensor {
    let mut cores = t.cores().to_vec();
    for d in 0..center {
        left_orthogonalize(&mut cores, d);
    }
    for d in (center + 1..cores.len()).rev() {
        right_orthogonalize(&mut cores, d);
    }
    TTTensor::new(cores).expect("orthogonalization keeps adjacent ranks consistent")
}

/// `‖GᵀG − I‖_max` for the left unfolding of core `d`.
pub fn left_orthogonality_defect(core: &Core3) -> f64 {
    let g = core.left_unfolding();
    let gram = g.transpose() * &g;
    defect(&gram)
}

/// `‖GGᵀ − I‖_max` for the right unfolding of core `d`.
pub fn right_orthogonality_defect(core: &Core3) -> f64 {
    let g = core.right_unfolding();
    let gram = &g * g.transpose();
    defect(&gram)
}

fn defect(gram: &DMatrix<f64>) -> f64 {
    let n = gram.nrows();
    (gram - DMatrix::<f64>::identity(n, n)).amax()
}
