//! Randomized truncated SVD (range finder with oversampling and power iterations).

use ndarray::{s, Array1, Array2};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::linalg::{jacobi_svd, orthonormal_basis, thin_qr};
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RsvdParams {
    pub oversampling: usize,
    pub power_iterations: usize,
}

impl Default for RsvdParams {
    fn default() -> Self {
        RsvdParams {
            oversampling: 10,
            power_iterations: 2,
        }
    }
}

/// Top-`d` right singular vectors (`n × d`, as columns) and singular values.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdBasis {
    pub basis: Array2<f64>,
    pub singular_values: Array1<f64>,
}

/// Randomized SVD of `x` keeping `d` components. The Gaussian test matrix is
/// drawn from a ChaCha stream seeded with `seed`.
pub fn fit_svd(x: &CsrMatrix, d: usize, seed: u64, params: RsvdParams) -> Result<SvdBasis> {
    let (nrows, ncols) = (x.nrows(), x.ncols());
    if d == 0 || d > nrows.min(ncols) {
        return Err(Error::State(format!(
            "cannot extract {d} singular components from a {nrows}x{ncols} matrix"
        )));
    }
    let samples = (d + params.oversampling).min(nrows).min(ncols);

    let mut rng = crate::seed::rng(seed, crate::seed::SVD);
    let omega = Array2::from_shape_fn((ncols, samples), |_| StandardNormal.sample(&mut rng));

    let mut q = orthonormal_basis(x.mul_dense(omega.view())?.view());
    for _ in 0..params.power_iterations {
        let z = orthonormal_basis(x.t_mul_dense(q.view())?.view());
        q = orthonormal_basis(x.mul_dense(z.view())?.view());
    }

    // B = Qᵀ X (samples × ncols). Factor Bᵀ = Q₂ R, then Rᵀ = U Σ Wᵀ gives
    // B = U Σ (Q₂ W)ᵀ.
    let bt = x.t_mul_dense(q.view())?;
    let (q2, r) = thin_qr(bt.view());
    let (sigma, w) = jacobi_svd(r.t());
    let v = q2.dot(&w);

    Ok(SvdBasis {
        basis: v.slice(s![.., ..d]).to_owned(),
        singular_values: sigma.slice(s![..d]).to_owned(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn rank_one() {
        // u = (1, 2, 2) has norm 3, v = (0, 2) has norm 2: σ₁ = 6.
        let u = array![1.0, 2.0, 2.0];
        let v = array![0.0, 2.0];
        let m = Array2::from_shape_fn((3, 2), |(i, j)| u[i] * v[j]);
        let svd = fit_svd(&CsrMatrix::from_dense(m.view()), 1, 7, RsvdParams::default()).unwrap();
        assert_eq!(svd.singular_values.len(), 1);
        assert!((svd.singular_values[0] - 6.0).abs() < 1e-8);
    }

    #[test]
    fn identity() {
        let m = Array2::<f64>::eye(5);
        let svd = fit_svd(&CsrMatrix::from_dense(m.view()), 5, 1, RsvdParams::default()).unwrap();
        for s in svd.singular_values.iter() {
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn too_many_components() {
        let m = Array2::<f64>::eye(3);
        let err = fit_svd(&CsrMatrix::from_dense(m.view()), 4, 1, RsvdParams::default());
        assert!(matches!(err, Err(Error::State(_))));
        let err = fit_svd(&CsrMatrix::from_dense(m.view()), 0, 1, RsvdParams::default());
        assert!(matches!(err, Err(Error::State(_))));
    }

    #[test]
    fn deterministic_for_seed() {
        let m = Array2::from_shape_fn((12, 9), |(i, j)| ((i * 7 + j * 3) % 5) as f64);
        let x = CsrMatrix::from_dense(m.view());
        let a = fit_svd(&x, 3, 11, RsvdParams::default()).unwrap();
        let b = fit_svd(&x, 3, 11, RsvdParams::default()).unwrap();
        assert_eq!(a, b);
    }
}
