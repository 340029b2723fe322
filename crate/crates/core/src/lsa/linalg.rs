//! Dense kernels for the randomized SVD: Householder QR and one-sided Jacobi SVD.

use ndarray::{Array1, Array2, ArrayView2};

/// Orthonormal basis `Q` (m × k) of the column space of `a` (m × k, m ≥ k),
/// from a Householder QR. Rank-deficient inputs still yield orthonormal columns.
pub fn orthonormal_basis(a: ArrayView2<f64>) -> Array2<f64> {
    let (m, k) = a.dim();
    assert!(m >= k, "orthonormal_basis needs a tall matrix, got {m}x{k}");
    let (reflectors, _) = householder(a);
    let mut q = Array2::zeros((m, k));
    for j in 0..k {
        q[[j, j]] = 1.0;
    }
    // Q = H_0 H_1 ... H_{k-1} applied to the first k unit vectors.
    let mut cols: Vec<Vec<f64>> = (0..k).map(|j| q.column(j).to_vec()).collect();
    for (j, v) in reflectors.iter().enumerate().rev() {
        for c in cols.iter_mut() {
            reflect(&mut c[j..], v);
        }
    }
    for (j, c) in cols.into_iter().enumerate() {
        q.column_mut(j).assign(&Array1::from(c));
    }
    q
}

/// Thin QR factorisation `a = Q R` for a tall `a`.
pub fn thin_qr(a: ArrayView2<f64>) -> (Array2<f64>, Array2<f64>) {
    let k = a.ncols();
    let (_, cols) = householder(a);
    let mut r = Array2::zeros((k, k));
    for (j, c) in cols.iter().enumerate() {
        for i in 0..=j {
            r[[i, j]] = c[i];
        }
    }
    (orthonormal_basis(a), r)
}

/// Householder reduction; returns the unit reflector vectors (reflector `j`
/// acts on rows `j..m`) and the reduced columns, whose upper triangle is R.
fn householder(a: ArrayView2<f64>) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let (m, k) = a.dim();
    let mut cols: Vec<Vec<f64>> = (0..k).map(|j| a.column(j).to_vec()).collect();
    let mut reflectors = Vec::with_capacity(k);
    for j in 0..k {
        let x = &cols[j][j..m];
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut v = x.to_vec();
        if norm == 0.0 {
            // Identity reflector.
            v.iter_mut().for_each(|e| *e = 0.0);
        } else {
            let alpha = if x[0] >= 0.0 { -norm } else { norm };
            v[0] -= alpha;
            let vnorm = v.iter().map(|e| e * e).sum::<f64>().sqrt();
            if vnorm > 0.0 {
                v.iter_mut().for_each(|e| *e /= vnorm);
            }
        }
        for c in cols[j..].iter_mut() {
            reflect(&mut c[j..m], &v);
        }
        reflectors.push(v);
    }
    (reflectors, cols)
}

/// x <- (I - 2 v vᵀ) x
fn reflect(x: &mut [f64], v: &[f64]) {
    let dot: f64 = x.iter().zip(v).map(|(a, b)| a * b).sum();
    if dot != 0.0 {
        for (xi, vi) in x.iter_mut().zip(v) {
            *xi -= 2.0 * dot * vi;
        }
    }
}

/// Singular values (descending) and right singular vectors (as columns) of a
/// tall or square matrix, by one-sided Jacobi rotations.
pub fn jacobi_svd(a: ArrayView2<f64>) -> (Array1<f64>, Array2<f64>) {
    let (m, k) = a.dim();
    assert!(m >= k, "jacobi_svd needs a tall matrix, got {m}x{k}");
    let mut u: Vec<Vec<f64>> = (0..k).map(|j| a.column(j).to_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let mut e = vec![0.0; k];
            e[j] = 1.0;
            e
        })
        .collect();

    const MAX_SWEEPS: usize = 60;
    let eps = f64::EPSILON;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let (alpha, beta, gamma) = {
                    let (up, uq) = (&u[p], &u[q]);
                    let mut a = 0.0;
                    let mut b = 0.0;
                    let mut g = 0.0;
                    for i in 0..m {
                        a += up[i] * up[i];
                        b += uq[i] * uq[i];
                        g += up[i] * uq[i];
                    }
                    (a, b, g)
                };
                if gamma == 0.0 || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut u, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(f64, usize)> = u
        .iter()
        .enumerate()
        .map(|(j, col)| (col.iter().map(|x| x * x).sum::<f64>().sqrt(), j))
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let sigma = Array1::from_iter(order.iter().map(|&(s, _)| s));
    let mut vecs = Array2::zeros((k, k));
    for (out, &(_, j)) in order.iter().enumerate() {
        vecs.column_mut(out).assign(&Array1::from(v[j].clone()));
    }
    (sigma, vecs)
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let (cp, cq) = (&mut left[p], &mut right[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn random(m: usize, k: usize, seed: u64) -> Array2<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((m, k), |_| StandardNormal.sample(&mut rng))
    }

    fn assert_orthonormal(q: &Array2<f64>) {
        let g = q.t().dot(q);
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[[i, j]] - want).abs() < 1e-12, "gram[{i},{j}] = {}", g[[i, j]]);
            }
        }
    }

    #[test]
    fn qr_reconstructs() {
        let a = random(9, 4, 1);
        let (q, r) = thin_qr(a.view());
        assert_orthonormal(&q);
        let back = q.dot(&r);
        for (x, y) in back.iter().zip(a.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_deficient_basis_is_orthonormal() {
        let mut a = Array2::zeros((6, 3));
        a.column_mut(0).assign(&array![1.0, 2.0, 0.0, 0.0, 1.0, 0.0]);
        a.column_mut(1).assign(&array![2.0, 4.0, 0.0, 0.0, 2.0, 0.0]);
        assert_orthonormal(&orthonormal_basis(a.view()));
    }

    #[test]
    fn jacobi_reconstructs() {
        let a = random(7, 5, 2);
        let (s, v) = jacobi_svd(a.view());
        assert_orthonormal(&v);
        for w in s.windows(2) {
            assert!(w[0] >= w[1]);
        }
        // ‖A v_i‖ = σ_i
        let av = a.dot(&v);
        for (j, sigma) in s.iter().enumerate() {
            let n = av.column(j).dot(&av.column(j)).sqrt();
            assert!((n - sigma).abs() < 1e-12);
        }
    }
}
