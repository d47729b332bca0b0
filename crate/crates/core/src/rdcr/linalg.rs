//! Proximal and spectral operators on dense matrices.
//!
//! Spectral operators work on the short side of the matrix: a thin QR of
//! the long side reduces an `8 × N` problem to an `8 × 8` SVD, so the cost
//! per call is linear in `N`.

use nalgebra::{DMatrix, SVD};

/// Elementwise soft-thresholding `max(0, m - μ) + min(0, m + μ)`.
pub fn soft_threshold_scalar(m: f64, mu: f64) -> f64 {
    (m - mu).max(0.0) + (m + mu).min(0.0)
}

/// Elementwise soft-thresholding of a matrix.
pub fn soft_threshold(m: &DMatrix<f64>, mu: f64) -> DMatrix<f64> {
    debug_assert!(mu >= 0.0);
    m.map(|x| soft_threshold_scalar(x, mu))
}

/// A matrix factored as `core · basisᵀ` (wide) or `basis · core` (tall),
/// with `basis` having orthonormal columns and `core` square.
struct Compressed {
    core: DMatrix<f64>,
    basis: DMatrix<f64>,
    wide: bool,
}

impl Compressed {
    fn new(m: &DMatrix<f64>) -> Self {
        let wide = m.nrows() <= m.ncols();
        let qr = if wide {
            m.transpose().qr()
        } else {
            m.clone().qr()
        };
        let basis = qr.q();
        let r = qr.r();
        let core = if wide { r.transpose() } else { r };
        Compressed { core, basis, wide }
    }

    fn expand(&self, core: &DMatrix<f64>) -> DMatrix<f64> {
        if self.wide {
            core * self.basis.transpose()
        } else {
            &self.basis * core
        }
    }
}

/// Applies `f` to the singular values of `m` (sorted in decreasing order)
/// and rebuilds the matrix.
pub fn map_singular_values<F>(m: &DMatrix<f64>, f: F) -> DMatrix<f64>
where
    F: FnOnce(&mut [f64]),
{
    if m.is_empty() {
        return m.clone();
    }
    let c = Compressed::new(m);
    let svd = SVD::new(c.core.clone(), true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    f(&mut sigma);

    // Apply only the change to the spectrum, so untouched directions are
    // reproduced exactly.
    let k = c.core.nrows();
    let mut delta = DMatrix::zeros(k, k);
    for (s, &i) in sigma.iter().zip(&order) {
        let change = *s - svd.singular_values[i];
        if change != 0.0 {
            delta += (u.column(i) * change) * v_t.row(i);
        }
    }
    m + c.expand(&delta)
}

/// Best rank-`r` Frobenius approximation `U_r Σ_r V_rᵀ`.
pub fn skinny_svd_project(m: &DMatrix<f64>, r: usize) -> DMatrix<f64> {
    map_singular_values(m, |s| {
        for x in s.iter_mut().skip(r) {
            *x = 0.0;
        }
    })
}

/// Singular value thresholding, the proximity operator of `tau·‖·‖_*`.
pub fn singular_value_threshold(m: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    map_singular_values(m, |s| {
        for x in s.iter_mut() {
            *x = (*x - tau).max(0.0);
        }
    })
}

/// Singular values in decreasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let c = Compressed::new(m);
    let mut s: Vec<f64> = c.core.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Entrywise ℓ1 norm.
pub fn l1_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x.abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    // Oracle: full SVD of the original matrix, then truncation.
    fn full_svd_truncate(m: &DMatrix<f64>, r: usize) -> DMatrix<f64> {
        let svd = m.clone().svd(true, true);
        let u = svd.u.unwrap();
        let v_t = svd.v_t.unwrap();
        let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
        idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let mut out = DMatrix::zeros(m.nrows(), m.ncols());
        for &i in idx.iter().take(r) {
            out += (u.column(i) * svd.singular_values[i]) * v_t.row(i);
        }
        out
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold_scalar(2.0, 0.5), 1.5);
        assert_eq!(soft_threshold_scalar(-2.0, 0.5), -1.5);
        assert_eq!(soft_threshold_scalar(0.3, 1.0), 0.0);
        assert_eq!(soft_threshold_scalar(-0.3, 1.0), 0.0);
        let m = DMatrix::from_row_slice(1, 3, &[2.0, -2.0, 0.3]);
        assert_eq!(soft_threshold(&m, 0.5), DMatrix::from_row_slice(1, 3, &[1.5, -1.5, 0.0]));
    }

    #[test]
    fn projection_keeps_low_rank_input() {
        let a = random(8, 4, 1);
        let b = random(4, 30, 2);
        let m = a * b;
        let p = skinny_svd_project(&m, 6);
        assert!((p - &m).amax() < 1e-12);
    }

    #[test]
    fn projection_of_diagonal_drops_smallest_directions() {
        let d = [5.0, 4.0, 3.0, 2.0, 1.0, 0.5, 0.2, 0.1];
        let mut m = DMatrix::zeros(8, 10);
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        let p = skinny_svd_project(&m, 6);
        let mut want = m.clone();
        want[(6, 6)] = 0.0;
        want[(7, 7)] = 0.0;
        assert!((p - want).amax() < 1e-14);
    }

    #[test]
    fn projection_matches_full_svd_oracle() {
        let m = random(8, 200, 3);
        let got = skinny_svd_project(&m, 6);
        let want = full_svd_truncate(&m, 6);
        assert!((got - want).amax() < 1e-10);
    }

    #[test]
    fn tall_matrices_are_supported() {
        let m = random(40, 8, 4);
        let got = skinny_svd_project(&m, 3);
        let want = full_svd_truncate(&m, 3);
        assert!((got - want).amax() < 1e-10);
    }

    #[test]
    fn svt_shrinks_spectrum() {
        let m = random(8, 50, 5);
        let s = singular_values(&m);
        let tau = 0.5 * (s[2] + s[3]);
        let out = singular_value_threshold(&m, tau);
        let s_out = singular_values(&out);
        for (a, b) in s.iter().zip(&s_out) {
            assert!((b - (a - tau).max(0.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_values_match_direct() {
        let m = random(8, 120, 6);
        let mut want: Vec<f64> = m.singular_values().iter().copied().collect();
        want.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in singular_values(&m).iter().zip(&want) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn soft_threshold_is_odd_and_nonexpansive(a in -1e3f64..1e3, b in -1e3f64..1e3, mu in 0.0f64..10.0) {
                prop_assert_eq!(soft_threshold_scalar(-a, mu), -soft_threshold_scalar(a, mu));
                let d = (soft_threshold_scalar(a, mu) - soft_threshold_scalar(b, mu)).abs();
                prop_assert!(d <= (a - b).abs() + 1e-12);
            }

            #[test]
            fn projection_is_idempotent(seed in 0u64..1000, cols in 8usize..60, r in 1usize..8) {
                let m = random(8, cols, seed);
                let once = skinny_svd_project(&m, r);
                let twice = skinny_svd_project(&once, r);
                prop_assert!((twice - &once).amax() < 1e-12);
            }
        }
    }
}
