//! Accelerated proximal gradient solver for convex robust PCA, run for a
//! fixed number of iterations as a warm start.

use nalgebra::DMatrix;

use super::linalg::{singular_value_threshold, soft_threshold, spectral_norm};
use super::{Decomposition, RdcrParams};
use crate::geometry::MeasurementMatrix;

/// Runs exactly `params.apg_iters` iterations of Nesterov-accelerated
/// proximal gradient on `μ‖L‖_* + λμ‖S‖_1 + ½‖W − L − S‖²_F` with
/// geometric continuation of `μ`.
pub fn apg_init(w: &MeasurementMatrix, params: &RdcrParams) -> Decomposition {
    apg_on_matrix(w.matrix(), params)
}

pub(crate) fn apg_on_matrix(w: &DMatrix<f64>, params: &RdcrParams) -> Decomposition {
    let (m, n) = w.shape();
    let lambda = params.apg_lambda_for(m, n);
    let mut l = DMatrix::zeros(m, n);
    let mut s = DMatrix::zeros(m, n);
    let mut l_prev = l.clone();
    let mut s_prev = s.clone();
    let mut t = 1.0_f64;
    let mut t_prev = 1.0_f64;
    let mut mu = 0.99 * spectral_norm(w);
    let mu_bar = params.mu_floor * mu;
    let mut trace = Vec::with_capacity(params.apg_iters);

    for _ in 0..params.apg_iters {
        let beta = (t_prev - 1.0) / t;
        let y_l = &l + (&l - &l_prev) * beta;
        let y_s = &s + (&s - &s_prev) * beta;
        let half_grad = (&y_l + &y_s - w) * 0.5;

        let l_next = singular_value_threshold(&(&y_l - &half_grad), mu / 2.0);
        let s_next = soft_threshold(&(&y_s - &half_grad), lambda * mu / 2.0);
        l_prev = std::mem::replace(&mut l, l_next);
        s_prev = std::mem::replace(&mut s, s_next);

        t_prev = t;
        t = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        mu = (params.apg_eta * mu).max(mu_bar);
        trace.push((w - &l - &s).norm());
    }
    Decomposition::new(w, l, s, params.apg_iters, mu, trace)
}
