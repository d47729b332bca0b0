//! Projected proximal gradient with a hard rank constraint on `L`.

use nalgebra::DMatrix;

use super::apg::apg_on_matrix;
use super::linalg::{skinny_svd_project, soft_threshold};
use super::classify::classify_outliers;
use super::{Decomposition, RdcrOutput, RdcrParams};
use crate::error::{Error, Result};
use crate::geometry::{MeasurementMatrix, MIN_MATCHES};

/// Initializes with [`super::apg_init`] and refines for `params.k_max`
/// iterations under `rank(L) ≤ params.rank`.
pub fn rdcr_decompose(w: &MeasurementMatrix, params: &RdcrParams) -> Result<Decomposition> {
    Ok(rdcr_stage(w, params)?.refined)
}

/// Decomposes `w` and classifies its columns, keeping the initialization
/// for comparison.
pub fn rdcr_stage(w: &MeasurementMatrix, params: &RdcrParams) -> Result<RdcrOutput> {
    check_input(w.matrix(), params)?;
    let init = apg_on_matrix(w.matrix(), params);
    let refined = rdcr_from_init(w.matrix(), &init, params)?;
    let mask = classify_outliers(&refined.s, params.tau0);
    Ok(RdcrOutput { init, refined, mask })
}

fn check_input(w: &DMatrix<f64>, params: &RdcrParams) -> Result<()> {
    if w.ncols() < MIN_MATCHES {
        return Err(Error::InsufficientData {
            required: MIN_MATCHES,
            actual: w.ncols(),
        });
    }
    params.validate(w.ncols())
}

/// The refinement loop started from an arbitrary initialization.
pub fn rdcr_from_init(w: &DMatrix<f64>, init: &Decomposition, params: &RdcrParams) -> Result<Decomposition> {
    check_input(w, params)?;
    if init.l.shape() != w.shape() || init.s.shape() != w.shape() {
        return Err(Error::Contract(format!(
            "initialization is {:?}/{:?} but the data is {:?}",
            init.l.shape(),
            init.s.shape(),
            w.shape()
        )));
    }
    if params.k_max == 0 {
        return Ok(init.clone());
    }

    let (m, n) = w.shape();
    let scale = ((m * n) as f64).sqrt();
    let truncated = skinny_svd_project(w, params.rank);
    let mut mu = params.delta * (w - truncated).norm() / scale;
    let mut l = init.l.clone();
    let mut s = init.s.clone();
    let mut trace = Vec::with_capacity(params.k_max);

    for _ in 0..params.k_max {
        let d = &l + &s - w;
        l = skinny_svd_project(&(&l - &d * params.alpha_l), params.rank);
        s = soft_threshold(&(&s - &d * params.alpha_s), mu);
        let mu_d = params.delta * d.norm() / scale;
        mu = (mu_d / params.lambda).max(params.mu_floor);
        trace.push((w - &l - &s).norm());
    }
    Ok(Decomposition::new(w, l, s, params.k_max, mu, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Normalization, StereoRig};
    use crate::rdcr::linalg::singular_values;
    use crate::synthgen::{generate_scene, CorruptionConfig};

    fn scene_w(n: usize, po: f64, sn: f64, seed: u64) -> (MeasurementMatrix, Vec<bool>) {
        let rig = StereoRig::kitti_00();
        let cfg = CorruptionConfig::new(n, po, sn, seed);
        let scene = generate_scene(&rig, &cfg).unwrap();
        let w = MeasurementMatrix::build(&scene.matches_corrupt, Normalization::KInverse, &rig).unwrap();
        (w, scene.outlier_truth)
    }

    #[test]
    fn noiseless_input_is_split_exactly() {
        // The warm start leaves an in-subspace remainder in S that the
        // rank-constrained steps cannot see; the split itself stays exact.
        let (w, _) = scene_w(200, 0.0, 0.0, 1);
        let d = rdcr_decompose(&w, &RdcrParams::default()).unwrap();
        assert!(d.residual < 1e-6 * w.matrix().norm(), "{}", d.residual);
        let s = singular_values(&(&d.l + &d.s));
        assert!(s[6] / s[0] < 1e-10);
    }

    #[test]
    fn rank_constraint_holds() {
        let (w, _) = scene_w(300, 0.3, 1.5, 2);
        let d = rdcr_decompose(&w, &RdcrParams::default()).unwrap();
        let s = singular_values(&d.l);
        assert!(s[6] / s[0] < 1e-8);
        assert_eq!(d.l.shape(), w.matrix().shape());
        assert_eq!(d.iterations_run, 20);
    }

    #[test]
    fn zero_iterations_return_init() {
        let (w, _) = scene_w(100, 0.3, 1.5, 3);
        let params = RdcrParams {
            k_max: 0,
            ..RdcrParams::default()
        };
        let out = rdcr_stage(&w, &params).unwrap();
        assert_eq!(out.init, out.refined);
    }

    #[test]
    fn mismatched_init_is_a_contract_error() {
        let (w, _) = scene_w(100, 0.3, 1.5, 4);
        let init = rdcr_stage(&w, &RdcrParams::default()).unwrap().init;
        let other = DMatrix::zeros(8, 50);
        let err = rdcr_from_init(&other, &init, &RdcrParams::default());
        assert!(matches!(err, Err(Error::Contract(_))));
    }

    #[test]
    fn too_few_columns_are_refused() {
        let w = DMatrix::zeros(8, 6);
        let init = apg_on_matrix(&w, &RdcrParams::default());
        let err = rdcr_from_init(&w, &init, &RdcrParams::default());
        assert!(matches!(err, Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn outlier_columns_carry_larger_sparse_mass() {
        let (w, truth) = scene_w(1000, 0.3, 1.5, 5);
        let d = rdcr_decompose(&w, &RdcrParams::default()).unwrap();
        let col = |j: usize| d.s.column(j).iter().map(|x| x.abs()).sum::<f64>();
        let mut out: Vec<f64> = (0..truth.len()).filter(|&j| truth[j]).map(col).collect();
        let mut inl: Vec<f64> = (0..truth.len()).filter(|&j| !truth[j]).map(col).collect();
        out.sort_by(f64::total_cmp);
        inl.sort_by(f64::total_cmp);
        // Compare matching quantiles of the two distributions.
        let q = 100;
        let wins = (0..q)
            .filter(|&k| {
                let p = (k as f64 + 0.5) / q as f64;
                let a = out[(p * out.len() as f64) as usize];
                let b = inl[(p * inl.len() as f64) as usize];
                a > b
            })
            .count();
        assert!(wins >= 90, "{wins}");
    }

    #[test]
    fn deterministic() {
        let (w, _) = scene_w(200, 0.3, 1.5, 6);
        let a = rdcr_decompose(&w, &RdcrParams::default()).unwrap();
        let b = rdcr_decompose(&w, &RdcrParams::default()).unwrap();
        assert_eq!(a, b);
    }
}
