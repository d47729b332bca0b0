//! Levenberg–Marquardt on twist coordinates for the compressed cost.

use nalgebra::{Matrix4, SMatrix, SVector, Vector6};

use super::algebraic::{Stacked, StackedModel};
use super::rmm::ReducedMeasurement;
use crate::error::{Error, Result};
use crate::geometry::se3::DEFAULT_SERIES_ORDER;
use crate::geometry::{exp_jacobian, exp_se3, Twist};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LmConfig {
    pub max_iters: usize,
    pub series_order: usize,
    /// Initial damping relative to the mean diagonal of the normal matrix.
    pub initial_damping: f64,
    pub rel_decrease_tol: f64,
    /// Steps shorter than `step_tol · (1 + ‖ω‖)` end the search. A start whose
    /// undamped step is already this short is returned unchanged.
    pub step_tol: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        LmConfig {
            max_iters: 50,
            series_order: DEFAULT_SERIES_ORDER,
            initial_damping: 1e-3,
            rel_decrease_tol: 1e-12,
            step_tol: 1e-10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    AlreadyOptimal,
    SmallDecrease,
    SmallStep,
    MaxIterations,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LmDiagnostics {
    /// Linear solves performed, accepted or not.
    pub iterations: usize,
    pub accepted: usize,
    /// Cost at the start and after every accepted step.
    pub cost_trace: Vec<f64>,
    pub termination: Termination,
    pub final_cost: f64,
}

/// Derivative of the stacked model along each twist coordinate.
fn stacked_jacobian(w: &Twist, order: usize) -> SMatrix<f64, 13, 6> {
    let d = exp_jacobian(w, order);
    let mut j = SMatrix::<f64, 13, 6>::zeros();
    for (i, di) in d.iter().enumerate() {
        j.set_column(i, &stack_block(di));
    }
    j
}

fn stack_block(m: &Matrix4<f64>) -> Stacked {
    let mut v = Stacked::zeros();
    for row in 0..3 {
        for col in 0..3 {
            v[3 * row + col] = m[(row, col)];
        }
        v[9 + row] = m[(row, 3)];
    }
    v
}

/// Cost and its gradient `∂ᵢE = 2 (∂ᵢξ)ᵀ Γ ξ`.
pub fn cost_gradient(rm: &ReducedMeasurement, w: &Twist, order: usize) -> (f64, Vector6<f64>) {
    let xi = StackedModel::from_rigid(&exp_se3(w)).0;
    let j = stacked_jacobian(w, order);
    (rm.cost_of(&xi), j.transpose() * (rm.gamma * xi) * 2.0)
}

fn residual(rm: &ReducedMeasurement, w: &Twist) -> SVector<f64, 13> {
    rm.factor * StackedModel::from_rigid(&exp_se3(w)).0
}

fn numerical_failure(iteration: usize, reason: &str, trace: &[f64]) -> Error {
    Error::NumericalFailure {
        iteration,
        reason: reason.to_string(),
        cost_trace: trace.to_vec(),
    }
}

/// Minimizes `‖F m̆(ω)‖²` starting from `w0`.
pub fn lm_optimize(rm: &ReducedMeasurement, w0: &Twist, cfg: &LmConfig) -> Result<(Twist, LmDiagnostics)> {
    let mut w = *w0;
    let mut r = residual(rm, &w);
    let mut cost = r.norm_squared();
    let mut trace = vec![cost];
    if !cost.is_finite() {
        return Err(numerical_failure(0, "non-finite initial cost", &trace));
    }
    let mut diag = LmDiagnostics {
        iterations: 0,
        accepted: 0,
        cost_trace: Vec::new(),
        termination: Termination::MaxIterations,
        final_cost: cost,
    };

    let mut fj = rm.factor * stacked_jacobian(&w, cfg.series_order);
    let short = |step: &Vector6<f64>, w: &Twist| step.norm() <= cfg.step_tol * (1.0 + w.0.norm());
    let undamped = (fj.transpose() * fj).cholesky().map(|c| -c.solve(&(fj.transpose() * r)));
    if cost == 0.0 || undamped.is_some_and(|s| short(&s, &w)) {
        diag.termination = Termination::AlreadyOptimal;
        diag.cost_trace = trace;
        return Ok((w, diag));
    }

    let mut lambda: Option<f64> = None;
    while diag.iterations < cfg.max_iters {
        diag.iterations += 1;
        let h = fj.transpose() * fj;
        let g = fj.transpose() * r;
        if !(h.iter().all(|x| x.is_finite()) && g.iter().all(|x| x.is_finite())) {
            return Err(numerical_failure(diag.iterations, "non-finite gradient", &trace));
        }
        let lam = *lambda.get_or_insert_with(|| cfg.initial_damping * h.trace() / 6.0);
        let mut damped = h;
        for i in 0..6 {
            damped[(i, i)] += lam;
        }
        let step = match damped.cholesky() {
            Some(c) => -c.solve(&g),
            None => {
                lambda = Some(lam * 10.0);
                continue;
            }
        };
        if short(&step, &w) {
            diag.termination = Termination::SmallStep;
            break;
        }

        let candidate = Twist(w.0 + step);
        let r_new = residual(rm, &candidate);
        let cost_new = r_new.norm_squared();
        if !cost_new.is_finite() {
            return Err(numerical_failure(diag.iterations, "non-finite cost", &trace));
        }
        if cost_new < cost {
            let decrease = (cost - cost_new) / cost;
            w = candidate;
            r = r_new;
            cost = cost_new;
            trace.push(cost);
            diag.accepted += 1;
            lambda = Some(lam / 10.0);
            if cost == 0.0 || decrease < cfg.rel_decrease_tol {
                diag.termination = Termination::SmallDecrease;
                break;
            }
            fj = rm.factor * stacked_jacobian(&w, cfg.series_order);
        } else {
            lambda = Some(lam * 10.0);
        }
    }
    diag.final_cost = cost;
    diag.cost_trace = trace;
    Ok((w, diag))
}
