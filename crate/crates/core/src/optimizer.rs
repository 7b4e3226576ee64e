//! Fixed-step Riemannian gradient descent with exact exp-map updates.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fullcost::{cost_full, grad_full, GroundTruth};
use crate::grassmann::{exp_map, principal_angles, SubspacePoint, TangentVector};
use crate::partialcost::{cost_partial, grad_partial, PartialProblem};

/// Which cost to descend.
#[derive(Debug, Clone, Copy)]
pub enum Objective<'a> {
    Full(&'a GroundTruth),
    Partial(&'a PartialProblem),
}

impl<'a> Objective<'a> {
    pub fn truth(&self) -> &'a GroundTruth {
        match *self {
            Objective::Full(gt) => gt,
            Objective::Partial(problem) => problem.gt(),
        }
    }

    pub fn cost(&self, x: &SubspacePoint) -> Result<f64> {
        match *self {
            Objective::Full(gt) => cost_full(gt, x),
            Objective::Partial(problem) => cost_partial(problem, x),
        }
    }

    pub fn grad(&self, x: &SubspacePoint) -> Result<TangentVector> {
        match *self {
            Objective::Full(gt) => grad_full(gt, x),
            Objective::Partial(problem) => grad_partial(problem, x),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub step_size: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Relative stall tolerance: stop when `|c_k − c_{k−1}| ≤ cost_tol · c_k`.
    pub cost_tol: f64,
    pub record_angles: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            step_size: 0.1,
            max_iters: 10_000,
            grad_tol: 1e-10,
            cost_tol: 1e-14,
            record_angles: true,
        }
    }
}

impl OptimizerConfig {
    /// Defaults with the gradient tolerance scaled by `σ_max²`.
    pub fn for_truth(gt: &GroundTruth) -> Self {
        let s = gt.sigma_max();
        Self {
            grad_tol: 1e-10 * s * s,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::invalid("step size must be positive"));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if !(self.grad_tol >= 0.0) || !(self.cost_tol >= 0.0) {
            return Err(Error::invalid("tolerances must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    ConvergedGrad,
    ConvergedCost,
    MaxIters,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::ConvergedGrad => "converged_grad",
            Status::ConvergedCost => "converged_cost",
            Status::MaxIters => "max_iters",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    pub cost: f64,
    pub grad_norm: f64,
    /// Principal angles to the ground-truth subspace, descending.
    pub angles: Option<Vec<f64>>,
    pub incoherence: f64,
}

impl IterRecord {
    pub fn max_angle(&self) -> Option<f64> {
        self.angles.as_ref().and_then(|a| a.first().copied())
    }
}

/// How the incoherence column was defined; the figure it mirrors does not say.
pub const INCOHERENCE_SOURCE: &str = "nonstandard-source";

#[derive(Debug, Clone)]
pub struct OptimizerTrace {
    pub records: Vec<IterRecord>,
    pub status: Status,
    pub final_point: SubspacePoint,
    pub incoherence_source: &'static str,
}

impl OptimizerTrace {
    pub fn final_cost(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.cost)
    }

    pub fn costs(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.cost).collect()
    }
}

/// `(m / r) · max_i ‖row_i(x)‖²`; between 1 and `m / r`.
pub fn incoherence(x: &SubspacePoint) -> f64 {
    let rep = x.rep();
    let (m, r) = rep.shape();
    let widest = (0..m)
        .map(|i| rep.row(i).iter().map(|v| v * v).sum::<f64>())
        .fold(0.0_f64, f64::max);
    m as f64 / r as f64 * widest
}

/// One update `exp_x(−η · grad f(x))`.
pub fn rgd_step(objective: Objective<'_>, x: &SubspacePoint, eta: f64) -> Result<SubspacePoint> {
    if !(eta > 0.0) {
        return Err(Error::invalid("step size must be positive"));
    }
    let grad = objective.grad(x)?;
    Ok(exp_map(&grad.scaled(-eta)))
}

/// Iterates [`rgd_step`] from `x0`, recording every iterate.
///
/// A rank-deficient inner solve is reported as [`Error::DegenerateAt`] with
/// the iteration index.
pub fn run(objective: Objective<'_>, x0: &SubspacePoint, config: &OptimizerConfig) -> Result<OptimizerTrace> {
    config.validate()?;
    let truth = objective.truth();
    let at_iter = |iter: usize| {
        move |e: Error| match e {
            Error::Degenerate { column } => Error::DegenerateAt { iter, column },
            other => other,
        }
    };

    let mut x = x0.clone();
    let mut records: Vec<IterRecord> = Vec::new();
    let mut iter = 0;
    let status = loop {
        let cost = objective.cost(&x).map_err(at_iter(iter))?;
        let grad = objective.grad(&x).map_err(at_iter(iter))?;
        let grad_norm = grad.norm();
        let angles = if config.record_angles {
            Some(principal_angles(&x, truth.u())?.as_slice().to_vec())
        } else {
            None
        };
        let previous = records.last().map(|r| r.cost);
        records.push(IterRecord {
            iter,
            cost,
            grad_norm,
            angles,
            incoherence: incoherence(&x),
        });

        if grad_norm <= config.grad_tol {
            break Status::ConvergedGrad;
        }
        if previous.is_some_and(|c| (cost - c).abs() <= config.cost_tol * cost) {
            break Status::ConvergedCost;
        }
        if iter == config.max_iters {
            break Status::MaxIters;
        }
        x = exp_map(&grad.scaled(-config.step_size));
        iter += 1;
    };
    Ok(OptimizerTrace {
        records,
        status,
        final_point: x,
        incoherence_source: INCOHERENCE_SOURCE,
    })
}
