//! Safeguarded Newton minimisation of smooth convex dual functions.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Objective value, gradient and (optionally) Hessian at one point.
#[derive(Debug, Clone)]
pub struct DualEvaluation {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Option<DMatrix<f64>>,
}

/// A smooth convex function of the Lagrange multipliers.
pub trait DualProblem {
    fn dim(&self) -> usize;

    fn evaluate(&self, lambdas: &[f64], with_hessian: bool) -> DualEvaluation;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Convergence threshold on the max-norm of the gradient.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Sufficient-decrease constant of the backtracking line search.
    pub armijo: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            max_iterations: 200,
            armijo: 1e-4,
            backtrack: 0.5,
            max_backtracks: 60,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DualSolution {
    pub lambdas: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub gradient_norm: f64,
    pub iterations: usize,
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn check_finite(eval: &DualEvaluation) -> Result<()> {
    if !eval.value.is_finite() || eval.gradient.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite(format!(
            "objective {} with gradient {:?}",
            eval.value, eval.gradient
        )));
    }
    Ok(())
}

/// Newton direction from a Cholesky solve; when the Hessian is (near) singular the diagonal
/// is shifted progressively, ending in a diagonally scaled gradient step.
fn newton_direction(hessian: &DMatrix<f64>, gradient: &[f64]) -> Vec<f64> {
    let n = gradient.len();
    let g = DVector::from_column_slice(gradient);
    let scale = (0..n).map(|i| hessian[(i, i)].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut shift = 0.0;
    for attempt in 0..14 {
        let mut h = hessian.clone();
        for i in 0..n {
            h[(i, i)] += shift;
        }
        if let Some(chol) = h.cholesky() {
            let step = -chol.solve(&g);
            if step.iter().all(|s| s.is_finite()) && step.dot(&g) < 0.0 {
                return step.iter().copied().collect();
            }
        }
        shift = scale * 1e-12 * 10f64.powi(attempt);
    }
    gradient.iter().map(|gi| -gi / scale).collect()
}

/// Minimises `problem` from `initial` by Newton steps with Armijo backtracking.
pub fn minimize<P: DualProblem + ?Sized>(
    problem: &P,
    initial: &[f64],
    options: &SolverOptions,
) -> Result<DualSolution> {
    let n = problem.dim();
    if initial.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: initial.len(),
        });
    }
    let mut lambdas = initial.to_vec();
    let mut eval = problem.evaluate(&lambdas, true);
    check_finite(&eval)?;
    for iteration in 0..=options.max_iterations {
        let gnorm = max_norm(&eval.gradient);
        if gnorm < options.tolerance || n == 0 {
            return Ok(DualSolution {
                lambdas,
                value: eval.value,
                gradient: eval.gradient,
                gradient_norm: gnorm,
                iterations: iteration,
            });
        }
        if iteration == options.max_iterations {
            break;
        }
        let hessian = eval.hessian.as_ref().expect("hessian requested");
        let direction = newton_direction(hessian, &eval.gradient);
        let slope: f64 = direction.iter().zip(&eval.gradient).map(|(d, g)| d * g).sum();

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..options.max_backtracks {
            let trial: Vec<f64> = lambdas.iter().zip(&direction).map(|(l, d)| l + step * d).collect();
            let trial_eval = problem.evaluate(&trial, true);
            if trial_eval.value.is_finite() && trial_eval.gradient.iter().all(|g| g.is_finite()) {
                let sufficient = trial_eval.value <= eval.value + options.armijo * step * slope;
                // Near the optimum the decrease drowns in rounding; accept on a smaller gradient.
                let flat = (trial_eval.value - eval.value).abs() <= 1e-14 * (1.0 + eval.value.abs())
                    && max_norm(&trial_eval.gradient) < gnorm;
                if sufficient || flat {
                    accepted = Some((trial, trial_eval));
                    break;
                }
            }
            step *= options.backtrack;
        }
        match accepted {
            Some((trial, trial_eval)) => {
                lambdas = trial;
                eval = trial_eval;
            }
            None => {
                return Err(Error::NotConverged {
                    iterations: iteration + 1,
                    gradient_norm: gnorm,
                })
            }
        }
    }
    Err(Error::NotConverged {
        iterations: options.max_iterations,
        gradient_norm: max_norm(&eval.gradient),
    })
}
