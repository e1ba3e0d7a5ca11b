//! Bounded Levenberg–Marquardt for small dense least-squares problems.
//!
//! Minimizes `½‖r(θ)‖²` with a forward-difference Jacobian. The damped normal
//! equations use Marquardt scaling `(JᵀJ + λ·diag(JᵀJ))δ = -Jᵀr`. Variables
//! held at a bound by the gradient are frozen for the step, and each trial
//! point is projected onto the box.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid_param, Error, Result};

const REL_STEP: f64 = 1e-6;
const ABS_STEP: f64 = 1e-8;
const INITIAL_DAMPING: f64 = 1e-3;
const MAX_DAMPING: f64 = 1e16;

pub struct LsqProblem<F> {
    pub residuals: F,
    pub initial: Vec<f64>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub step_tolerance: f64,
}

impl<F> LsqProblem<F>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    pub fn new(residuals: F, initial: Vec<f64>) -> Self {
        Self {
            residuals,
            initial,
            lower: None,
            upper: None,
            max_iterations: 200,
            gradient_tolerance: 1e-10,
            step_tolerance: 1e-10,
        }
    }

    pub fn with_bounds(mut self, lower: Option<Vec<f64>>, upper: Option<Vec<f64>>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    GradientTolerance,
    StepTolerance,
    ZeroCost,
    /// Damping grew past its cap without an acceptable step.
    NoProgress,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsqSolution {
    pub params: Vec<f64>,
    pub initial_cost: f64,
    pub cost: f64,
    pub converged: bool,
    pub iterations: usize,
    pub termination: Termination,
}

#[derive(Debug, Clone)]
pub struct Jacobian {
    /// `n × p`, column `j` is ∂r/∂θ_j. Flagged columns are zeroed.
    pub matrix: DMatrix<f64>,
    /// Columns whose perturbed residuals were non-finite.
    pub flagged: Vec<usize>,
}

fn cost_of(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|v| v * v).sum::<f64>()
}

fn all_finite(r: &[f64]) -> bool {
    r.iter().all(|v| v.is_finite())
}

/// Forward-difference Jacobian at `params` with step `max(1e-6·|θ_j|, 1e-8)`.
/// The step flips sign when the forward point would leave `upper`.
pub fn numeric_jacobian<F>(
    residuals: &F,
    params: &[f64],
    base: &[f64],
    upper: Option<&[f64]>,
) -> Jacobian
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = base.len();
    let p = params.len();
    let mut matrix = DMatrix::zeros(n, p);
    let mut flagged = Vec::new();
    let mut probe = params.to_vec();
    for j in 0..p {
        let mut h = (REL_STEP * params[j].abs()).max(ABS_STEP);
        if let Some(u) = upper {
            if params[j] + h > u[j] {
                h = -h;
            }
        }
        probe[j] = params[j] + h;
        let shifted = residuals(&probe);
        probe[j] = params[j];
        if shifted.len() != n || !all_finite(&shifted) {
            flagged.push(j);
            continue;
        }
        let step = probe[j] + h - probe[j];
        for i in 0..n {
            matrix[(i, j)] = (shifted[i] - base[i]) / step;
        }
    }
    Jacobian { matrix, flagged }
}

fn project(x: &mut [f64], lower: Option<&[f64]>, upper: Option<&[f64]>) {
    for (j, v) in x.iter_mut().enumerate() {
        if let Some(l) = lower {
            *v = v.max(l[j]);
        }
        if let Some(u) = upper {
            *v = v.min(u[j]);
        }
    }
}

/// Variables held at a bound by a gradient pointing out of the feasible box.
fn pinned(grad: &DVector<f64>, x: &[f64], lower: Option<&[f64]>, upper: Option<&[f64]>) -> Vec<bool> {
    grad.iter()
        .enumerate()
        .map(|(j, &g)| {
            let at_lower = lower.is_some_and(|l| x[j] <= l[j]) && g > 0.0;
            let at_upper = upper.is_some_and(|u| x[j] >= u[j]) && g < 0.0;
            at_lower || at_upper
        })
        .collect()
}

fn projected_gradient_norm(grad: &DVector<f64>, pinned: &[bool]) -> f64 {
    grad.iter()
        .zip(pinned)
        .map(|(g, &pin)| if pin { 0.0 } else { g.abs() })
        .fold(0.0, f64::max)
}

pub fn solve_lsq<F>(problem: &LsqProblem<F>) -> Result<LsqSolution>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let p = problem.initial.len();
    let lower = problem.lower.as_deref();
    let upper = problem.upper.as_deref();
    for (name, b) in [("lower", lower), ("upper", upper)] {
        if b.is_some_and(|b| b.len() != p) {
            return Err(invalid_param!("{name} bounds need {p} entries"));
        }
    }
    let mut x = problem.initial.clone();
    let inside = x.iter().enumerate().all(|(j, &v)| {
        lower.is_none_or(|l| v >= l[j]) && upper.is_none_or(|u| v <= u[j])
    });
    if !inside {
        return Err(invalid_param!("initial point lies outside the bounds"));
    }

    let mut r = (problem.residuals)(&x);
    if !all_finite(&r) {
        return Err(Error::InvalidInput(
            "residuals are non-finite at the initial point".into(),
        ));
    }
    if r.len() < p {
        return Err(invalid_param!(
            "{} residuals cannot determine {p} parameters",
            r.len()
        ));
    }
    let initial_cost = cost_of(&r);
    let mut cost = initial_cost;
    let mut damping = INITIAL_DAMPING;
    let mut iterations = 0;
    let mut termination = Termination::IterationLimit;

    'outer: while iterations < problem.max_iterations {
        if cost == 0.0 {
            termination = Termination::ZeroCost;
            break;
        }
        iterations += 1;
        let jac = numeric_jacobian(&problem.residuals, &x, &r, upper);
        let j = &jac.matrix;
        let rv = DVector::from_column_slice(&r);
        let grad = j.transpose() * &rv;
        let pin = pinned(&grad, &x, lower, upper);
        if jac.flagged.is_empty() && projected_gradient_norm(&grad, &pin) < problem.gradient_tolerance
        {
            termination = Termination::GradientTolerance;
            break;
        }
        if !jac.flagged.is_empty() {
            damping *= 10.0;
        }
        let mut jtj = j.transpose() * j;
        let mut grad = grad;
        for k in (0..p).filter(|&k| pin[k]) {
            jtj.row_mut(k).fill(0.0);
            jtj.column_mut(k).fill(0.0);
            jtj[(k, k)] = 1.0;
            grad[k] = 0.0;
        }

        loop {
            if damping > MAX_DAMPING {
                termination = Termination::NoProgress;
                break 'outer;
            }
            let mut a = jtj.clone();
            for k in 0..p {
                a[(k, k)] += damping * jtj[(k, k)].max(1e-12);
            }
            let Some(delta) = a.cholesky().map(|c| c.solve(&(-&grad))) else {
                damping *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(a, b)| a + b).collect();
            project(&mut trial, lower, upper);
            let trial_r = (problem.residuals)(&trial);
            let trial_cost = if all_finite(&trial_r) {
                cost_of(&trial_r)
            } else {
                f64::INFINITY
            };
            if trial_cost <= cost {
                let step: f64 = trial
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let scale: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                x = trial;
                r = trial_r;
                cost = trial_cost;
                damping = (damping / 10.0).max(1e-15);
                if step <= problem.step_tolerance * (scale + problem.step_tolerance) {
                    termination = Termination::StepTolerance;
                    break 'outer;
                }
                break;
            }
            damping *= 10.0;
        }
    }

    let converged = !matches!(termination, Termination::IterationLimit);
    Ok(LsqSolution {
        params: x,
        initial_cost,
        cost,
        converged,
        iterations,
        termination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_problem_matches_normal_equations() {
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let b = DVector::from_column_slice(&[1.0, 2.9, 5.2, 6.8]);
        let (a2, b2) = (a.clone(), b.clone());
        let problem = LsqProblem::new(
            move |th: &[f64]| {
                let t = DVector::from_column_slice(th);
                (&a2 * t - &b2).iter().copied().collect()
            },
            vec![0.0, 0.0],
        );
        let sol = solve_lsq(&problem).unwrap();
        let exact = (a.transpose() * &a)
            .cholesky()
            .unwrap()
            .solve(&(a.transpose() * &b));
        for k in 0..2 {
            assert!((sol.params[k] - exact[k]).abs() < 1e-8, "{:?}", sol);
        }
        assert!(sol.converged);
    }

    #[test]
    fn rosenbrock_residuals() {
        let problem = LsqProblem::new(
            |th: &[f64]| vec![10.0 * (th[1] - th[0] * th[0]), 1.0 - th[0]],
            vec![-1.2, 1.0],
        );
        let sol = solve_lsq(&problem).unwrap();
        assert!((sol.params[0] - 1.0).abs() < 1e-6, "{sol:?}");
        assert!((sol.params[1] - 1.0).abs() < 1e-6, "{sol:?}");
        assert!(sol.cost <= sol.initial_cost);
    }

    #[test]
    fn bounds_are_respected() {
        // unconstrained optimum at 3, box caps at 2
        let problem = LsqProblem::new(|th: &[f64]| vec![th[0] - 3.0, 0.0], vec![0.0])
            .with_bounds(Some(vec![-1.0]), Some(vec![2.0]));
        let sol = solve_lsq(&problem).unwrap();
        assert!((sol.params[0] - 2.0).abs() < 1e-12);
        assert!(sol.converged);
    }

    #[test]
    fn rejects_bad_starts() {
        let p = LsqProblem::new(|_: &[f64]| vec![f64::NAN], vec![0.0]);
        assert!(matches!(solve_lsq(&p), Err(Error::InvalidInput(_))));
        let p = LsqProblem::new(|th: &[f64]| vec![th[0]], vec![5.0])
            .with_bounds(Some(vec![0.0]), Some(vec![1.0]));
        assert!(solve_lsq(&p).is_err());
        let p = LsqProblem::new(|th: &[f64]| vec![th[0] + th[1]], vec![0.0, 0.0]);
        assert!(solve_lsq(&p).is_err());
    }

    #[test]
    fn recovers_from_non_finite_region() {
        // log blows up for th <= 0; the start is far enough that a full step overshoots
        let problem = LsqProblem::new(
            |th: &[f64]| {
                let v = if th[0] > 0.0 { th[0].ln() } else { f64::NAN };
                vec![v - 0.1, 0.0]
            },
            vec![20.0],
        );
        let sol = solve_lsq(&problem).unwrap();
        assert!((sol.params[0] - 0.1f64.exp()).abs() < 1e-6, "{sol:?}");
    }

    #[test]
    fn jacobian_of_linear_and_quadratic_maps() {
        let a = [[1.0, -2.0], [0.5, 4.0], [3.0, 0.0]];
        let f = |th: &[f64]| -> Vec<f64> {
            a.iter().map(|row| row[0] * th[0] + row[1] * th[1]).collect()
        };
        let x = [0.7, -1.3];
        let jac = numeric_jacobian(&f, &x, &f(&x), None);
        for (i, row) in a.iter().enumerate() {
            for (j, &aij) in row.iter().enumerate() {
                let rel = (jac.matrix[(i, j)] - aij).abs() / aij.abs().max(1.0);
                assert!(rel < 1e-6);
            }
        }
        let g = |th: &[f64]| vec![th[0] * th[0]];
        let jac = numeric_jacobian(&g, &[3.0], &g(&[3.0]), None);
        assert!((jac.matrix[(0, 0)] - 6.0).abs() < 1e-4);
    }

    #[test]
    fn jacobian_flags_non_finite_columns() {
        let f = |th: &[f64]| vec![if th[1] > 1.0 { f64::NAN } else { th[0] + th[1] }];
        let jac = numeric_jacobian(&f, &[0.0, 1.0], &[1.0], None);
        assert_eq!(jac.flagged, vec![1]);
        assert_eq!(jac.matrix[(0, 1)], 0.0);
    }
}
