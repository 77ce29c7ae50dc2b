//! Derivative-free minimization shared by the likelihood estimators.

use argmin::core::{CostFunction, Executor, State, TerminationReason, TerminationStatus};
use argmin::solver::neldermead::NelderMead;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: u64,
    pub converged: bool,
}

struct Objective<F>(F);

impl<F> CostFunction for Objective<F>
where
    F: Fn(&[f64]) -> f64,
{
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let v = (self.0)(p);
        // non-finite values would poison the simplex ordering
        Ok(if v.is_finite() { v } else { f64::MAX })
    }
}

/// Nelder-Mead from `x0` with an axis-aligned initial simplex of size `step`.
pub(crate) fn nelder_mead<F>(f: F, x0: &[f64], step: f64, max_iter: u64, tol: f64) -> Result<Minimum>
where
    F: Fn(&[f64]) -> f64,
{
    let mut simplex = vec![x0.to_vec()];
    for i in 0..x0.len() {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(tol)
        .map_err(|e| Error::Domain(e.to_string()))?;
    let res = Executor::new(Objective(f), solver)
        .configure(|s| s.max_iters(max_iter))
        .run()
        .map_err(|e| Error::Estimation {
            reason: e.to_string(),
            iterations: 0,
            best_objective: f64::NAN,
            best_params: x0.to_vec(),
        })?;
    let state = res.state();
    let converged = matches!(
        state.get_termination_status(),
        TerminationStatus::Terminated(TerminationReason::SolverConverged)
    );
    Ok(Minimum {
        x: state.get_best_param().cloned().unwrap_or_else(|| x0.to_vec()),
        value: state.get_best_cost(),
        iterations: state.get_iter(),
        converged,
    })
}

/// Repeated Nelder-Mead restarts from the incumbent until the objective stops
/// improving; errors if the final run still hits the iteration cap.
pub(crate) fn minimize<F>(f: F, x0: &[f64], step: f64, max_iter: u64) -> Result<Minimum>
where
    F: Fn(&[f64]) -> f64,
{
    let mut best = nelder_mead(&f, x0, step, max_iter, 1e-12)?;
    let mut total = best.iterations;
    for _ in 0..3 {
        let next = nelder_mead(&f, &best.x, step * 0.1, max_iter, 1e-12)?;
        total += next.iterations;
        let improved = next.value < best.value - 1e-10 * (1.0 + best.value.abs());
        if next.value <= best.value {
            best = next;
        }
        if !improved {
            break;
        }
    }
    best.iterations = total;
    if !best.converged {
        return Err(Error::Estimation {
            reason: "Nelder-Mead iteration cap reached".into(),
            iterations: total,
            best_objective: best.value,
            best_params: best.x,
        });
    }
    Ok(best)
}
