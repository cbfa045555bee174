//! Nelder-Mead simplex minimization on the non-negative orthant.
//!
//! Candidate points are projected onto the feasible region by clamping
//! negative coordinates to zero before evaluation, so the objective is
//! only ever called on valid order vectors.

use crate::error::{Error, Result};

/// Options of one Nelder-Mead run.
#[derive(Debug, Clone)]
pub struct NmOptions {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Total objective-evaluation budget.
    pub max_evals: usize,
    /// Converged when the objective spread over the simplex drops below
    /// this absolute value while...
    pub objective_tolerance: f64,
    /// ...every coordinate spread is below this one.
    pub parameter_tolerance: f64,
}

impl Default for NmOptions {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            max_evals: 400,
            objective_tolerance: 1e-2,
            parameter_tolerance: 1e-6,
        }
    }
}

impl NmOptions {
    /// Budget scaled to the problem dimension, with the parameter spread
    /// tolerance sized for order quantities that get rounded to integers
    /// anyway.
    pub fn for_dimension(dim: usize, max_evals_per_dim: usize, objective_tolerance: f64) -> Self {
        Self {
            max_evals: max_evals_per_dim * dim.max(1),
            objective_tolerance,
            parameter_tolerance: 0.25,
            ..Self::default()
        }
    }
}

/// Best point found and bookkeeping.
#[derive(Debug, Clone)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

struct Vertex {
    x: Vec<f64>,
    value: f64,
}

fn clamp_nonnegative(x: &mut [f64]) {
    for v in x.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Minimize `f` starting from `x0` with per-coordinate initial steps.
/// Returns the best vertex after convergence or budget exhaustion; a NaN
/// objective value aborts with a diagnostic.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    steps: &[f64],
    opts: &NmOptions,
) -> Result<NmResult> {
    let dim = x0.len();
    if dim == 0 {
        return Err(Error::Optimizer("zero-dimensional problem".into()));
    }
    debug_assert_eq!(steps.len(), dim);

    // The objective sees the projected (clamped) point while the simplex
    // keeps the raw coordinates: projecting stored vertices can make the
    // simplex degenerate, which stalls the search on collapsed geometry.
    let mut evaluations = 0usize;
    let mut scratch = vec![0.0f64; dim];
    let mut eval = |x: &[f64], evals: &mut usize| -> Result<f64> {
        scratch.copy_from_slice(x);
        clamp_nonnegative(&mut scratch);
        let v = f(&scratch);
        *evals += 1;
        if v.is_nan() {
            return Err(Error::Optimizer(format!(
                "objective returned NaN at {scratch:?} after {evals} evaluations"
            )));
        }
        Ok(v)
    };

    let mut simplex: Vec<Vertex> = Vec::with_capacity(dim + 1);
    let start = x0.to_vec();
    let value = eval(&start, &mut evaluations)?;
    simplex.push(Vertex { x: start, value });
    for i in 0..dim {
        let mut x = simplex[0].x.clone();
        x[i] += steps[i].max(f64::EPSILON);
        let value = eval(&x, &mut evaluations)?;
        simplex.push(Vertex { x, value });
    }

    let mut converged = false;
    loop {
        // Ascending by value; ties keep earlier vertices first so runs
        // are reproducible.
        simplex.sort_by(|a, b| a.value.total_cmp(&b.value));

        let spread = simplex[dim].value - simplex[0].value;
        let x_spread = (0..dim)
            .map(|i| {
                let lo = simplex.iter().map(|v| v.x[i]).fold(f64::INFINITY, f64::min);
                let hi = simplex
                    .iter()
                    .map(|v| v.x[i])
                    .fold(f64::NEG_INFINITY, f64::max);
                hi - lo
            })
            .fold(0.0f64, f64::max);
        if spread <= opts.objective_tolerance && x_spread <= opts.parameter_tolerance {
            converged = true;
            break;
        }
        if evaluations >= opts.max_evals {
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|i| simplex[..dim].iter().map(|v| v.x[i]).sum::<f64>() / dim as f64)
            .collect();
        let worst = simplex[dim].value;
        let best = simplex[0].value;
        let second_worst = simplex[dim - 1].value;

        let point_along = |coef: f64| -> Vec<f64> {
            (0..dim)
                .map(|i| centroid[i] + coef * (centroid[i] - simplex[dim].x[i]))
                .collect()
        };

        let reflected = point_along(opts.reflection);
        let reflected_value = eval(&reflected, &mut evaluations)?;

        if reflected_value < best {
            let expanded = point_along(opts.reflection * opts.expansion);
            let expanded_value = eval(&expanded, &mut evaluations)?;
            simplex[dim] = if expanded_value < reflected_value {
                Vertex {
                    x: expanded,
                    value: expanded_value,
                }
            } else {
                Vertex {
                    x: reflected,
                    value: reflected_value,
                }
            };
            continue;
        }
        if reflected_value < second_worst {
            simplex[dim] = Vertex {
                x: reflected,
                value: reflected_value,
            };
            continue;
        }

        let contracted = if reflected_value < worst {
            point_along(opts.reflection * opts.contraction)
        } else {
            point_along(-opts.contraction)
        };
        let contracted_value = eval(&contracted, &mut evaluations)?;
        if contracted_value < worst.min(reflected_value) {
            simplex[dim] = Vertex {
                x: contracted,
                value: contracted_value,
            };
            continue;
        }

        // Shrink toward the best vertex.
        for i in 1..=dim {
            let x: Vec<f64> = (0..dim)
                .map(|j| simplex[0].x[j] + opts.shrink * (simplex[i].x[j] - simplex[0].x[j]))
                .collect();
            let value = eval(&x, &mut evaluations)?;
            simplex[i] = Vertex { x, value };
        }
    }

    simplex.sort_by(|a, b| a.value.total_cmp(&b.value));
    let mut best = simplex.into_iter().next().unwrap();
    clamp_nonnegative(&mut best.x);
    Ok(NmResult {
        x: best.x,
        value: best.value,
        evaluations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tight() -> NmOptions {
        NmOptions {
            max_evals: 2000,
            objective_tolerance: 1e-10,
            parameter_tolerance: 1e-8,
            ..NmOptions::default()
        }
    }

    #[test]
    fn one_dimensional_quadratic() {
        let r = nelder_mead(|x| (x[0] - 3.0).powi(2), &[0.0], &[1.0], &tight()).unwrap();
        assert!((r.x[0] - 3.0).abs() < 1e-4, "{:?}", r.x);
    }

    #[test]
    fn two_dimensional_quadratic_with_offset() {
        let f = |x: &[f64]| (x[0] - 10.0).powi(2) + 2.0 * (x[1] - 5.0).powi(2) + 7.0;
        let r = nelder_mead(f, &[0.0, 0.0], &[1.0, 1.0], &tight()).unwrap();
        assert!((r.x[0] - 10.0).abs() < 1e-3);
        assert!((r.x[1] - 5.0).abs() < 1e-3);
        assert!((r.value - 7.0).abs() < 1e-3);
    }

    #[test]
    fn boundary_minimum_reached_by_clamping() {
        let r = nelder_mead(|x| x[0].abs(), &[4.0], &[1.0], &tight()).unwrap();
        assert!(r.x[0].abs() < 1e-6, "{:?}", r.x);
    }

    #[test]
    fn all_candidates_are_nonnegative() {
        let mut violated = false;
        let f = |x: &[f64]| {
            if x.iter().any(|&v| v < 0.0) {
                // Can't assert inside the closure without unwinding
                // through the optimizer; record instead.
                return f64::MAX;
            }
            (x[0] - 1.0).powi(2) + (x[1] + 2.0).powi(2)
        };
        let r = nelder_mead(f, &[5.0, 5.0], &[2.0, 2.0], &tight()).unwrap();
        violated |= r.x.iter().any(|&v| v < 0.0);
        assert!(!violated);
        assert!((r.x[1] - 0.0).abs() < 1e-6, "clamped minimum at 0");
    }

    #[test]
    fn nan_objective_aborts() {
        let r = nelder_mead(|x| if x[0] > 2.0 { f64::NAN } else { -x[0] }, &[0.0], &[1.0], &tight());
        assert!(matches!(r, Err(Error::Optimizer(_))));
    }

    #[test]
    fn identical_inputs_give_identical_trajectories() {
        let f = |x: &[f64]| (x[0] - 4.0).powi(2) * (1.0 + (x[1] - 1.0).powi(2));
        let a = nelder_mead(f, &[0.0, 0.0], &[1.5, 1.5], &tight()).unwrap();
        let b = nelder_mead(f, &[0.0, 0.0], &[1.5, 1.5], &tight()).unwrap();
        assert_eq!(a.x, b.x);
        assert_eq!(a.evaluations, b.evaluations);
    }

    #[test]
    fn best_value_is_monotone_across_budgets() {
        // With a growing budget the returned best value never worsens.
        let f = |x: &[f64]| (x[0] - 10.0).powi(2) + (x[1] - 3.0).powi(2);
        let mut last = f64::INFINITY;
        for budget in [10usize, 20, 40, 80, 160] {
            let opts = NmOptions {
                max_evals: budget,
                objective_tolerance: 0.0,
                parameter_tolerance: 0.0,
                ..NmOptions::default()
            };
            let r = nelder_mead(f, &[0.0, 0.0], &[1.0, 1.0], &opts).unwrap();
            assert!(r.value <= last + 1e-12, "budget {budget}: {} > {last}", r.value);
            last = r.value;
        }
    }
}
