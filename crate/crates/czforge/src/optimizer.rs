//! Deterministic bounded Nelder-Mead minimization for the gate cost.
//!
//! Standard coefficients (reflection 1, expansion 2, contraction 0.5,
//! shrink 0.5); candidate points leaving the box are reflected back at the
//! violated boundary. No randomness anywhere, so identical configs yield
//! identical traces.

use crate::{CzError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub initial: Vec<f64>,
    /// Inclusive (lo, hi) box per coordinate.
    pub bounds: Vec<(f64, f64)>,
    /// Initial simplex step per coordinate; defaults to 5% of the bound
    /// width when empty.
    pub simplex_steps: Vec<f64>,
    /// Stop when the simplex cost spread falls below this.
    pub tol_f: f64,
    /// Stop when the per-coordinate simplex diameter falls below these.
    pub tol_x: Vec<f64>,
    pub max_iters: usize,
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let n = self.initial.len();
        if n == 0 {
            return Err(CzError::Config("empty parameter vector".into()));
        }
        if self.bounds.len() != n || self.tol_x.len() != n {
            return Err(CzError::Config(
                "bounds and tol_x must match the parameter dimension".into(),
            ));
        }
        for (k, (&x, &(lo, hi))) in self.initial.iter().zip(&self.bounds).enumerate() {
            if lo >= hi {
                return Err(CzError::Config(format!("bounds[{k}] empty: [{lo}, {hi}]")));
            }
            if x < lo || x > hi {
                return Err(CzError::Config(format!(
                    "initial[{k}] = {x} outside bounds [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    fn steps(&self) -> Vec<f64> {
        if self.simplex_steps.len() == self.initial.len() {
            self.simplex_steps.clone()
        } else {
            self.bounds.iter().map(|&(lo, hi)| 0.05 * (hi - lo)).collect()
        }
    }
}

/// One Nelder-Mead run: every evaluated point in order, plus the best result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizationRun {
    pub trace: Vec<(Vec<f64>, f64)>,
    pub best_params: Vec<f64>,
    pub best_cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Fold a point back into the box by reflecting at each violated boundary.
fn reflect_into_bounds(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        for _ in 0..64 {
            if *v < lo {
                *v = 2.0 * lo - *v;
            } else if *v > hi {
                *v = 2.0 * hi - *v;
            } else {
                break;
            }
        }
        *v = v.clamp(lo, hi);
    }
}

/// Minimize `f` with bounded Nelder-Mead. Hitting the iteration cap is not an
/// error; the run comes back with `converged = false`.
pub fn minimize<F>(mut f: F, cfg: &OptimizerConfig) -> Result<OptimizationRun>
where
    F: FnMut(&[f64]) -> f64,
{
    cfg.validate()?;
    let n = cfg.initial.len();
    let steps = cfg.steps();

    let mut trace: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut eval = |x: &[f64], trace: &mut Vec<(Vec<f64>, f64)>| -> f64 {
        let c = f(x);
        trace.push((x.to_vec(), c));
        c
    };

    // initial simplex: p0 plus one step along each coordinate
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let c0 = eval(&cfg.initial, &mut trace);
    simplex.push((cfg.initial.clone(), c0));
    for k in 0..n {
        let mut v = cfg.initial.clone();
        v[k] += steps[k];
        reflect_into_bounds(&mut v, &cfg.bounds);
        let c = eval(&v, &mut trace);
        simplex.push((v, c));
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iters {
        iterations += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));

        let spread = simplex[n].1 - simplex[0].1;
        let diam_ok = (0..n).all(|k| {
            let lo = simplex.iter().map(|(v, _)| v[k]).fold(f64::INFINITY, f64::min);
            let hi = simplex.iter().map(|(v, _)| v[k]).fold(f64::NEG_INFINITY, f64::max);
            hi - lo < cfg.tol_x[k]
        });
        if spread < cfg.tol_f || diam_ok {
            converged = true;
            break;
        }

        // centroid of all but the worst vertex
        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|(v, _)| v[k]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();

        let mut reflected: Vec<f64> = (0..n)
            .map(|k| centroid[k] + alpha * (centroid[k] - worst.0[k]))
            .collect();
        reflect_into_bounds(&mut reflected, &cfg.bounds);
        let c_refl = eval(&reflected, &mut trace);

        if c_refl < simplex[0].1 {
            let mut expanded: Vec<f64> = (0..n)
                .map(|k| centroid[k] + gamma * (reflected[k] - centroid[k]))
                .collect();
            reflect_into_bounds(&mut expanded, &cfg.bounds);
            let c_exp = eval(&expanded, &mut trace);
            simplex[n] = if c_exp < c_refl {
                (expanded, c_exp)
            } else {
                (reflected, c_refl)
            };
        } else if c_refl < simplex[n - 1].1 {
            simplex[n] = (reflected, c_refl);
        } else {
            let mut contracted: Vec<f64> = (0..n)
                .map(|k| centroid[k] + rho * (worst.0[k] - centroid[k]))
                .collect();
            reflect_into_bounds(&mut contracted, &cfg.bounds);
            let c_con = eval(&contracted, &mut trace);
            if c_con < worst.1 {
                simplex[n] = (contracted, c_con);
            } else {
                // shrink toward the best vertex
                let best = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    let mut shrunk: Vec<f64> = (0..n)
                        .map(|k| best[k] + sigma * (v.0[k] - best[k]))
                        .collect();
                    reflect_into_bounds(&mut shrunk, &cfg.bounds);
                    let c = eval(&shrunk, &mut trace);
                    *v = (shrunk, c);
                }
            }
        }
    }

    let (best_params, best_cost) = trace
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(p, c)| (p.clone(), *c))
        .unwrap();

    Ok(OptimizationRun {
        trace,
        best_params,
        best_cost,
        iterations,
        converged,
    })
}
