//! Picard iteration for state-dependent noise: freeze the diffusion at the
//! previous iterate, solve the additive-noise problem, repeat.

use super::ensemble::{run_paths, InitialData};
use super::time_norms::{diff, l2_h_sq};
use super::Stepper;
use crate::error::{Error, Result};
use crate::rng::PathStream;
use crate::scalar::{from_usize, to_f64, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct PicardParams<T> {
    pub alphas: Vec<T>,
    /// Number of applications of the map (at least 2 to form a ratio).
    pub iters: usize,
    pub paths: usize,
    pub seed: u64,
    pub workers: usize,
}

/// Distance `d_k = |X^{(k+1)} - X^{(k)}|` in `L^2(Omega; L^2_alpha(0,T;H))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardRow {
    pub alpha: f64,
    pub k: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardResult {
    pub rows: Vec<PicardRow>,
    pub failures: Vec<(u64, String)>,
}

impl PicardResult {
    pub fn distances(&self, alpha: f64) -> Vec<f64> {
        self.rows.iter().filter(|r| r.alpha == alpha).map(|r| r.distance).collect()
    }
}

/// Runs the iteration with common random numbers: every application of the map
/// on path `p` reuses the same Wiener draws. The iterates do not depend on
/// `alpha`; only the norm measuring them does.
pub fn picard_iterate<T: Real>(
    stepper: &Stepper<'_, T>,
    x0: &InitialData<T>,
    params: &PicardParams<T>,
) -> Result<PicardResult> {
    if params.iters < 2 || params.alphas.is_empty() || params.paths == 0 {
        return Err(Error::InvalidParameter("picard needs iters >= 2, paths >= 1 and alphas".into()));
    }
    let op = stepper.op;
    let dt = stepper.params.dt;
    let steps = stepper.params.steps;
    let na = params.alphas.len();
    let per_path = run_paths(params.paths, params.workers, |p| -> Result<Vec<Vec<T>>> {
        let init = x0.for_path(p);
        let mut y: Vec<Vec<T>> = vec![init.clone(); steps + 1];
        let mut out = vec![vec![T::zero(); params.iters]; na];
        for k in 0..params.iters {
            let tr = stepper.solve_path_with(&init, p, &mut PathStream::new(params.seed, p), Some(&y))?;
            let d = diff(&tr.states, &y);
            for (ai, &a) in params.alphas.iter().enumerate() {
                out[ai][k] = l2_h_sq(op, &d, dt, a);
            }
            y = tr.states;
        }
        Ok(out)
    });
    let mut sums = vec![vec![T::zero(); params.iters]; na];
    let mut used = 0usize;
    let mut failures = Vec::new();
    for (p, r) in per_path.into_iter().enumerate() {
        match r {
            Ok(v) => {
                used += 1;
                for (ai, row) in v.iter().enumerate() {
                    for (k, &d) in row.iter().enumerate() {
                        sums[ai][k] = sums[ai][k] + d;
                    }
                }
            }
            Err(e) => failures.push((p as u64, e.to_string())),
        }
    }
    if used == 0 {
        return Err(Error::InvalidParameter("every picard path failed".into()));
    }
    let mut rows = Vec::new();
    for (ai, &a) in params.alphas.iter().enumerate() {
        for k in 0..params.iters {
            rows.push(PicardRow { alpha: to_f64(a), k, distance: to_f64((sums[ai][k] / from_usize(used)).sqrt()) });
        }
    }
    Ok(PicardResult { rows, failures })
}
