//! Monte Carlo ensembles of independent paths with deterministic reduction.

use std::sync::Arc;

use rayon::prelude::*;

use super::{Scheme, Stepper, Trajectory};
use crate::error::Error;
use crate::monotone_graph::Extended;
use crate::scalar::{from_usize, pairwise_sum, Real};

/// Initial datum, either shared by every path or drawn per path.
#[derive(Clone)]
pub enum InitialData<T> {
    Fixed(Vec<T>),
    PerPath(Arc<dyn Fn(u64) -> Vec<T> + Send + Sync>),
}

impl<T: Real> InitialData<T> {
    pub fn for_path(&self, path: u64) -> Vec<T> {
        match self {
            InitialData::Fixed(v) => v.clone(),
            InitialData::PerPath(f) => f(path),
        }
    }
}

impl<T> std::fmt::Debug for InitialData<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitialData::Fixed(_) => f.write_str("InitialData::Fixed"),
            InitialData::PerPath(_) => f.write_str("InitialData::PerPath"),
        }
    }
}

/// Pathwise integrals extracted from one trajectory (right-endpoint sums over steps).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSummary<T> {
    pub path: u64,
    pub x0_h_sq: T,
    pub sup_h_sq: T,
    pub final_h_sq: T,
    pub l2_v_sq: T,
    pub xi_l1: T,
    pub int_moreau: T,
    pub int_j: T,
    pub int_conjugate: Extended<T>,
    pub int_xi_x: T,
    pub hs_sq: T,
    pub max_residual: T,
    pub inner_iters: usize,
}

impl<T: Real> PathSummary<T> {
    pub fn from_trajectory(tr: &Trajectory<T>, x0_h_sq: T) -> Self {
        let dt = tr.dt();
        let sum =
            |f: &dyn Fn(&super::LedgerRow<T>) -> T| dt * pairwise_sum(&tr.ledger.iter().map(f).collect::<Vec<_>>());
        let conj = tr.ledger.iter().fold(Extended::Finite(T::zero()), |acc, r| acc.add(r.int_conjugate)).scale(dt);
        Self {
            path: tr.path,
            x0_h_sq,
            sup_h_sq: tr.ledger.iter().fold(x0_h_sq, |m, r| m.max(r.norm_h_sq)),
            final_h_sq: tr.ledger.last().map_or(x0_h_sq, |r| r.norm_h_sq),
            l2_v_sq: sum(&|r| r.norm_v_sq),
            xi_l1: sum(&|r| r.xi_l1),
            int_moreau: sum(&|r| r.int_moreau),
            int_j: sum(&|r| r.int_j),
            int_conjugate: conj,
            int_xi_x: sum(&|r| r.int_xi_x),
            hs_sq: sum(&|r| r.hs_sq),
            max_residual: tr.max_residual(),
            inner_iters: tr.ledger.iter().map(|r| r.inner_iters).sum(),
        }
    }

    /// `∫∫ (j(X) + j*(xi))`.
    pub fn int_j_plus_conjugate(&self) -> Extended<T> {
        Extended::Finite(self.int_j).add(self.int_conjugate)
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct NormEstimate<T> {
    pub name: &'static str,
    pub estimate: Extended<T>,
    pub std_error: T,
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathFailure {
    pub path: u64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct Ensemble<T> {
    pub scheme: Scheme,
    pub lambda: T,
    pub dt: T,
    pub seed: u64,
    pub summaries: Vec<PathSummary<T>>,
    pub failures: Vec<PathFailure>,
    pub retained: Vec<Trajectory<T>>,
}

/// Mean and standard error of the mean, reduced pairwise in the given order.
pub fn mean_se<T: Real>(v: &[T]) -> (T, T) {
    if v.is_empty() {
        return (T::zero(), T::zero());
    }
    let m = from_usize::<T>(v.len());
    let mean = pairwise_sum(v) / m;
    if v.len() < 2 {
        return (mean, T::zero());
    }
    let dev: Vec<T> = v.iter().map(|&x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (m - T::one());
    (mean, (var / m).sqrt())
}

impl<T: Real> Ensemble<T> {
    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty()
    }

    pub fn m(&self) -> usize {
        self.summaries.len()
    }

    pub fn mean_of(&self, f: impl Fn(&PathSummary<T>) -> T) -> (T, T) {
        mean_se(&self.summaries.iter().map(f).collect::<Vec<_>>())
    }

    fn extended_mean(&self, f: impl Fn(&PathSummary<T>) -> Extended<T>) -> (Extended<T>, T) {
        let vals: Option<Vec<T>> = self.summaries.iter().map(|s| f(s).finite()).collect();
        match vals {
            Some(v) => {
                let (m, se) = mean_se(&v);
                (Extended::Finite(m), se)
            }
            None => (Extended::PosInf, T::zero()),
        }
    }

    /// Monte Carlo estimates of the solution-class norms.
    pub fn estimates(&self) -> Vec<NormEstimate<T>> {
        let m = self.m();
        let fin = |name, (e, se): (T, T)| NormEstimate { name, estimate: Extended::Finite(e), std_error: se, m };
        let (jc, jc_se) = self.extended_mean(|s| s.int_j_plus_conjugate());
        let (cj, cj_se) = self.extended_mean(|s| s.int_conjugate);
        vec![
            fin("linf_h_sq", self.mean_of(|s| s.sup_h_sq)),
            fin("l2_v_sq", self.mean_of(|s| s.l2_v_sq)),
            fin("xi_l1", self.mean_of(|s| s.xi_l1)),
            NormEstimate { name: "j_plus_conjugate", estimate: jc, std_error: jc_se, m },
            NormEstimate { name: "conjugate", estimate: cj, std_error: cj_se, m },
            fin("xi_x", self.mean_of(|s| s.int_xi_x)),
            fin("moreau", self.mean_of(|s| s.int_moreau)),
            fin("final_h_sq", self.mean_of(|s| s.final_h_sq)),
            fin("x0_h_sq", self.mean_of(|s| s.x0_h_sq)),
            fin("hs_sq", self.mean_of(|s| s.hs_sq)),
        ]
    }

    pub fn estimate(&self, name: &str) -> Option<NormEstimate<T>> {
        self.estimates().into_iter().find(|e| e.name == name)
    }
}

/// Evaluates `f(path)` for `path = 0..m` on `workers` threads and returns the
/// results in path order.
pub fn run_paths<R: Send>(m: usize, workers: usize, f: impl Fn(u64) -> R + Sync + Send) -> Vec<R> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build();
    match pool {
        Ok(pool) => pool.install(|| (0..m as u64).into_par_iter().map(&f).collect()),
        Err(_) => (0..m as u64).map(f).collect(),
    }
}

/// Integrates `m` paths and collects their summaries.
pub fn solve_ensemble<T: Real>(
    stepper: &Stepper<'_, T>,
    x0: &InitialData<T>,
    m: usize,
    seed: u64,
    workers: usize,
    retain: bool,
) -> Ensemble<T> {
    let grid = *stepper.op.grid();
    let results = run_paths(m, workers, |p| {
        let init = x0.for_path(p);
        stepper.solve_path(&init, seed, p).map(|tr| {
            let s = PathSummary::from_trajectory(&tr, grid.norm_h_sq(&init));
            (s, if retain { Some(tr) } else { None })
        })
    });
    let mut summaries = Vec::with_capacity(m);
    let mut failures = Vec::new();
    let mut retained = Vec::new();
    for (p, r) in results.into_iter().enumerate() {
        match r {
            Ok((s, tr)) => {
                summaries.push(s);
                retained.extend(tr);
            }
            Err(e) => failures.push(PathFailure { path: p as u64, message: describe(&e) }),
        }
    }
    Ensemble {
        scheme: stepper.scheme,
        lambda: stepper.params.lambda,
        dt: stepper.params.dt,
        seed,
        summaries,
        failures,
        retained,
    }
}

fn describe(e: &Error) -> String {
    e.to_string()
}
