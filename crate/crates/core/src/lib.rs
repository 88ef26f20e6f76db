//! Monotone-graph stochastic evolution equations: graph kernels, discrete
//! operators, Hilbert-Schmidt noise, time-stepping schemes and computable
//! versions of the a priori estimates.
//!
//! Everything is generic over the scalar type; the `*64` aliases fix `f64`.

pub mod error;
pub mod linalg;
pub mod monotone_graph;
pub mod noise_model;
pub mod rng;
pub mod scalar;
pub mod spatial_operator;
pub mod spde_solver;
pub mod verification;

pub use error::{Error, Result};
pub use monotone_graph::{Extended, GraphKind, MonotoneGraph};
pub use noise_model::{NoiseKind, NoiseModel, Sigma};
pub use scalar::{Real, Tolerances};
pub use spatial_operator::{Coefficients, DiscreteOperator, Grid, OperatorKind};
pub use spde_solver::{Ensemble, InitialData, Scheme, SolverParams, Stepper, Trajectory};
pub use verification::EstimateReport;

pub type MonotoneGraph64 = MonotoneGraph<f64>;
pub type Grid64 = Grid<f64>;
pub type DiscreteOperator64 = DiscreteOperator<f64>;
pub type NoiseModel64 = NoiseModel<f64>;
pub type SolverParams64 = SolverParams<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type Ensemble64 = Ensemble<f64>;
