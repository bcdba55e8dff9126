//! Tabular single-timescale actor-critic: exact MDP operators, linear and
//! deep-ReLU actor-critic loops, seeded samplers, and exact diagnostics.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod deep_net;
pub mod diagnostics;
pub mod error;
pub mod features;
pub mod linalg;
pub mod linear_ac;
pub mod mdp;
pub mod neural_ac;
pub mod policy;
pub mod sampling;
pub mod scalar;
pub mod table;
pub mod trace;

pub use deep_net::{Checkpoint, DnnParams, SaEncoder};
pub use diagnostics::{error_decomposition, IterDiag, OptimalOracle, StepInputs};
pub use error::{Error, Result};
pub use features::FeatureMap;
pub use linear_ac::{run_linear_ac, CriticMode, LinearAcState, LinearRunConfig, RhoEval};
pub use mdp::{builtin, TabularMdp};
pub use neural_ac::{run_neural_ac, NeuralAcState, NeuralRunConfig};
pub use policy::EnergyPolicy;
pub use scalar::Real;
pub use table::{PolicyMatrix, QTable, SaTable, StateActionDist, StateDist};
pub use trace::{RunTrace, TraceRow, TRACE_HEADER};

pub type Mdp = TabularMdp<f64>;
pub type Mdp32 = TabularMdp<f32>;
pub type Features = FeatureMap<f64>;
pub type Features32 = FeatureMap<f32>;
pub type Policy = PolicyMatrix<f64>;
pub type Policy32 = PolicyMatrix<f32>;
pub type Table = SaTable<f64>;
pub type Table32 = SaTable<f32>;
pub type Net = DnnParams<f64>;
pub type Net32 = DnnParams<f32>;
pub type Trace = RunTrace<f64>;
pub type Trace32 = RunTrace<f32>;
