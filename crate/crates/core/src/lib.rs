//! Multiscale Granger causality through state-space models.
//!
//! A VAR process is filtered by a lowpass FIR and downsampled by `τ`; the
//! rescaled process has an exact state-space form whose innovation variances,
//! obtained from discrete algebraic Riccati equations, give the GC at scale
//! `τ` without fitting anything on the rescaled data.
//!
//! ```
//! use msgc::gc::multiscale_gc_exact;
//! use msgc::var_model::{build_benchmark, SimulationConfig};
//!
//! let model = build_benchmark(&SimulationConfig::unidirectional()).unwrap();
//! let res = multiscale_gc_exact(&model, 6, &[1, 2, 3]).unwrap();
//! let f12 = res.curve(0, 1);
//! assert!(f12[1] > f12[0] && f12[1] > f12[2]);
//! ```

pub mod error;
pub mod gc;
pub mod io;
pub mod linalg;
pub mod pipeline;
pub mod preprocess;
pub mod rescale;
pub mod series;
pub mod state_space;
pub mod surrogate;
pub mod var_model;

pub use error::{Error, Result};
pub use gc::{EstimationMode, GcValue, MultiscaleGcResult};
pub use linalg::Matrix;
pub use series::TimeSeriesSet;
pub use state_space::{DareOptions, IssModel, SsModel};
pub use var_model::{SimulationConfig, VarModel};
