//! Hybrid quantum-classical photovoltaic power forecasting.
//!
//! The crate is organized around nine subsystems:
//!
//! * [`qsim`] — dense state-vector simulation with adjoint-method gradients;
//! * [`autodiff`] — tape-based reverse-mode differentiation for the classical
//!   layers, with quantum nodes embedded;
//! * [`layers`] — fully-connected, LSTM, VVRQ and QDI building blocks;
//! * [`models`] — the six forecasting architectures and their serialization;
//! * [`data`] — CSV ingestion, cleaning, scaling, windowing, purged k-fold
//!   planning and synthetic series generation;
//! * [`train`] — MSE loss, Adam, training loops, cross-validation and the
//!   reduced-data experiment;
//! * [`metrics`] — the six evaluation metrics;
//! * [`analysis`] — Fisher-information and Fourier-spectrum circuit
//!   diagnostics.

pub mod analysis;
pub mod autodiff;
pub mod data;
pub mod error;
pub mod layers;
pub mod metrics;
pub mod models;
pub mod qsim;
pub mod train;

pub use autodiff::{Activation, Readout, Tape, TensorId};
pub use data::{FoldPlan, ScalerStats, TimeSeriesFrame, WindowedDataset};
pub use error::{Error, Result};
pub use metrics::MetricsReport;
pub use models::{Model, ModelDescriptor, ModelKind};
pub use qsim::{AngleSource, Axis, CircuitSpec, GateOp, Observable, StateVector};
pub use train::{AdamState, TrainConfig};
