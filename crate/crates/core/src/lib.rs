//! NODE-FDM: a physics-informed neural-ODE flight dynamics toolkit.
//!
//! The crate covers the full desk-scale pipeline:
//!
//! - [`atmosphere`]: ISA atmosphere, unit conversions, TAS/CAS/Mach.
//! - [`data`]: the flight data model (state / control / context /
//!   intermediate channels), CSV ingestion, sequence slicing and
//!   normalization statistics.
//! - [`performance`]: a configurable generic point-mass performance model
//!   (drag polar, thrust lapse, TSFC) used by both the synthetic data
//!   generator and the benchmark simulator.
//! - [`synthetic`]: scripted QAR-like flight generation at 0.25 Hz.
//! - [`baseline`]: the point-mass benchmark pipeline (routine selection
//!   over fixed 4-second intervals with state feedback).
//! - [`nn`]: a minimal reverse-mode autodiff engine, the structured layer
//!   building block and the AdamW optimizer.
//! - [`model`]: the NODE-FDM model itself (analytical trajectory layer plus
//!   learned angle / engine / derivative layers), explicit Euler rollouts,
//!   the composite loss and the training loop.
//! - [`evaluation`]: phase segmentation and per-parameter MAE/MAPE/ME
//!   tables, plus flight-total fuel consumption comparison.

pub mod atmosphere;
pub mod baseline;
pub mod data;
pub mod evaluation;
pub mod model;
pub mod nn;
pub mod performance;
pub mod synthetic;
