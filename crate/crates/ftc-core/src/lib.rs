//! Probabilistic landscape freeze-thaw (FT) retrieval from dual-polarization
//! L-band brightness-temperature time series.
//!
//! The library has three retrieval-side layers and a data side:
//!
//! * [`tensor`], [`conv`], [`ops`] — a minimal differentiable substrate:
//!   channel-major 2D tensors, 1D (transposed) convolution, ReLU, dropout and
//!   masked mean-squared error, each with exact analytic gradients.
//! * [`model`], [`train`], [`retrieve`], [`checkpoint`] — the convolutional
//!   encoder/decoder that reconstructs TB segments, the contrastive training
//!   objective, per-stratum training, and daily frozen-probability retrieval.
//! * [`npr`] — the seasonal-thresholding baseline on the normalized
//!   polarization ratio, with its 273 K warm override.
//! * [`series`], [`interp`], [`label`], [`stratify`], [`synth`], [`io`] —
//!   pixel time-series data model, daily interpolation, temperature-based
//!   segment labeling, land-cover/water-fraction stratification, the
//!   synthetic scene generator, and the CSV file formats.
//! * [`eval`] — confusion matrices, stratified reports, frozen-fraction
//!   series and transition onsets.
//!
//! Numeric code is generic over [`scalar::Scalar`]; the pipeline instantiates
//! everything at [`Real`] (`f64`).

pub mod checkpoint;
pub mod conv;
pub mod error;
pub mod eval;
pub mod interp;
pub mod io;
pub mod label;
pub mod model;
pub mod npr;
pub mod ops;
pub mod retrieve;
pub mod scalar;
pub mod series;
pub mod stratify;
pub mod synth;
pub mod tensor;
pub mod train;

pub use error::{FtcError, Result};
pub use scalar::Scalar;

/// Concrete scalar used by the pipeline. The model is tiny; 64-bit floats
/// keep gradient checks and cross-run determinism exact.
pub type Real = f64;

/// Channel-major tensor at the pipeline scalar.
pub type Tensor = tensor::Tensor2<Real>;

/// Model parameters at the pipeline scalar.
pub type Model = model::ModelParams<Real>;
