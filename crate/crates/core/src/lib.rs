//! Gaussian process regression for inputs made of continuous coordinates
//! plus one categorical variable.
//!
//! The categorical variable enters through an `s × s` cross-correlation
//! matrix. Four parameterizations are provided: exchangeable (EC),
//! multiplicative (MC), unrestricted hypersphere (UC) and low-rank (LRC).
//! Besides the model there are clustered sliced Latin hypercube designs, a
//! set of sliced benchmark functions and a small experiment runner.
//!
//! The numeric core is generic over `f32`/`f64` through [`Scalar`]; the
//! `*64` aliases below name the common double-precision types.

pub mod bench;
pub mod corrparam;
pub mod design;
pub mod error;
pub mod gpcore;
pub mod linalg;
mod scalar;
pub mod space;
pub mod testbed;

pub use corrparam::{CorrMatrix, Family, FamilySpec, LoadingMatrix};
pub use design::{ClusterMap, Design};
pub use error::{Error, Result};
pub use gpcore::{FitOptions, GpFit, KernelConfig, TrainingSet};
pub use scalar::Scalar;
pub use space::{Bounds, MixedPoint};

pub type CorrMatrix64 = CorrMatrix<f64>;
pub type LoadingMatrix64 = LoadingMatrix<f64>;
pub type Design64 = Design<f64>;
pub type GpFit64 = GpFit<f64>;
pub type TrainingSet64 = TrainingSet<f64>;
pub type KernelConfig64 = KernelConfig<f64>;
pub type MixedPoint64 = MixedPoint<f64>;
pub type Bounds64 = Bounds<f64>;
