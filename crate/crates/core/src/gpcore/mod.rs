//! Ordinary kriging with a compound Matérn 5/2 × cross-correlation kernel.
//!
//! Continuous inputs are mapped to `[0, 1]` with the training bounds and
//! responses are standardized before fitting; predictions are returned on
//! the original scale.

mod kernel;
mod likelihood;
mod model;
pub mod optim;
mod persist;

pub use kernel::{build_r, compound_corr, matern52, Categorical, KernelConfig};
pub use likelihood::{concentrated_nll, Concentrated, SIGMA2_FLOOR};
pub use model::{
    fit, fit_individual, FitOptions, GpFit, IndividualFit, SliceModel, StartReport, TrainingSet,
};
pub use persist::{load_model, save_model, SavedModel, MODEL_FORMAT, MODEL_VERSION};
