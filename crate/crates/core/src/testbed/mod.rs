//! Sliced benchmark functions with known optima.

mod functions;
mod sliced;

pub use functions::{lookup, standard_functions, ContinuousFunction, FunctionKind};
pub use sliced::{
    empirical_cross_corr, estimate_slice_max, make_standard_testbed, default_positions, default_upend_set,
    quantile_positions, slice_max_of, slice_positions, swap_optimum, CrossCorrEstimate, QuantileMap,
    SlicedFunction, SLICE_MAX_GRID,
};
