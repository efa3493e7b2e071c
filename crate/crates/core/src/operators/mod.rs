//! Convolution with kernel families, maximal operators, and oscillation along
//! approach curves.

mod convolve;
mod maximal;
mod oscillation;
mod signal;

pub use convolve::{convolve, oversampling_factor, Convolution, MAX_OVERSAMPLING};
pub use maximal::{
    default_t_grid, hl_maximal, lambda_maximal, pointwise_domination_check, weak_type_check, Domination,
    MaximalReport, WeakType,
};
pub use oscillation::{curve_oscillation, fejer_shift_check};
pub use signal::{convolve_measure_point, tail_mass, CircleSignal, WeightedArcs};
