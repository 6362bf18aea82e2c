//! Rate extraction, asymptotic decomposition and arrival-time diagnostics.

mod arrival;
mod asymptotics;
mod levelset;
mod rates;

pub use arrival::{
    arrival_samples, default_arrival_window, default_directions, fit_arrival, ArrivalFit,
    ArrivalSample, ArrivalSampleSet, DirectionFit,
};
pub use asymptotics::{
    mode_asymptotics, projection_bounds, sup_bound_check, AsymptoticFit, BoundCheck,
    ProjectionBounds, SupBoundCheck, BOUND_WINDOW,
};
pub use levelset::{levelset_residual, LevelSetReport, DEFAULT_CELLS};
pub use rates::{
    decay_rate, fit_rate, linear_fit, norm_history, norm_ratio_history, LinearFit, RateFit,
    Selector, Window, NOISE_FLOOR,
};
