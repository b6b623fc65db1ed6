//! Gaussian process regression over mixed categorical/continuous inputs.

mod fit;
mod kernel;
mod model;

pub use fit::{fit_hyperparams, FitBudget, FitReport, ParamBounds};
pub use kernel::{
    matern52, mixed_kernel, overlap_kernel, scaled_distance, Encoded, InputSpace, KernelParams,
    MixedInput, MATERN_NU,
};
pub use model::{gp_posterior, log_marginal_likelihood, Gp, GpDataset, GpPosterior};
