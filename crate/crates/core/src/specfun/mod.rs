//! Special functions and structured-matrix kernels used by the analytics.

mod gamma;
mod hyper;
mod toeplitz;

pub use gamma::{gamma, incomplete_beta, ln_gamma, lower_incomplete_gamma, rgamma, upper_gamma_regularized};
pub use hyper::{gauss_2f1, kummer_1f1, KUMMER_ASYMPTOTIC_RADIUS, SERIES_BUDGET};
pub use toeplitz::{gamma_sum_ccdf, round_half_away, toeplitz_exp, toeplitz_exp_l1, varpi, ToeplitzL};
