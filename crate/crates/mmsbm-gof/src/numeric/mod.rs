//! Special functions, probability distributions, and reproducible RNG
//! streams shared by every stochastic module.

mod dist;
mod rng;
mod special;

pub use dist::{sample_bernoulli, sample_beta, sample_categorical, sample_dirichlet, sample_gamma};
pub use rng::{derive_stream, derive_subseed, RngStream};
pub use special::{chi_square_cdf, chi_square_sf, ln_gamma};
