//! Beta, Dirichlet, categorical, and Bernoulli sampling.
//!
//! Gamma variates use the Marsaglia-Tsang squeeze method with the
//! `U^(1/shape)` boost for shape < 1; Beta and Dirichlet are built from them.

use crate::error::{Error, Result};
use crate::numeric::rng::RngStream;

/// Gamma(shape, 1) variate, shape > 0.
pub fn sample_gamma(shape: f64, rng: &mut RngStream) -> Result<f64> {
    if !(shape > 0.0) {
        return Err(Error::Domain(format!(
            "gamma shape must be positive, got {shape}"
        )));
    }
    Ok(sample_gamma_unchecked(shape, rng))
}

fn sample_gamma_unchecked(shape: f64, rng: &mut RngStream) -> f64 {
    if shape < 1.0 {
        let g = sample_gamma_unchecked(shape + 1.0, rng);
        let u = rng.next_f64();
        return g * u.powf(1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (3.0 * d.sqrt());
    loop {
        let x = rng.next_standard_normal();
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = rng.next_f64();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// Beta(a, b) variate in the open interval (0, 1).
pub fn sample_beta(a: f64, b: f64, rng: &mut RngStream) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Domain(format!(
            "beta shapes must be positive, got ({a}, {b})"
        )));
    }
    let x = sample_gamma_unchecked(a, rng);
    let y = sample_gamma_unchecked(b, rng);
    let v = x / (x + y);
    // Tiny shapes can underflow one of the gammas to 0.0; clamp back into
    // the open interval.
    Ok(v.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
}

/// Dirichlet variate on the open simplex; `concentration` must be entrywise
/// positive and non-empty.
pub fn sample_dirichlet(concentration: &[f64], rng: &mut RngStream) -> Result<Vec<f64>> {
    if concentration.is_empty() {
        return Err(Error::Domain("dirichlet needs at least one component".into()));
    }
    if concentration.iter().any(|&c| !(c > 0.0)) {
        return Err(Error::Domain(
            "dirichlet concentration must be entrywise positive".into(),
        ));
    }
    let mut draws: Vec<f64> = concentration
        .iter()
        .map(|&c| sample_gamma_unchecked(c, rng).max(f64::MIN_POSITIVE))
        .collect();
    let total: f64 = draws.iter().sum();
    for v in &mut draws {
        *v /= total;
    }
    Ok(draws)
}

/// Index draw proportional to the given nonnegative weights.
pub fn sample_categorical(weights: &[f64], rng: &mut RngStream) -> Result<usize> {
    if weights.is_empty() {
        return Err(Error::Domain("categorical needs at least one weight".into()));
    }
    if weights.iter().any(|&w| !(w >= 0.0)) {
        return Err(Error::Domain("categorical weights must be nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Domain("categorical weights sum to zero".into()));
    }
    let mut target = rng.next_f64() * total;
    for (i, &w) in weights.iter().enumerate() {
        target -= w;
        if target <= 0.0 && w > 0.0 {
            return Ok(i);
        }
    }
    // Rounding pushed the target past the end; return the last positive
    // weight.
    Ok(weights.iter().rposition(|&w| w > 0.0).unwrap())
}

/// Bernoulli(p) draw.
pub fn sample_bernoulli(p: f64, rng: &mut RngStream) -> Result<bool> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "bernoulli probability must lie in [0,1], got {p}"
        )));
    }
    Ok(rng.next_f64() < p)
}
