//! Gaussian perturbations of the initial field and of the marching operator.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::operator::SparseOperator;

fn normal(sigma: f64) -> Result<Normal<f64>> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::OutOfRange(format!("noise level {sigma}")));
    }
    Normal::new(0.0, sigma).map_err(|e| Error::OutOfRange(e.to_string()))
}

/// Adds i.i.d. noise with standard deviation `sigma_fraction * mean(field)`.
pub fn perturb_state<R: Rng + ?Sized>(
    field: &ScalarField,
    sigma_fraction: f64,
    rng: &mut R,
) -> Result<ScalarField> {
    if sigma_fraction == 0.0 {
        return Ok(field.clone());
    }
    let dist = normal(sigma_fraction * field.mean().abs())?;
    let values = field.values.iter().map(|v| v + dist.sample(rng)).collect();
    ScalarField::new(field.grid, values)
}

/// Scales every stored entry by `1 + N(0, sigma_fraction)`; pattern unchanged.
pub fn perturb_matrix<R: Rng + ?Sized>(
    a: &SparseOperator,
    sigma_fraction: f64,
    rng: &mut R,
) -> Result<SparseOperator> {
    if sigma_fraction == 0.0 {
        return Ok(a.clone());
    }
    let dist = normal(sigma_fraction)?;
    Ok(a.map_values(|_, _, v| v * (1.0 + dist.sample(rng))))
}
