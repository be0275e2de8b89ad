//! Closed-form per-step errors, success probability and error bounds for the
//! 1D second-order central scheme, plus error metrics against the exact
//! channel-flow solution.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::grid::{Grid2D, ScalarField, VelocityField};

/// Diagonals of `A~` and `I~` for the 4x4 periodic central operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TildeDiagonals {
    pub a_d0: f64,
    pub a_d1: f64,
    pub a_dm1: f64,
    /// Shared by `d2` and `d-2` (they coincide on a 4x4 circulant).
    pub a_d2: f64,
    pub i_d0: f64,
    pub i_d1: f64,
    pub i_d2: f64,
}

fn stretch(r: f64) -> f64 {
    (r * r + 1.0).sqrt()
}

pub fn tilde_entries_4x4(r: f64, theta: f64) -> TildeDiagonals {
    let s = stretch(r);
    let sin_s = (theta * s).sin() / s;
    let a_d1 = -r * (theta * s).sin() / (2.0 * s);
    TildeDiagonals {
        a_d0: 0.5 * (theta.sin() + sin_s),
        a_d1,
        a_dm1: -a_d1,
        a_d2: 0.5 * (theta.sin() - sin_s),
        i_d0: 0.5 * (theta.cos() + (theta * s).cos()),
        i_d1: 0.0,
        i_d2: 0.5 * (theta.cos() - (theta * s).cos()),
    }
}

/// Spectral norm of the per-step error of `A~` relative to scaled `A`.
pub fn e_a_norm(r: f64, theta: f64) -> f64 {
    let s = stretch(r);
    0.5 * (theta.sin() * s - (theta * s).sin())
}

/// Spectral norm of the per-step error of `I~` relative to the identity.
pub fn e_i_norm(r: f64, theta: f64) -> f64 {
    0.5 * (theta.cos() - (theta * stretch(r)).cos())
}

/// `theta` where the worst-case success probability switches branch.
pub fn theta_switch(r: f64) -> f64 {
    PI / (1.0 + stretch(r))
}

/// Worst-case probability of a successful step.
pub fn p_min(r: f64, theta: f64) -> f64 {
    if theta <= theta_switch(r) {
        theta.sin().powi(2)
    } else {
        (theta * stretch(r)).sin().powi(2)
    }
}

/// Error bound per unit non-dimensional time for advection.
pub fn advection_error_bound(r: f64, theta: f64) -> f64 {
    let s = stretch(r);
    let cot_arg = if theta <= theta_switch(r) {
        theta
    } else {
        theta * s
    };
    let cot2 = (cot_arg.cos() / cot_arg.sin()).powi(2);
    ((theta.cos() - (theta * s).cos()) * cot2 + theta.sin() * s - (theta * s).sin()) / (2.0 * r)
}

/// Error bound per unit time for the explicit heat operator.
///
/// Poles (`r_h = 1/4`, `r_h = 1/2`) evaluate to `f64::INFINITY`.
pub fn heat_error_bound(r_h: f64, theta: f64) -> f64 {
    let (r, t) = (r_h, theta);
    let sin = f64::sin;
    let cot2 = |x: f64| (x.cos() / x.sin()).powi(2);
    let tail = (sin(t - 3.0 * r * t) + 3.0 * sin(t - r * t)).abs() * sin(r * t);
    let value = if r <= 1.0 / 3.0 {
        let head = ((8.0 * r - 3.0) * sin(t) + sin(t - 4.0 * r * t) + 2.0 * sin(t - 2.0 * r * t))
            .abs()
            / (2.0 - 4.0 * r);
        (head + tail * cot2(t - 4.0 * r * t)) / (2.0 * r)
    } else {
        let head = ((1.0 - 4.0 * r) * sin(t)
            + (4.0 * r - 3.0) * sin(t - 4.0 * r * t)
            + (2.0 - 8.0 * r) * sin(t - 2.0 * r * t))
        .abs()
            / (2.0 - 4.0 * r);
        (head + tail * cot2(t - 2.0 * r * t)) / (2.0 * r)
    };
    if value.is_finite() {
        value
    } else {
        f64::INFINITY
    }
}

/// Exact channel solution `(sin(2 pi (x - u(y) t)) + 1) / init_norm`.
pub fn channel_analytical(velocity: &VelocityField, t: f64, init_norm: f64) -> ScalarField {
    let grid = velocity.grid;
    let values = (0..grid.len())
        .map(|m| {
            let (i, _) = grid.coords(m);
            ((TAU * (grid.x(i) - velocity.u[m] * t)).sin() + 1.0) / init_norm
        })
        .collect();
    ScalarField { grid, values }
}

fn same_grid(a: &Grid2D, b: &Grid2D) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: b.len(),
            found: a.len(),
        });
    }
    Ok(())
}

/// Pointwise `100 |reference - state| / max(reference)`.
pub fn error_map(state: &ScalarField, reference: &ScalarField) -> Result<ScalarField> {
    same_grid(&state.grid, &reference.grid)?;
    let peak = reference.max();
    if !(peak > 0.0) {
        return Err(Error::OutOfRange(
            "reference field has no positive maximum".into(),
        ));
    }
    let values = state
        .values
        .iter()
        .zip(&reference.values)
        .map(|(s, r)| 100.0 * (r - s).abs() / peak)
        .collect();
    Ok(ScalarField {
        grid: reference.grid,
        values,
    })
}

/// Mean of [`error_map`], in percent.
pub fn mean_abs_error(state: &ScalarField, reference: &ScalarField) -> Result<f64> {
    Ok(error_map(state, reference)?.mean())
}

pub fn max_abs_error(state: &ScalarField, reference: &ScalarField) -> Result<f64> {
    Ok(error_map(state, reference)?.max())
}
