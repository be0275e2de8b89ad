//! Steady lid-driven cavity velocity from a streamfunction-vorticity solve.
//!
//! The unit square carries `n x n` nodes with walls on the outer rows. The
//! lid (`y = 1`) moves with `u_wall`; the other walls are at rest. Wall
//! vorticity follows Thom's formula; the interior vorticity transport and
//! the streamfunction Poisson equation are swept alternately (Gauss-Seidel
//! and SOR) until both discrete residuals fall below the tolerance.
//! Velocities are central differences of the streamfunction, which makes
//! the central-difference divergence vanish identically at interior nodes.

use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid2D, ScalarField, VelocityField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavitySpec {
    pub n: usize,
    pub reynolds: f64,
    pub u_wall: f64,
    /// Tolerance on the max residual of the discrete steady equations.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for CavitySpec {
    fn default() -> Self {
        Self {
            n: 64,
            reynolds: 100.0,
            u_wall: 1.0,
            tol: 1e-8,
            max_iterations: 200_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CavityFlow {
    pub velocity: VelocityField,
    pub streamfunction: ScalarField,
    pub vorticity: ScalarField,
    pub iterations: usize,
    pub residual: f64,
}

const SOR_PSI: f64 = 1.7;
const RELAX_OMEGA: f64 = 0.9;

pub fn solve_lid_cavity(spec: &CavitySpec) -> Result<CavityFlow> {
    if spec.n < 16 {
        return Err(Error::InvalidGrid(format!(
            "cavity needs n >= 16, got {}",
            spec.n
        )));
    }
    if !(spec.reynolds > 0.0) || !(spec.u_wall > 0.0) || !(spec.tol > 0.0) {
        return Err(Error::OutOfRange(
            "cavity Reynolds number, lid speed and tolerance must be positive".into(),
        ));
    }
    let n = spec.n;
    let grid = Grid2D::new(n, n, Boundary::DirichletWall, Boundary::DirichletWall)?;
    let h = grid.dx;
    let h2 = h * h;
    let nu = spec.u_wall / spec.reynolds;
    let idx = |i: usize, j: usize| i + n * j;
    let mut psi = vec![0.0; n * n];
    let mut omega = vec![0.0; n * n];

    let wall_vorticity = |psi: &[f64], omega: &mut [f64]| {
        for k in 1..n - 1 {
            omega[idx(k, 0)] = -2.0 * psi[idx(k, 1)] / h2;
            omega[idx(k, n - 1)] = -2.0 * psi[idx(k, n - 2)] / h2 - 2.0 * spec.u_wall / h;
            omega[idx(0, k)] = -2.0 * psi[idx(1, k)] / h2;
            omega[idx(n - 1, k)] = -2.0 * psi[idx(n - 2, k)] / h2;
        }
    };

    // raw residuals of the non-dimensional steady equations (L = 1)
    let residuals = |psi: &[f64], omega: &[f64]| {
        let mut worst = 0.0_f64;
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let m = idx(i, j);
                let lap = |f: &[f64]| {
                    (f[idx(i + 1, j)] + f[idx(i - 1, j)] + f[idx(i, j + 1)] + f[idx(i, j - 1)]
                        - 4.0 * f[m])
                        / h2
                };
                let u = (psi[idx(i, j + 1)] - psi[idx(i, j - 1)]) / (2.0 * h);
                let v = -(psi[idx(i + 1, j)] - psi[idx(i - 1, j)]) / (2.0 * h);
                let dwdx = (omega[idx(i + 1, j)] - omega[idx(i - 1, j)]) / (2.0 * h);
                let dwdy = (omega[idx(i, j + 1)] - omega[idx(i, j - 1)]) / (2.0 * h);
                let transport = (u * dwdx + v * dwdy - nu * lap(omega)) / spec.u_wall;
                let poisson = lap(psi) + omega[m];
                worst = worst.max(transport.abs()).max(poisson.abs());
            }
        }
        worst
    };

    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < spec.max_iterations {
        iterations += 1;
        wall_vorticity(&psi, &mut omega);
        let cell = 0.5 * h / nu;
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let m = idx(i, j);
                let u = (psi[idx(i, j + 1)] - psi[idx(i, j - 1)]) / (2.0 * h);
                let v = -(psi[idx(i + 1, j)] - psi[idx(i - 1, j)]) / (2.0 * h);
                let (e, w) = (omega[idx(i + 1, j)], omega[idx(i - 1, j)]);
                let (no, so) = (omega[idx(i, j + 1)], omega[idx(i, j - 1)]);
                let target = 0.25 * (e + w + no + so - cell * (u * (e - w) + v * (no - so)));
                omega[m] += RELAX_OMEGA * (target - omega[m]);
            }
        }
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let m = idx(i, j);
                let target = 0.25
                    * (psi[idx(i + 1, j)]
                        + psi[idx(i - 1, j)]
                        + psi[idx(i, j + 1)]
                        + psi[idx(i, j - 1)]
                        + h2 * omega[m]);
                psi[m] += SOR_PSI * (target - psi[m]);
            }
        }
        if iterations % 50 == 0 {
            wall_vorticity(&psi, &mut omega);
            residual = residuals(&psi, &omega);
            if !residual.is_finite() {
                break;
            }
            if residual < spec.tol {
                break;
            }
        }
    }
    if !(residual < spec.tol) {
        return Err(Error::NonConvergence {
            iterations,
            residual,
        });
    }
    log::info!("cavity converged in {iterations} sweeps (residual {residual:.3e})");

    let mut u = vec![0.0; n * n];
    let mut v = vec![0.0; n * n];
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            u[idx(i, j)] = (psi[idx(i, j + 1)] - psi[idx(i, j - 1)]) / (2.0 * h);
            v[idx(i, j)] = -(psi[idx(i + 1, j)] - psi[idx(i - 1, j)]) / (2.0 * h);
        }
    }
    // corners keep the resting-wall value
    for i in 1..n - 1 {
        u[idx(i, n - 1)] = spec.u_wall;
    }
    Ok(CavityFlow {
        velocity: VelocityField::new(grid, u, v)?,
        streamfunction: ScalarField::new(grid, psi)?,
        vorticity: ScalarField::new(grid, omega)?,
        iterations,
        residual,
    })
}

/// Central-difference divergence at interior nodes; zero on wall nodes.
pub fn divergence(velocity: &VelocityField) -> ScalarField {
    let g = velocity.grid;
    let mut out = ScalarField::zeros(g);
    let neighbours = |pos: usize, n: usize, bc: Boundary| -> Option<(usize, usize)> {
        match bc {
            Boundary::Periodic => Some(((pos + n - 1) % n, (pos + 1) % n)),
            Boundary::DirichletWall if pos == 0 || pos == n - 1 => None,
            Boundary::DirichletWall => Some((pos - 1, pos + 1)),
        }
    };
    for m in 0..g.len() {
        let (i, j) = g.coords(m);
        let Some((il, ir)) = neighbours(i, g.nx, g.bc_x) else {
            continue;
        };
        let mut div = (velocity.u[g.index(ir, j)] - velocity.u[g.index(il, j)]) / (2.0 * g.dx);
        if g.ny > 1 {
            let Some((jl, jr)) = neighbours(j, g.ny, g.bc_y) else {
                continue;
            };
            div += (velocity.v[g.index(i, jr)] - velocity.v[g.index(i, jl)]) / (2.0 * g.dy);
        }
        out.values[m] = div;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceReport {
    pub max_abs: f64,
    pub threshold: f64,
    pub exceeds: bool,
}

/// Flags fields whose divergence exceeds `0.01 u_ref / min spacing`.
pub fn check_divergence(velocity: &VelocityField, u_ref: f64) -> DivergenceReport {
    let max_abs = divergence(velocity)
        .values
        .iter()
        .fold(0.0_f64, |m, d| m.max(d.abs()));
    let threshold = 0.01 * u_ref / velocity.grid.min_spacing();
    let exceeds = max_abs > threshold;
    if exceeds {
        log::warn!("velocity divergence {max_abs:.3e} exceeds {threshold:.3e}");
    }
    DivergenceReport {
        max_abs,
        threshold,
        exceeds,
    }
}
