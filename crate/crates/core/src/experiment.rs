//! End-to-end channel-flow and cavity runs shared by the CLI and the
//! acceptance suite. Nothing here touches the filesystem.

use num_complex::Complex64;

use crate::analysis::{channel_analytical, max_abs_error, mean_abs_error};
use crate::cavity::{solve_lid_cavity, CavitySpec};
use crate::embedding::{Backend, HermitianEmbedding};
use crate::error::Result;
use crate::grid::{
    amplitudes_to_field, init_sine, poiseuille_velocity, to_statevector, Axis, Boundary, Grid2D,
    ScalarField, VelocityField,
};
use crate::noise::{perturb_matrix, perturb_state};
use crate::operator::{assemble_advection, dt_for_cfl, SparseOperator, Stencil, StencilSpec};
use crate::timestepper::{run_observed, seeded_rng, RunLog, RunOptions, StepMode};

#[derive(Debug, Clone)]
pub struct ChannelSetup {
    pub n: usize,
    pub r_max: f64,
    pub theta: f64,
    pub stencil: StencilSpec,
    pub target: usize,
    pub backend: Backend,
    pub mode: StepMode,
    pub seed: u64,
    /// Standard deviation of initial-state noise as a fraction of `mean(phi)`.
    pub state_noise: f64,
    /// Relative standard deviation of operator-entry noise.
    pub matrix_noise: f64,
    pub noise_seed: u64,
    pub snapshots: Vec<usize>,
    /// Record the mean error every this many successful steps (0 disables).
    pub series_every: usize,
}

impl Default for ChannelSetup {
    fn default() -> Self {
        Self {
            n: 64,
            r_max: 0.1,
            theta: std::f64::consts::FRAC_PI_2,
            stencil: StencilSpec::uniform(Stencil::CENTRAL2),
            target: 2000,
            backend: Backend::KrylovLanczos,
            mode: StepMode::Sampled,
            seed: 0,
            state_noise: 0.0,
            matrix_noise: 0.0,
            noise_seed: 1,
            snapshots: Vec::new(),
            series_every: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChannelProblem {
    pub grid: Grid2D,
    pub velocity: VelocityField,
    pub dt: f64,
    pub initial: ScalarField,
    pub operator: SparseOperator,
}

/// Poiseuille channel on an `n x n` grid (periodic in `x`, walls in `y`).
pub fn channel_problem(n: usize, r_max: f64, stencil: &StencilSpec) -> Result<ChannelProblem> {
    let grid = Grid2D::new(n, n, Boundary::Periodic, Boundary::DirichletWall)?;
    let velocity = poiseuille_velocity(&grid, 1.0)?;
    // nominal profile maximum is 1, so r_max = dt / min spacing
    let dt = r_max * grid.min_spacing();
    let operator = assemble_advection(&grid, &velocity, stencil, dt)?;
    let initial = init_sine(&grid, Axis::X);
    Ok(ChannelProblem {
        grid,
        velocity,
        dt,
        initial,
        operator,
    })
}

#[derive(Debug, Clone)]
pub struct ChannelResult {
    pub problem: ChannelProblem,
    pub init_norm: f64,
    pub log: RunLog,
    pub final_field: ScalarField,
    pub reference: ScalarField,
    pub max_error: f64,
    pub mean_error: f64,
    /// `(successful steps, mean error %)` samples.
    pub series: Vec<(usize, f64)>,
}

impl ChannelResult {
    pub fn time(&self) -> f64 {
        self.log.successes as f64 * self.problem.dt
    }

    pub fn reference_at(&self, successes: usize) -> ScalarField {
        channel_analytical(
            &self.problem.velocity,
            successes as f64 * self.problem.dt,
            self.init_norm,
        )
    }
}

pub fn run_channel(setup: &ChannelSetup) -> Result<ChannelResult> {
    let problem = channel_problem(setup.n, setup.r_max, &setup.stencil)?;
    let mut noise_rng = seeded_rng(setup.noise_seed);
    let initial = perturb_state(&problem.initial, setup.state_noise, &mut noise_rng)?;
    let operator = perturb_matrix(&problem.operator, setup.matrix_noise, &mut noise_rng)?;
    let state = to_statevector(&initial)?;
    let emb = HermitianEmbedding::new(operator.padded(state.len()), setup.theta, setup.backend)?;

    // errors are always measured against the noise-free solution
    let init_norm = problem.initial.norm();
    let grid = problem.grid;
    let mut series = Vec::new();
    if setup.series_every > 0 {
        let field = state.to_field(&grid)?;
        series.push((
            0,
            mean_abs_error(
                &field,
                &channel_analytical(&problem.velocity, 0.0, init_norm),
            )?,
        ));
    }
    let options = RunOptions {
        target_successes: setup.target,
        mode: setup.mode,
        snapshots: setup.snapshots.clone(),
        budget_factor: 100,
    };
    let mut series_err = None;
    let log = run_observed(&state, &emb, &options, setup.seed, |k, amps| {
        if setup.series_every > 0 && k % setup.series_every == 0 {
            let reference = channel_analytical(&problem.velocity, k as f64 * problem.dt, init_norm);
            match amplitudes_to_field(amps, &grid).and_then(|f| mean_abs_error(&f, &reference)) {
                Ok(e) => series.push((k, e)),
                Err(e) => series_err = Some(e),
            }
        }
    })?;
    if let Some(e) = series_err {
        return Err(e);
    }
    let final_field = amplitudes_to_field(&log.final_state, &grid)?;
    let reference = channel_analytical(
        &problem.velocity,
        log.successes as f64 * problem.dt,
        init_norm,
    );
    let max_error = max_abs_error(&final_field, &reference)?;
    let mean_error = mean_abs_error(&final_field, &reference)?;
    Ok(ChannelResult {
        problem,
        init_norm,
        log,
        final_field,
        reference,
        max_error,
        mean_error,
        series,
    })
}

#[derive(Debug, Clone)]
pub struct CavitySetup {
    pub spec: CavitySpec,
    /// Externally supplied velocity; the built-in solver runs when absent.
    pub velocity: Option<VelocityField>,
    pub r_max: f64,
    pub theta: f64,
    pub stencil: StencilSpec,
    pub target: usize,
    pub backend: Backend,
    pub mode: StepMode,
    pub seed: u64,
    pub snapshots: Vec<usize>,
}

impl Default for CavitySetup {
    fn default() -> Self {
        Self {
            spec: CavitySpec::default(),
            velocity: None,
            r_max: 0.1,
            theta: std::f64::consts::FRAC_PI_2,
            stencil: StencilSpec::uniform(Stencil::UPWIND2),
            target: 2800,
            backend: Backend::KrylovLanczos,
            mode: StepMode::Sampled,
            seed: 0,
            snapshots: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CavityResult {
    pub velocity: VelocityField,
    pub initial: ScalarField,
    pub dt: f64,
    pub log: RunLog,
    /// Largest `|phi_wall(t) - phi_wall(0)|` over all successful steps.
    pub max_wall_drift: f64,
    /// Largest `| ||phi|| - 1 |` over all successful steps.
    pub max_norm_deviation: f64,
}

pub fn run_cavity(setup: &CavitySetup) -> Result<CavityResult> {
    let velocity = match &setup.velocity {
        Some(v) => v.normalized(),
        None => solve_lid_cavity(&setup.spec)?.velocity.normalized(),
    };
    let grid = velocity.grid;
    let dt = dt_for_cfl(&velocity, setup.r_max);
    let operator = assemble_advection(&grid, &velocity, &setup.stencil, dt)?;
    let initial = init_sine(&grid, Axis::Y);
    let state = to_statevector(&initial)?;
    let emb = HermitianEmbedding::new(operator.padded(state.len()), setup.theta, setup.backend)?;

    let walls: Vec<usize> = (0..grid.len()).filter(|&m| grid.is_wall_node(m)).collect();
    let start: Vec<Complex64> = walls.iter().map(|&m| state.amplitudes[m]).collect();
    let mut drift = 0.0_f64;
    let mut norm_dev = 0.0_f64;
    let options = RunOptions {
        target_successes: setup.target,
        mode: setup.mode,
        snapshots: setup.snapshots.clone(),
        budget_factor: 100,
    };
    let log = run_observed(&state, &emb, &options, setup.seed, |_, amps| {
        for (&m, s) in walls.iter().zip(&start) {
            drift = drift.max((amps[m] - s).norm());
        }
        norm_dev = norm_dev.max((crate::grid::l2_norm(amps) - 1.0).abs());
    })?;
    Ok(CavityResult {
        velocity,
        initial,
        dt,
        log,
        max_wall_drift: drift,
        max_norm_deviation: norm_dev,
    })
}
