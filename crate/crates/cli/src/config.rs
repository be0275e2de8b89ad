//! JSON run configuration. Every key is optional; command-line flags
//! override values read from a file, and anything left unset takes the
//! experiment default.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use qadvect::timestepper::thirds_schedule;
use qadvect::{Backend, Stencil, StepMode};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Channel,
    Cavity,
    Bounds,
    Pmin,
    HeatBounds,
    Noise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum StencilName {
    Central2,
    Central4,
    Upwind2,
    Downwind2,
}

impl StencilName {
    pub fn stencil(self) -> Stencil {
        match self {
            Self::Central2 => Stencil::CENTRAL2,
            Self::Central4 => Stencil::CENTRAL4,
            Self::Upwind2 => Stencil::UPWIND2,
            Self::Downwind2 => Stencil::DOWNWIND2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BackendName {
    Dense,
    Krylov,
}

impl From<BackendName> for Backend {
    fn from(b: BackendName) -> Self {
        match b {
            BackendName::Dense => Backend::DenseSvd,
            BackendName::Krylov => Backend::KrylovLanczos,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModeName {
    Sampled,
    ForcedSuccess,
}

impl From<ModeName> for StepMode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Sampled => StepMode::Sampled,
            ModeName::ForcedSuccess => StepMode::ForcedSuccess,
        }
    }
}

/// Sampling grid for the bound surfaces; `r` stands for `r_h` in heat sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub r_min: f64,
    pub r_max: f64,
    pub r_points: usize,
    pub theta_min: f64,
    pub theta_max: f64,
    pub theta_points: usize,
}

impl Sweep {
    pub fn default_for(experiment: Experiment) -> Self {
        let (r_min, r_max) = match experiment {
            Experiment::HeatBounds => (0.005, 0.5),
            _ => (0.01, 1.0),
        };
        Self {
            r_min,
            r_max,
            r_points: 100,
            theta_min: FRAC_PI_2 / 100.0,
            theta_max: FRAC_PI_2,
            theta_points: 100,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let ok = self.r_points >= 1
            && self.theta_points >= 1
            && self.r_min > 0.0
            && self.r_max >= self.r_min
            && self.theta_min > 0.0
            && self.theta_max >= self.theta_min
            && self.theta_max <= FRAC_PI_2 + 1e-12;
        if ok {
            Ok(())
        } else {
            Err(CliError::Config(format!("invalid sweep ranges {self:?}")))
        }
    }

    fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![lo];
        }
        (0..n)
            .map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
            .collect()
    }

    pub fn r_values(&self) -> Vec<f64> {
        Self::axis(self.r_min, self.r_max, self.r_points)
    }

    pub fn theta_values(&self) -> Vec<f64> {
        Self::axis(self.theta_min, self.theta_max, self.theta_points)
    }
}

/// Configuration as written in a JSON file (all keys optional).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Option<Experiment>,
    pub n: Option<usize>,
    pub r_max: Option<f64>,
    pub theta: Option<f64>,
    pub stencil: Option<StencilName>,
    /// Stencil along `y` when it differs from `stencil`.
    pub stencil_y: Option<StencilName>,
    pub target: Option<usize>,
    pub snapshots: Option<Vec<usize>>,
    pub backend: Option<BackendName>,
    pub mode: Option<ModeName>,
    pub seed: Option<u64>,
    pub noise_seed: Option<u64>,
    pub state_noise: Option<f64>,
    pub matrix_noise: Option<f64>,
    pub series_every: Option<usize>,
    pub reynolds: Option<f64>,
    pub cavity_tol: Option<f64>,
    pub velocity_u: Option<PathBuf>,
    pub velocity_v: Option<PathBuf>,
    pub sweep: Option<Sweep>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overridden_by(self, other: RunConfig) -> RunConfig {
        macro_rules! pick {
            ($($f:ident),*) => { RunConfig { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(
            experiment,
            n,
            r_max,
            theta,
            stencil,
            stencil_y,
            target,
            snapshots,
            backend,
            mode,
            seed,
            noise_seed,
            state_noise,
            matrix_noise,
            series_every,
            reynolds,
            cavity_tol,
            velocity_u,
            velocity_v,
            sweep,
            out
        )
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let experiment = self
            .experiment
            .ok_or_else(|| CliError::Config("no experiment given".into()))?;
        let (stencil, target) = match experiment {
            Experiment::Cavity => (StencilName::Upwind2, 2800),
            _ => (StencilName::Central2, 2000),
        };
        let stencil = self.stencil.unwrap_or(stencil);
        let target = self.target.unwrap_or(target);
        let (state_noise, matrix_noise) = match experiment {
            Experiment::Noise => (0.1, 0.01),
            _ => (0.0, 0.0),
        };
        let r = Resolved {
            experiment,
            n: self.n.unwrap_or(64),
            r_max: self.r_max.unwrap_or(0.1),
            theta: self.theta.unwrap_or(FRAC_PI_2),
            stencil,
            stencil_y: self.stencil_y.unwrap_or(stencil),
            target,
            snapshots: self
                .snapshots
                .clone()
                .unwrap_or_else(|| thirds_schedule(target)),
            backend: self.backend.unwrap_or(BackendName::Krylov),
            mode: self.mode.unwrap_or(ModeName::Sampled),
            seed: self.seed.unwrap_or(0),
            noise_seed: self.noise_seed.unwrap_or(1),
            state_noise: self.state_noise.unwrap_or(state_noise),
            matrix_noise: self.matrix_noise.unwrap_or(matrix_noise),
            series_every: self.series_every.unwrap_or(100),
            reynolds: self.reynolds.unwrap_or(100.0),
            cavity_tol: self.cavity_tol.unwrap_or(1e-8),
            velocity: match (&self.velocity_u, &self.velocity_v) {
                (Some(u), Some(v)) => Some((u.clone(), v.clone())),
                (None, None) => None,
                _ => {
                    return Err(CliError::Config(
                        "velocity_u and velocity_v must be given together".into(),
                    ))
                }
            },
            sweep: self.sweep.unwrap_or_else(|| Sweep::default_for(experiment)),
            out: self.out.clone().unwrap_or_else(|| PathBuf::from("out")),
        };
        r.validate()?;
        Ok(r)
    }
}

/// Fully defaulted and validated configuration, echoed into the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub experiment: Experiment,
    pub n: usize,
    pub r_max: f64,
    pub theta: f64,
    pub stencil: StencilName,
    pub stencil_y: StencilName,
    pub target: usize,
    pub snapshots: Vec<usize>,
    pub backend: BackendName,
    pub mode: ModeName,
    pub seed: u64,
    pub noise_seed: u64,
    pub state_noise: f64,
    pub matrix_noise: f64,
    pub series_every: usize,
    pub reynolds: f64,
    pub cavity_tol: f64,
    pub velocity: Option<(PathBuf, PathBuf)>,
    pub sweep: Sweep,
    pub out: PathBuf,
}

impl Resolved {
    fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.n < 4 {
            return bad(format!("n = {} is too small", self.n));
        }
        if !(self.r_max > 0.0 && self.r_max <= 1.0) {
            return bad(format!("r_max = {} outside (0, 1]", self.r_max));
        }
        if !(self.theta > 0.0 && self.theta <= FRAC_PI_2 + 1e-12) {
            return bad(format!("theta = {} outside (0, pi/2]", self.theta));
        }
        if self.target == 0 {
            return bad("target must be positive".into());
        }
        if let Some(&s) = self.snapshots.iter().find(|&&s| s > self.target) {
            return bad(format!("snapshot {s} beyond target {}", self.target));
        }
        if !(self.state_noise >= 0.0 && self.matrix_noise >= 0.0) {
            return bad("noise levels must be non-negative".into());
        }
        if !(self.reynolds > 0.0 && self.cavity_tol > 0.0) {
            return bad("reynolds and cavity_tol must be positive".into());
        }
        if let Some((u, v)) = &self.velocity {
            for p in [u, v] {
                if !p.is_file() {
                    return bad(format!("velocity file {} does not exist", p.display()));
                }
            }
        }
        self.sweep.validate()
    }

    pub fn stencil_spec(&self) -> qadvect::StencilSpec {
        qadvect::StencilSpec {
            x: self.stencil.stencil(),
            y: self.stencil_y.stencil(),
        }
    }
}
