//! Postselected time marching: attempt a step, measure the ancilla, keep
//! whichever branch was observed, repeat until enough steps succeeded.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::embedding::HermitianEmbedding;
use crate::error::{Error, Result};
use crate::grid::{amplitudes_to_field, l2_norm, Grid2D, ScalarField, Statevector};

/// Sampling generator used for every run (ChaCha with 8 rounds).
pub type RunRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> RunRng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// Below this probability a forced branch is treated as empty.
const MIN_BRANCH_PROBABILITY: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepMode {
    Sampled,
    ForcedSuccess,
    ForcedFailure,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub attempt: usize,
    pub success: bool,
    pub p_success: f64,
    /// Norm of the state after renormalization.
    pub norm: f64,
}

/// One attempted step. Returns the renormalized post-measurement state.
pub fn step(
    state: &[Complex64],
    emb: &HermitianEmbedding,
    rng: &mut RunRng,
    mode: StepMode,
    attempt: usize,
) -> Result<(Vec<Complex64>, StepOutcome)> {
    let res = emb.apply_step(state)?;
    let p = res.p_success.clamp(0.0, 1.0);
    let success = match mode {
        StepMode::Sampled => rng.random::<f64>() < p,
        StepMode::ForcedSuccess => true,
        StepMode::ForcedFailure => false,
    };
    let (mut branch, branch_p) = if success {
        (res.top, p)
    } else {
        (res.bottom, 1.0 - p)
    };
    if mode != StepMode::Sampled && branch_p < MIN_BRANCH_PROBABILITY {
        return Err(Error::VanishingBranch { p: branch_p });
    }
    let norm = l2_norm(&branch);
    if norm == 0.0 {
        return Err(Error::VanishingBranch { p: branch_p });
    }
    branch.iter_mut().for_each(|a| *a /= norm);
    let outcome = StepOutcome {
        attempt,
        success,
        p_success: res.p_success,
        norm: l2_norm(&branch),
    };
    Ok((branch, outcome))
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub target_successes: usize,
    pub mode: StepMode,
    /// Success counts at which the state is recorded (0 records the input).
    pub snapshots: Vec<usize>,
    /// Attempt budget as a multiple of `target_successes`.
    pub budget_factor: usize,
}

impl RunOptions {
    pub fn new(target_successes: usize) -> Self {
        Self {
            target_successes,
            mode: StepMode::Sampled,
            snapshots: Vec::new(),
            budget_factor: 100,
        }
    }

    pub fn mode(mut self, mode: StepMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn snapshots(mut self, at: impl IntoIterator<Item = usize>) -> Self {
        self.snapshots = at.into_iter().collect();
        self
    }
}

/// Snapshot schedule `{0, T/3, 2T/3, T}` in successful-step counts.
pub fn thirds_schedule(target: usize) -> Vec<usize> {
    vec![0, target / 3, 2 * target / 3, target]
}

#[derive(Debug, Clone)]
pub struct RunLog {
    pub seed: u64,
    pub successes: usize,
    pub failures: usize,
    pub outcomes: Vec<StepOutcome>,
    pub snapshots: BTreeMap<usize, Vec<Complex64>>,
    pub final_state: Vec<Complex64>,
}

impl RunLog {
    pub fn attempts(&self) -> usize {
        self.successes + self.failures
    }

    pub fn success_fraction(&self) -> f64 {
        self.successes as f64 / self.attempts().max(1) as f64
    }

    pub fn mean_p_success(&self) -> f64 {
        self.outcomes.iter().map(|o| o.p_success).sum::<f64>() / self.outcomes.len().max(1) as f64
    }

    pub fn snapshot_field(&self, step: usize, grid: &Grid2D) -> Option<ScalarField> {
        self.snapshots
            .get(&step)
            .and_then(|a| amplitudes_to_field(a, grid).ok())
    }

    /// `attempt,success,p_success` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("attempt,success,p_success\n");
        for o in &self.outcomes {
            writeln!(
                s,
                "{},{},{:.17e}",
                o.attempt,
                u8::from(o.success),
                o.p_success
            )
            .unwrap();
        }
        s
    }
}

pub fn run(
    initial: &Statevector,
    emb: &HermitianEmbedding,
    options: &RunOptions,
    seed: u64,
) -> Result<RunLog> {
    run_observed(initial, emb, options, seed, |_, _| {})
}

/// Like [`run`], calling `observer(successes, state)` after every success.
pub fn run_observed(
    initial: &Statevector,
    emb: &HermitianEmbedding,
    options: &RunOptions,
    seed: u64,
    mut observer: impl FnMut(usize, &[Complex64]),
) -> Result<RunLog> {
    if options.target_successes == 0 {
        return Err(Error::OutOfRange(
            "target must be at least one successful step".into(),
        ));
    }
    let mut rng = seeded_rng(seed);
    let budget = options.budget_factor.max(1) * options.target_successes;
    let mut log = RunLog {
        seed,
        successes: 0,
        failures: 0,
        outcomes: Vec::new(),
        snapshots: BTreeMap::new(),
        final_state: Vec::new(),
    };
    let wants = |n: usize| options.snapshots.contains(&n);
    let mut state = initial.amplitudes.clone();
    if wants(0) {
        log.snapshots.insert(0, state.clone());
    }
    while log.successes < options.target_successes {
        let attempt = log.attempts();
        if attempt >= budget {
            return Err(Error::BudgetExceeded {
                budget,
                successes: log.successes,
            });
        }
        let (next, outcome) = step(&state, emb, &mut rng, options.mode, attempt)?;
        state = next;
        if outcome.success {
            log.successes += 1;
            observer(log.successes, &state);
            if wants(log.successes) {
                log.snapshots.insert(log.successes, state.clone());
            }
        } else {
            log.failures += 1;
        }
        log.outcomes.push(outcome);
    }
    log.final_state = state;
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::Backend;
    use crate::operator::SparseOperator;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn uniform_state(n: usize) -> Statevector {
        Statevector::from_amplitudes(vec![Complex64::new(1.0, 0.0); n]).unwrap()
    }

    #[test]
    fn identity_always_succeeds_at_right_angle() {
        let emb =
            HermitianEmbedding::new(SparseOperator::identity(4), FRAC_PI_2, Backend::DenseSvd)
                .unwrap();
        let log = run(&uniform_state(4), &emb, &RunOptions::new(10), 3).unwrap();
        assert_eq!((log.successes, log.failures), (10, 0));
        assert!(log
            .outcomes
            .iter()
            .all(|o| (o.p_success - 1.0).abs() < 1e-14));
    }

    #[test]
    fn single_step_keeps_state() {
        let emb = HermitianEmbedding::new(SparseOperator::identity(4), 0.4, Backend::KrylovLanczos)
            .unwrap();
        let init = uniform_state(4);
        let log = run(&init, &emb, &RunOptions::new(1), 11).unwrap();
        assert_eq!(log.successes, 1);
        for (a, b) in log.final_state.iter().zip(&init.amplitudes) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn forced_failure_of_vanishing_branch_errors() {
        let emb =
            HermitianEmbedding::new(SparseOperator::identity(4), FRAC_PI_2, Backend::DenseSvd)
                .unwrap();
        let mut rng = seeded_rng(0);
        let err = step(
            &uniform_state(4).amplitudes,
            &emb,
            &mut rng,
            StepMode::ForcedFailure,
            0,
        );
        assert!(matches!(err, Err(Error::VanishingBranch { .. })));
        let zero = SparseOperator::identity(4).map_values(|_, _, _| 0.0);
        let emb = HermitianEmbedding::new(zero, 1.0, Backend::DenseSvd).unwrap();
        let err = step(
            &uniform_state(4).amplitudes,
            &emb,
            &mut rng,
            StepMode::ForcedSuccess,
            0,
        );
        assert!(matches!(err, Err(Error::VanishingBranch { .. })));
    }

    #[test]
    fn budget_is_enforced() {
        // p_success = sin^2(1e-3) ~ 1e-6: success within 200 attempts is vanishingly rare
        let emb =
            HermitianEmbedding::new(SparseOperator::identity(4), 1e-3, Backend::DenseSvd).unwrap();
        let mut opts = RunOptions::new(2);
        opts.budget_factor = 100;
        let err = run(&uniform_state(4), &emb, &opts, 1).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { budget: 200, .. }));
        assert!(run(&uniform_state(4), &emb, &RunOptions::new(0), 1).is_err());
    }

    #[test]
    fn sampled_frequency_tracks_probability() {
        let emb =
            HermitianEmbedding::new(SparseOperator::identity(4), FRAC_PI_4, Backend::DenseSvd)
                .unwrap();
        let log = run(&uniform_state(4), &emb, &RunOptions::new(1500), 99).unwrap();
        let n = log.attempts() as f64;
        let p = log.mean_p_success();
        let sigma = (p * (1.0 - p) / n).sqrt();
        assert!((log.success_fraction() - p).abs() < 3.0 * sigma);
    }

    #[test]
    fn snapshots_and_csv() {
        let emb =
            HermitianEmbedding::new(SparseOperator::identity(4), 1.2, Backend::DenseSvd).unwrap();
        let log = run(
            &uniform_state(4),
            &emb,
            &RunOptions::new(6).snapshots(thirds_schedule(6)),
            5,
        )
        .unwrap();
        assert_eq!(
            log.snapshots.keys().copied().collect::<Vec<_>>(),
            vec![0, 2, 4, 6]
        );
        let csv = log.to_csv();
        assert!(csv.starts_with("attempt,success,p_success\n0,"));
        assert_eq!(csv.lines().count(), log.attempts() + 1);
    }

    #[test]
    fn forced_success_ignores_seed() {
        let a = SparseOperator::identity(4).map_values(|i, j, v| v + 0.01 * (i + 2 * j) as f64);
        let emb = HermitianEmbedding::new(a, 1.0, Backend::KrylovLanczos).unwrap();
        let opts = RunOptions::new(5).mode(StepMode::ForcedSuccess);
        let x = run(&uniform_state(4), &emb, &opts, 1).unwrap();
        let y = run(&uniform_state(4), &emb, &opts, 2).unwrap();
        assert_eq!(x.final_state, y.final_state);
    }
}
