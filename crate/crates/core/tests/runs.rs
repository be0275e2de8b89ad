use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};

use num_complex::Complex64;
use qadvect::analysis::{e_i_norm, p_min, theta_switch};
use qadvect::cavity::CavitySpec;
use qadvect::experiment::{channel_problem, run_cavity, run_channel, CavitySetup, ChannelSetup};
use qadvect::grid::{l2_norm, to_statevector};
use qadvect::krylov::LanczosConfig;
use qadvect::timestepper::{run, seeded_rng, step};
use qadvect::{Backend, HermitianEmbedding, RunOptions, Stencil, StencilSpec, StepMode};

fn overlap(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.conj() * y)
        .sum::<Complex64>()
        .norm()
}

fn channel_embedding(n: usize, r: f64, theta: f64) -> (HermitianEmbedding, Vec<Complex64>) {
    let p = channel_problem(n, r, &StencilSpec::uniform(Stencil::CENTRAL2)).unwrap();
    let state = to_statevector(&p.initial).unwrap();
    (
        HermitianEmbedding::new(p.operator, theta, Backend::KrylovLanczos).unwrap(),
        state.amplitudes,
    )
}

#[test]
fn worst_case_probability_is_a_lower_bound() {
    for r in [0.1, 0.25, 0.5] {
        for theta in [FRAC_PI_8, FRAC_PI_4, theta_switch(r), FRAC_PI_2] {
            let (emb, mut state) = channel_embedding(64, r, theta);
            let mut rng = seeded_rng(4);
            for attempt in 0..40 {
                let (next, o) = step(&state, &emb, &mut rng, StepMode::Sampled, attempt).unwrap();
                assert!(
                    o.p_success >= p_min(r, theta) - 1e-12,
                    "r {r} theta {theta}: {}",
                    o.p_success
                );
                assert!((o.norm - 1.0).abs() < 1e-12);
                state = next;
            }
        }
    }
}

#[test]
fn failures_then_sampling_keep_the_state() {
    let (r, theta) = (0.1, FRAC_PI_4);
    let (emb, init) = channel_embedding(64, r, theta);
    let mut rng = seeded_rng(12);
    let mut state = init.clone();
    for attempt in 0..5 {
        state = step(&state, &emb, &mut rng, StepMode::ForcedFailure, attempt)
            .unwrap()
            .0;
    }
    let fidelity = overlap(&init, &state);
    assert!(
        fidelity >= 1.0 - 10.0 * e_i_norm(r, theta),
        "fidelity {fidelity}"
    );

    let mut successes = 0;
    let mut attempt = 5;
    while successes < 10 {
        let (next, o) = step(&state, &emb, &mut rng, StepMode::Sampled, attempt).unwrap();
        state = next;
        successes += usize::from(o.success);
        attempt += 1;
    }
    assert!((l2_norm(&state) - 1.0).abs() < 1e-12);
}

#[test]
fn failure_branch_is_near_identity_below_right_angle() {
    for r in [0.1, 0.25] {
        for theta in [FRAC_PI_8, FRAC_PI_4, 1.2] {
            let (emb, init) = channel_embedding(64, r, theta);
            let (fail, _) =
                step(&init, &emb, &mut seeded_rng(0), StepMode::ForcedFailure, 0).unwrap();
            let fidelity = overlap(&init, &fail);
            assert!(
                fidelity >= 1.0 - 2.0 * e_i_norm(r, theta),
                "r {r} theta {theta}: {fidelity}"
            );
        }
    }
}

#[test]
#[ignore = "known failure: at theta = pi/2 the failure block is cos(theta sqrt(A^T A)), which annihilates the mean mode"]
fn failure_branch_is_near_identity_at_right_angle() {
    for r in [0.1, 0.25] {
        let (emb, init) = channel_embedding(64, r, FRAC_PI_2);
        let (fail, _) = step(&init, &emb, &mut seeded_rng(0), StepMode::ForcedFailure, 0).unwrap();
        let fidelity = overlap(&init, &fail);
        assert!(
            fidelity >= 1.0 - 2.0 * e_i_norm(r, FRAC_PI_2),
            "r {r}: {fidelity}"
        );
    }
}

#[test]
fn forced_success_runs_are_seed_independent_and_counted() {
    let (emb, init) = channel_embedding(16, 0.2, 1.3);
    let init = qadvect::Statevector::from_amplitudes(init).unwrap();
    let opts = RunOptions::new(30).mode(StepMode::ForcedSuccess);
    let a = run(&init, &emb, &opts, 1).unwrap();
    let b = run(&init, &emb, &opts, 99).unwrap();
    assert_eq!(a.final_state, b.final_state);
    let sampled = run(&init, &emb, &RunOptions::new(30), 5).unwrap();
    assert_eq!(sampled.attempts(), sampled.outcomes.len());
    assert_eq!(
        sampled.successes,
        sampled.outcomes.iter().filter(|o| o.success).count()
    );
}

#[test]
fn split_lanczos_steps_match_dense() {
    let p = channel_problem(16, 0.3, &StencilSpec::uniform(Stencil::UPWIND2)).unwrap();
    let state = to_statevector(&p.initial).unwrap();
    let dense = HermitianEmbedding::new(p.operator.clone(), FRAC_PI_2, Backend::DenseSvd).unwrap();
    let tight = LanczosConfig {
        tol: 1e-12,
        max_dim: 4,
    };
    let krylov =
        HermitianEmbedding::with_lanczos(p.operator, FRAC_PI_2, Backend::KrylovLanczos, tight)
            .unwrap();
    let (x, y) = (
        dense.apply_step(&state.amplitudes).unwrap(),
        krylov.apply_step(&state.amplitudes).unwrap(),
    );
    for (p, q) in x
        .top
        .iter()
        .chain(&x.bottom)
        .zip(y.top.iter().chain(&y.bottom))
    {
        assert!((p - q).norm() < 1e-10);
    }
}

fn mean_error_at(r: f64, steps: usize) -> f64 {
    let setup = ChannelSetup {
        r_max: r,
        target: steps,
        mode: StepMode::ForcedSuccess,
        ..Default::default()
    };
    run_channel(&setup).unwrap().mean_error
}

#[test]
fn channel_error_grows_with_r_at_fixed_time() {
    let e: Vec<f64> = [(0.1, 500), (0.25, 200), (0.5, 100)]
        .iter()
        .map(|&(r, n)| mean_error_at(r, n))
        .collect();
    assert!(e[0] < e[1] && e[1] < e[2], "{e:?}");
}

#[test]
#[ignore = "known failure: at fixed time the spatial error dominates and the r-dependent part grows like r^2"]
fn channel_error_is_linear_in_r() {
    let e: Vec<f64> = [(0.1, 2000), (0.25, 800), (0.5, 400)]
        .iter()
        .map(|&(r, n)| mean_error_at(r, n))
        .collect();
    for (k, r) in [(1, 0.25), (2, 0.5)] {
        let ratio = e[k] / e[0];
        let expected = r / 0.1;
        assert!(
            (ratio / expected - 1.0).abs() <= 0.3,
            "ratio {ratio} vs {expected}"
        );
    }
}

#[test]
fn cavity_backends_agree_on_wall_drift() {
    let spec = CavitySpec {
        n: 16,
        ..Default::default()
    };
    let drift = |backend| {
        let setup = CavitySetup {
            spec,
            target: 200,
            backend,
            mode: StepMode::ForcedSuccess,
            ..Default::default()
        };
        let res = run_cavity(&setup).unwrap();
        assert!(res.max_norm_deviation < 1e-12);
        (res.max_wall_drift, res.log.final_state)
    };
    let (d, fd) = drift(Backend::DenseSvd);
    let (k, fk) = drift(Backend::KrylovLanczos);
    assert!((d - k).abs() < 1e-10);
    assert!(fd.iter().zip(&fk).all(|(a, b)| (a - b).norm() < 1e-10));
}
