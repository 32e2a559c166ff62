//! Cross-module statistical invariants that complement the acceptance gate:
//! the Monte-Carlo invasion-rate estimator against its closed-form oracle,
//! sign agreement with the two-environment rule, long-run occupation
//! against the invariant density, and verdict soundness under simulation.

use rand::RngExt;
use rayon::prelude::*;

use moran_pdmp_core::analysis::{
    edge_invasion_rate_mc, edge_invasion_rate_quadrature, edge_invasion_signs_two_env,
    edge_measure_presence, persistence_verdict, three_species_edge_rates, EdgeMcOptions,
    EdgePresence, VerdictKind, VerdictOptions,
};
use moran_pdmp_core::env::{EnvironmentModel, EnvironmentModelSpec, SimplexPoint};
use moran_pdmp_core::experiments::{
    density_comparison, ensemble_mean_path, presets, EnsembleEngine,
};
use moran_pdmp_core::pdmp::{occupation_histogram, simulate_pdmp, PdmpOptions};
use moran_pdmp_core::derive_seed;

fn random_alternating_model(rng: &mut rand_chacha::ChaCha8Rng) -> EnvironmentModel {
    // species 1 favoured then penalised, species 2 the reverse
    let s1 = 0.1 + 1.9 * rng.random::<f64>();
    let r1 = -0.8 + 0.7 * rng.random::<f64>();
    let s2 = -0.8 + 0.7 * rng.random::<f64>();
    let r2 = 0.1 + 1.9 * rng.random::<f64>();
    let q1 = 0.3 + 1.7 * rng.random::<f64>();
    let q2 = 0.3 + 1.7 * rng.random::<f64>();
    EnvironmentModel::from_spec(&EnvironmentModelSpec {
        fitness: vec![vec![s1, r1], vec![s2, r2]],
        q: vec![vec![-q1, q1], vec![q2, -q2]],
    })
    .unwrap()
}

#[test]
fn mc_estimator_matches_quadrature_oracle() {
    // the long-run Monte-Carlo average must agree with the closed-form
    // integral against the edge invariant density
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4242);
    let mut tested = 0;
    let mut attempts = 0;
    while tested < 6 && attempts < 400 {
        attempts += 1;
        let env = random_alternating_model(&mut rng);
        let rates = three_species_edge_rates(&env).unwrap();
        for edge in 1..=3 {
            if tested >= 6 {
                break;
            }
            if edge_measure_presence(rates.edge(edge)) != EdgePresence::Exists {
                continue;
            }
            let exact = edge_invasion_rate_quadrature(&env, edge).unwrap();
            let est = edge_invasion_rate_mc(
                &env,
                edge,
                400.0,
                64,
                derive_seed(7, &[tested as u64]),
                &EdgeMcOptions::default(),
            )
            .unwrap();
            assert!(
                (est.mean - exact).abs() < 5.0 * est.std_error.max(1e-4),
                "edge {edge}: mc {} +/- {} vs quadrature {exact}",
                est.mean,
                est.std_error
            );
            tested += 1;
        }
    }
    assert!(tested >= 6, "not enough testable edges found");
}

use rand_chacha::rand_core::SeedableRng;

#[test]
fn mc_sign_matches_analytic_rule() {
    // among runs decided at 4 standard errors, the Monte-Carlo sign agrees
    // with the closed-form sign rule in >= 99% of cases
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31337);
    let mut decided = 0u32;
    let mut agree = 0u32;
    let mut attempts = 0;
    while decided < 24 && attempts < 600 {
        attempts += 1;
        let env = random_alternating_model(&mut rng);
        let rates = three_species_edge_rates(&env).unwrap();
        let signs = edge_invasion_signs_two_env(&env).unwrap();
        for edge in 1..=3 {
            if edge_measure_presence(rates.edge(edge)) != EdgePresence::Exists {
                continue;
            }
            if signs.signs[edge - 1] == 0 {
                continue;
            }
            let est = edge_invasion_rate_mc(
                &env,
                edge,
                150.0,
                48,
                derive_seed(11, &[attempts, edge as u64]),
                &EdgeMcOptions::default(),
            )
            .unwrap();
            if est.mean.abs() > 4.0 * est.std_error {
                decided += 1;
                if est.mean.signum() as i8 == signs.signs[edge - 1] {
                    agree += 1;
                }
            }
        }
    }
    assert!(decided >= 24, "not enough decided runs: {decided}");
    assert!(
        agree as f64 >= 0.99 * decided as f64,
        "sign agreement {agree}/{decided}"
    );
}

#[test]
fn ladder_errors_decrease_monotonically_within_noise() {
    // the ensemble-mean error shrinks as J grows, allowing one-SE slack
    use moran_pdmp_core::experiments::{
        convergence_experiment, ConvergenceConfig, Observable,
    };
    let env = presets::persistent_two_species();
    let x0 = SimplexPoint::new(vec![0.5]).unwrap();
    let cfg = ConvergenceConfig {
        t: 5.0,
        j_values: vec![100, 200, 400, 800, 1600],
        n_traj: 2_000,
        seed: 404,
        h_max: 1e-3,
    };
    let res = convergence_experiment(&env, &x0, 0, &Observable::cube(0), &cfg).unwrap();
    for i in 1..res.errors.len() {
        let slack = res.std_errors[i - 1] + res.std_errors[i];
        assert!(
            res.errors[i] <= res.errors[i - 1] + slack,
            "error increased from J={} ({}) to J={} ({})",
            res.j_values[i - 1],
            res.errors[i - 1],
            res.j_values[i],
            res.errors[i]
        );
    }
}

#[test]
fn stationary_law_matches_empirical_occupation_three_states() {
    // the dense-solve stationary law agrees with the long-run occupation
    // of a simulated three-state chain
    let q = vec![
        vec![-3.0, 1.0, 2.0],
        vec![0.5, -0.9, 0.4],
        vec![1.25, 0.75, -2.0],
    ];
    let env = EnvironmentModel::from_spec(&EnvironmentModelSpec {
        fitness: vec![vec![0.0], vec![0.0], vec![0.0]],
        q: q.clone(),
    })
    .unwrap();
    let p = env.stationary().to_vec();
    let x0 = SimplexPoint::new(vec![0.5]).unwrap();
    let opts = PdmpOptions {
        dt_sample: 0.05,
        h_max: 1e-2,
    };
    let t_final = 20_000.0;
    let path = simulate_pdmp(&x0, 0, &env, t_final, &opts, 5150).unwrap();
    for k in 0..3 {
        let occ = moran_pdmp_core::pdmp::ergodic_average(&path, |_, e| {
            if e == k {
                1.0
            } else {
                0.0
            }
        });
        // holding times are O(1), so fluctuations are O(1/sqrt(T))
        let tol = 4.0 * 1.5 / t_final.sqrt();
        assert!(
            (occ - p[k]).abs() < tol,
            "state {k}: occupation {occ} vs stationary {}",
            p[k]
        );
    }
}

#[test]
fn occupation_matches_density_at_long_horizon() {
    // longer-horizon complement of the acceptance check: at T = 1e5 the
    // occupation histogram settles onto the closed form; single runs have
    // heavy-tailed boundary excursions, so average a few seeds
    let l1s: Vec<f64> = (1..=3u64)
        .into_par_iter()
        .map(|seed| {
            density_comparison(&presets::persistent_two_species(), 1e5, 100, seed)
                .unwrap()
                .l1_distance
        })
        .collect();
    let mean = l1s.iter().sum::<f64>() / l1s.len() as f64;
    assert!(mean < 0.05, "mean L1 = {mean} over seeds {l1s:?} at T = 1e5");
}

#[test]
fn extinction_regime_occupation_piles_up_at_the_vertex() {
    // when species 2 dies out, the occupation measure of a long run puts
    // nearly all its mass within 0.02 of x = 1
    let env = presets::extinct_two_species();
    let x0 = SimplexPoint::new(vec![0.5]).unwrap();
    let opts = PdmpOptions {
        dt_sample: 0.05,
        h_max: 1e-2,
    };
    let path = simulate_pdmp(&x0, 0, &env, 5_000.0, &opts, 2024).unwrap();
    let hist = occupation_histogram(&path, 50).unwrap();
    let top: f64 = hist.masses[49]; // bin [0.98, 1]
    assert!(top >= 0.95, "mass near the vertex: {top}");
}

#[test]
fn ensemble_means_reproduce_the_three_regimes() {
    let x0 = SimplexPoint::new(vec![0.5]).unwrap();
    let engine = EnsembleEngine::Pdmp { h_max: 1e-2 };
    let grid = 20;
    let n = 60;

    // persistent: the mean stabilises in the interior
    let mp = ensemble_mean_path(
        &presets::persistent_two_species(),
        &x0,
        0,
        200.0,
        grid,
        n,
        31,
        engine,
    )
    .unwrap();
    let last = mp.mean[grid][0];
    assert!((0.2..0.98).contains(&last), "persistent mean ended at {last}");

    // extinct: the mean runs to one
    let mp = ensemble_mean_path(
        &presets::extinct_two_species(),
        &x0,
        0,
        400.0,
        grid,
        n,
        32,
        engine,
    )
    .unwrap();
    assert!(mp.mean[grid][0] > 0.97, "extinct mean ended at {}", mp.mean[grid][0]);

    // balanced boundary case: the first species' mean decays with no
    // interior stabilisation
    let mp = ensemble_mean_path(
        &presets::balanced_two_species(),
        &x0,
        0,
        400.0,
        grid,
        n,
        33,
        engine,
    )
    .unwrap();
    let early = mp.mean[2][0];
    let late = mp.mean[grid][0];
    assert!(
        late < early - 0.05,
        "balanced mean should decay: early {early}, late {late}"
    );
}

#[test]
fn slow_switching_concentrates_occupation_at_the_boundaries() {
    // small q parks the process near an endpoint for whole sojourns;
    // large q keeps it away from both
    let slow = presets::boundary_density_two_species(0.27, 0.04);
    let fast = presets::boundary_density_two_species(0.27, 2.0);
    let x0 = SimplexPoint::new(vec![0.5]).unwrap();
    let opts = PdmpOptions {
        dt_sample: 0.05,
        h_max: 1e-2,
    };
    let edge_mass = |env: &EnvironmentModel, seed: u64| {
        let path = simulate_pdmp(&x0, 0, env, 4_000.0, &opts, seed).unwrap();
        let hist = occupation_histogram(&path, 20).unwrap();
        hist.masses[0] + hist.masses[19]
    };
    let slow_mass = edge_mass(&slow, 8);
    let fast_mass = edge_mass(&fast, 9);
    assert!(slow_mass > 0.6, "slow-switching edge mass {slow_mass}");
    assert!(fast_mass < 0.1, "fast-switching edge mass {fast_mass}");
}

#[test]
fn extinction_verdicts_are_borne_out_by_simulation() {
    // two-species: lambda1 < 0 dooms species 2 (X -> 1)
    let env2 = presets::extinct_two_species();
    let v = persistence_verdict(&env2, &VerdictOptions::default()).unwrap();
    assert_eq!(v.kind, VerdictKind::ExtinctionOf(2));
    let n_runs = 100;
    let finals: Vec<f64> = (0..n_runs)
        .into_par_iter()
        .map(|k| {
            let x0 = SimplexPoint::new(vec![0.5]).unwrap();
            let opts = PdmpOptions {
                dt_sample: 5.0,
                h_max: 1e-2,
            };
            let path = simulate_pdmp(&x0, 0, &env2, 5_000.0, &opts, derive_seed(13, &[k])).unwrap();
            1.0 - path.final_state()[0]
        })
        .collect();
    let ok = finals.iter().filter(|&&v| v < 1e-3).count();
    assert!(ok >= 95, "two-species extinction confirmed in {ok}/{n_runs}");

    // three-species, two environments: an edge measure with negative rate
    // dooms the corresponding species
    let env3 = EnvironmentModel::from_spec(&EnvironmentModelSpec {
        fitness: vec![vec![0.9, -0.5], vec![-0.5, 0.9]],
        q: vec![vec![-1.0, 1.0], vec![1.0, -1.0]],
    })
    .unwrap();
    let v3 = persistence_verdict(&env3, &VerdictOptions::default()).unwrap();
    let doomed = match v3.kind {
        VerdictKind::ExtinctionOf(i) => i,
        ref other => panic!("expected an extinction verdict, got {other:?}"),
    };
    let finals3: Vec<f64> = (0..n_runs)
        .into_par_iter()
        .map(|k| {
            let x0 = SimplexPoint::new(vec![0.35, 0.3]).unwrap();
            let opts = PdmpOptions {
                dt_sample: 5.0,
                h_max: 1e-2,
            };
            let path =
                simulate_pdmp(&x0, 0, &env3, 5_000.0, &opts, derive_seed(17, &[k])).unwrap();
            let end = path.final_state();
            match doomed {
                1 => end[0],
                2 => end[1],
                _ => 1.0 - end[0] - end[1],
            }
        })
        .collect();
    let ok3 = finals3.iter().filter(|&&v| v < 1e-3).count();
    assert!(
        ok3 >= 95,
        "species {doomed} extinction confirmed in {ok3}/{n_runs}"
    );
}
