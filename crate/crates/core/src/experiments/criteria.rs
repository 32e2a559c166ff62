//! The acceptance checks: one function per criterion, each returning a
//! pass/fail outcome with a one-line summary. Every tolerance is pinned
//! here, in code.
//!
//! The runtime budgets are stated for a four-core desktop; on smaller hosts
//! they are scaled by the missing parallelism before gating.

use std::time::Instant;

use rand::RngExt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    classify_two_species, edge_invasion_rate_mc, edge_invasion_signs_two_env, invariant_density,
    fokker_planck_residual, persistence_verdict, three_species_edge_rates,
    two_species_growth_rates, vertex_invasion_table, Certificate, EdgeMcOptions,
    InvasionRateEstimate, TwoSpeciesRegime, VerdictKind, VerdictOptions,
};
use crate::env::{drift_field, EnvironmentModel, FitnessVector, SimplexPoint};
use crate::experiments::{convergence_experiment, presets, ConvergenceConfig, Observable};
use crate::moran::{moran_step, MoranState};
use crate::pdmp::{closed_form_flow_1d, ergodic_average, flow_step, simulate_pdmp, PdmpOptions};
use crate::rng::{derive_seed, rng_from};
use crate::Result;

/// Outcome of one acceptance criterion. The wall time is logged but kept
/// out of the serialised report, which stays a deterministic function of
/// `(seed, scale)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: String,
    pub name: String,
    pub pass: bool,
    pub summary: String,
    #[serde(skip_serializing, default)]
    pub runtime_s: f64,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} [{}] {} — {} ({:.1}s)",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.summary,
            self.runtime_s
        )
    }
}

fn finish(
    id: &str,
    name: &str,
    start: Instant,
    budget_s: f64,
    mut pass: bool,
    mut summary: String,
) -> CriterionOutcome {
    let runtime_s = start.elapsed().as_secs_f64();
    let cores = rayon::current_num_threads().max(1) as f64;
    let budget = budget_s * (4.0 / cores).max(1.0);
    if budget > 0.0 && runtime_s > budget {
        pass = false;
        summary.push_str(&format!("; runtime {runtime_s:.0}s exceeds budget {budget:.0}s"));
    }
    CriterionOutcome {
        id: id.into(),
        name: name.into(),
        pass,
        summary,
        runtime_s,
    }
}

fn check(ok: bool, pass: &mut bool, failures: &mut Vec<String>, label: &str) {
    if !ok {
        *pass = false;
        failures.push(label.to_string());
    }
}

/// Interior occupation fraction of a one-coordinate path, at margin `1e-5`
/// from both endpoints.
fn interior_occupation(env: &EnvironmentModel, t_final: f64, seed: u64) -> Result<(f64, f64)> {
    let x0 = SimplexPoint::new(vec![0.5])?;
    let opts = PdmpOptions {
        dt_sample: 0.05,
        h_max: 1e-2,
    };
    let path = simulate_pdmp(&x0, 0, env, t_final, &opts, seed)?;
    let margin = 1e-5;
    let occ = ergodic_average(&path, |x, _| {
        if x[0] > margin && x[0] < 1.0 - margin {
            1.0
        } else {
            0.0
        }
    });
    Ok((occ, path.final_state()[0]))
}

/// Criterion 1: regime reproduction around the persistence boundary of the
/// two-species reference family (s1 = 1, equal rates).
pub fn criterion_regimes(seed: u64, scale: f64) -> Result<CriterionOutcome> {
    let start = Instant::now();
    let mut pass = true;
    let mut failures = Vec::new();

    // the boundary sits at s2 = -1/3: lambda1 changes sign there
    let boundary = presets::two_species_switching(1.0, -1.0 / 3.0, 0.5, 0.5);
    let rates_boundary = two_species_growth_rates(&boundary)?;
    check(
        rates_boundary.at_one.abs() <= 1e-12,
        &mut pass,
        &mut failures,
        "lambda1(s2=-1/3) = 0",
    );
    check(
        classify_two_species(&rates_boundary) == TwoSpeciesRegime::DegenerateBoundary,
        &mut pass,
        &mut failures,
        "boundary classified degenerate",
    );

    let persistent = presets::persistent_two_species();
    let extinct = presets::extinct_two_species();
    check(
        classify_two_species(&two_species_growth_rates(&persistent)?)
            == TwoSpeciesRegime::Persistent,
        &mut pass,
        &mut failures,
        "s2=-0.4 classified Persistent",
    );
    check(
        classify_two_species(&two_species_growth_rates(&extinct)?)
            == TwoSpeciesRegime::Extinction2,
        &mut pass,
        &mut failures,
        "s2=-0.3 classified Extinction2",
    );

    let n_seeds = ((100.0 * scale).round() as u64).max(4);
    let t_final = 5_000.0;

    let occupations: Vec<f64> = (0..n_seeds)
        .into_par_iter()
        .map(|k| {
            interior_occupation(&persistent, t_final, derive_seed(seed, &[1, k])).map(|(o, _)| o)
        })
        .collect::<Result<_>>()?;
    let mean_occ = occupations.iter().sum::<f64>() / n_seeds as f64;
    check(
        mean_occ >= 0.9,
        &mut pass,
        &mut failures,
        "persistent interior occupation >= 0.9",
    );

    let finals: Vec<f64> = (0..n_seeds)
        .into_par_iter()
        .map(|k| {
            interior_occupation(&extinct, t_final, derive_seed(seed, &[2, k])).map(|(_, x)| x)
        })
        .collect::<Result<_>>()?;
    let absorbed = finals.iter().filter(|&&x| 1.0 - x < 1e-3).count();
    check(
        absorbed as f64 >= 0.95 * n_seeds as f64,
        &mut pass,
        &mut failures,
        "extinct runs reach 1-X < 1e-3 in >= 95%",
    );

    let summary = format!(
        "boundary at s2=-1/3; mean interior occupation {mean_occ:.3} over {n_seeds} runs; \
         {absorbed}/{n_seeds} extinct runs below 1e-3{}",
        if failures.is_empty() {
            String::new()
        } else {
            format!("; failed: {}", failures.join(", "))
        }
    );
    Ok(finish("1", "regime reproduction", start, 120.0, pass, summary))
}

/// Criterion 2: the balanced model s1 = -s2 = 0.4 with equal rates sits on
/// the degenerate boundary: lambda0 = 0 exactly and lambda1 equals the
/// symmetric closed form s^2/(1-s^2) = 4/21; the verdict is not Persistent.
///
/// The doubled variant of that closed form (8/21) also in circulation is
/// inconsistent with the stationary-average definition used everywhere
/// else, so the self-consistent value is asserted.
pub fn criterion_degenerate_balance() -> Result<CriterionOutcome> {
    let start = Instant::now();
    let mut pass = true;
    let mut failures = Vec::new();

    let env = presets::balanced_two_species();
    let rates = two_species_growth_rates(&env)?;
    check(
        rates.at_zero == 0.0,
        &mut pass,
        &mut failures,
        "lambda0 exactly 0",
    );
    let s: f64 = 0.4;
    let closed_form = s * s / (1.0 - s * s);
    check(
        (rates.at_one - closed_form).abs() <= 1e-12,
        &mut pass,
        &mut failures,
        "lambda1 = s^2/(1-s^2)",
    );
    check(
        (rates.at_one - 4.0 / 21.0).abs() <= 1e-12,
        &mut pass,
        &mut failures,
        "lambda1 = 4/21",
    );

    let verdict = persistence_verdict(&env, &VerdictOptions::default())?;
    check(
        verdict.kind != VerdictKind::Persistent,
        &mut pass,
        &mut failures,
        "verdict is not Persistent",
    );
    check(
        verdict.kind == VerdictKind::Degenerate,
        &mut pass,
        &mut failures,
        "verdict is Degenerate",
    );

    let summary = format!(
        "lambda0 = {:.1e}, lambda1 = {:.12} (= 4/21; doubled variant would be {:.5}), verdict {}{}",
        rates.at_zero,
        rates.at_one,
        2.0 * closed_form,
        verdict.kind,
        if failures.is_empty() {
            String::new()
        } else {
            format!("; failed: {}", failures.join(", "))
        }
    );
    Ok(finish("2", "degenerate balanced case", start, 0.0, pass, summary))
}

/// Criterion 3: the closed-form density of the persistent reference model
/// solves the stationary transport system to 1e-9, and the occupation
/// histogram of one T = 1e4 run matches it to L1 < 0.05 over 100 bins.
pub fn criterion_density_law(seed: u64) -> Result<CriterionOutcome> {
    let start = Instant::now();
    let mut pass = true;
    let mut failures = Vec::new();

    let env = presets::persistent_two_species();
    let density = invariant_density(&env)?;
    let (r1, r2) = fokker_planck_residual(&density, &env)?;
    check(
        r1 < 1e-9 && r2 < 1e-9,
        &mut pass,
        &mut failures,
        "transport residuals < 1e-9",
    );

    let cmp = crate::experiments::density_comparison(&env, 1e4, 100, derive_seed(seed, &[3]))?;
    check(
        cmp.l1_distance < 0.05,
        &mut pass,
        &mut failures,
        "L1 < 0.05 at T = 1e4",
    );

    let summary = format!(
        "residuals ({r1:.2e}, {r2:.2e}); L1 = {:.4} at T = 1e4, 100 bins{}",
        cmp.l1_distance,
        if failures.is_empty() {
            String::new()
        } else {
            format!("; failed: {}", failures.join(", "))
        }
    );
    Ok(finish("3", "invariant density law", start, 180.0, pass, summary))
}

/// Tiny exact fraction for the rational-arithmetic checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Frac {
    num: i64,
    den: i64,
}

impl Frac {
    fn new(num: i64, den: i64) -> Self {
        assert!(den != 0);
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()) as i64;
        let sign = if den < 0 { -1 } else { 1 };
        Self {
            num: sign * num / g,
            den: sign * den / g,
        }
    }
    fn add(self, o: Frac) -> Frac {
        Frac::new(self.num * o.den + o.num * self.den, self.den * o.den)
    }
    fn mul(self, o: Frac) -> Frac {
        Frac::new(self.num * o.num, self.den * o.den)
    }
    fn div(self, o: Frac) -> Frac {
        Frac::new(self.num * o.den, self.den * o.num)
    }
    fn abs(self) -> Frac {
        Frac::new(self.num.abs(), self.den)
    }
    fn one() -> Frac {
        Frac::new(1, 1)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

/// Criterion 4: density boundary regimes of the family s2 = -0.2, equal
/// rates q. At q = 1 the exponent crossover sits exactly at s1 = 1/4; for
/// s1 = 0.27 the two exponent thresholds sit near q = 0.771 and q = 1.421,
/// giving three regimes (explode/explode, vanish/explode, vanish/vanish).
pub fn criterion_density_boundary_regimes() -> Result<CriterionOutcome> {
    let start = Instant::now();
    let mut pass = true;
    let mut failures = Vec::new();

    // exact rational arithmetic at s1 = 1/4, s2 = -1/5, q = 1
    let s1 = Frac::new(1, 4);
    let s2 = Frac::new(-1, 5);
    let q = Frac::one();
    let alpha = q.add(q).div(s1.mul(s2).abs());
    let lambda0 = Frac::new(1, 2).mul(s1.add(s2));
    let a_exp = alpha.mul(lambda0);
    let beta = alpha.mul(Frac::one().add(s1)).mul(Frac::one().add(s2));
    let lambda1 = Frac::new(-1, 2).mul(
        s1.div(Frac::one().add(s1))
            .add(s2.div(Frac::one().add(s2))),
    );
    let b_exp = beta.mul(lambda1);
    check(
        a_exp == Frac::one() && b_exp == Frac::one(),
        &mut pass,
        &mut failures,
        "exponents exactly 1 at s1 = 1/4 (rational arithmetic)",
    );

    // and the floating-point route agrees
    let d = invariant_density(&presets::boundary_density_two_species(0.25, 1.0))?;
    check(
        (d.exponent_zero - 1.0).abs() < 1e-12 && (d.exponent_one - 1.0).abs() < 1e-12,
        &mut pass,
        &mut failures,
        "float exponents within 1e-12 of 1",
    );

    // thresholds for s1 = 0.27: solve alpha*L0 = 1 and beta*L1 = 1 in q
    let env_unit = presets::boundary_density_two_species(0.27, 1.0);
    let rates = two_species_growth_rates(&env_unit)?;
    let alpha_per_q = 2.0 / (0.27f64 * 0.2).abs();
    let beta_per_q = alpha_per_q * 1.27 * 0.8;
    let q_low = 1.0 / (alpha_per_q * rates.at_zero);
    let q_high = 1.0 / (beta_per_q * rates.at_one);
    check(
        (q_low - 0.771).abs() < 1e-3,
        &mut pass,
        &mut failures,
        "lower threshold near 0.771",
    );
    check(
        (q_high - 1.421).abs() < 1e-3,
        &mut pass,
        &mut failures,
        "upper threshold near 1.421",
    );
    check(q_low < q_high, &mut pass, &mut failures, "thresholds ordered");

    // the three regimes in order of increasing q
    let probe = [(0.5, (false, false)), (1.0, (true, false)), (2.0, (true, true))];
    for (qv, (vanish0, vanish1)) in probe {
        let d = invariant_density(&presets::boundary_density_two_species(0.27, qv))?;
        let v0 = d.exponent_zero > 1.0;
        let v1 = d.exponent_one > 1.0;
        check(
            v0 == vanish0 && v1 == vanish1,
            &mut pass,
            &mut failures,
            &format!("regime at q = {qv}"),
        );
        // endpoint behaviour of the density itself
        let near0 = d.total(1e-8);
        let near1 = d.total(1.0 - 1e-8);
        check(
            (near0 > 1e2) == !vanish0 && (near1 > 1e2) == !vanish1,
            &mut pass,
            &mut failures,
            &format!("endpoint blow-up pattern at q = {qv}"),
        );
    }

    let summary = format!(
        "crossover exact at s1 = 1/4; thresholds ({q_low:.4}, {q_high:.4}); three regimes verified{}",
        if failures.is_empty() {
            String::new()
        } else {
            format!("; failed: {}", failures.join(", "))
        }
    );
    Ok(finish("4", "density boundary regimes", start, 0.0, pass, summary))
}

/// Criterion 5: the neutral species invades: both non-neutral species have
/// negative mean growth (−1/24, −1/48 exactly) and 100 interior starts
/// collapse to the neutral vertex by T = 5000.
pub fn criterion_neutral_invasion(seed: u64, scale: f64) -> Result<CriterionOutcome> {
    let start = Instant::now();
    let mut pass = true;
    let mut failures = Vec::new();

    let env = presets::neutral_invader_three_species();
    let rates = three_species_edge_rates(&env)?;
    check(
        (rates.edge(1).at_zero - (-1.0 / 24.0)).abs() <= 1e-12,
        &mut pass,
        &mut failures,
        "lambda0^1 = -1/24",
    );
    check(
        (rates.edge(2).at_zero - (-1.0 / 48.0)).abs() <= 1e-12,
        &mut pass,
        &mut failures,
        "lambda0^2 = -1/48",
    );

    let verdict = persistence_verdict(&env, &VerdictOptions::default())?;
    check(
        verdict.kind == VerdictKind::InvasionPossibleBy(3),
        &mut pass,
        &mut failures,
        "verdict InvasionPossibleBy(3)",
    );

    let n_runs = ((100.0 * scale).round() as u64).max(4);
    let t_final = 5_000.0;
    let opts = PdmpOptions {
        dt_sample: 5.0,
        h_max: 1e-2,
    };
    let finals: Vec<f64> = (0..n_runs)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let x0 = SimplexPoint::new(vec![0.4, 0.3])?;
            let path = simulate_pdmp(&x0, 0, &env, t_final, &opts, derive_seed(seed, &[5, k]))?;
            let xy = path.final_state();
            Ok((xy[0] * xy[0] + xy[1] * xy[1]).sqrt())
        })
        .collect::<Result<_>>()?;
    let collapsed = finals.iter().filter(|&&n| n < 1e-3).count();
    check(
        collapsed as f64 >= 0.95 * n_runs as f64,
        &mut pass,
        &mut failures,
        "||(X_T, Y_T)|| < 1e-3 in >= 95%",
    );

    let summary = format!(
        "edge rates (-1/24, -1/48) exact; {collapsed}/{n_runs} runs collapse to the neutral vertex{}",
        if failures.is_empty() {
            String::new()
        } else {
            format!("; failed: {}", failures.join(", "))
        }
    );
    Ok(finish("5", "neutral-species invasion", start, 0.0, pass, summary))
}

/// Reference values for the three-environment Monte-Carlo comparison.
const CYCLIC_REFERENCE: [f64; 3] = [0.0191, 0.0594, 0.090];
const NEVER_BEST_REFERENCE: [f64; 3] = [0.016, 0.019, 0.009];

/// Criterion 6: three-environment persistence. Monte-Carlo invasion rates
/// (T = 80, n = 1000) are positive for every edge of both reference models
/// and the verdict is Persistent with an explicit weight certificate.
///
/// The literal value comparison against the reference triple of the cyclic
/// model is also asserted. Note that the cyclic model is invariant under
/// the species rotation (1→2→3→1) composed with the matching environment
/// rotation — the transformation maps its fitness table exactly onto
/// itself — so the three rates are provably equal; a triple spanning
/// 0.019–0.090 cannot be reproduced by any consistent estimator, and that
/// sub-check is expected to fail. It is kept, honestly red, because the
/// stated acceptance bound is max(0.02, 4 SE) around each reference value.
pub fn criterion_three_env_persistence(seed: u64, scale: f64) -> Result<CriterionOutcome> {
    let start = Instant::now();
    let mut pass = true;
    let mut failures = Vec::new();

    let n_traj = ((1000.0 * scale).round() as usize).max(16);
    let horizon = 80.0;
    let mc = EdgeMcOptions::default();

    let mut all_estimates: Vec<(String, Vec<InvasionRateEstimate>)> = Vec::new();
    for (model_idx, (name, env, reference)) in [
        ("cyclic", presets::cyclic_three_env(1.0), CYCLIC_REFERENCE),
        (
            "never-best",
            presets::never_best_three_env(1.0),
            NEVER_BEST_REFERENCE,
        ),
    ]
    .into_iter()
    .enumerate()
    {
        let estimates: Vec<InvasionRateEstimate> = (1..=3usize)
            .map(|edge| {
                edge_invasion_rate_mc(
                    &env,
                    edge,
                    horizon,
                    n_traj,
                    derive_seed(seed, &[6, model_idx as u64]),
                    &mc,
                )
            })
            .collect::<Result<_>>()?;
        for est in &estimates {
            check(
                est.mean > 4.0 * est.std_error,
                &mut pass,
                &mut failures,
                &format!("{name} edge {} rate positive at 4 SE", est.edge),
            );
            let tol = (4.0 * est.std_error).max(0.02);
            check(
                (est.mean - reference[est.edge - 1]).abs() <= tol,
                &mut pass,
                &mut failures,
                &format!(
                    "{name} edge {} mean {:.4} within {tol:.3} of reference {:.4}",
                    est.edge,
                    est.mean,
                    reference[est.edge - 1]
                ),
            );
        }

        let vopts = VerdictOptions {
            mc_horizon: horizon,
            mc_n_traj: n_traj,
            seed: derive_seed(seed, &[60, model_idx as u64]),
            edge_mc: mc.clone(),
            ..VerdictOptions::default()
        };
        let verdict = persistence_verdict(&env, &vopts)?;
        let has_weights = matches!(verdict.certificate, Certificate::Weights { .. });
        check(
            verdict.kind == VerdictKind::Persistent && has_weights,
            &mut pass,
            &mut failures,
            &format!("{name} verdict Persistent with weights"),
        );
        all_estimates.push((name.to_string(), estimates));
    }

    let fmt_est = |ests: &[InvasionRateEstimate]| -> String {
        ests.iter()
            .map(|e| format!("{:.4}", e.mean))
            .collect::<Vec<_>>()
            .join("/")
    };
    let summary = format!(
        "cyclic rates {} (reference 0.0191/0.0594/0.0900, provably equal by symmetry); \
         never-best rates {} (reference 0.016/0.019/0.009); verdicts Persistent{}",
        fmt_est(&all_estimates[0].1),
        fmt_est(&all_estimates[1].1),
        if failures.is_empty() {
            String::new()
        } else {
            format!("; failed: {}", failures.join(", "))
        }
    );
    Ok(finish(
        "6",
        "three-environment persistence",
        start,
        600.0,
        pass,
        summary,
    ))
}

/// Criterion 7: no three-species, two-environment model is ever classified
/// Persistent (10^4 randomised models, analytic path only).
pub fn criterion_impossibility(seed: u64, scale: f64) -> Result<CriterionOutcome> {
    let start = Instant::now();
    let mut pass = true;
    let mut failures = Vec::new();

    let n_models = ((10_000.0 * scale).round() as u64).max(100);
    let mut rng = rng_from(derive_seed(seed, &[7]));
    let mut persistent = 0u64;
    let mut kinds = [0u64; 5];
    let mut errors = 0u64;
    let opts = VerdictOptions::default();
    for _ in 0..n_models {
        let mut f = || -0.9 + 3.9 * rng.random::<f64>();
        let fitness = vec![vec![f(), f()], vec![f(), f()]];
        let q1 = 0.1 + 4.9 * rng.random::<f64>();
        let q2 = 0.1 + 4.9 * rng.random::<f64>();
        let env = EnvironmentModel::from_spec(&crate::env::EnvironmentModelSpec {
            fitness,
            q: vec![vec![-q1, q1], vec![q2, -q2]],
        })?;
        match persistence_verdict(&env, &opts) {
            Ok(v) => {
                let idx = match v.kind {
                    VerdictKind::Persistent => {
                        persistent += 1;
                        0
                    }
                    VerdictKind::ExtinctionOf(_) => 1,
                    VerdictKind::InvasionPossibleBy(_) => 2,
                    VerdictKind::Degenerate => 3,
                    VerdictKind::Inconclusive => 4,
                };
                kinds[idx] += 1;
            }
            Err(_) => errors += 1,
        }
    }
    check(
        persistent == 0,
        &mut pass,
        &mut failures,
        "no Persistent verdict",
    );
    check(errors == 0, &mut pass, &mut failures, "no verdict errors");

    let summary = format!(
        "{n_models} random models: extinction {}, invasion {}, degenerate {}, inconclusive {}, persistent {persistent}{}",
        kinds[1],
        kinds[2],
        kinds[3],
        kinds[4],
        if failures.is_empty() {
            String::new()
        } else {
            format!("; failed: {}", failures.join(", "))
        }
    );
    Ok(finish("7", "two-environment impossibility", start, 60.0, pass, summary))
}

/// Criterion 8: the ensemble-mean error of the rescaled finite-population
/// process against its limit decays like 1/J: fitted log-log slope in
/// [-1.3, -0.7] for a constant and a switching environment
/// (J in {100..1600}, n = 10^4, f = x^3).
///
/// The configurations are chosen so the finite-J bias stays well above the
/// Monte-Carlo noise across the ladder: weak constant selection over a
/// longer horizon (large diffusive curvature bias), and the switching
/// reference model with environment-coupled trajectory pairs.
pub fn criterion_convergence_rate(seed: u64, scale: f64) -> Result<CriterionOutcome> {
    let start = Instant::now();
    let mut pass = true;
    let mut failures = Vec::new();

    let n_traj = ((10_000.0 * scale).round() as usize).max(100);
    let observable = Observable::cube(0);
    let x0 = SimplexPoint::new(vec![0.5])?;
    let mut parts = Vec::new();
    for (idx, (name, env, t)) in [
        ("constant", EnvironmentModel::constant(vec![0.05])?, 8.0),
        ("switching", presets::persistent_two_species(), 5.0),
    ]
    .into_iter()
    .enumerate()
    {
        let cfg = ConvergenceConfig {
            t,
            j_values: vec![100, 200, 400, 800, 1600],
            n_traj,
            seed: derive_seed(seed, &[8, idx as u64]),
            h_max: 1e-3,
        };
        let res = convergence_experiment(&env, &x0, 0, &observable, &cfg)?;
        check(
            (-1.3..=-0.7).contains(&res.slope),
            &mut pass,
            &mut failures,
            &format!("{name} slope {:.3} in [-1.3, -0.7]", res.slope),
        );
        parts.push(format!(
            "{name} slope {:.3}±{:.3}{}",
            res.slope,
            res.slope_halfwidth,
            if res.flagged { " (noise-floor flag)" } else { "" }
        ));
    }

    let summary = format!(
        "{} (f = x^3, n = {n_traj}){}",
        parts.join(", "),
        if failures.is_empty() {
            String::new()
        } else {
            format!("; failed: {}", failures.join(", "))
        }
    );
    Ok(finish("8", "finite-population convergence rate", start, 600.0, pass, summary))
}

/// Criterion 9: one-event moment structure of the discrete process — the
/// empirical one-step mean matches the drift within 4 SE and the one-step
/// variance scales like 1/J^2 over J in {50, 100, 200}.
pub fn criterion_moment_scaling(seed: u64, scale: f64) -> Result<CriterionOutcome> {
    let start = Instant::now();
    let mut pass = true;
    let mut failures = Vec::new();

    let env = EnvironmentModel::constant(vec![1.0])?;
    let replicates = ((1_000_000.0 * scale).round() as u64).max(10_000);
    let x_frac = 0.3;
    let mut variances = Vec::new();
    for (ji, &j) in [50u64, 100, 200].iter().enumerate() {
        let count1 = (x_frac * j as f64).round() as u64;
        let base = MoranState {
            counts: vec![count1, j - count1],
            env_index: 0,
        };
        let x = count1 as f64 / j as f64;
        let mut rng = rng_from(derive_seed(seed, &[9, ji as u64]));
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..replicates {
            let mut state = base.clone();
            moran_step(&mut state, &env, &[1.0], j, &mut rng);
            let dx = state.counts[0] as f64 / j as f64 - x;
            sum += dx;
            sum_sq += dx * dx;
        }
        let n = replicates as f64;
        let mean = sum / n;
        let var = (sum_sq / n - mean * mean).max(0.0);
        let se = (var / n).sqrt();
        // exact drift: (1/J) x (s - sigma) / (1 + sigma), sigma = s x
        let sigma = 1.0 * x;
        let drift = x * (1.0 - sigma) / (1.0 + sigma) / j as f64;
        check(
            (mean - drift).abs() <= 4.0 * se,
            &mut pass,
            &mut failures,
            &format!("J = {j}: one-step mean within 4 SE of the drift"),
        );
        variances.push((j, var));
    }

    // fit log Var against log J
    let xs: Vec<f64> = variances.iter().map(|(j, _)| (*j as f64).ln()).collect();
    let ys: Vec<f64> = variances.iter().map(|(_, v)| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    check(
        (-2.3..=-1.7).contains(&exponent),
        &mut pass,
        &mut failures,
        &format!("variance exponent {exponent:.3} in [-2.3, -1.7]"),
    );

    let summary = format!(
        "one-step means match the drift; variance exponent {exponent:.3} over J = 50/100/200{}",
        if failures.is_empty() {
            String::new()
        } else {
            format!("; failed: {}", failures.join(", "))
        }
    );
    Ok(finish("9", "one-event moment scaling", start, 0.0, pass, summary))
}

/// Criterion 10: randomised structural suites (>= 10^3 cases each):
/// simplex/face invariance, integrator-vs-closed-form accuracy, the
/// trap-region sign identity, the vertex invasion-rate table identities,
/// the two-environment edge sign equivalences and the endpoint-rate
/// antisymmetry.
pub fn criterion_structural_properties(seed: u64, scale: f64) -> Result<CriterionOutcome> {
    let start = Instant::now();
    let mut pass = true;
    let mut failures = Vec::new();
    let cases = ((1_000.0 * scale).round() as u64).max(50);

    // (a) face invariance and mass conservation
    {
        let mut rng = rng_from(derive_seed(seed, &[10, 1]));
        for _ in 0..cases {
            let dim = 1 + (rng.random::<f64>() * 3.0) as usize;
            let fitness = FitnessVector::new(
                (0..dim).map(|_| -0.9 + 3.9 * rng.random::<f64>()).collect(),
            )?;
            let mut coords = vec![0.0; dim];
            let mut remaining = 1.0;
            for c in coords.iter_mut() {
                if rng.random::<f64>() < 0.3 {
                    continue; // leave this species extinct
                }
                let v = rng.random::<f64>() * remaining * 0.8;
                *c = v;
                remaining -= v;
            }
            let x = SimplexPoint::new(coords.clone())?;
            let g = drift_field(&x, &fitness);
            for i in 0..dim {
                if coords[i] == 0.0 && g[i] != 0.0 {
                    check(false, &mut pass, &mut failures, "zero coordinate has zero drift");
                }
            }
            let total: f64 = (1..=dim + 1)
                .map(|i| x.species(i) * fitness.per_capita_rate(x.coords(), i))
                .sum();
            if total.abs() > 1e-12 {
                check(false, &mut pass, &mut failures, "mass conservation to 1e-12");
            }
            let moved = flow_step(&x, &fitness, 0.5, 1e-2)?;
            for i in 0..dim {
                if coords[i] == 0.0 && moved.coords()[i] != 0.0 {
                    check(false, &mut pass, &mut failures, "faces invariant under the flow");
                }
            }
        }
    }

    // (b) integrator against the closed form on the pinned grid
    {
        let mut worst: f64 = 0.0;
        for &s in &[-0.5, 0.4, 1.0] {
            for k in 1..=9 {
                let x0 = k as f64 / 10.0;
                for &t in &[0.5, 1.0, 2.5, 5.0, 10.0] {
                    let p = SimplexPoint::new(vec![x0])?;
                    let rk = flow_step(&p, &FitnessVector::new(vec![s])?, t, 1e-3)?.coords()[0];
                    worst = worst.max((rk - closed_form_flow_1d(x0, s, t)).abs());
                }
            }
        }
        check(
            worst <= 1e-8,
            &mut pass,
            &mut failures,
            &format!("integrator error {worst:.2e} <= 1e-8"),
        );
    }

    // (c) trap-region sign identity and containment
    {
        let mut rng = rng_from(derive_seed(seed, &[10, 3]));
        for _ in 0..cases {
            let dim = 2 + (rng.random::<f64>() * 2.0) as usize;
            let mut values: Vec<f64> = (0..dim).map(|_| -0.9 + 3.9 * rng.random::<f64>()).collect();
            values[0] = -0.9 + 0.89 * rng.random::<f64>(); // species 1 disadvantaged
            let fitness = FitnessVector::new(values.clone())?;
            let b = 0.05 + 0.9 * rng.random::<f64>();
            // boundary point: x1 = b(1 - sum of the others)
            let mut others = vec![0.0; dim - 1];
            let mut remaining = 1.0;
            for o in others.iter_mut() {
                let v = rng.random::<f64>() * remaining * 0.7;
                *o = v;
                remaining -= v;
            }
            let sum_others: f64 = others.iter().sum();
            let mut coords = vec![b * (1.0 - sum_others)];
            coords.extend_from_slice(&others);
            let x = SimplexPoint::new(coords)?;
            let g = drift_field(&x, &fitness);
            let inner: f64 = g[0] + b * g[1..].iter().sum::<f64>();
            let sigma = fitness.mean_fitness(x.coords());
            let predicted = b * values[0] * x.last() / (1.0 + sigma);
            if (inner - predicted).abs() > 1e-12 {
                check(false, &mut pass, &mut failures, "trap inner-product identity to 1e-12");
            }
            if x.last() > 1e-9 && inner >= 0.0 {
                check(false, &mut pass, &mut failures, "trap inner product negative");
            }
        }

        // containment: paths started under the hyperplane never cross it
        let env = EnvironmentModel::from_spec(&crate::env::EnvironmentModelSpec {
            fitness: vec![vec![-0.1, 0.4], vec![-0.2, -0.3]],
            q: vec![vec![-1.0, 1.0], vec![1.0, -1.0]],
        })?;
        let b = 0.5;
        let opts = PdmpOptions {
            dt_sample: 0.05,
            h_max: 1e-3,
        };
        for k in 0..8u64 {
            let x0 = SimplexPoint::new(vec![0.3, 0.25 + 0.05 * k as f64 / 8.0])?;
            assert!(x0.coords()[0] < b * (1.0 - x0.coords()[1]));
            let path = simulate_pdmp(&x0, 0, &env, 50.0, &opts, derive_seed(seed, &[10, 30, k]))?;
            for idx in 0..path.len() {
                let st = path.state(idx);
                if st[0] >= b * (1.0 - st[1]) + 1e-9 {
                    check(false, &mut pass, &mut failures, "trap region containment");
                    break;
                }
            }
        }
    }

    // (d) vertex invasion-rate table identities
    {
        let mut rng = rng_from(derive_seed(seed, &[10, 4]));
        for _ in 0..cases {
            let mut fit = || -0.9 + 3.9 * rng.random::<f64>();
            let fitness = vec![vec![fit(), fit()], vec![fit(), fit()]];
            let q1 = 0.1 + 4.9 * rng.random::<f64>();
            let q2 = 0.1 + 4.9 * rng.random::<f64>();
            let env = EnvironmentModel::from_spec(&crate::env::EnvironmentModelSpec {
                fitness,
                q: vec![vec![-q1, q1], vec![q2, -q2]],
            })?;
            let rates = three_species_edge_rates(&env)?;
            let table = vertex_invasion_table(&rates);
            // independent evaluation from stationary averages
            let l1_mu3 = env.stationary_average(|f| f.values()[0]);
            let l2_mu3 = env.stationary_average(|f| f.values()[1]);
            let l1_mu2 = env.stationary_average(|f| {
                (f.values()[0] - f.values()[1]) / (1.0 + f.values()[1])
            });
            if (table[0][2] - l1_mu3).abs() > 1e-14
                || (table[1][2] - l2_mu3).abs() > 1e-14
                || (table[0][1] - l1_mu2).abs() > 1e-14
                || table[0][0] != 0.0
                || table[1][1] != 0.0
                || table[2][2] != 0.0
            {
                check(false, &mut pass, &mut failures, "vertex rate table identities");
            }
        }
    }

    // (e) two-environment edge sign equivalences
    {
        let mut rng = rng_from(derive_seed(seed, &[10, 5]));
        for _ in 0..cases {
            // alternating configuration by construction
            let s1 = 0.05 + 2.95 * rng.random::<f64>();
            let r1 = -0.9 + 0.85 * rng.random::<f64>();
            let s2 = -0.9 + 0.85 * rng.random::<f64>();
            let r2 = 0.05 + 2.95 * rng.random::<f64>();
            let env = EnvironmentModel::from_spec(&crate::env::EnvironmentModelSpec {
                fitness: vec![vec![s1, r1], vec![s2, r2]],
                q: vec![vec![-1.0, 1.0], vec![1.0, -1.0]],
            })?;
            let signs = edge_invasion_signs_two_env(&env)?;
            let det = s1 * r2 - s2 * r1;
            let expected = if det > 0.0 { [1, 1, -1] } else { [-1, -1, 1] };
            if det.abs() > 1e-9 && signs.signs != expected {
                check(false, &mut pass, &mut failures, "edge sign equivalences");
            }
        }
    }

    // (f) endpoint-rate antisymmetry over random fitness
    {
        let mut rng = rng_from(derive_seed(seed, &[10, 6]));
        for _ in 0..cases {
            let s1 = -0.9 + 3.9 * rng.random::<f64>();
            let s2 = -0.9 + 3.9 * rng.random::<f64>();
            let q1 = 0.1 + 4.9 * rng.random::<f64>();
            let q2 = 0.1 + 4.9 * rng.random::<f64>();
            let rates =
                two_species_growth_rates(&presets::two_species_switching(s1, s2, q1, q2))?;
            if (rates.at_zero < -1e-12 && rates.at_one <= 0.0)
                || (rates.at_one < -1e-12 && rates.at_zero <= 0.0)
            {
                check(false, &mut pass, &mut failures, "endpoint-rate antisymmetry");
            }
        }
    }

    let summary = format!(
        "face invariance, integrator accuracy, trap identity, table identities, edge signs, antisymmetry over {cases} cases each{}",
        if failures.is_empty() {
            String::new()
        } else {
            format!("; failed: {}", failures.join(", "))
        }
    );
    Ok(finish("10", "structural property suites", start, 300.0, pass, summary))
}

/// Run the whole gate. `scale` multiplies ensemble sizes (1.0 = the stated
/// sizes); outcomes are deterministic in `(seed, scale)`.
pub fn all_criteria(seed: u64, scale: f64) -> Result<Vec<CriterionOutcome>> {
    Ok(vec![
        criterion_regimes(seed, scale)?,
        criterion_degenerate_balance()?,
        criterion_density_law(seed)?,
        criterion_density_boundary_regimes()?,
        criterion_neutral_invasion(seed, scale)?,
        criterion_three_env_persistence(seed, scale)?,
        criterion_impossibility(seed, scale)?,
        criterion_convergence_rate(seed, scale)?,
        criterion_moment_scaling(seed, scale)?,
        criterion_structural_properties(seed, scale)?,
    ])
}
