//! Empirical convergence rate of the rescaled finite-population process to
//! its switching-flow limit.
//!
//! For each population size `J` the experiment estimates
//! `| E f(X̃^J_t) − E f(X_t) |` by ensemble means and fits a log-log slope
//! across the `J` ladder. Two choices keep the Monte-Carlo noise below the
//! `O(1/J)` bias at realistic ensemble sizes:
//!
//! * the discrete environment chain is defined exactly as
//!   `P^J_{s,s'} = α_s Q_{s,s'} / J` (diagonal = remainder), so the rate
//!   term involving `|J P^J − α_s Q|` vanishes identically;
//! * each trajectory pair shares one stream of environment randomness: the
//!   sojourn of the discrete chain is the exact geometric inverse-CDF image
//!   of the same uniform that drives the exponential holding time of the
//!   limit chain, and jump targets are shared. Both marginal laws are
//!   untouched; only the variance of the paired difference shrinks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{EnvironmentModel, SimplexPoint};
use crate::experiments::Observable;
use crate::pdmp::FlowIntegrator;
use crate::rng::{derive_seed, rng_from};
use crate::{Error, Result};
use rand::RngExt;
use rand_chacha::ChaCha8Rng;

/// Configuration of the ladder experiment.
#[derive(Debug, Clone)]
pub struct ConvergenceConfig {
    /// Comparison time; `t * J` should be integral for every `J`.
    pub t: f64,
    pub j_values: Vec<u64>,
    pub n_traj: usize,
    pub seed: u64,
    pub h_max: f64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            t: 3.0,
            j_values: vec![100, 200, 400, 800, 1600],
            n_traj: 10_000,
            seed: 0,
            h_max: 1e-3,
        }
    }
}

/// Result of the ladder experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceResult {
    pub j_values: Vec<u64>,
    /// `| mean_J − mean_limit |` per ladder entry.
    pub errors: Vec<f64>,
    /// Standard error of each paired difference mean.
    pub std_errors: Vec<f64>,
    /// Least-squares slope of `log error` against `log J`.
    pub slope: f64,
    /// Two-sigma half width of the slope estimate.
    pub slope_halfwidth: f64,
    /// Set when the Monte-Carlo noise is too large to trust the smallest
    /// error (max SE above half the smallest error).
    pub flagged: bool,
}

/// Pre-drawn environment randomness shared by one trajectory pair: the
/// `k`-th sojourn uses `uniforms[k]` for its length (exponential for the
/// limit chain, geometric for the discrete one) and moves to `targets[k]`.
struct EnvSkeleton {
    uniforms: Vec<f64>,
    targets: Vec<usize>,
    states: Vec<usize>,
    rng: ChaCha8Rng,
    env: EnvironmentModel,
}

impl EnvSkeleton {
    fn new(env: &EnvironmentModel, env0: usize, seed: u64) -> Self {
        Self {
            uniforms: Vec::new(),
            targets: Vec::new(),
            states: vec![env0],
            rng: rng_from(seed),
            env: env.clone(),
        }
    }

    fn exit_rate(&self, state: usize) -> f64 {
        self.env.exit_rate(state)
    }

    /// Make at least `n` sojourns available (or stop early at an absorbing
    /// state). Extending is deterministic regardless of when it happens.
    fn ensure(&mut self, n: usize) {
        while self.uniforms.len() < n {
            let state = *self.states.last().unwrap();
            let row = &self.env.generator()[state];
            let rate = self.exit_rate(state);
            if rate <= 0.0 {
                return; // absorbing: the chain never leaves
            }
            let u: f64 = self.rng.random();
            let w: f64 = self.rng.random::<f64>() * rate;
            let mut acc = 0.0;
            let mut target = state;
            for (j, &v) in row.iter().enumerate() {
                if j == state {
                    continue;
                }
                acc += v;
                if w < acc {
                    target = j;
                    break;
                }
                target = j;
            }
            self.uniforms.push(u);
            self.targets.push(target);
            self.states.push(target);
        }
    }

    /// Exponential holding time of sojourn `k`.
    fn holding_continuous(&self, k: usize) -> f64 {
        let rate = self.exit_rate(self.states[k]);
        -(1.0 - self.uniforms[k]).ln() / rate
    }

    /// Geometric sojourn (in events) of the discrete chain with switch
    /// probability `rate / J` per event; exact inverse-CDF of the same
    /// uniform.
    fn holding_discrete(&self, k: usize, j: u64) -> u64 {
        let rate = self.exit_rate(self.states[k]);
        let p_leave = rate / j as f64;
        debug_assert!(p_leave < 1.0);
        let n = ((1.0 - self.uniforms[k]).ln() / (1.0 - p_leave).ln()).floor() as u64 + 1;
        n.max(1)
    }
}

/// Flow the limit process to time `t` along the skeleton's environments and
/// evaluate the observable.
fn pdmp_value(
    skeleton: &mut EnvSkeleton,
    x0: &SimplexPoint,
    t_final: f64,
    f: &Observable,
    h_max: f64,
) -> Result<f64> {
    let mut x = x0.coords().to_vec();
    let mut integ = FlowIntegrator::new(x.len(), h_max);
    let mut t = 0.0;
    let mut k = 0usize;
    loop {
        skeleton.ensure(k + 1);
        let state = skeleton.states[k];
        let (segment_end, has_jump) = if k < skeleton.uniforms.len() {
            let tj = t + skeleton.holding_continuous(k);
            (tj.min(t_final), tj < t_final)
        } else {
            (t_final, false) // absorbing
        };
        integ.advance(&mut x, skeleton.env.state(state), segment_end - t)?;
        t = segment_end;
        if !has_jump {
            break;
        }
        k += 1;
    }
    Ok(f.eval(&x))
}

/// Run the discrete process for `round(t*J)` events along the same skeleton
/// and evaluate the observable. Specialised single-uniform sampling covers
/// one free species; the general path draws death and parent separately.
fn moran_value(
    skeleton: &mut EnvSkeleton,
    x0: &SimplexPoint,
    j: u64,
    t_final: f64,
    f: &Observable,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let events = (t_final * j as f64).round() as u64;
    let dim = x0.dim();
    // counts: free species then the implicit one
    let mut counts: Vec<u64> = Vec::with_capacity(dim + 1);
    let mut used = 0u64;
    for &c in x0.coords() {
        let v = (c * j as f64).round() as u64;
        counts.push(v);
        used += v;
    }
    while used > j {
        let idx = (0..dim).max_by_key(|&i| counts[i]).unwrap();
        counts[idx] -= 1;
        used -= 1;
    }
    counts.push(j - used);

    let mut k = 0usize; // sojourn index
    let mut remaining = {
        skeleton.ensure(1);
        if skeleton.uniforms.is_empty() {
            u64::MAX
        } else {
            skeleton.holding_discrete(0, j)
        }
    };
    let jf = j as f64;

    for _ in 0..events {
        let state = skeleton.states[k.min(skeleton.states.len() - 1)];
        let fitness = skeleton.env.state(state);
        if dim == 1 {
            // trichotomy: up / down / hold
            let x1 = counts[0] as f64 / jf;
            let s = fitness.values()[0];
            let sigma = s * x1;
            let w = x1 * (1.0 + s) / (1.0 + sigma);
            let p_up = (1.0 - x1) * w;
            let p_down = x1 * (1.0 - w);
            let u: f64 = rng.random();
            if u < p_up {
                counts[0] += 1;
                counts[1] -= 1;
            } else if u < p_up + p_down {
                counts[0] -= 1;
                counts[1] += 1;
            }
        } else {
            // uniform death
            let u: f64 = rng.random::<f64>() * jf;
            let mut acc = 0.0;
            let mut dying = dim;
            for (i, &c) in counts.iter().enumerate() {
                acc += c as f64;
                if u < acc {
                    dying = i;
                    break;
                }
            }
            // fitness-weighted parent
            let mut total = 0.0;
            for (i, &c) in counts.iter().enumerate() {
                total += c as f64 * (1.0 + fitness.species(i + 1));
            }
            let w: f64 = rng.random::<f64>() * total;
            let mut acc2 = 0.0;
            let mut parent = dim;
            for (i, &c) in counts.iter().enumerate() {
                acc2 += c as f64 * (1.0 + fitness.species(i + 1));
                if w < acc2 {
                    parent = i;
                    break;
                }
            }
            counts[dying] -= 1;
            counts[parent] += 1;
        }

        if remaining != u64::MAX {
            remaining -= 1;
            if remaining == 0 {
                k += 1;
                skeleton.ensure(k + 1);
                remaining = if k < skeleton.uniforms.len() {
                    skeleton.holding_discrete(k, j)
                } else {
                    u64::MAX
                };
            }
        }
    }

    let x: Vec<f64> = counts[..dim].iter().map(|&c| c as f64 / jf).collect();
    f.eval(&x)
}

/// Run the full ladder. The limit-process value of pair `r` is computed
/// once and shared across the whole ladder; errors at different `J` are
/// therefore positively correlated, which stabilises the fitted slope.
pub fn convergence_experiment(
    env: &EnvironmentModel,
    x0: &SimplexPoint,
    env0: usize,
    observable: &Observable,
    cfg: &ConvergenceConfig,
) -> Result<ConvergenceResult> {
    if cfg.j_values.iter().any(|&j| j < 50) {
        return Err(Error::InvalidConfig("every J must be at least 50".into()));
    }
    if cfg.n_traj < 2 {
        return Err(Error::InvalidConfig("need at least two trajectories".into()));
    }
    if observable.max_index() >= env.num_species_free() {
        return Err(Error::InvalidConfig(format!(
            "observable uses coordinate {} but the model has {} free species",
            observable.max_index() + 1,
            env.num_species_free()
        )));
    }
    for &j in &cfg.j_values {
        for k in 0..env.num_envs() {
            if env.exit_rate(k) >= j as f64 {
                return Err(Error::InvalidConfig(format!(
                    "J = {j} too small for the switching rate of environment {k}"
                )));
            }
        }
    }

    let ladder = cfg.j_values.clone();
    let per_pair: Vec<(f64, Vec<f64>)> = (0..cfg.n_traj)
        .into_par_iter()
        .map(|r| -> Result<(f64, Vec<f64>)> {
            let env_seed = derive_seed(cfg.seed, &[r as u64, 0]);
            let mut skeleton = EnvSkeleton::new(env, env0, env_seed);
            let limit = pdmp_value(&mut skeleton, x0, cfg.t, observable, cfg.h_max)?;
            let mut discrete = Vec::with_capacity(ladder.len());
            for (ji, &j) in ladder.iter().enumerate() {
                let mut rng = rng_from(derive_seed(cfg.seed, &[r as u64, 1 + ji as u64]));
                discrete.push(moran_value(&mut skeleton, x0, j, cfg.t, observable, &mut rng));
            }
            Ok((limit, discrete))
        })
        .collect::<Result<_>>()?;

    let n = per_pair.len() as f64;
    let mut errors = Vec::with_capacity(ladder.len());
    let mut std_errors = Vec::with_capacity(ladder.len());
    for ji in 0..ladder.len() {
        let diffs: Vec<f64> = per_pair.iter().map(|(l, d)| d[ji] - l).collect();
        let mean = diffs.iter().sum::<f64>() / n;
        let var = diffs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        errors.push(mean.abs());
        std_errors.push((var / n).sqrt());
    }

    let (slope, slope_halfwidth) = log_log_slope(&ladder, &errors);
    // the error floor: the smallest measured error must itself be resolved
    let min_idx = (0..errors.len())
        .min_by(|&a, &b| errors[a].total_cmp(&errors[b]))
        .unwrap();
    let flagged = !(std_errors[min_idx] <= 0.5 * errors[min_idx]);

    Ok(ConvergenceResult {
        j_values: ladder,
        errors,
        std_errors,
        slope,
        slope_halfwidth,
        flagged,
    })
}

/// Least-squares slope of `ln e` on `ln J` with a rough two-sigma
/// half-width from the residuals.
fn log_log_slope(j_values: &[u64], errors: &[f64]) -> (f64, f64) {
    let xs: Vec<f64> = j_values.iter().map(|&j| (j as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|&e| e.max(1e-300).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let fit = intercept + slope * x;
            (y - fit) * (y - fit)
        })
        .sum();
    let dof = (xs.len().max(3) - 2) as f64;
    let se = (ss_res / dof / sxx).sqrt();
    (slope, 2.0 * se)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::presets;

    #[test]
    fn zero_time_gives_zero_error() {
        // with t = 0 both processes sit at the same initial law
        let env = presets::persistent_two_species();
        let x0 = SimplexPoint::new(vec![0.5]).unwrap();
        let cfg = ConvergenceConfig {
            t: 0.0,
            j_values: vec![100, 200],
            n_traj: 50,
            seed: 3,
            h_max: 1e-2,
        };
        let res =
            convergence_experiment(&env, &x0, 0, &Observable::coordinate(0), &cfg).unwrap();
        assert!(res.errors.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn skeleton_marginals_are_exact() {
        // the geometric sojourn derived from the shared uniform has the
        // exact per-event switch probability rate/J
        let env = presets::persistent_two_species(); // exit rate 1/2
        let mut skel = EnvSkeleton::new(&env, 0, 42);
        skel.ensure(20_000);
        let j = 100u64;
        let p_leave = 0.5 / j as f64;
        let mean_expected = 1.0 / p_leave;
        let n = 20_000;
        let mut acc = 0.0;
        for k in 0..n {
            acc += skel.holding_discrete(k, j) as f64;
        }
        let mean = acc / n as f64;
        // geometric sd ~ 1/p; 4 SE window
        let se = mean_expected / (n as f64).sqrt();
        assert!(
            (mean - mean_expected).abs() < 4.0 * se,
            "mean sojourn {mean} vs {mean_expected}"
        );
        // and the continuous holding from the same uniform has mean 1/rate
        let mut acc_c = 0.0;
        for k in 0..n {
            acc_c += skel.holding_continuous(k);
        }
        let mean_c = acc_c / n as f64;
        assert!((mean_c - 2.0).abs() < 4.0 * 2.0 / (n as f64).sqrt());
    }

    #[test]
    fn reproducible_under_parallelism() {
        let env = presets::persistent_two_species();
        let x0 = SimplexPoint::new(vec![0.5]).unwrap();
        let cfg = ConvergenceConfig {
            t: 1.0,
            j_values: vec![100, 200],
            n_traj: 200,
            seed: 11,
            h_max: 1e-2,
        };
        let a = convergence_experiment(&env, &x0, 0, &Observable::cube(0), &cfg).unwrap();
        let b = convergence_experiment(&env, &x0, 0, &Observable::cube(0), &cfg).unwrap();
        assert_eq!(a.errors, b.errors);
        assert_eq!(a.std_errors, b.std_errors);
    }
}
