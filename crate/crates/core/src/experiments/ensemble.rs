//! Ensemble mean paths and the occupation-vs-density comparison.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::density::{invariant_density, DensityModel};
use crate::env::{EnvironmentModel, SimplexPoint};
use crate::moran::{moran_step, MoranConfig, MoranState};
use crate::pdmp::{occupation_histogram, simulate_pdmp, OccupationHistogram, PdmpOptions};
use crate::rng::{derive_seed, rng_from};
use crate::{Error, Result};

/// Which simulator drives the ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnsembleEngine {
    Pdmp { h_max: f64 },
    Moran { j: u64 },
}

/// Pointwise ensemble mean and standard error on a uniform time grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeanPath {
    pub times: Vec<f64>,
    /// `mean[g][i]` = mean of coordinate `i` at grid point `g`.
    pub mean: Vec<Vec<f64>>,
    pub std_error: Vec<Vec<f64>>,
    pub n_traj: usize,
}

impl MeanPath {
    pub fn to_csv(&self) -> String {
        let dim = self.mean.first().map_or(0, |m| m.len());
        let mut out = String::from("t");
        for i in 1..=dim {
            out.push_str(&format!(",mean_x_{i},se_x_{i}"));
        }
        out.push('\n');
        for g in 0..self.times.len() {
            out.push_str(&format!("{}", self.times[g]));
            for i in 0..dim {
                out.push_str(&format!(",{},{}", self.mean[g][i], self.std_error[g][i]));
            }
            out.push('\n');
        }
        out
    }
}

/// Mean trajectory over `n_traj` independent runs sampled at `n_grid + 1`
/// uniformly spaced times.
pub fn ensemble_mean_path(
    env: &EnvironmentModel,
    x0: &SimplexPoint,
    env0: usize,
    t_final: f64,
    n_grid: usize,
    n_traj: usize,
    seed: u64,
    engine: EnsembleEngine,
) -> Result<MeanPath> {
    if n_traj == 0 || n_grid == 0 || t_final <= 0.0 {
        return Err(Error::InvalidConfig(
            "ensemble needs n_traj, n_grid and T positive".into(),
        ));
    }
    let dim = x0.dim();
    let times: Vec<f64> = (0..=n_grid)
        .map(|g| t_final * g as f64 / n_grid as f64)
        .collect();

    let paths: Vec<Vec<f64>> = (0..n_traj)
        .into_par_iter()
        .map(|r| -> Result<Vec<f64>> {
            let traj_seed = derive_seed(seed, &[r as u64]);
            match engine {
                EnsembleEngine::Pdmp { h_max } => {
                    let opts = PdmpOptions {
                        dt_sample: t_final / n_grid as f64,
                        h_max,
                    };
                    let path = simulate_pdmp(x0, env0, env, t_final, &opts, traj_seed)?;
                    // dense samples land exactly on the grid; pick them out
                    let mut flat = Vec::with_capacity((n_grid + 1) * dim);
                    let mut idx = 0usize;
                    for &tg in &times {
                        while idx + 1 < path.len() && path.time(idx + 1) <= tg + 1e-12 {
                            idx += 1;
                        }
                        flat.extend_from_slice(path.state(idx));
                    }
                    Ok(flat)
                }
                EnsembleEngine::Moran { j } => {
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
                    let cfg = MoranConfig::new(j, env.clone(), counts.clone(), traj_seed)?;
                    let mut state = MoranState {
                        counts,
                        env_index: env0,
                    };
                    let mut rng = rng_from(traj_seed);
                    let mut flat = Vec::with_capacity((n_grid + 1) * dim);
                    let mut event = 0u64;
                    for &tg in &times {
                        let target = (tg * j as f64).floor() as u64;
                        while event < target {
                            moran_step(&mut state, env, &cfg.alpha, j, &mut rng);
                            event += 1;
                        }
                        for i in 0..dim {
                            flat.push(state.counts[i] as f64 / j as f64);
                        }
                    }
                    Ok(flat)
                }
            }
        })
        .collect::<Result<_>>()?;

    let n = n_traj as f64;
    let mut mean = vec![vec![0.0; dim]; n_grid + 1];
    let mut second = vec![vec![0.0; dim]; n_grid + 1];
    for flat in &paths {
        for g in 0..=n_grid {
            for i in 0..dim {
                let v = flat[g * dim + i];
                mean[g][i] += v;
                second[g][i] += v * v;
            }
        }
    }
    let mut std_error = vec![vec![0.0; dim]; n_grid + 1];
    for g in 0..=n_grid {
        for i in 0..dim {
            mean[g][i] /= n;
            let var = (second[g][i] / n - mean[g][i] * mean[g][i]).max(0.0);
            std_error[g][i] = if n_traj > 1 {
                (var / (n - 1.0)).sqrt()
            } else {
                0.0
            };
        }
    }
    Ok(MeanPath {
        times,
        mean,
        std_error,
        n_traj,
    })
}

/// Occupation histogram of one long run against the closed-form invariant
/// density.
#[derive(Debug, Clone)]
pub struct DensityComparison {
    pub l1_distance: f64,
    pub histogram: OccupationHistogram,
    pub analytic_masses: Vec<f64>,
    pub density: DensityModel,
}

impl DensityComparison {
    /// Per-bin table `bin_low, bin_high, empirical, analytic`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_low,bin_high,empirical_mass,analytic_mass\n");
        for (k, m) in self.histogram.masses.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{m},{}\n",
                self.histogram.edges[k],
                self.histogram.edges[k + 1],
                self.analytic_masses[k]
            ));
        }
        out
    }
}

/// Simulate one long trajectory of a persistent two-species model and
/// compare its occupation histogram with the invariant density.
pub fn density_comparison(
    env: &EnvironmentModel,
    t_final: f64,
    bins: usize,
    seed: u64,
) -> Result<DensityComparison> {
    let density = invariant_density(env)?;
    let x0 = SimplexPoint::new(vec![0.5])?;
    let opts = PdmpOptions {
        dt_sample: 0.01,
        h_max: 1e-3,
    };
    let path = simulate_pdmp(&x0, 0, env, t_final, &opts, seed)?;
    let histogram = occupation_histogram(&path, bins)?;
    let analytic_masses = density.bin_masses(bins);
    let l1_distance = histogram.l1_distance(&analytic_masses);
    Ok(DensityComparison {
        l1_distance,
        histogram,
        analytic_masses,
        density,
    })
}
