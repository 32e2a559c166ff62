//! Monte-Carlo invasion rates with respect to edge measures.
//!
//! Each boundary face of the three-species simplex carries a two-species
//! process; when that process is persistent its unique interior ergodic law
//! gives the absent species an invasion rate, which is estimated as the
//! long-run time average of the absent species' per-capita growth rate over
//! an ensemble of reduced-edge trajectories. The reduced model runs the
//! exact two-species dynamics on the face, so no mass ever leaks off it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::rates::{edge_measure_presence, three_species_edge_rates, EdgePresence};
use crate::env::{EnvironmentModel, FitnessVector, SimplexPoint};
use crate::pdmp::{ergodic_average_from, simulate_pdmp, PdmpOptions};
use crate::rng::derive_seed;
use crate::{Error, Result};

/// An estimated invasion rate with its Monte-Carlo uncertainty.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvasionRateEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// Horizon of each trajectory.
    pub t_horizon: f64,
    pub n_traj: usize,
    /// Which species' edge measure the rate refers to (1, 2 or 3).
    pub edge: usize,
}

impl InvasionRateEstimate {
    /// The estimate cannot be distinguished from zero at two standard
    /// errors.
    pub fn is_undetermined(&self) -> bool {
        self.mean.abs() <= 2.0 * self.std_error
    }
}

/// The two-species model obtained by deleting species `edge`, together with
/// the deleted species' growth functional on that face.
#[derive(Debug, Clone)]
pub struct EdgeReducedModel {
    pub edge: usize,
    pub model: EnvironmentModel,
    /// Original (s, r) fitness pairs per environment, used to evaluate the
    /// absent species' per-capita rate.
    fitness: Vec<(f64, f64)>,
}

impl EdgeReducedModel {
    pub fn new(env: &EnvironmentModel, edge: usize) -> Result<Self> {
        if env.num_species_free() != 2 {
            return Err(Error::InvalidModel("edge reduction needs S = 2".into()));
        }
        if !(1..=3).contains(&edge) {
            return Err(Error::InvalidModel(format!("edge index {edge} not in 1..=3")));
        }
        // Effective single-species fitness of the surviving pair, with the
        // second survivor as reference; the face dynamics match the
        // two-species flow exactly.
        let states: Vec<FitnessVector> = env
            .states()
            .iter()
            .map(|f| {
                let s = f.values()[0];
                let r = f.values()[1];
                let eff = match edge {
                    1 => r,                       // survivors (2, 3)
                    2 => s,                       // survivors (1, 3)
                    _ => (s - r) / (1.0 + r),     // survivors (1, 2)
                };
                FitnessVector::new(vec![eff])
            })
            .collect::<Result<_>>()?;
        let model = EnvironmentModel::new(states, env.generator().to_vec())?;
        let fitness = env
            .states()
            .iter()
            .map(|f| (f.values()[0], f.values()[1]))
            .collect();
        Ok(Self {
            edge,
            model,
            fitness,
        })
    }

    /// Per-capita growth rate of the absent species at edge coordinate `u`
    /// in environment `k` (`u` is the abundance of the first surviving
    /// species).
    pub fn invader_rate(&self, u: f64, k: usize) -> f64 {
        let (s, r) = self.fitness[k];
        match self.edge {
            1 => (s - r * u) / (1.0 + r * u),
            2 => (r - s * u) / (1.0 + s * u),
            _ => {
                let sigma = r + (s - r) * u;
                -sigma / (1.0 + sigma)
            }
        }
    }
}

/// Closed-form value of the edge invasion rate for two environments,
/// via the edge process' explicit invariant density:
/// `λ_edge(ν_edge) = Σ_k ∫ F(u, k) h_k(u) du`. The density factor
/// `(1 + c_k u)` cancels the growth functional's denominator, leaving a
/// linear smooth part under the two singular endpoint powers.
///
/// This is an independent oracle for [`edge_invasion_rate_mc`]; the
/// classifier itself only ever uses signs.
pub fn edge_invasion_rate_quadrature(env: &EnvironmentModel, edge: usize) -> Result<f64> {
    if env.num_envs() != 2 {
        return Err(Error::InvalidModel(
            "closed-form edge rate needs exactly two environments".into(),
        ));
    }
    let reduced = EdgeReducedModel::new(env, edge)?;
    let density = crate::analysis::density::invariant_density(&reduced.model)?;
    let c0 = reduced.model.state(0).values()[0];
    let c1 = reduced.model.state(1).values()[0];
    let phi = |u: f64| {
        density.c / c0.abs() * (1.0 + c0 * u) * reduced.invader_rate(u, 0)
            + density.c / c1.abs() * (1.0 + c1 * u) * reduced.invader_rate(u, 1)
    };
    Ok(crate::quad::integrate_with_endpoint_powers(
        &phi,
        density.exponent_zero,
        density.exponent_one,
        0.0,
        1.0,
        1e-11,
    ))
}

/// Options for the Monte-Carlo edge estimate.
#[derive(Debug, Clone)]
pub struct EdgeMcOptions {
    pub u0: f64,
    pub env0: usize,
    /// Fraction of the horizon discarded before averaging.
    pub burn_in_frac: f64,
    pub dt_sample: f64,
    pub h_max: f64,
}

impl Default for EdgeMcOptions {
    fn default() -> Self {
        Self {
            u0: 0.5,
            env0: 0,
            burn_in_frac: 0.1,
            dt_sample: 0.01,
            h_max: 1e-3,
        }
    }
}

/// Estimate `λ_edge(ν_edge)` by averaging the absent species' growth rate
/// along `n_traj` reduced-edge trajectories of length `t_horizon`
/// (burn-in discarded). Trajectories are independent with seeds derived
/// from `(seed, edge, index)`; aggregation is a fixed-order reduction, so
/// the result does not depend on scheduling.
pub fn edge_invasion_rate_mc(
    env: &EnvironmentModel,
    edge: usize,
    t_horizon: f64,
    n_traj: usize,
    seed: u64,
    opts: &EdgeMcOptions,
) -> Result<InvasionRateEstimate> {
    if n_traj == 0 || t_horizon <= 0.0 {
        return Err(Error::InvalidConfig(
            "need n_traj > 0 and a positive horizon".into(),
        ));
    }
    let rates = three_species_edge_rates(env)?;
    match edge_measure_presence(rates.edge(edge)) {
        EdgePresence::Exists => {}
        EdgePresence::Absent => {
            return Err(Error::EdgeNotErgodic {
                edge,
                reason: format!(
                    "endpoint rates ({}, {}) are not both positive",
                    rates.edge(edge).at_zero,
                    rates.edge(edge).at_one
                ),
            })
        }
        EdgePresence::Boundary => {
            return Err(Error::Degenerate(format!(
                "edge {edge} endpoint rate within tolerance of zero"
            )))
        }
    }

    let reduced = EdgeReducedModel::new(env, edge)?;
    let pdmp_opts = PdmpOptions {
        dt_sample: opts.dt_sample,
        h_max: opts.h_max,
    };
    let x0 = SimplexPoint::new(vec![opts.u0])?;
    let burn_in = opts.burn_in_frac * t_horizon;

    let values: Vec<f64> = (0..n_traj)
        .into_par_iter()
        .map(|idx| {
            let traj_seed = derive_seed(seed, &[edge as u64, idx as u64]);
            let path = simulate_pdmp(
                &x0,
                opts.env0,
                &reduced.model,
                t_horizon,
                &pdmp_opts,
                traj_seed,
            )?;
            Ok(ergodic_average_from(&path, burn_in, |x, k| {
                reduced.invader_rate(x[0], k)
            }))
        })
        .collect::<Result<_>>()?;

    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(InvasionRateEstimate {
        mean,
        std_error: (var / n).sqrt(),
        t_horizon,
        n_traj,
        edge,
    })
}
