//! The explicit invariant density of the persistent two-species,
//! two-environment process.
//!
//! When both endpoint growth rates are positive the interior invariant law
//! has per-environment densities
//!
//! ```text
//! h_i(x) = (C/|s_i|) x^(αΛ₀ − 1) (1−x)^(βΛ₁ − 1) (1 + s_i x),
//! α = (q₁+q₂)/|s₁ s₂|,   β = α (1+s₁)(1+s₂),
//! ```
//!
//! with `C` the constant normalising `∫ (h₁+h₂) = 1`. The pair (h₁, h₂)
//! solves the stationary transport system
//! `q₁h₁ − q₂h₂ = −(g₁h₁)′ = (g₂h₂)′`, which gives an independent residual
//! check on the closed form.

use serde::{Deserialize, Serialize};

use crate::analysis::rates::{two_species_growth_rates, EdgeRates};
use crate::env::EnvironmentModel;
use crate::quad::integrate_with_endpoint_powers;
use crate::{Error, Result};

/// Normalisation is accepted when the recomputed total mass sits within
/// this tolerance of one.
pub const NORMALISATION_TOL: f64 = 1e-8;

/// Closed-form invariant density of a persistent two-species model with two
/// environments.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityModel {
    /// Fitness of species 1 in the two environments, in model order.
    pub s: [f64; 2],
    /// Jump rates `q₁ = Q_{1,2}`, `q₂ = Q_{2,1}`.
    pub q: [f64; 2],
    pub alpha: f64,
    pub beta: f64,
    /// Exponent `αΛ₀` controlling the boundary at 0.
    pub exponent_zero: f64,
    /// Exponent `βΛ₁` controlling the boundary at 1.
    pub exponent_one: f64,
    /// Normalisation constant `C > 0`.
    pub c: f64,
    pub rates: EdgeRates,
}

impl DensityModel {
    /// Per-environment density `h_i(x)`, `env` ∈ {0, 1}, `x` ∈ (0,1).
    pub fn h(&self, env: usize, x: f64) -> f64 {
        let si = self.s[env];
        self.c / si.abs()
            * x.powf(self.exponent_zero - 1.0)
            * (1.0 - x).powf(self.exponent_one - 1.0)
            * (1.0 + si * x)
    }

    /// Analytic derivative `h_i'(x)`.
    pub fn h_prime(&self, env: usize, x: f64) -> f64 {
        let si = self.s[env];
        let a = self.exponent_zero;
        let b = self.exponent_one;
        let base = x.powf(a - 1.0) * (1.0 - x).powf(b - 1.0);
        let core = (a - 1.0) / x * (1.0 + si * x) - (b - 1.0) / (1.0 - x) * (1.0 + si * x) + si;
        self.c / si.abs() * base * core
    }

    /// Marginal density `h₁(x) + h₂(x)`.
    pub fn total(&self, x: f64) -> f64 {
        self.h(0, x) + self.h(1, x)
    }

    /// Smooth factor of the marginal: `total(x)` with the two singular
    /// powers divided out.
    fn smooth_factor(&self, x: f64) -> f64 {
        self.c
            * ((1.0 + self.s[0] * x) / self.s[0].abs() + (1.0 + self.s[1] * x) / self.s[1].abs())
    }

    /// Mass of the marginal on `[lo, hi] ⊆ [0,1]`, handling the endpoint
    /// singularities by power substitution.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        integrate_with_endpoint_powers(
            &|x| self.smooth_factor(x),
            self.exponent_zero,
            self.exponent_one,
            lo,
            hi,
            1e-11,
        )
    }

    /// Masses of the marginal over a uniform grid of `bins` cells.
    pub fn bin_masses(&self, bins: usize) -> Vec<f64> {
        (0..bins)
            .map(|k| {
                self.mass_between(k as f64 / bins as f64, (k + 1) as f64 / bins as f64)
            })
            .collect()
    }
}

/// Build the invariant density of a persistent two-species model
/// (`S = 1`, `K = 2`); errors out when either growth rate is nonpositive,
/// because the closed form is then not integrable and no interior invariant
/// law exists.
pub fn invariant_density(env: &EnvironmentModel) -> Result<DensityModel> {
    if env.num_species_free() != 1 || env.num_envs() != 2 {
        return Err(Error::InvalidModel(format!(
            "invariant density needs S = 1, K = 2; got S = {}, K = {}",
            env.num_species_free(),
            env.num_envs()
        )));
    }
    let rates = two_species_growth_rates(env)?;
    if !rates.interior_measure_exists() {
        return Err(Error::Degenerate(format!(
            "no interior invariant law: lambda0 = {}, lambda1 = {}; both must be positive",
            rates.at_zero, rates.at_one
        )));
    }
    let s1 = env.state(0).values()[0];
    let s2 = env.state(1).values()[0];
    let q1 = env.generator()[0][1];
    let q2 = env.generator()[1][0];
    let alpha = (q1 + q2) / (s1 * s2).abs();
    let beta = alpha * (1.0 + s1) * (1.0 + s2);
    let exponent_zero = alpha * rates.at_zero;
    let exponent_one = beta * rates.at_one;
    assert!(
        exponent_zero > 0.0 && exponent_one > 0.0,
        "positive growth rates force integrable exponents"
    );

    let mut model = DensityModel {
        s: [s1, s2],
        q: [q1, q2],
        alpha,
        beta,
        exponent_zero,
        exponent_one,
        c: 1.0,
        rates,
    };
    let raw = model.mass_between(0.0, 1.0);
    if !(raw.is_finite() && raw > 0.0) {
        return Err(Error::InvalidModel(format!(
            "density normalisation integral is {raw}"
        )));
    }
    model.c = 1.0 / raw;

    let check = model.mass_between(0.0, 1.0);
    if (check - 1.0).abs() > NORMALISATION_TOL {
        return Err(Error::InvalidModel(format!(
            "density normalisation check failed: total mass {check}"
        )));
    }
    Ok(model)
}

/// Sup-norm residuals of the stationary transport system on a uniform grid
/// that keeps a margin of `1e-3` from both endpoints:
/// `r₁ = q₁h₁ − q₂h₂ + (g₁h₁)′` and `r₂ = q₁h₁ − q₂h₂ − (g₂h₂)′`,
/// with all derivatives analytic.
pub fn fokker_planck_residual(density: &DensityModel, env: &EnvironmentModel) -> Result<(f64, f64)> {
    if env.num_species_free() != 1 || env.num_envs() != 2 {
        return Err(Error::InvalidModel(
            "residual check needs S = 1, K = 2".into(),
        ));
    }
    Ok(fokker_planck_residual_with(density, |e, x| {
        (density.h(e, x), density.h_prime(e, x))
    }))
}

/// Residuals for an arbitrary pair of candidate densities given as
/// `(value, derivative)` per environment; used to confirm the detector
/// rejects non-solutions.
pub(crate) fn fokker_planck_residual_with(
    density: &DensityModel,
    h_and_deriv: impl Fn(usize, f64) -> (f64, f64),
) -> (f64, f64) {
    let [q1, q2] = density.q;
    let g = |e: usize, x: f64| {
        let s = density.s[e];
        s * x * (1.0 - x) / (1.0 + s * x)
    };
    let g_prime = |e: usize, x: f64| {
        let s = density.s[e];
        let d = 1.0 + s * x;
        s * (1.0 - 2.0 * x - s * x * x) / (d * d)
    };
    let margin = 1e-3;
    let n = 2_000usize;
    let mut sup1 = 0.0f64;
    let mut sup2 = 0.0f64;
    for k in 0..=n {
        let x = margin + (1.0 - 2.0 * margin) * k as f64 / n as f64;
        let (h1, h1p) = h_and_deriv(0, x);
        let (h2, h2p) = h_and_deriv(1, x);
        let lhs = q1 * h1 - q2 * h2;
        let d1 = g_prime(0, x) * h1 + g(0, x) * h1p;
        let d2 = g_prime(1, x) * h2 + g(1, x) * h2p;
        sup1 = sup1.max((lhs + d1).abs());
        sup2 = sup2.max((lhs - d2).abs());
    }
    (sup1, sup2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvironmentModelSpec;

    fn two_env(s1: f64, s2: f64, q1: f64, q2: f64) -> EnvironmentModel {
        EnvironmentModel::from_spec(&EnvironmentModelSpec {
            fitness: vec![vec![s1], vec![s2]],
            q: vec![vec![-q1, q1], vec![q2, -q2]],
        })
        .unwrap()
    }

    #[test]
    fn degenerate_model_rejected() {
        let env = two_env(0.4, -0.4, 0.5, 0.5);
        assert!(matches!(invariant_density(&env), Err(Error::Degenerate(_))));
    }

    #[test]
    fn three_environment_densities_not_produced() {
        // the closed form only covers two environments
        let env = EnvironmentModel::from_spec(&EnvironmentModelSpec {
            fitness: vec![vec![1.0], vec![-0.4], vec![0.2]],
            q: vec![
                vec![-2.0, 1.0, 1.0],
                vec![1.0, -2.0, 1.0],
                vec![1.0, 1.0, -2.0],
            ],
        })
        .unwrap();
        assert!(matches!(
            invariant_density(&env),
            Err(Error::InvalidModel(_))
        ));
    }

    #[test]
    fn normalisation_holds() {
        for (s1, s2, q) in [(1.0, -0.4, 0.5), (0.27, -0.2, 1.0), (0.22, -0.2, 0.3)] {
            let env = two_env(s1, s2, q, q);
            let d = invariant_density(&env).unwrap();
            assert!((d.mass_between(0.0, 1.0) - 1.0).abs() < 1e-8, "({s1},{s2},{q})");
            assert!(d.c > 0.0);
        }
    }

    #[test]
    fn boundary_exponents_low_growth_model() {
        // s1 = 0.21, s2 = -0.2, q = 1: density explodes at 0, vanishes at 1
        let env = two_env(0.21, -0.2, 1.0, 1.0);
        let d = invariant_density(&env).unwrap();
        assert!(d.exponent_zero - 1.0 < 0.0, "a-1 = {}", d.exponent_zero - 1.0);
        assert!(d.exponent_one - 1.0 > 0.0, "b-1 = {}", d.exponent_one - 1.0);
        assert!((d.exponent_zero - 1.0 - (-0.762)).abs() < 5e-3);
        assert!((d.exponent_one - 1.0 - 0.761).abs() < 5e-3);
        assert!(d.h(0, 1e-9) > 1e3);
        assert!(d.h(0, 1.0 - 1e-9) < 1e-3);
    }

    #[test]
    fn crossover_exponents_exactly_one() {
        // s1 = 1/4, s2 = -1/5, q = 1: both exponents equal 1
        let env = two_env(0.25, -0.2, 1.0, 1.0);
        let d = invariant_density(&env).unwrap();
        assert!((d.exponent_zero - 1.0).abs() < 1e-12);
        assert!((d.exponent_one - 1.0).abs() < 1e-12);
    }

    #[test]
    fn residuals_vanish_for_the_closed_form() {
        let env = two_env(1.0, -0.4, 0.5, 0.5);
        let d = invariant_density(&env).unwrap();
        let (r1, r2) = fokker_planck_residual(&d, &env).unwrap();
        assert!(r1 < 1e-9, "r1 = {r1}");
        assert!(r2 < 1e-9, "r2 = {r2}");
    }

    #[test]
    fn residual_detects_perturbation() {
        // h1 -> h1 (1 + 0.01 x) is not a solution and must be flagged
        let env = two_env(1.0, -0.4, 0.5, 0.5);
        let d = invariant_density(&env).unwrap();
        let (r1, r2) = fokker_planck_residual_with(&d, |e, x| {
            if e == 0 {
                let (h, hp) = (d.h(0, x), d.h_prime(0, x));
                (h * (1.0 + 0.01 * x), hp * (1.0 + 0.01 * x) + h * 0.01)
            } else {
                (d.h(1, x), d.h_prime(1, x))
            }
        });
        assert!(r1.max(r2) > 1e-4, "perturbation slipped through: {r1}, {r2}");
    }

    #[test]
    fn bin_masses_sum_to_one() {
        let env = two_env(1.0, -0.4, 0.5, 0.5);
        let d = invariant_density(&env).unwrap();
        let masses = d.bin_masses(100);
        assert!((masses.iter().sum::<f64>() - 1.0).abs() < 1e-7);
        assert!(masses.iter().all(|&m| m >= 0.0));
    }
}
