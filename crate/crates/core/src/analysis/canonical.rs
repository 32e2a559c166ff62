//! Relabelling of three-species models into the alternating canonical form
//! and the closed-form invasion-rate signs it unlocks for two environments.
//!
//! Renaming species is exact: making species `j` the new reference rescales
//! every fitness to `(f^i − f^j)/(1 + f^j)`, which leaves the per-capita
//! growth rates (and hence all invasion rates) untouched.

use serde::{Deserialize, Serialize};

use crate::analysis::rates::ZERO_TOL;
use crate::env::{EnvironmentModel, FitnessVector};
use crate::{Error, Result};

/// How a model was relabelled: `species[i-1]` is the original index of the
/// canonical species `i`, `environments[k]` the original index of the
/// canonical environment `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relabeling {
    pub species: [usize; 3],
    pub environments: Vec<usize>,
}

impl Relabeling {
    pub fn identity(num_envs: usize) -> Self {
        Self {
            species: [1, 2, 3],
            environments: (0..num_envs).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.species == [1, 2, 3]
            && self.environments.iter().enumerate().all(|(k, &o)| k == o)
    }

    /// Original species index of canonical species `i`.
    pub fn original_species(&self, i: usize) -> usize {
        self.species[i - 1]
    }
}

/// Apply a species/environment relabelling to a three-species model.
pub fn relabel_three_species(
    env: &EnvironmentModel,
    species: [usize; 3],
    environments: &[usize],
) -> Result<EnvironmentModel> {
    if env.num_species_free() != 2 {
        return Err(Error::InvalidModel("relabelling needs S = 2".into()));
    }
    let k = env.num_envs();
    let states: Vec<FitnessVector> = environments
        .iter()
        .map(|&old_k| {
            let f = env.state(old_k);
            let reference = f.species(species[2]);
            FitnessVector::new(vec![
                (f.species(species[0]) - reference) / (1.0 + reference),
                (f.species(species[1]) - reference) / (1.0 + reference),
            ])
        })
        .collect::<Result<_>>()?;
    let mut q = vec![vec![0.0; k]; k];
    for (a, &oa) in environments.iter().enumerate() {
        for (b, &ob) in environments.iter().enumerate() {
            q[a][b] = env.generator()[oa][ob];
        }
    }
    EnvironmentModel::new(states, q)
}

const SPECIES_PERMS: [[usize; 3]; 6] = [
    [1, 2, 3],
    [2, 1, 3],
    [1, 3, 2],
    [3, 2, 1],
    [2, 3, 1],
    [3, 1, 2],
];

/// Bring a two-environment, three-species model into the alternating form
/// `s₁ > 0 > r₁`, `r₂ > 0 > s₂` (species 1 favoured then penalised, species
/// 2 the reverse, species 3 the reference). Fails when no relabelling
/// achieves strict alternation — which happens exactly when some species is
/// consistently ranked against another, or a fitness tie sits on the
/// boundary.
pub fn alternating_form(env: &EnvironmentModel) -> Result<(EnvironmentModel, Relabeling)> {
    if env.num_species_free() != 2 || env.num_envs() != 2 {
        return Err(Error::InvalidModel(format!(
            "alternating form needs S = 2, K = 2; got S = {}, K = {}",
            env.num_species_free(),
            env.num_envs()
        )));
    }
    for species in SPECIES_PERMS {
        for env_perm in [[0usize, 1], [1, 0]] {
            let candidate = relabel_three_species(env, species, &env_perm)?;
            let s1 = candidate.state(0).values()[0];
            let r1 = candidate.state(0).values()[1];
            let s2 = candidate.state(1).values()[0];
            let r2 = candidate.state(1).values()[1];
            if s1 > ZERO_TOL && r1 < -ZERO_TOL && r2 > ZERO_TOL && s2 < -ZERO_TOL {
                return Ok((
                    candidate,
                    Relabeling {
                        species,
                        environments: env_perm.to_vec(),
                    },
                ));
            }
        }
    }
    Err(Error::UnsupportedConfiguration(
        "no species/environment relabelling alternates the fitness signs; \
         a species is consistently ranked or a fitness sits at a tie"
            .into(),
    ))
}

/// Closed-form signs of the edge invasion rates `λ_i(ν_i)` of a
/// two-environment model, reported against the original species labels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeInvasionSigns {
    /// `signs[i-1]` ∈ {-1, 0, +1} for original species `i`; 0 flags the
    /// symmetric boundary `s₁r₂ = s₂r₁`.
    pub signs: [i8; 3],
    /// Sign-carrying bracket value for each original species (the positive
    /// edge constants are never computed).
    pub brackets: [f64; 3],
    /// Discriminant `s₁r₂ − s₂r₁` in canonical labels.
    pub discriminant: f64,
    pub relabeling: Relabeling,
}

/// Evaluate the sign rule: in the alternating form,
/// `λ₁(ν₁) < 0 ⇔ λ₂(ν₂) < 0 ⇔ λ₃(ν₃) > 0 ⇔ s₁r₂ < s₂r₁`.
pub fn edge_invasion_signs_two_env(env: &EnvironmentModel) -> Result<EdgeInvasionSigns> {
    let (canonical, relabeling) = alternating_form(env)?;
    let s1 = canonical.state(0).values()[0];
    let r1 = canonical.state(0).values()[1];
    let s2 = canonical.state(1).values()[0];
    let r2 = canonical.state(1).values()[1];

    let discriminant = s1 * r2 - s2 * r1;
    // Sign-carrying brackets from the invasion-rate table (canonical labels):
    //   λ₁(ν₁) ∝ s₁/|r₁| + s₂/|r₂|
    //   λ₂(ν₂) ∝ r₁/|s₁| + r₂/|s₂|
    //   λ₃(ν₃) ∝ −r₁/|s₁−r₁| − r₂/|s₂−r₂|
    let canonical_brackets = [
        s1 / r1.abs() + s2 / r2.abs(),
        r1 / s1.abs() + r2 / s2.abs(),
        -r1 / (s1 - r1).abs() - r2 / (s2 - r2).abs(),
    ];
    let sign_of = |v: f64| {
        if v.abs() <= ZERO_TOL {
            0i8
        } else if v > 0.0 {
            1
        } else {
            -1
        }
    };
    let canonical_signs = if discriminant.abs() <= ZERO_TOL {
        [0i8, 0, 0]
    } else {
        [
            sign_of(discriminant),
            sign_of(discriminant),
            -sign_of(discriminant),
        ]
    };

    let mut signs = [0i8; 3];
    let mut brackets = [0.0f64; 3];
    for i in 1..=3 {
        let original = relabeling.original_species(i);
        signs[original - 1] = canonical_signs[i - 1];
        brackets[original - 1] = canonical_brackets[i - 1];
    }
    Ok(EdgeInvasionSigns {
        signs,
        brackets,
        discriminant,
        relabeling,
    })
}
