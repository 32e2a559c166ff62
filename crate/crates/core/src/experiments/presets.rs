//! Named models used throughout the harness and the command-line tool.

use crate::env::{EnvironmentModel, EnvironmentModelSpec};

fn build(fitness: Vec<Vec<f64>>, q: Vec<Vec<f64>>) -> EnvironmentModel {
    EnvironmentModel::from_spec(&EnvironmentModelSpec { fitness, q })
        .expect("preset models are well formed")
}

/// Two species, two environments with fitness `s1`, `s2` and jump rates
/// `q1` (1→2), `q2` (2→1).
pub fn two_species_switching(s1: f64, s2: f64, q1: f64, q2: f64) -> EnvironmentModel {
    build(
        vec![vec![s1], vec![s2]],
        vec![vec![-q1, q1], vec![q2, -q2]],
    )
}

/// The persistent two-species reference model: s = (1, −0.4), q = 1/2.
pub fn persistent_two_species() -> EnvironmentModel {
    two_species_switching(1.0, -0.4, 0.5, 0.5)
}

/// Just across the persistence boundary: s = (1, −0.3), q = 1/2; the second
/// species dies out.
pub fn extinct_two_species() -> EnvironmentModel {
    two_species_switching(1.0, -0.3, 0.5, 0.5)
}

/// Balanced growth at the extinction boundary: s = (0.4, −0.4), q = 1/2.
pub fn balanced_two_species() -> EnvironmentModel {
    two_species_switching(0.4, -0.4, 0.5, 0.5)
}

/// Density boundary-regime family: s = (s1, −0.2) with symmetric rate `q`.
pub fn boundary_density_two_species(s1: f64, q: f64) -> EnvironmentModel {
    two_species_switching(s1, -0.2, q, q)
}

/// Three species, two environments where the neutral species invades:
/// fitness (1/3, −1/3) and (−3/8, 1/4), equal switching rates.
pub fn neutral_invader_three_species() -> EnvironmentModel {
    build(
        vec![vec![1.0 / 3.0, -1.0 / 3.0], vec![-3.0 / 8.0, 0.25]],
        vec![vec![-1.0, 1.0], vec![1.0, -1.0]],
    )
}

/// Uniform generator on `k` environments with every off-diagonal rate `q`.
pub fn uniform_generator(k: usize, q: f64) -> Vec<Vec<f64>> {
    (0..k)
        .map(|i| {
            (0..k)
                .map(|j| if i == j { -(q * (k as f64 - 1.0)) } else { q })
                .collect()
        })
        .collect()
}

/// Three species, three environments, persistent; each species is the best
/// in exactly one environment. Fitness (1, 1/2), (−1/4, −1/2), (−1/3, 1/3).
pub fn cyclic_three_env(q: f64) -> EnvironmentModel {
    build(
        vec![
            vec![1.0, 0.5],
            vec![-0.25, -0.5],
            vec![-1.0 / 3.0, 1.0 / 3.0],
        ],
        uniform_generator(3, q),
    )
}

/// Three species, three environments, persistent although the third species
/// never has the best fitness. Fitness (0.1, −0.3), (−0.33, 0.1),
/// (0.27, 0.25).
pub fn never_best_three_env(q: f64) -> EnvironmentModel {
    build(
        vec![vec![0.1, -0.3], vec![-0.33, 0.1], vec![0.27, 0.25]],
        uniform_generator(3, q),
    )
}
