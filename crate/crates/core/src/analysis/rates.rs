//! Closed-form growth rates.
//!
//! For a two-species community the long-run behaviour is governed by the
//! stationary averages of the per-capita growth rate at the two endpoints;
//! with three species the same pair of averages exists for each edge of the
//! simplex, and each vertex carries the largest average growth rate an
//! absent species would enjoy there.

use serde::{Deserialize, Serialize};

use crate::env::EnvironmentModel;
use crate::{Error, Result};

/// Tolerance below which an analytic rate is treated as sitting on the
/// decision boundary.
pub const ZERO_TOL: f64 = 1e-12;

/// Stationary-averaged growth rates of an edge process at its endpoints
/// (`at_zero` drives the invading species near 0, `at_one` the resident
/// near 1). Serialised as `lambda0` / `lambda1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeRates {
    #[serde(rename = "lambda0")]
    pub at_zero: f64,
    #[serde(rename = "lambda1")]
    pub at_one: f64,
}

impl EdgeRates {
    /// Both rates strictly positive (beyond tolerance): the edge carries a
    /// unique ergodic measure in its interior.
    pub fn interior_measure_exists(&self) -> bool {
        self.at_zero > ZERO_TOL && self.at_one > ZERO_TOL
    }

    pub fn on_boundary(&self) -> bool {
        self.at_zero.abs() <= ZERO_TOL || self.at_one.abs() <= ZERO_TOL
    }
}

/// Presence of the interior ergodic measure on an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgePresence {
    Exists,
    Absent,
    /// A rate lies within [`ZERO_TOL`] of zero; no honest call can be made.
    Boundary,
}

/// Classify the edge from its endpoint rates.
pub fn edge_measure_presence(rates: &EdgeRates) -> EdgePresence {
    if rates.on_boundary() {
        EdgePresence::Boundary
    } else if rates.at_zero > 0.0 && rates.at_one > 0.0 {
        EdgePresence::Exists
    } else {
        EdgePresence::Absent
    }
}

/// Growth rates of the two-species process (one free coordinate, any
/// number of environments): `Λ₀ = Σ p_j s_j` and `Λ₁ = −Σ p_j s_j/(1+s_j)`.
pub fn two_species_growth_rates(env: &EnvironmentModel) -> Result<EdgeRates> {
    if env.num_species_free() != 1 {
        return Err(Error::InvalidModel(format!(
            "two-species growth rates need S = 1, got S = {}",
            env.num_species_free()
        )));
    }
    let at_zero = env.stationary_average(|f| f.values()[0]);
    let at_one = -env.stationary_average(|f| {
        let s = f.values()[0];
        s / (1.0 + s)
    });
    Ok(EdgeRates { at_zero, at_one })
}

/// The four regimes of the two-species process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TwoSpeciesRegime {
    /// `Λ₀ < 0`: species 1 goes extinct (and then `Λ₁ > 0`).
    Extinction1,
    /// `Λ₁ < 0`: species 2 goes extinct (and then `Λ₀ > 0`).
    Extinction2,
    /// Both positive: a unique interior invariant law exists.
    Persistent,
    /// A rate vanishes (within tolerance): only the endpoint measures are
    /// invariant and the process is not persistent.
    DegenerateBoundary,
}

/// Sign-based classification of the two-species regimes.
pub fn classify_two_species(rates: &EdgeRates) -> TwoSpeciesRegime {
    if rates.on_boundary() {
        return TwoSpeciesRegime::DegenerateBoundary;
    }
    if rates.at_zero < 0.0 {
        debug_assert!(rates.at_one > 0.0, "at_zero < 0 forces at_one > 0");
        return TwoSpeciesRegime::Extinction1;
    }
    if rates.at_one < 0.0 {
        debug_assert!(rates.at_zero > 0.0, "at_one < 0 forces at_zero > 0");
        return TwoSpeciesRegime::Extinction2;
    }
    TwoSpeciesRegime::Persistent
}

/// Edge growth rates of a three-species community (S = 2, any K).
///
/// `edges[i-1]` refers to the face where species `i` is extinct; the two
/// surviving species run a two-species process whose endpoint rates are the
/// stationary averages below (species 1 carries fitness `s`, species 2
/// fitness `r`, species 3 is the reference):
///
/// * face 1: `Λ₀¹ = Σ p r`,               `Λ₁¹ = −Σ p r/(1+r)`
/// * face 2: `Λ₀² = Σ p s`,               `Λ₁² = −Σ p s/(1+s)`
/// * face 3: `Λ₀³ = Σ p (r−s)/(1+s)`,     `Λ₁³ = Σ p (s−r)/(1+r)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeSpeciesEdgeRates {
    pub edges: [EdgeRates; 3],
}

impl ThreeSpeciesEdgeRates {
    pub fn edge(&self, species: usize) -> &EdgeRates {
        &self.edges[species - 1]
    }
}

pub fn three_species_edge_rates(env: &EnvironmentModel) -> Result<ThreeSpeciesEdgeRates> {
    if env.num_species_free() != 2 {
        return Err(Error::InvalidModel(format!(
            "edge rates need S = 2, got S = {}",
            env.num_species_free()
        )));
    }
    let s = |f: &crate::env::FitnessVector| f.values()[0];
    let r = |f: &crate::env::FitnessVector| f.values()[1];
    let edge1 = EdgeRates {
        at_zero: env.stationary_average(|f| r(f)),
        at_one: -env.stationary_average(|f| r(f) / (1.0 + r(f))),
    };
    let edge2 = EdgeRates {
        at_zero: env.stationary_average(|f| s(f)),
        at_one: -env.stationary_average(|f| s(f) / (1.0 + s(f))),
    };
    let edge3 = EdgeRates {
        at_zero: env.stationary_average(|f| (r(f) - s(f)) / (1.0 + s(f))),
        at_one: env.stationary_average(|f| (s(f) - r(f)) / (1.0 + r(f))),
    };
    Ok(ThreeSpeciesEdgeRates {
        edges: [edge1, edge2, edge3],
    })
}

/// Invasion rates of each species with respect to each vertex measure,
/// `table[i-1][j-1] = λ_i(μ_j)`, expressed through the edge rates:
///
/// ```text
///        μ1      μ2      μ3
///  1      0      Λ₁³     Λ₀²
///  2     Λ₀³      0      Λ₀¹
///  3     Λ₁²     Λ₁¹      0
/// ```
pub fn vertex_invasion_table(rates: &ThreeSpeciesEdgeRates) -> [[f64; 3]; 3] {
    let e = |i: usize| rates.edge(i);
    [
        [0.0, e(3).at_one, e(2).at_zero],
        [e(3).at_zero, 0.0, e(1).at_zero],
        [e(2).at_one, e(1).at_one, 0.0],
    ]
}

/// Largest stationary-averaged growth rate an absent species enjoys at the
/// monomorphic state of species `i0` (`1 <= i0 <= S+1`):
/// `max_{i≠i0} Σ_j p_j (s_j^i − s_j^{i0}) / (1 + s_j^{i0})`.
///
/// Negative means every other species decays near that vertex, so species
/// `i0` can take over the community with positive probability.
pub fn vertex_invasion_exponent(env: &EnvironmentModel, i0: usize) -> Result<f64> {
    let total = env.num_species_free() + 1;
    if i0 == 0 || i0 > total {
        return Err(Error::InvalidModel(format!(
            "species index {i0} out of range 1..={total}"
        )));
    }
    let mut best = f64::NEG_INFINITY;
    for i in 1..=total {
        if i == i0 {
            continue;
        }
        let avg = env.stationary_average(|f| {
            (f.species(i) - f.species(i0)) / (1.0 + f.species(i0))
        });
        best = best.max(avg);
    }
    Ok(best)
}

/// All vertex exponents at once. At most one can be negative; this is
/// asserted because downstream classification relies on it.
pub fn vertex_invasion_exponents(env: &EnvironmentModel) -> Result<Vec<f64>> {
    let total = env.num_species_free() + 1;
    let out: Vec<f64> = (1..=total)
        .map(|i0| vertex_invasion_exponent(env, i0))
        .collect::<Result<_>>()?;
    let negatives = out.iter().filter(|&&v| v < -ZERO_TOL).count();
    assert!(
        negatives <= 1,
        "more than one attracting vertex: exponents {out:?}"
    );
    Ok(out)
}

/// The alternating-sum scalar controlling linear independence of the three
/// switching fields (S = 2, K = 3):
/// `s₂r₃ − r₂s₃ + s₃r₁ − s₁r₃ + s₁r₂ − s₂r₁`.
/// Nonzero values certify the exponential-convergence hypothesis.
pub fn full_support_determinant(env: &EnvironmentModel) -> Result<f64> {
    if env.num_species_free() != 2 || env.num_envs() != 3 {
        return Err(Error::InvalidModel(format!(
            "full-support determinant needs S = 2, K = 3; got S = {}, K = {}",
            env.num_species_free(),
            env.num_envs()
        )));
    }
    let s = |k: usize| env.state(k).values()[0];
    let r = |k: usize| env.state(k).values()[1];
    Ok(s(1) * r(2) - r(1) * s(2) + s(2) * r(0) - s(0) * r(2) + s(0) * r(1) - s(1) * r(0))
}

/// Everything the reporting layer wants in one bundle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthRateReport {
    /// Per-edge endpoint rates (one entry when S = 1, three when S = 2).
    pub lambda0_edge: Vec<f64>,
    pub lambda1_edge: Vec<f64>,
    /// Per-species vertex exponents.
    pub lambda_vertex: Vec<f64>,
}

pub fn growth_rate_report(env: &EnvironmentModel) -> Result<GrowthRateReport> {
    let (lambda0_edge, lambda1_edge) = match env.num_species_free() {
        1 => {
            let r = two_species_growth_rates(env)?;
            (vec![r.at_zero], vec![r.at_one])
        }
        2 => {
            let r = three_species_edge_rates(env)?;
            (
                r.edges.iter().map(|e| e.at_zero).collect(),
                r.edges.iter().map(|e| e.at_one).collect(),
            )
        }
        s => {
            return Err(Error::InvalidModel(format!(
                "growth-rate report supports S in {{1,2}}, got {s}"
            )))
        }
    };
    let lambda_vertex = vertex_invasion_exponents(env)?;
    for v in lambda0_edge
        .iter()
        .chain(&lambda1_edge)
        .chain(&lambda_vertex)
    {
        if !v.is_finite() {
            return Err(Error::InvalidModel("non-finite growth rate".into()));
        }
    }
    Ok(GrowthRateReport {
        lambda0_edge,
        lambda1_edge,
        lambda_vertex,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::EnvironmentModelSpec;

    fn two_env_one_species(s1: f64, s2: f64, q1: f64, q2: f64) -> EnvironmentModel {
        EnvironmentModel::from_spec(&EnvironmentModelSpec {
            fitness: vec![vec![s1], vec![s2]],
            q: vec![vec![-q1, q1], vec![q2, -q2]],
        })
        .unwrap()
    }

    #[test]
    fn growth_rates_hand_values() {
        // s = (1, -0.4), p = (1/2, 1/2): Λ0 = 0.3, Λ1 = 1/12;
        // cross-checked against the stationary average of -s/(1+s).
        let env = two_env_one_species(1.0, -0.4, 0.5, 0.5);
        let r = two_species_growth_rates(&env).unwrap();
        assert!((r.at_zero - 0.3).abs() < 1e-15);
        assert!((r.at_one - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn balanced_growth_rates() {
        // s1 = -s2 = 0.4, equal rates: Λ0 = 0 exactly and
        // Λ1 = s1^2/(1 - s1^2) = 4/21 (the weighted closed form).
        let env = two_env_one_species(0.4, -0.4, 0.5, 0.5);
        let r = two_species_growth_rates(&env).unwrap();
        assert_eq!(r.at_zero, 0.0);
        assert!((r.at_one - 0.16 / 0.84).abs() < 1e-15);
        assert!((r.at_one - 4.0 / 21.0).abs() < 1e-12);
    }

    #[test]
    fn persistence_boundary_at_minus_third() {
        // s1 = 1, equal rates: Λ1 changes sign at s2 = -1/3
        let at = |s2: f64| {
            two_species_growth_rates(&two_env_one_species(1.0, s2, 0.5, 0.5))
                .unwrap()
                .at_one
        };
        assert!(at(-1.0 / 3.0).abs() < 1e-15);
        assert!(at(-0.4) > 0.0);
        assert!(at(-0.3) < 0.0);
    }

    #[test]
    fn classification_rules() {
        assert_eq!(
            classify_two_species(&EdgeRates {
                at_zero: 0.3,
                at_one: 0.0833
            }),
            TwoSpeciesRegime::Persistent
        );
        assert_eq!(
            classify_two_species(&EdgeRates {
                at_zero: 0.0,
                at_one: 0.381
            }),
            TwoSpeciesRegime::DegenerateBoundary
        );
        assert_eq!(
            classify_two_species(&EdgeRates {
                at_zero: -0.05,
                at_one: 0.2
            }),
            TwoSpeciesRegime::Extinction1
        );
        assert_eq!(
            classify_two_species(&EdgeRates {
                at_zero: 0.35,
                at_one: -0.0357
            }),
            TwoSpeciesRegime::Extinction2
        );
    }

    #[test]
    fn antisymmetry_of_signs_randomised() {
        // Λ0 < 0 forces Λ1 > 0 and vice versa, over random fitness pairs
        let mut rng_state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            rng_state ^= rng_state << 13;
            rng_state ^= rng_state >> 7;
            rng_state ^= rng_state << 17;
            (rng_state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..2_000 {
            let s1 = -0.9 + 3.9 * next();
            let s2 = -0.9 + 3.9 * next();
            let q1 = 0.1 + 5.0 * next();
            let q2 = 0.1 + 5.0 * next();
            let r = two_species_growth_rates(&two_env_one_species(s1, s2, q1, q2)).unwrap();
            if r.at_zero < -ZERO_TOL {
                assert!(r.at_one > 0.0, "s=({s1},{s2}) q=({q1},{q2}): {r:?}");
            }
            if r.at_one < -ZERO_TOL {
                assert!(r.at_zero > 0.0, "s=({s1},{s2}) q=({q1},{q2}): {r:?}");
            }
        }
    }

    fn three_species_two_env() -> EnvironmentModel {
        // fitness (s, r) = (1/3, -1/3) and (-3/8, 1/4), equal rates
        EnvironmentModel::from_spec(&EnvironmentModelSpec {
            fitness: vec![vec![1.0 / 3.0, -1.0 / 3.0], vec![-3.0 / 8.0, 0.25]],
            q: vec![vec![-1.0, 1.0], vec![1.0, -1.0]],
        })
        .unwrap()
    }

    #[test]
    fn edge_rates_reference_example() {
        let rates = three_species_edge_rates(&three_species_two_env()).unwrap();
        assert!((rates.edge(1).at_zero - (-1.0 / 24.0)).abs() < 1e-15);
        assert!((rates.edge(2).at_zero - (-1.0 / 48.0)).abs() < 1e-15);
        // direct evaluation of the displayed formula for edge 3
        // (1/2)[(r1-s1)/(1+s1) + (r2-s2)/(1+s2)] = 1/4
        assert!((rates.edge(3).at_zero - 0.25).abs() < 1e-15);
    }

    fn cyclic_three_env() -> EnvironmentModel {
        // fitness (1, 1/2), (-1/4, -1/2), (-1/3, 1/3); uniform chain
        EnvironmentModel::from_spec(&EnvironmentModelSpec {
            fitness: vec![
                vec![1.0, 0.5],
                vec![-0.25, -0.5],
                vec![-1.0 / 3.0, 1.0 / 3.0],
            ],
            q: vec![
                vec![-2.0, 1.0, 1.0],
                vec![1.0, -2.0, 1.0],
                vec![1.0, 1.0, -2.0],
            ],
        })
        .unwrap()
    }

    #[test]
    fn edge_rates_three_env_example() {
        let rates = three_species_edge_rates(&cyclic_three_env()).unwrap();
        // the three reference entries that recompute cleanly
        assert!((rates.edge(1).at_one - 5.0 / 36.0).abs() < 1e-15);
        assert!((rates.edge(2).at_zero - 5.0 / 36.0).abs() < 1e-15);
        assert!((rates.edge(3).at_zero - 5.0 / 36.0).abs() < 1e-15);
        // direct evaluation of the remaining three gives 1/9
        assert!((rates.edge(1).at_zero - 1.0 / 9.0).abs() < 1e-15);
        assert!((rates.edge(2).at_one - 1.0 / 9.0).abs() < 1e-15);
        assert!((rates.edge(3).at_one - 1.0 / 9.0).abs() < 1e-15);
        // all six positive: every edge carries an ergodic measure
        for i in 1..=3 {
            assert_eq!(edge_measure_presence(rates.edge(i)), EdgePresence::Exists);
        }
    }

    #[test]
    fn single_environment_reduces_to_fixed_signs() {
        let env = EnvironmentModel::constant(vec![0.4, -0.1]).unwrap();
        let rates = three_species_edge_rates(&env).unwrap();
        assert!((rates.edge(2).at_zero - 0.4).abs() < 1e-15);
        assert!((rates.edge(1).at_zero + 0.1).abs() < 1e-15);
        assert!((rates.edge(3).at_zero - (-0.5 / 1.4)).abs() < 1e-15);
        // mixed signs: no interior measure on these edges
        assert_eq!(edge_measure_presence(rates.edge(1)), EdgePresence::Absent);
        assert_eq!(edge_measure_presence(rates.edge(2)), EdgePresence::Absent);
    }

    #[test]
    fn edge_presence_sign_combinations() {
        let exists = EdgeRates {
            at_zero: 0.2,
            at_one: 0.1,
        };
        let absent = EdgeRates {
            at_zero: 0.2,
            at_one: -0.1,
        };
        let boundary = EdgeRates {
            at_zero: 0.0,
            at_one: 0.1,
        };
        assert_eq!(edge_measure_presence(&exists), EdgePresence::Exists);
        assert_eq!(edge_measure_presence(&absent), EdgePresence::Absent);
        assert_eq!(edge_measure_presence(&boundary), EdgePresence::Boundary);
    }

    #[test]
    fn table_identities() {
        let rates = three_species_edge_rates(&three_species_two_env()).unwrap();
        let table = vertex_invasion_table(&rates);
        assert_eq!(table[0][2], rates.edge(2).at_zero); // λ1(μ3) = Λ0²
        assert_eq!(table[1][2], rates.edge(1).at_zero); // λ2(μ3) = Λ0¹
        assert_eq!(table[0][1], rates.edge(3).at_one); // λ1(μ2) = Λ1³
        assert_eq!(table[2][0], rates.edge(2).at_one); // λ3(μ1) = Λ1²
        assert_eq!(table[2][1], rates.edge(1).at_one); // λ3(μ2) = Λ1¹
        for i in 0..3 {
            assert_eq!(table[i][i], 0.0);
        }
    }

    #[test]
    fn neutral_invader_vertex_rates_positive() {
        // the example's vertex 3 sees both absent species decay, while
        // species 3 grows at both other vertices
        let rates = three_species_edge_rates(&three_species_two_env()).unwrap();
        let table = vertex_invasion_table(&rates);
        assert!(table[2][0] > 0.0); // λ3(μ1) = Λ1² > 0
        assert!(table[2][1] > 0.0); // λ3(μ2) = Λ1¹ > 0
        assert!(table[0][2] < 0.0);
        assert!(table[1][2] < 0.0);
    }

    #[test]
    fn vertex_exponent_neutral_invader() {
        let env = three_species_two_env();
        let l3 = vertex_invasion_exponent(&env, 3).unwrap();
        // max(Λ0¹, Λ0²) = max(-1/24, -1/48) = -1/48 < 0
        assert!((l3 - (-1.0 / 48.0)).abs() < 1e-15);
        let all = vertex_invasion_exponents(&env).unwrap();
        assert_eq!(all.iter().filter(|&&v| v < 0.0).count(), 1);
    }

    #[test]
    fn always_best_species_attracts() {
        // species 1 strictly best in both environments
        let env = EnvironmentModel::from_spec(&EnvironmentModelSpec {
            fitness: vec![vec![0.5, 0.1], vec![0.8, -0.2]],
            q: vec![vec![-1.0, 1.0], vec![1.0, -1.0]],
        })
        .unwrap();
        let l1 = vertex_invasion_exponent(&env, 1).unwrap();
        assert!(l1 < 0.0);
        // and it equals the explicit max over the other species
        let expect = {
            let a: f64 = 0.5 * ((0.1 - 0.5) / 1.5 + (-0.2 - 0.8) / 1.8);
            let b: f64 = 0.5 * ((0.0 - 0.5) / 1.5 + (0.0 - 0.8) / 1.8);
            a.max(b)
        };
        assert!((l1 - expect).abs() < 1e-15);
    }

    #[test]
    fn determinant_example_and_cancellation() {
        let env = EnvironmentModel::from_spec(&EnvironmentModelSpec {
            fitness: vec![vec![0.1, -0.3], vec![-0.33, 0.1], vec![0.27, 0.25]],
            q: vec![
                vec![-2.0, 1.0, 1.0],
                vec![1.0, -2.0, 1.0],
                vec![1.0, 1.0, -2.0],
            ],
        })
        .unwrap();
        let alpha = full_support_determinant(&env).unwrap();
        assert!(alpha.abs() > 1e-6, "example satisfies the condition: {alpha}");

        // identical fitness columns cancel the alternating sum
        let env0 = EnvironmentModel::from_spec(&EnvironmentModelSpec {
            fitness: vec![vec![0.3, 0.3], vec![-0.2, -0.2], vec![0.7, 0.7]],
            q: vec![
                vec![-2.0, 1.0, 1.0],
                vec![1.0, -2.0, 1.0],
                vec![1.0, 1.0, -2.0],
            ],
        })
        .unwrap();
        assert!(full_support_determinant(&env0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn determinant_alternates_with_environment_relabelling() {
        let base = vec![vec![0.1, -0.3], vec![-0.33, 0.1], vec![0.27, 0.25]];
        let q = vec![
            vec![-2.0, 1.0, 1.0],
            vec![1.0, -2.0, 1.0],
            vec![1.0, 1.0, -2.0],
        ];
        let value = |perm: [usize; 3]| {
            let fitness = perm.iter().map(|&k| base[k].clone()).collect();
            full_support_determinant(
                &EnvironmentModel::from_spec(&EnvironmentModelSpec {
                    fitness,
                    q: q.clone(),
                })
                .unwrap(),
            )
            .unwrap()
        };
        let reference = value([0, 1, 2]);
        let perms: [([usize; 3], f64); 6] = [
            ([0, 1, 2], 1.0),
            ([1, 2, 0], 1.0),
            ([2, 0, 1], 1.0),
            ([0, 2, 1], -1.0),
            ([1, 0, 2], -1.0),
            ([2, 1, 0], -1.0),
        ];
        for (perm, sign) in perms {
            assert!(
                (value(perm) - sign * reference).abs() < 1e-12,
                "perm {perm:?}"
            );
        }
    }
}
