//! Core domain types: simplex states, fitness vectors, the environment chain
//! and the replicator-type vector field of the limiting process.
//!
//! A community of `S+1` species is tracked through the abundances of its
//! first `S` species; the last species is implicit (`x^{S+1} = 1 - Σ x^i`)
//! and its fitness is normalised to zero. All operations here are pure and
//! the types are immutable after construction, so everything is safe to
//! share across threads.

use serde::{Deserialize, Serialize};

use crate::{linalg, Error, Result};

/// Round-off tolerance for simplex membership. Violations below this are
/// clamped (integration round-off); anything larger is a hard error so the
/// integrator cannot silently leak mass.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// A point of the state space: abundances `x^1..x^S` of the free species,
/// each in `[0,1]` with `Σ x^i ≤ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint {
    coords: Vec<f64>,
}

impl SimplexPoint {
    /// Validate and build a simplex point. Coordinates within [`SIMPLEX_TOL`]
    /// of the feasible set are clamped onto it; larger violations error out.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let mut coords = coords;
        if coords.is_empty() {
            return Err(Error::InvalidModel("simplex point needs S >= 1".into()));
        }
        for (i, c) in coords.iter_mut().enumerate() {
            if !c.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "coordinate {i} is not finite: {c}"
                )));
            }
            if *c < 0.0 {
                if *c > -SIMPLEX_TOL {
                    *c = 0.0;
                } else {
                    return Err(Error::InvalidModel(format!(
                        "coordinate {i} = {c} below 0 beyond tolerance"
                    )));
                }
            }
            if *c > 1.0 {
                if *c < 1.0 + SIMPLEX_TOL {
                    *c = 1.0;
                } else {
                    return Err(Error::InvalidModel(format!(
                        "coordinate {i} = {c} above 1 beyond tolerance"
                    )));
                }
            }
        }
        let sum: f64 = coords.iter().sum();
        if sum > 1.0 {
            if sum < 1.0 + SIMPLEX_TOL {
                for c in coords.iter_mut() {
                    *c /= sum;
                }
            } else {
                return Err(Error::InvalidModel(format!(
                    "coordinates sum to {sum} > 1 beyond tolerance"
                )));
            }
        }
        Ok(Self { coords })
    }

    /// The vertex `e_i` (species `i` alone), `1 <= i <= S+1`; `e_{S+1}` is
    /// the origin in free coordinates.
    pub fn vertex(dim: usize, species: usize) -> Result<Self> {
        if species == 0 || species > dim + 1 {
            return Err(Error::InvalidModel(format!(
                "vertex index {species} out of range 1..={}",
                dim + 1
            )));
        }
        let mut coords = vec![0.0; dim];
        if species <= dim {
            coords[species - 1] = 1.0;
        }
        Ok(Self { coords })
    }

    /// Number of free coordinates `S`.
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Implicit abundance of species `S+1`.
    pub fn last(&self) -> f64 {
        (1.0 - self.coords.iter().sum::<f64>()).max(0.0)
    }

    /// Abundance of species `i`, `1 <= i <= S+1`.
    pub fn species(&self, i: usize) -> f64 {
        if i <= self.coords.len() {
            self.coords[i - 1]
        } else {
            self.last()
        }
    }

    /// Distance to the extinction set: the smallest abundance over all
    /// `S+1` species.
    pub fn boundary_distance(&self) -> f64 {
        self.coords
            .iter()
            .copied()
            .fold(self.last(), f64::min)
    }
}

/// Fitness (selection parameters) of the `S` free species in one
/// environment; the implicit species has fitness zero and every entry must
/// exceed −1 (the normalised range).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FitnessVector {
    s: Vec<f64>,
}

impl FitnessVector {
    pub fn new(s: Vec<f64>) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::InvalidModel("fitness vector needs S >= 1".into()));
        }
        for (i, v) in s.iter().enumerate() {
            if !v.is_finite() || *v <= -1.0 {
                return Err(Error::InvalidModel(format!(
                    "fitness of species {} is {v}; must be finite and > -1",
                    i + 1
                )));
            }
        }
        Ok(Self { s })
    }

    pub fn dim(&self) -> usize {
        self.s.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.s
    }

    /// Fitness of species `i`, `1 <= i <= S+1` (zero for the implicit one).
    pub fn species(&self, i: usize) -> f64 {
        if i <= self.s.len() {
            self.s[i - 1]
        } else {
            0.0
        }
    }

    /// `σ(x) = Σ_k s^k x^k`, the mean fitness at `x` (the implicit species
    /// contributes nothing).
    pub fn mean_fitness(&self, x: &[f64]) -> f64 {
        self.s.iter().zip(x).map(|(s, x)| s * x).sum()
    }

    /// Per-capita growth rate `F^i(x) = (s^i − σ(x)) / (1 + σ(x))` of
    /// species `i`, `1 <= i <= S+1`.
    pub fn per_capita_rate(&self, x: &[f64], i: usize) -> f64 {
        let sigma = self.mean_fitness(x);
        (self.species(i) - sigma) / (1.0 + sigma)
    }
}

/// Serialised form of an environment model: per-environment fitness rows
/// and the jump-rate generator. The stationary law is never read from file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentModelSpec {
    pub fitness: Vec<Vec<f64>>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
}

/// A finite-state environment: `K` fitness vectors, the generator `Q` of
/// the continuous-time chain that selects among them, and the stationary
/// law `p` (always recomputed at construction).
#[derive(Debug, Clone)]
pub struct EnvironmentModel {
    states: Vec<FitnessVector>,
    generator: Vec<Vec<f64>>,
    stationary: Vec<f64>,
}

impl EnvironmentModel {
    pub fn new(states: Vec<FitnessVector>, generator: Vec<Vec<f64>>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidModel("need at least one environment".into()));
        }
        let dim = states[0].dim();
        for (k, st) in states.iter().enumerate() {
            if st.dim() != dim {
                return Err(Error::InvalidModel(format!(
                    "fitness row {k} has length {}, expected {dim}",
                    st.dim()
                )));
            }
        }
        let k = states.len();
        validate_generator(&generator, k)?;
        let stationary = stationary_distribution(&generator)?;
        Ok(Self {
            states,
            generator,
            stationary,
        })
    }

    /// Build from the serialised form.
    pub fn from_spec(spec: &EnvironmentModelSpec) -> Result<Self> {
        let states = spec
            .fitness
            .iter()
            .map(|row| FitnessVector::new(row.clone()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(states, spec.q.clone())
    }

    pub fn to_spec(&self) -> EnvironmentModelSpec {
        EnvironmentModelSpec {
            fitness: self.states.iter().map(|s| s.values().to_vec()).collect(),
            q: self.generator.clone(),
        }
    }

    /// Convenience constructor for a single constant environment (no
    /// switching; the degenerate chain has one absorbing state).
    pub fn constant(fitness: Vec<f64>) -> Result<Self> {
        Self::new(vec![FitnessVector::new(fitness)?], vec![vec![0.0]])
    }

    /// Number of environments `K`.
    pub fn num_envs(&self) -> usize {
        self.states.len()
    }

    /// Number of free species `S`.
    pub fn num_species_free(&self) -> usize {
        self.states[0].dim()
    }

    pub fn state(&self, k: usize) -> &FitnessVector {
        &self.states[k]
    }

    pub fn states(&self) -> &[FitnessVector] {
        &self.states
    }

    pub fn generator(&self) -> &[Vec<f64>] {
        &self.generator
    }

    /// Stationary law of the environment chain.
    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// Total jump rate out of environment `k`.
    pub fn exit_rate(&self, k: usize) -> f64 {
        -self.generator[k][k]
    }

    /// `Σ_j p_j f(s_j)` — average of a per-environment quantity under the
    /// stationary law.
    pub fn stationary_average(&self, f: impl Fn(&FitnessVector) -> f64) -> f64 {
        self.stationary
            .iter()
            .zip(&self.states)
            .map(|(p, s)| p * f(s))
            .sum()
    }
}

fn validate_generator(q: &[Vec<f64>], k: usize) -> Result<()> {
    if q.len() != k {
        return Err(Error::InvalidModel(format!(
            "generator has {} rows, expected {k}",
            q.len()
        )));
    }
    for (i, row) in q.iter().enumerate() {
        if row.len() != k {
            return Err(Error::InvalidModel(format!(
                "generator row {i} has length {}, expected {k}",
                row.len()
            )));
        }
        let mut off_sum = 0.0;
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "generator entry ({i},{j}) is not finite"
                )));
            }
            if i != j {
                if v < 0.0 {
                    return Err(Error::InvalidModel(format!(
                        "generator entry ({i},{j}) = {v} is negative"
                    )));
                }
                off_sum += v;
            }
        }
        let row_sum = row[i] + off_sum;
        let scale = off_sum.max(1.0);
        if row_sum.abs() > 1e-9 * scale {
            return Err(Error::InvalidModel(format!(
                "generator row {i} sums to {row_sum}, expected 0"
            )));
        }
    }
    if k > 1 && !linalg::strongly_connected(k, |i, j| q[i][j]) {
        return Err(Error::InvalidModel(
            "generator is reducible: some environment cannot reach another".into(),
        ));
    }
    Ok(())
}

/// Stationary law of an irreducible generator: the unique probability
/// vector with `pQ = 0`, found by a direct dense solve (one balance
/// equation replaced by the normalisation). `K = 2` is returned in closed
/// form, `p_1 = q_2/(q_1+q_2)`, which is exact.
pub fn stationary_distribution(q: &[Vec<f64>]) -> Result<Vec<f64>> {
    let k = q.len();
    validate_generator(q, k)?;
    if k == 1 {
        return Ok(vec![1.0]);
    }
    if k == 2 {
        let q1 = q[0][1];
        let q2 = q[1][0];
        return Ok(vec![q2 / (q1 + q2), q1 / (q1 + q2)]);
    }

    // Solve Qᵀ pᵀ = 0 with the last equation replaced by Σ p = 1.
    let mut a: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| q[j][i]).collect())
        .collect();
    let mut b = vec![0.0; k];
    for entry in a[k - 1].iter_mut() {
        *entry = 1.0;
    }
    b[k - 1] = 1.0;
    let p = linalg::solve_dense(&mut a, &mut b)
        .ok_or_else(|| Error::InvalidModel("stationary solve: singular system".into()))?;

    for (i, &pi) in p.iter().enumerate() {
        if !(pi > 0.0) {
            return Err(Error::InvalidModel(format!(
                "stationary mass of environment {i} is {pi}; irreducible chains have positive mass"
            )));
        }
    }
    Ok(p)
}

/// The vector field of the limiting process: `G^i_s(x) = x^i F^i_s(x)` for
/// the `S` free coordinates. Coordinates at exactly zero map to exactly
/// zero, which is what keeps the boundary faces invariant under the flow.
pub fn drift_field(x: &SimplexPoint, s: &FitnessVector) -> Vec<f64> {
    let mut out = vec![0.0; x.dim()];
    drift_field_into(x.coords(), s, &mut out);
    out
}

/// Allocation-free core of [`drift_field`]; `x` is assumed on the simplex.
pub(crate) fn drift_field_into(x: &[f64], s: &FitnessVector, out: &mut [f64]) {
    let sigma = s.mean_fitness(x);
    let denom = 1.0 + sigma;
    for ((o, &xi), &si) in out.iter_mut().zip(x).zip(s.values()) {
        *o = xi * (si - sigma) / denom;
    }
}

/// Jacobian of `G_s` at the vertex `e_i`, `1 <= i <= S+1`, as a dense S×S
/// matrix in the free coordinates.
///
/// For `i <= S` the matrix has diagonal entries `(s^k − s^i)/(1+s^i)` for
/// `k ≠ i`, row `i` equal to `−s^k/(1+s^i)`, and zeros elsewhere; for
/// `i = S+1` it is `diag(s^1..s^S)`.
pub fn jacobian_at_vertex(s: &FitnessVector, vertex: usize) -> Result<Vec<Vec<f64>>> {
    let dim = s.dim();
    if vertex == 0 || vertex > dim + 1 {
        return Err(Error::InvalidModel(format!(
            "vertex index {vertex} out of range 1..={}",
            dim + 1
        )));
    }
    let mut jac = vec![vec![0.0; dim]; dim];
    if vertex == dim + 1 {
        for (k, row) in jac.iter_mut().enumerate() {
            row[k] = s.values()[k];
        }
        return Ok(jac);
    }
    let si = s.values()[vertex - 1];
    let denom = 1.0 + si;
    for k in 0..dim {
        if k == vertex - 1 {
            for (j, &sj) in s.values().iter().enumerate() {
                jac[k][j] = -sj / denom;
            }
        } else {
            jac[k][k] = (s.values()[k] - si) / denom;
        }
    }
    Ok(jac)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(v: &[f64]) -> FitnessVector {
        FitnessVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn simplex_clamps_roundoff_only() {
        let p = SimplexPoint::new(vec![-1e-13, 0.5]).unwrap();
        assert_eq!(p.coords()[0], 0.0);
        assert!(SimplexPoint::new(vec![-1e-9, 0.5]).is_err());
        assert!(SimplexPoint::new(vec![0.6, 0.6]).is_err());
        let q = SimplexPoint::new(vec![0.5, 0.5 + 5e-14]).unwrap();
        assert!(q.last() >= 0.0);
    }

    #[test]
    fn fitness_range_enforced() {
        assert!(FitnessVector::new(vec![-1.0]).is_err());
        assert!(FitnessVector::new(vec![-0.999, 5.0]).is_ok());
    }

    #[test]
    fn stationary_symmetric_two_state() {
        let p = stationary_distribution(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn stationary_two_state_closed_form() {
        // p_1 = q_2/(q_1+q_2), exactly
        let p = stationary_distribution(&[vec![-1.0, 1.0], vec![2.0, -2.0]]).unwrap();
        assert_eq!(p[0], 2.0 / 3.0);
        assert_eq!(p[1], 1.0 / 3.0);
    }

    #[test]
    fn stationary_three_state_residual_small() {
        let q = vec![
            vec![-3.0, 1.0, 2.0],
            vec![0.5, -0.9, 0.4],
            vec![1.25, 0.75, -2.0],
        ];
        let p = stationary_distribution(&q).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        for j in 0..3 {
            let res: f64 = (0..3).map(|i| p[i] * q[i][j]).sum();
            assert!(res.abs() < 1e-12, "residual {res} in column {j}");
        }
    }

    #[test]
    fn reducible_generator_rejected() {
        let q = vec![
            vec![-1.0, 1.0, 0.0],
            vec![1.0, -1.0, 0.0],
            vec![0.0, 0.0, 0.0],
        ];
        let err = stationary_distribution(&q).unwrap_err();
        assert!(err.to_string().contains("reducible"));
    }

    #[test]
    fn malformed_generator_names_offender() {
        let q = vec![vec![-1.0, 1.0], vec![-0.5, 0.5]];
        let err = stationary_distribution(&q).unwrap_err();
        assert!(err.to_string().contains("(1,0)"), "{err}");
    }

    #[test]
    fn drift_zero_at_vertices() {
        let s = fv(&[0.4, -0.1]);
        for i in 1..=3 {
            let v = SimplexPoint::vertex(2, i).unwrap();
            let g = drift_field(&v, &s);
            assert!(g.iter().all(|&gi| gi == 0.0), "vertex {i}: {g:?}");
        }
    }

    #[test]
    fn drift_one_dim_hand_value() {
        // S=1, s=0.4, x=0.5: 0.5 * (0.4 - 0.2) / 1.2 = 1/12
        let s = fv(&[0.4]);
        let x = SimplexPoint::new(vec![0.5]).unwrap();
        let g = drift_field(&x, &s);
        assert!((g[0] - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn drift_two_dim_hand_value() {
        // Independent rational evaluation of F:
        // sigma = 0.3*0.4 + 0.3*(-0.1) = 0.09
        // G1 = 0.3*(0.4-0.09)/1.09, G2 = 0.3*(-0.1-0.09)/1.09
        let s = fv(&[0.4, -0.1]);
        let x = SimplexPoint::new(vec![0.3, 0.3]).unwrap();
        let g = drift_field(&x, &s);
        assert!((g[0] - 0.3 * 0.31 / 1.09).abs() < 1e-15);
        assert!((g[1] + 0.3 * 0.19 / 1.09).abs() < 1e-15);
        assert!((g[0] - 0.085321).abs() < 1e-6);
        assert!((g[1] + 0.052294).abs() < 1e-6);
    }

    #[test]
    fn mass_conservation_extended() {
        // Σ over all S+1 species of x^i F^i = 0
        let s = fv(&[0.7, -0.4, 1.2]);
        let x = SimplexPoint::new(vec![0.2, 0.35, 0.15]).unwrap();
        let total: f64 = (1..=4)
            .map(|i| x.species(i) * s.per_capita_rate(x.coords(), i))
            .sum();
        assert!(total.abs() < 1e-12);
    }

    #[test]
    fn jacobian_last_vertex_is_diag() {
        let s = fv(&[0.4, -0.1]);
        let j = jacobian_at_vertex(&s, 3).unwrap();
        assert_eq!(j, vec![vec![0.4, 0.0], vec![0.0, -0.1]]);
    }

    #[test]
    fn jacobian_scalar_case() {
        // S=1, vertex 1, s=0.4: derivative of s x(1-x)/(1+s x) at x=1 is -s/(1+s)
        let s = fv(&[0.4]);
        let j = jacobian_at_vertex(&s, 1).unwrap();
        assert!((j[0][0] + 0.4 / 1.4).abs() < 1e-15);
        assert!((j[0][0] + 2.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        // central differences of drift_field, step 1e-5, tolerance 1e-6
        let s = fv(&[0.4, -0.1, 0.9]);
        let h = 1e-5;
        for vertex in 1..=4 {
            let jac = jacobian_at_vertex(&s, vertex).unwrap();
            let v = SimplexPoint::vertex(3, vertex).unwrap();
            for col in 0..3 {
                let mut plus = v.coords().to_vec();
                let mut minus = plus.clone();
                plus[col] += h;
                minus[col] -= h;
                let mut gp = vec![0.0; 3];
                let mut gm = vec![0.0; 3];
                drift_field_into(&plus, &s, &mut gp);
                drift_field_into(&minus, &s, &mut gm);
                for row in 0..3 {
                    let fd = (gp[row] - gm[row]) / (2.0 * h);
                    assert!(
                        (fd - jac[row][col]).abs() < 1e-6,
                        "vertex {vertex} entry ({row},{col}): fd={fd}, jac={}",
                        jac[row][col]
                    );
                }
            }
        }
    }

    #[test]
    fn vertex_index_out_of_range() {
        let s = fv(&[0.4]);
        assert!(jacobian_at_vertex(&s, 0).is_err());
        assert!(jacobian_at_vertex(&s, 3).is_err());
    }

    #[test]
    fn spec_roundtrip() {
        let spec = EnvironmentModelSpec {
            fitness: vec![vec![1.0], vec![-0.4]],
            q: vec![vec![-0.5, 0.5], vec![0.5, -0.5]],
        };
        let model = EnvironmentModel::from_spec(&spec).unwrap();
        assert_eq!(model.num_envs(), 2);
        assert_eq!(model.stationary(), &[0.5, 0.5]);
        let back = model.to_spec();
        assert_eq!(back.fitness, spec.fitness);
        assert_eq!(back.q, spec.q);
    }
}
