//! Tiny linear feasibility solver for the persistence certificate.
//!
//! We need weights `c ≥ 1` (componentwise) with `Σ_i c_i λ_i(μ) ≥ ε_μ` for
//! every enumerated ergodic boundary measure. With at most three unknowns
//! and a handful of constraints, exhaustive vertex enumeration of the
//! constraint polyhedron is simpler and more transparent than an external
//! solver: the region is pointed (it sits inside `c ≥ 1`), so if it is
//! nonempty at least one basic feasible point exists.

use serde::{Deserialize, Serialize};

use crate::linalg::solve_dense;

/// One linear constraint `coeffs · c ≥ bound`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub bound: f64,
    pub label: String,
    /// Measure constraints feed the reported margin; the `c ≥ 1` box
    /// constraints do not.
    pub is_measure: bool,
}

/// A feasible certificate: weights and the worst measure margin
/// `min_μ Σ_i c_i λ_i(μ)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightCertificate {
    pub weights: Vec<f64>,
    pub margin: f64,
    /// Label of the measure achieving the margin.
    pub binding: String,
}

fn measure_margin(c: &[f64], constraints: &[Constraint]) -> Option<(f64, String)> {
    constraints
        .iter()
        .filter(|con| con.is_measure)
        .map(|con| {
            let v: f64 = con.coeffs.iter().zip(c).map(|(a, b)| a * b).sum();
            (v, con.label.clone())
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
}

fn feasible(c: &[f64], constraints: &[Constraint], slack: f64) -> bool {
    constraints.iter().all(|con| {
        let v: f64 = con.coeffs.iter().zip(c).map(|(a, b)| a * b).sum();
        v >= con.bound - slack
    })
}

/// Search for weights `c ≥ 1` meeting every constraint. Tries the
/// all-ones point first (the certificate most examples admit), then the
/// vertices of the constraint polyhedron.
pub fn find_positive_weights(
    n: usize,
    measure_constraints: &[(Vec<f64>, f64, String)],
) -> Option<WeightCertificate> {
    let mut constraints: Vec<Constraint> = Vec::new();
    for i in 0..n {
        let mut coeffs = vec![0.0; n];
        coeffs[i] = 1.0;
        constraints.push(Constraint {
            coeffs,
            bound: 1.0,
            label: format!("c_{} >= 1", i + 1),
            is_measure: false,
        });
    }
    for (coeffs, bound, label) in measure_constraints {
        assert_eq!(coeffs.len(), n);
        constraints.push(Constraint {
            coeffs: coeffs.clone(),
            bound: *bound,
            label: label.clone(),
            is_measure: true,
        });
    }

    let slack = 1e-9;
    let ones = vec![1.0; n];
    if feasible(&ones, &constraints, 0.0) {
        let (margin, binding) = measure_margin(&ones, &constraints)?;
        return Some(WeightCertificate {
            weights: ones,
            margin,
            binding,
        });
    }

    // vertex enumeration: every n-subset of active constraints
    let m = constraints.len();
    let mut best: Option<WeightCertificate> = None;
    let mut subset = vec![0usize; n];
    enumerate_subsets(m, n, &mut subset, 0, 0, &mut |chosen| {
        let mut a: Vec<Vec<f64>> = chosen
            .iter()
            .map(|&k| constraints[k].coeffs.clone())
            .collect();
        let mut b: Vec<f64> = chosen.iter().map(|&k| constraints[k].bound).collect();
        if let Some(c) = solve_dense(&mut a, &mut b) {
            if c.iter().all(|v| v.is_finite()) && feasible(&c, &constraints, slack) {
                if let Some((margin, binding)) = measure_margin(&c, &constraints) {
                    let better = best
                        .as_ref()
                        .map(|cur| margin > cur.margin)
                        .unwrap_or(true);
                    if better {
                        best = Some(WeightCertificate {
                            weights: c,
                            margin,
                            binding,
                        });
                    }
                }
            }
        }
    });
    best
}

fn enumerate_subsets(
    m: usize,
    n: usize,
    subset: &mut Vec<usize>,
    depth: usize,
    start: usize,
    visit: &mut impl FnMut(&[usize]),
) {
    if depth == n {
        visit(subset);
        return;
    }
    for k in start..m {
        subset[depth] = k;
        enumerate_subsets(m, n, subset, depth + 1, k + 1, visit);
    }
}
