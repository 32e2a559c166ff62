//! Reproduction harness: ensemble runs, the finite-population
//! convergence-rate experiment, density comparisons and the report bundle
//! with one pass/fail line per acceptance criterion.

pub mod convergence;
pub mod criteria;
pub mod ensemble;
pub mod presets;
pub mod report;
pub mod svg;

pub use convergence::{convergence_experiment, ConvergenceConfig, ConvergenceResult};
pub use criteria::{all_criteria, CriterionOutcome};
pub use ensemble::{
    density_comparison, ensemble_mean_path, DensityComparison, EnsembleEngine, MeanPath,
};
pub use report::{reproduce_paper_examples, ReportBundle};

use crate::{Error, Result};

/// A smooth observable on the simplex: a monomial of degree one to three in
/// the free coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observable {
    factors: Vec<usize>,
}

impl Observable {
    pub fn coordinate(i: usize) -> Self {
        Self { factors: vec![i] }
    }

    /// Product of up to three coordinates (repetition allowed).
    pub fn product(factors: &[usize]) -> Result<Self> {
        if factors.is_empty() || factors.len() > 3 {
            return Err(Error::InvalidConfig(format!(
                "observable degree {} not in 1..=3",
                factors.len()
            )));
        }
        Ok(Self {
            factors: factors.to_vec(),
        })
    }

    pub fn cube(i: usize) -> Self {
        Self {
            factors: vec![i, i, i],
        }
    }

    pub fn degree(&self) -> usize {
        self.factors.len()
    }

    pub fn max_index(&self) -> usize {
        self.factors.iter().copied().max().unwrap_or(0)
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.factors.iter().map(|&i| x[i]).product()
    }

    pub fn describe(&self) -> String {
        let parts: Vec<String> = self.factors.iter().map(|i| format!("x{}", i + 1)).collect();
        parts.join("*")
    }
}
