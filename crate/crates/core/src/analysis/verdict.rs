//! The persistence verdict: a decision cascade that combines the pairwise
//! domination rule, vertex exponents, edge ergodic measures (with analytic
//! signs for two environments and Monte-Carlo rates otherwise) and a linear
//! feasibility certificate.

use serde::{Deserialize, Serialize};

use crate::analysis::canonical::{edge_invasion_signs_two_env, Relabeling};
use crate::analysis::lp::{find_positive_weights, WeightCertificate};
use crate::analysis::mc::{edge_invasion_rate_mc, EdgeMcOptions, InvasionRateEstimate};
use crate::analysis::rates::{
    classify_two_species, edge_measure_presence, growth_rate_report, three_species_edge_rates,
    two_species_growth_rates, vertex_invasion_exponents, vertex_invasion_table, EdgePresence,
    GrowthRateReport, TwoSpeciesRegime, ZERO_TOL,
};
use crate::env::EnvironmentModel;
use crate::{Error, Result};

/// Classification outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum VerdictKind {
    /// All species coexist: a weight certificate exists.
    Persistent,
    /// The named species dies out (almost surely, or with the stated
    /// certificate's force).
    ExtinctionOf(usize),
    /// The named species can take over the community (positive probability;
    /// `sure` in the certificate when it is almost sure).
    InvasionPossibleBy(usize),
    /// Some decisive quantity sits on a boundary within tolerance.
    Degenerate,
    /// The sufficient criterion failed without an extinction witness; no
    /// call can honestly be made.
    Inconclusive,
}

impl std::fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VerdictKind::Persistent => write!(f, "Persistent"),
            VerdictKind::ExtinctionOf(i) => write!(f, "ExtinctionOf({i})"),
            VerdictKind::InvasionPossibleBy(i) => write!(f, "InvasionPossibleBy({i})"),
            VerdictKind::Degenerate => write!(f, "Degenerate"),
            VerdictKind::Inconclusive => write!(f, "Inconclusive"),
        }
    }
}

/// Numeric evidence attached to a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Certificate {
    /// Positive weights with the worst measure margin (persistence).
    Weights {
        c: Vec<f64>,
        margin: f64,
        binding: String,
    },
    /// A boundary ergodic measure assigning the species a negative rate.
    ViolatingMeasure { measure: String, rate: f64 },
    /// Strict pairwise domination in every environment.
    Domination { doomed: usize, dominated_by: usize },
    /// An attracting vertex: every absent species decays there.
    AttractingVertex {
        species: usize,
        exponent: f64,
        /// True when the species is strictly best in every environment, in
        /// which case invasion is almost sure.
        sure: bool,
    },
    /// The quantity that sat on a decision boundary.
    Boundary { quantity: String, value: f64 },
    None,
}

/// How an edge rate was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EdgeRateEvidence {
    /// Closed-form sign (two environments); `value` carries the sign only.
    AnalyticSign { sign: i8, value: f64 },
    /// Monte-Carlo estimate.
    Mc { mean: f64, std_error: f64 },
}

/// Per-edge summary used by the verdict.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeSummary {
    pub edge: usize,
    pub presence: EdgePresence,
    pub lambda0: f64,
    pub lambda1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<EdgeRateEvidence>,
}

/// The complete verdict report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PersistenceVerdict {
    pub kind: VerdictKind,
    pub certificate: Certificate,
    pub lambdas: GrowthRateReport,
    pub edges: Vec<EdgeSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permutation: Option<Relabeling>,
    pub detail: String,
}

impl PersistenceVerdict {
    /// The report layout consumed by the command-line tool.
    pub fn to_report_json(&self) -> serde_json::Value {
        serde_json::json!({
            "lambdas": self.lambdas,
            "edges": self.edges,
            "verdict": self.kind.to_string(),
            "certificate": self.certificate,
            "permutation": self.permutation,
            "detail": self.detail,
        })
    }

    pub fn one_line(&self) -> String {
        match (&self.kind, &self.certificate) {
            (VerdictKind::Persistent, Certificate::Weights { c, margin, .. }) => {
                let ws: Vec<String> = c.iter().map(|w| format!("{w:.6}")).collect();
                format!("Persistent (c = [{}], margin {margin:.6})", ws.join(", "))
            }
            (kind, _) => format!("{kind} ({})", self.detail),
        }
    }
}

/// Options for the Monte-Carlo leg of the verdict.
#[derive(Debug, Clone)]
pub struct VerdictOptions {
    pub mc_horizon: f64,
    pub mc_n_traj: usize,
    pub seed: u64,
    /// Margin ε demanded of analytic rates in the feasibility problem.
    pub analytic_margin: f64,
    pub edge_mc: EdgeMcOptions,
}

impl Default for VerdictOptions {
    fn default() -> Self {
        Self {
            mc_horizon: 80.0,
            mc_n_traj: 1000,
            seed: 0,
            analytic_margin: 1e-6,
            edge_mc: EdgeMcOptions::default(),
        }
    }
}

/// Classify a model with one or two free species.
pub fn persistence_verdict(
    env: &EnvironmentModel,
    opts: &VerdictOptions,
) -> Result<PersistenceVerdict> {
    match env.num_species_free() {
        1 => verdict_two_species(env, opts),
        2 => verdict_three_species(env, opts),
        s => Err(Error::InvalidModel(format!(
            "verdict supports S in {{1,2}}, got S = {s}"
        ))),
    }
}

fn verdict_two_species(env: &EnvironmentModel, opts: &VerdictOptions) -> Result<PersistenceVerdict> {
    let rates = two_species_growth_rates(env)?;
    let lambdas = growth_rate_report(env)?;
    let edges = vec![EdgeSummary {
        edge: 1,
        presence: edge_measure_presence(&rates),
        lambda0: rates.at_zero,
        lambda1: rates.at_one,
        rate: None,
    }];
    let base = |kind, certificate, detail: String| PersistenceVerdict {
        kind,
        certificate,
        lambdas: lambdas.clone(),
        edges: edges.clone(),
        permutation: None,
        detail,
    };

    Ok(match classify_two_species(&rates) {
        TwoSpeciesRegime::DegenerateBoundary => {
            let (quantity, value) = if rates.at_zero.abs() <= ZERO_TOL {
                ("lambda0".to_string(), rates.at_zero)
            } else {
                ("lambda1".to_string(), rates.at_one)
            };
            base(
                VerdictKind::Degenerate,
                Certificate::Boundary {
                    quantity: quantity.clone(),
                    value,
                },
                format!("{quantity} = {value:e} sits on the boundary; only the monomorphic measures are invariant"),
            )
        }
        TwoSpeciesRegime::Extinction1 => base(
            VerdictKind::ExtinctionOf(1),
            Certificate::ViolatingMeasure {
                measure: "vertex_2".into(),
                rate: rates.at_zero,
            },
            format!("lambda0 = {} < 0: species 1 decays near 0", rates.at_zero),
        ),
        TwoSpeciesRegime::Extinction2 => base(
            VerdictKind::ExtinctionOf(2),
            Certificate::ViolatingMeasure {
                measure: "vertex_1".into(),
                rate: rates.at_one,
            },
            format!("lambda1 = {} < 0: species 2 decays near 1", rates.at_one),
        ),
        TwoSpeciesRegime::Persistent => {
            // vertex measures: rate vectors (Λ0, 0) at x=0 and (0, Λ1) at x=1
            let constraints = vec![
                (
                    vec![rates.at_zero, 0.0],
                    opts.analytic_margin,
                    "vertex_2".to_string(),
                ),
                (
                    vec![0.0, rates.at_one],
                    opts.analytic_margin,
                    "vertex_1".to_string(),
                ),
            ];
            match find_positive_weights(2, &constraints) {
                Some(WeightCertificate {
                    weights,
                    margin,
                    binding,
                }) => base(
                    VerdictKind::Persistent,
                    Certificate::Weights {
                        c: weights,
                        margin,
                        binding,
                    },
                    "both endpoint growth rates positive".into(),
                ),
                None => base(
                    VerdictKind::Inconclusive,
                    Certificate::None,
                    "no weight certificate despite positive rates".into(),
                ),
            }
        }
    })
}

fn verdict_three_species(
    env: &EnvironmentModel,
    opts: &VerdictOptions,
) -> Result<PersistenceVerdict> {
    let lambdas = growth_rate_report(env)?;
    let edge_rates = three_species_edge_rates(env)?;
    let mut edges: Vec<EdgeSummary> = (1..=3)
        .map(|i| EdgeSummary {
            edge: i,
            presence: edge_measure_presence(edge_rates.edge(i)),
            lambda0: edge_rates.edge(i).at_zero,
            lambda1: edge_rates.edge(i).at_one,
            rate: None,
        })
        .collect();
    let mut permutation: Option<Relabeling> = None;

    // A species strictly best in every environment takes over almost
    // surely; report the invasion rather than one of the implied
    // extinctions.
    let strictly_best = (1..=3usize).find(|&species| {
        (0..env.num_envs()).all(|k| {
            let f = env.state(k);
            (1..=3).all(|other| other == species || f.species(species) - f.species(other) > ZERO_TOL)
        })
    });
    if let Some(species) = strictly_best {
        let exponent = vertex_invasion_exponents(env)?[species - 1];
        return Ok(PersistenceVerdict {
            kind: VerdictKind::InvasionPossibleBy(species),
            certificate: Certificate::AttractingVertex {
                species,
                exponent,
                sure: true,
            },
            lambdas,
            edges,
            permutation,
            detail: format!("species {species} has the strictly best fitness in every environment"),
        });
    }

    // (a) strict pairwise domination dooms the dominated species.
    for doomed in 1..=3usize {
        for dominator in 1..=3usize {
            if doomed == dominator {
                continue;
            }
            let dominated = (0..env.num_envs()).all(|k| {
                let f = env.state(k);
                f.species(dominator) - f.species(doomed) > ZERO_TOL
            });
            if dominated {
                return Ok(PersistenceVerdict {
                    kind: VerdictKind::ExtinctionOf(doomed),
                    certificate: Certificate::Domination {
                        doomed,
                        dominated_by: dominator,
                    },
                    lambdas,
                    edges,
                    permutation,
                    detail: format!(
                        "species {doomed} is strictly below species {dominator} in every environment"
                    ),
                });
            }
        }
    }

    // (b) an attracting vertex lets its species take over.
    let vertex_exponents = vertex_invasion_exponents(env)?;
    for (idx, &exponent) in vertex_exponents.iter().enumerate() {
        if exponent.abs() <= ZERO_TOL {
            return Ok(PersistenceVerdict {
                kind: VerdictKind::Degenerate,
                certificate: Certificate::Boundary {
                    quantity: format!("lambda_vertex_{}", idx + 1),
                    value: exponent,
                },
                lambdas,
                edges,
                permutation,
                detail: format!("vertex exponent of species {} sits on the boundary", idx + 1),
            });
        }
    }
    if let Some((idx, &exponent)) = vertex_exponents
        .iter()
        .enumerate()
        .find(|(_, &v)| v < 0.0)
    {
        let species = idx + 1;
        let sure = (0..env.num_envs()).all(|k| {
            let f = env.state(k);
            (1..=3).all(|other| other == species || f.species(species) - f.species(other) > ZERO_TOL)
        });
        return Ok(PersistenceVerdict {
            kind: VerdictKind::InvasionPossibleBy(species),
            certificate: Certificate::AttractingVertex {
                species,
                exponent,
                sure,
            },
            lambdas,
            edges,
            permutation,
            detail: format!(
                "all species absent at vertex {species} decay there (exponent {exponent:.6})"
            ),
        });
    }

    // (c) rates with respect to the existing edge measures.
    for i in 1..=3usize {
        match edges[i - 1].presence {
            EdgePresence::Boundary => {
                return Ok(PersistenceVerdict {
                    kind: VerdictKind::Degenerate,
                    certificate: Certificate::Boundary {
                        quantity: format!("edge_{i}_rates"),
                        value: edge_rates.edge(i).at_zero.min(edge_rates.edge(i).at_one),
                    },
                    lambdas,
                    edges,
                    permutation,
                    detail: format!("edge {i} endpoint rate within tolerance of zero"),
                });
            }
            EdgePresence::Absent | EdgePresence::Exists => {}
        }
    }

    let existing: Vec<usize> = (1..=3)
        .filter(|&i| edges[i - 1].presence == EdgePresence::Exists)
        .collect();

    if !existing.is_empty() {
        if env.num_envs() == 2 {
            let signs = edge_invasion_signs_two_env(env)?;
            permutation = Some(signs.relabeling.clone());
            for &i in &existing {
                edges[i - 1].rate = Some(EdgeRateEvidence::AnalyticSign {
                    sign: signs.signs[i - 1],
                    value: signs.brackets[i - 1],
                });
                if signs.signs[i - 1] == 0 {
                    return Ok(PersistenceVerdict {
                        kind: VerdictKind::Degenerate,
                        certificate: Certificate::Boundary {
                            quantity: format!("edge_{i}_invasion_sign"),
                            value: signs.discriminant,
                        },
                        lambdas,
                        edges,
                        permutation,
                        detail: "edge invasion discriminant vanishes".into(),
                    });
                }
            }
            if let Some(&i) = existing.iter().find(|&&i| signs.signs[i - 1] < 0) {
                return Ok(PersistenceVerdict {
                    kind: VerdictKind::ExtinctionOf(i),
                    certificate: Certificate::ViolatingMeasure {
                        measure: format!("edge_{i}"),
                        rate: signs.brackets[i - 1],
                    },
                    lambdas,
                    edges,
                    permutation,
                    detail: format!(
                        "species {i} has a negative invasion rate with respect to its edge measure"
                    ),
                });
            }
        } else {
            for &i in &existing {
                let est: InvasionRateEstimate = edge_invasion_rate_mc(
                    env,
                    i,
                    opts.mc_horizon,
                    opts.mc_n_traj,
                    opts.seed,
                    &opts.edge_mc,
                )?;
                edges[i - 1].rate = Some(EdgeRateEvidence::Mc {
                    mean: est.mean,
                    std_error: est.std_error,
                });
                if est.is_undetermined() {
                    return Ok(PersistenceVerdict {
                        kind: VerdictKind::Degenerate,
                        certificate: Certificate::Boundary {
                            quantity: format!("edge_{i}_invasion_rate_mc"),
                            value: est.mean,
                        },
                        lambdas,
                        edges,
                        permutation,
                        detail: format!(
                            "edge {i} Monte-Carlo rate {:.4} within 2 SE ({:.4}) of zero",
                            est.mean, est.std_error
                        ),
                    });
                }
                if est.mean < 0.0 {
                    return Ok(PersistenceVerdict {
                        kind: VerdictKind::ExtinctionOf(i),
                        certificate: Certificate::ViolatingMeasure {
                            measure: format!("edge_{i}"),
                            rate: est.mean,
                        },
                        lambdas,
                        edges,
                        permutation,
                        detail: format!(
                            "species {i} has a negative Monte-Carlo invasion rate {:.4} +/- {:.4}",
                            est.mean, est.std_error
                        ),
                    });
                }
            }
        }
    }

    // (d) linear feasibility over all enumerated measures.
    let table = vertex_invasion_table(&edge_rates);
    let mut constraints: Vec<(Vec<f64>, f64, String)> = Vec::new();
    for j in 1..=3usize {
        let coeffs: Vec<f64> = (1..=3).map(|i| table[i - 1][j - 1]).collect();
        constraints.push((coeffs, opts.analytic_margin, format!("vertex_{j}")));
    }
    for &i in &existing {
        let mut coeffs = vec![0.0; 3];
        let (value, eps) = match &edges[i - 1].rate {
            Some(EdgeRateEvidence::Mc { mean, std_error }) => (*mean, 2.0 * std_error),
            Some(EdgeRateEvidence::AnalyticSign { value, .. }) => (*value, opts.analytic_margin),
            None => unreachable!("existing edges carry a rate by now"),
        };
        coeffs[i - 1] = value;
        constraints.push((coeffs, eps, format!("edge_{i}")));
    }

    Ok(match find_positive_weights(3, &constraints) {
        Some(WeightCertificate {
            weights,
            margin,
            binding,
        }) => PersistenceVerdict {
            kind: VerdictKind::Persistent,
            certificate: Certificate::Weights {
                c: weights,
                margin,
                binding,
            },
            lambdas,
            edges,
            permutation,
            detail: "weight certificate found over all boundary ergodic measures".into(),
        },
        None => PersistenceVerdict {
            kind: VerdictKind::Inconclusive,
            certificate: Certificate::None,
            lambdas,
            edges,
            permutation,
            detail: "no positive-weight combination dominates every boundary measure".into(),
        },
    })
}
