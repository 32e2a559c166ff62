//! Closed-form quantities and classification logic: growth rates, regimes,
//! invariant densities, invasion rates and the persistence verdict.

pub mod canonical;
pub mod density;
pub mod lp;
pub mod mc;
pub mod rates;
pub mod verdict;

pub use canonical::{alternating_form, edge_invasion_signs_two_env, EdgeInvasionSigns, Relabeling};
pub use density::{fokker_planck_residual, invariant_density, DensityModel};
pub use lp::{find_positive_weights, WeightCertificate};
pub use mc::{
    edge_invasion_rate_mc, edge_invasion_rate_quadrature, EdgeMcOptions, EdgeReducedModel,
    InvasionRateEstimate,
};
pub use rates::{
    classify_two_species, edge_measure_presence, full_support_determinant, growth_rate_report,
    three_species_edge_rates, two_species_growth_rates, vertex_invasion_exponent,
    vertex_invasion_exponents, vertex_invasion_table, EdgePresence, EdgeRates, GrowthRateReport,
    ThreeSpeciesEdgeRates, TwoSpeciesRegime, ZERO_TOL,
};
pub use verdict::{
    persistence_verdict, Certificate, EdgeRateEvidence, EdgeSummary, PersistenceVerdict,
    VerdictKind, VerdictOptions,
};
