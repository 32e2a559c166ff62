//! The reproduction bundle: run every worked example and acceptance check,
//! write `report.json`, per-path CSVs and SVG plots under an output
//! directory, and report overall success.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{persistence_verdict, VerdictOptions};
use crate::env::SimplexPoint;
use crate::experiments::criteria::{all_criteria, CriterionOutcome};
use crate::experiments::svg::{line_plot, Series};
use crate::experiments::{
    convergence_experiment, density_comparison, ensemble_mean_path, presets, ConvergenceConfig,
    EnsembleEngine, Observable,
};
use crate::pdmp::{simulate_pdmp, PdmpOptions};
use crate::rng::derive_seed;
use crate::Result;

/// Everything the harness produced, echoed into `report.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportBundle {
    pub seed: u64,
    pub scale: f64,
    pub criteria: Vec<CriterionOutcome>,
    pub passed: bool,
}

impl ReportBundle {
    pub fn lines(&self) -> String {
        let mut out = String::new();
        for c in &self.criteria {
            out.push_str(&c.line());
            out.push('\n');
        }
        out.push_str(&format!(
            "overall: {}\n",
            if self.passed { "PASS" } else { "FAIL" }
        ));
        out
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

/// Run every acceptance check plus the showcase artifacts. Deterministic in
/// `(seed, scale)`; returns the bundle after writing `report.json`,
/// `paths/*.csv` and `plots/*.svg` under `out_dir`.
pub fn reproduce_paper_examples(seed: u64, out_dir: &Path, scale: f64) -> Result<ReportBundle> {
    let criteria = all_criteria(seed, scale)?;
    let passed = criteria.iter().all(|c| c.pass);

    write_showcase_artifacts(seed, out_dir, scale)?;

    let bundle = ReportBundle {
        seed,
        scale,
        criteria,
        passed,
    };
    write(
        &out_dir.join("report.json"),
        &serde_json::to_string_pretty(&bundle)?,
    )?;
    write(&out_dir.join("summary.txt"), &bundle.lines())?;
    Ok(bundle)
}

fn write_showcase_artifacts(seed: u64, out_dir: &Path, scale: f64) -> Result<()> {
    let paths_dir = out_dir.join("paths");
    let plots_dir = out_dir.join("plots");

    // sample trajectories and ensemble means of the two-species regimes
    let n_traj = ((500.0 * scale).round() as usize).max(8);
    for (name, env) in [
        ("two_species_persistent", presets::persistent_two_species()),
        ("two_species_extinct", presets::extinct_two_species()),
        ("two_species_balanced", presets::balanced_two_species()),
    ] {
        let x0 = SimplexPoint::new(vec![0.5])?;
        let opts = PdmpOptions {
            dt_sample: 0.05,
            h_max: 1e-2,
        };
        let path = simulate_pdmp(&x0, 0, &env, 100.0, &opts, derive_seed(seed, &[90]))?;
        write(&paths_dir.join(format!("{name}_sample.csv")), &path.to_csv())?;

        let mp = ensemble_mean_path(
            &env,
            &x0,
            0,
            100.0,
            200,
            n_traj,
            derive_seed(seed, &[91]),
            EnsembleEngine::Pdmp { h_max: 1e-2 },
        )?;
        write(&paths_dir.join(format!("{name}_mean.csv")), &mp.to_csv())?;

        let sample_pts: Vec<(f64, f64)> = (0..path.len())
            .map(|i| (path.time(i), path.state(i)[0]))
            .collect();
        let mean_pts: Vec<(f64, f64)> = mp
            .times
            .iter()
            .zip(&mp.mean)
            .map(|(&t, m)| (t, m[0]))
            .collect();
        let svg = line_plot(
            &format!("{name}: sample path and ensemble mean"),
            "t",
            "x1",
            &[
                Series {
                    name: "sample",
                    points: &sample_pts,
                },
                Series {
                    name: &format!("mean of {n_traj}"),
                    points: &mean_pts,
                },
            ],
        );
        write(&plots_dir.join(format!("{name}.svg")), &svg)?;
    }

    // occupation vs analytic density for the persistent model
    let cmp = density_comparison(
        &presets::persistent_two_species(),
        1e4,
        100,
        derive_seed(seed, &[3]),
    )?;
    write(&paths_dir.join("density_comparison.csv"), &cmp.to_csv())?;
    let emp_pts: Vec<(f64, f64)> = cmp
        .histogram
        .masses
        .iter()
        .enumerate()
        .map(|(k, &m)| (cmp.histogram.edges[k], m * 100.0))
        .collect();
    let ana_pts: Vec<(f64, f64)> = cmp
        .analytic_masses
        .iter()
        .enumerate()
        .map(|(k, &m)| (cmp.histogram.edges[k], m * 100.0))
        .collect();
    write(
        &plots_dir.join("density_comparison.svg"),
        &line_plot(
            "occupation vs invariant density (piecewise bin densities)",
            "x",
            "density",
            &[
                Series {
                    name: "empirical",
                    points: &emp_pts,
                },
                Series {
                    name: "analytic",
                    points: &ana_pts,
                },
            ],
        ),
    )?;

    // a persistent three-environment trajectory on the simplex
    let env3 = presets::cyclic_three_env(1.0);
    let x0 = SimplexPoint::new(vec![0.4, 0.3])?;
    let opts = PdmpOptions {
        dt_sample: 0.05,
        h_max: 1e-2,
    };
    let path = simulate_pdmp(&x0, 0, &env3, 200.0, &opts, derive_seed(seed, &[92]))?;
    write(&paths_dir.join("three_species_persistent.csv"), &path.to_csv())?;
    let x_pts: Vec<(f64, f64)> = (0..path.len())
        .map(|i| (path.time(i), path.state(i)[0]))
        .collect();
    let y_pts: Vec<(f64, f64)> = (0..path.len())
        .map(|i| (path.time(i), path.state(i)[1]))
        .collect();
    write(
        &plots_dir.join("three_species_persistent.svg"),
        &line_plot(
            "three-environment persistent trajectory",
            "t",
            "abundance",
            &[
                Series {
                    name: "x1",
                    points: &x_pts,
                },
                Series {
                    name: "x2",
                    points: &y_pts,
                },
            ],
        ),
    )?;

    // convergence ladder at reduced size for the plot
    let conv = convergence_experiment(
        &presets::persistent_two_species(),
        &SimplexPoint::new(vec![0.5])?,
        0,
        &Observable::cube(0),
        &ConvergenceConfig {
            t: 3.0,
            j_values: vec![100, 200, 400, 800, 1600],
            n_traj: ((2_000.0 * scale).round() as usize).max(100),
            seed: derive_seed(seed, &[93]),
            h_max: 1e-3,
        },
    )?;
    let mut csv = String::from("J,error,std_error\n");
    for (ji, &j) in conv.j_values.iter().enumerate() {
        csv.push_str(&format!("{j},{},{}\n", conv.errors[ji], conv.std_errors[ji]));
    }
    write(&paths_dir.join("convergence_ladder.csv"), &csv)?;
    let log_pts: Vec<(f64, f64)> = conv
        .j_values
        .iter()
        .zip(&conv.errors)
        .map(|(&j, &e)| ((j as f64).ln(), e.max(1e-300).ln()))
        .collect();
    write(
        &plots_dir.join("convergence_ladder.svg"),
        &line_plot(
            &format!("ensemble-mean error vs J (slope {:.2})", conv.slope),
            "ln J",
            "ln error",
            &[Series {
                name: "error",
                points: &log_pts,
            }],
        ),
    )?;

    // verdict reports for the showcase models
    for (name, env) in [
        ("neutral_invader", presets::neutral_invader_three_species()),
        ("cyclic_three_env", presets::cyclic_three_env(1.0)),
        ("never_best_three_env", presets::never_best_three_env(1.0)),
    ] {
        let vopts = VerdictOptions {
            mc_n_traj: ((1000.0 * scale).round() as usize).max(16),
            seed: derive_seed(seed, &[94]),
            ..VerdictOptions::default()
        };
        let verdict = persistence_verdict(&env, &vopts)?;
        write(
            &out_dir.join(format!("verdict_{name}.json")),
            &serde_json::to_string_pretty(&verdict.to_report_json())?,
        )?;
    }
    Ok(())
}
