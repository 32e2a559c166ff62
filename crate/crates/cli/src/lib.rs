//! Command-line front end: stable JSON model format in, CSV/JSON/SVG out.
//!
//! Exit status: 0 on success, 2 on configuration/validation errors, 1 on
//! runtime failures. Simulation subcommands require an explicit seed so
//! every published number stays reproducible; `MORAN_PDMP_OUT` overrides
//! `--out`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use moran_pdmp_core::analysis::{
    classify_two_species, edge_invasion_rate_mc, edge_invasion_signs_two_env,
    edge_measure_presence, growth_rate_report, invariant_density, fokker_planck_residual,
    persistence_verdict, three_species_edge_rates, two_species_growth_rates,
    vertex_invasion_table, EdgeMcOptions, EdgePresence, VerdictOptions,
};
use moran_pdmp_core::env::{EnvironmentModel, EnvironmentModelSpec, SimplexPoint};
use moran_pdmp_core::experiments::{
    convergence_experiment, reproduce_paper_examples, ConvergenceConfig, Observable,
};
use moran_pdmp_core::moran::{simulate_moran, MoranConfig};
use moran_pdmp_core::pdmp::{simulate_pdmp, PdmpOptions};
use moran_pdmp_core::Error as CoreError;

const EXIT_OK: i32 = 0;
const EXIT_RUNTIME: i32 = 1;
const EXIT_VALIDATION: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "moran-pdmp",
    about = "Finite-population Moran simulation under switching selection, its deterministic-flow limit, and persistence analytics",
    version
)]
struct Cli {
    /// Cap the number of worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory (overridden by MORAN_PDMP_OUT).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ModelArg {
    /// Path to the model JSON: { "fitness": [[..],[..]], "Q": [[..]] }.
    #[arg(long)]
    model: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the discrete finite-population process.
    SimulateMoran {
        #[command(flatten)]
        model: ModelArg,
        /// Population size.
        #[arg(long, short = 'j')]
        j: u64,
        /// Horizon in rescaled time units (events = round(T * J)).
        #[arg(long, short = 't')]
        t: f64,
        #[arg(long)]
        seed: u64,
        /// Initial counts per species (S+1 integers, comma separated);
        /// defaults to an equal split.
        #[arg(long)]
        init_counts: Option<String>,
        #[arg(long, default_value_t = 0)]
        env0: usize,
        /// Record every k-th event (default: ceil(J/100)).
        #[arg(long)]
        record_every: Option<u64>,
        /// Stop once the population is monomorphic.
        #[arg(long, default_value_t = false)]
        stop_at_absorption: bool,
    },
    /// Simulate the limiting switching-flow process.
    SimulatePdmp {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, short = 't')]
        t: f64,
        #[arg(long)]
        seed: u64,
        /// Initial free coordinates, comma separated; defaults to the
        /// barycentre.
        #[arg(long)]
        x0: Option<String>,
        #[arg(long, default_value_t = 0)]
        env0: usize,
        #[arg(long, default_value_t = 0.01)]
        dt_sample: f64,
        #[arg(long, default_value_t = 1e-3)]
        h_max: f64,
    },
    /// Closed-form growth rates and regime classification.
    Analyze {
        #[command(flatten)]
        model: ModelArg,
    },
    /// Invariant density of a persistent two-species model.
    Density {
        #[command(flatten)]
        model: ModelArg,
        /// Interior evaluation grid size for the CSV table.
        #[arg(long, default_value_t = 512)]
        grid: usize,
    },
    /// Edge invasion rates: analytic signs (two environments) and
    /// Monte-Carlo estimates.
    InvasionRates {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, short = 't', default_value_t = 80.0)]
        t: f64,
        #[arg(long, default_value_t = 1000)]
        n_traj: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Full persistence verdict with certificate.
    Verdict {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        seed: u64,
        #[arg(long, short = 't', default_value_t = 80.0)]
        t: f64,
        #[arg(long, default_value_t = 1000)]
        n_traj: usize,
    },
    /// Finite-population convergence-rate ladder.
    Convergence {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, short = 't', default_value_t = 3.0)]
        t: f64,
        /// Comma-separated population sizes.
        #[arg(long, default_value = "100,200,400,800,1600")]
        j_list: String,
        #[arg(long, default_value_t = 10_000)]
        n_traj: usize,
        #[arg(long)]
        seed: u64,
        /// Observable degree in the first coordinate (1..=3).
        #[arg(long, default_value_t = 3)]
        degree: usize,
    },
    /// Run the full reproduction harness; exit 0 iff every check passes.
    Reproduce {
        #[arg(long)]
        seed: u64,
        /// Ensemble-size multiplier (1.0 = the stated sizes).
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
}

/// Entry point used by both the binary and the CLI tests.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // help/version are not errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_VALIDATION,
            };
            let _ = e.print();
            return code;
        }
    };

    if let Some(threads) = cli.threads {
        // ignore failure when a pool already exists (tests call run twice)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    let out_dir = std::env::var_os("MORAN_PDMP_OUT")
        .map(PathBuf::from)
        .unwrap_or(cli.out.clone());

    match dispatch(cli.command, &out_dir) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            classify_error(&e)
        }
    }
}

/// Validation failures exit 2, runtime failures 1.
fn classify_error(e: &anyhow::Error) -> i32 {
    if let Some(core) = e.downcast_ref::<CoreError>() {
        return match core {
            CoreError::InvalidModel(_) | CoreError::InvalidConfig(_) => EXIT_VALIDATION,
            _ => EXIT_RUNTIME,
        };
    }
    if e.downcast_ref::<serde_json::Error>().is_some() {
        return EXIT_VALIDATION;
    }
    for cause in e.chain() {
        let msg = cause.to_string();
        if msg.contains("invalid model") || msg.contains("invalid configuration") {
            return EXIT_VALIDATION;
        }
    }
    EXIT_RUNTIME
}

fn load_model(path: &Path) -> anyhow::Result<(EnvironmentModel, EnvironmentModelSpec)> {
    let raw = fs::read_to_string(path)
        .with_context(|| format!("cannot read model file {}", path.display()))?;
    let spec: EnvironmentModelSpec = serde_json::from_str(&raw).map_err(|e| {
        anyhow!(
            "invalid model JSON at {}:{}:{}: {e}",
            path.display(),
            e.line(),
            e.column()
        )
    })?;
    let model = EnvironmentModel::from_spec(&spec)
        .with_context(|| format!("invalid model in {}", path.display()))?;
    Ok((model, spec))
}

fn ensure_out(out_dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))
}

/// Persist the validated model next to the results so every run can be
/// reproduced from its own output directory.
fn echo_model(out_dir: &Path, spec: &EnvironmentModelSpec) -> anyhow::Result<()> {
    fs::write(
        out_dir.join("model.json"),
        serde_json::to_string_pretty(spec)?,
    )?;
    Ok(())
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> anyhow::Result<Vec<T>> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<T>()
                .map_err(|_| anyhow!("invalid configuration: cannot parse {what} entry '{part}'"))
        })
        .collect()
}

fn dispatch(command: Command, out_dir: &Path) -> anyhow::Result<i32> {
    match command {
        Command::SimulateMoran {
            model,
            j,
            t,
            seed,
            init_counts,
            env0,
            record_every,
            stop_at_absorption,
        } => {
            let (env, spec) = load_model(&model.model)?;
            let species = env.num_species_free() + 1;
            let counts = match init_counts {
                Some(s) => {
                    let counts: Vec<u64> = parse_list(&s, "init-counts")?;
                    counts
                }
                None => {
                    let base = j / species as u64;
                    let mut counts = vec![base; species];
                    counts[0] += j - base * species as u64;
                    counts
                }
            };
            let mut cfg = MoranConfig::new(j, env, counts, seed)?;
            cfg.horizon = (t * j as f64).round() as u64;
            cfg.initial_env = env0;
            cfg.record_every = record_every;
            cfg.stop_at_absorption = stop_at_absorption;
            cfg.validate()?;
            let path = simulate_moran(&cfg)?;
            ensure_out(out_dir)?;
            echo_model(out_dir, &spec)?;
            let csv = out_dir.join("moran_path.csv");
            fs::write(&csv, path.to_csv())?;
            println!(
                "simulate-moran: J = {j}, {} events, {} records{} -> {}",
                cfg.horizon,
                path.len(),
                if path.absorbed { ", absorbed" } else { "" },
                csv.display()
            );
            Ok(EXIT_OK)
        }

        Command::SimulatePdmp {
            model,
            t,
            seed,
            x0,
            env0,
            dt_sample,
            h_max,
        } => {
            let (env, spec) = load_model(&model.model)?;
            let dim = env.num_species_free();
            let coords = match x0 {
                Some(s) => parse_list::<f64>(&s, "x0")?,
                None => vec![1.0 / (dim as f64 + 1.0); dim],
            };
            let start = SimplexPoint::new(coords)?;
            let opts = PdmpOptions { dt_sample, h_max };
            let path = simulate_pdmp(&start, env0, &env, t, &opts, seed)?;
            ensure_out(out_dir)?;
            echo_model(out_dir, &spec)?;
            let csv = out_dir.join("pdmp_path.csv");
            fs::write(&csv, path.to_csv())?;
            println!(
                "simulate-pdmp: T = {t}, {} switches, {} samples -> {}",
                path.breakpoints().len(),
                path.len(),
                csv.display()
            );
            Ok(EXIT_OK)
        }

        Command::Analyze { model } => {
            let (env, spec) = load_model(&model.model)?;
            let report = growth_rate_report(&env)?;
            let mut json = serde_json::json!({ "lambdas": report });
            let line = match env.num_species_free() {
                1 => {
                    let rates = two_species_growth_rates(&env)?;
                    let regime = classify_two_species(&rates);
                    json["regime"] = serde_json::json!(regime);
                    format!(
                        "lambda0 = {:.6}, lambda1 = {:.6}, regime {:?}",
                        rates.at_zero, rates.at_one, regime
                    )
                }
                _ => {
                    let rates = three_species_edge_rates(&env)?;
                    json["vertex_table"] = serde_json::json!(vertex_invasion_table(&rates));
                    let presences: Vec<EdgePresence> = (1..=3)
                        .map(|i| edge_measure_presence(rates.edge(i)))
                        .collect();
                    json["edge_measures"] = serde_json::json!(presences);
                    format!(
                        "edge rates {:?}; edge measures {:?}",
                        rates
                            .edges
                            .iter()
                            .map(|e| (e.at_zero, e.at_one))
                            .collect::<Vec<_>>(),
                        presences
                    )
                }
            };
            ensure_out(out_dir)?;
            echo_model(out_dir, &spec)?;
            fs::write(
                out_dir.join("analysis.json"),
                serde_json::to_string_pretty(&json)?,
            )?;
            println!("analyze: {line}");
            Ok(EXIT_OK)
        }

        Command::Density { model, grid } => {
            let (env, spec) = load_model(&model.model)?;
            let density = invariant_density(&env)?;
            let (r1, r2) = fokker_planck_residual(&density, &env)?;
            ensure_out(out_dir)?;
            echo_model(out_dir, &spec)?;
            let mut json = serde_json::to_value(&density)?;
            json["transport_residuals"] = serde_json::json!([r1, r2]);
            fs::write(
                out_dir.join("density.json"),
                serde_json::to_string_pretty(&json)?,
            )?;
            let mut csv = String::from("x,h1,h2,total\n");
            for k in 1..grid {
                let x = k as f64 / grid as f64;
                csv.push_str(&format!(
                    "{x},{},{},{}\n",
                    density.h(0, x),
                    density.h(1, x),
                    density.total(x)
                ));
            }
            fs::write(out_dir.join("density.csv"), csv)?;
            println!(
                "density: exponents ({:.6}, {:.6}), C = {:.6}, residuals ({r1:.2e}, {r2:.2e})",
                density.exponent_zero, density.exponent_one, density.c
            );
            Ok(EXIT_OK)
        }

        Command::InvasionRates {
            model,
            t,
            n_traj,
            seed,
        } => {
            let (env, spec) = load_model(&model.model)?;
            if env.num_species_free() != 2 {
                return Err(CoreError::InvalidModel(
                    "invasion rates need a three-species model (S = 2)".into(),
                )
                .into());
            }
            let rates = three_species_edge_rates(&env)?;
            let mut edges = Vec::new();
            for i in 1..=3usize {
                let presence = edge_measure_presence(rates.edge(i));
                let mut entry = serde_json::json!({
                    "edge": i,
                    "presence": presence,
                    "lambda0": rates.edge(i).at_zero,
                    "lambda1": rates.edge(i).at_one,
                });
                if presence == EdgePresence::Exists {
                    let est =
                        edge_invasion_rate_mc(&env, i, t, n_traj, seed, &EdgeMcOptions::default())?;
                    entry["mc"] = serde_json::json!({
                        "mean": est.mean,
                        "std_error": est.std_error,
                        "t": est.t_horizon,
                        "n_traj": est.n_traj,
                    });
                }
                edges.push(entry);
            }
            let mut json = serde_json::json!({ "edges": edges });
            if env.num_envs() == 2 {
                if let Ok(signs) = edge_invasion_signs_two_env(&env) {
                    json["analytic_signs"] = serde_json::to_value(&signs)?;
                }
            }
            ensure_out(out_dir)?;
            echo_model(out_dir, &spec)?;
            fs::write(
                out_dir.join("invasion_rates.json"),
                serde_json::to_string_pretty(&json)?,
            )?;
            let means: Vec<String> = edges
                .iter()
                .map(|e| {
                    e.get("mc")
                        .and_then(|m| m.get("mean"))
                        .map(|v| format!("{:.4}", v.as_f64().unwrap_or(f64::NAN)))
                        .unwrap_or_else(|| "absent".into())
                })
                .collect();
            println!("invasion-rates: edges -> {}", means.join(" / "));
            Ok(EXIT_OK)
        }

        Command::Verdict {
            model,
            seed,
            t,
            n_traj,
        } => {
            let (env, spec) = load_model(&model.model)?;
            let opts = VerdictOptions {
                mc_horizon: t,
                mc_n_traj: n_traj,
                seed,
                ..VerdictOptions::default()
            };
            let verdict = persistence_verdict(&env, &opts)?;
            ensure_out(out_dir)?;
            echo_model(out_dir, &spec)?;
            fs::write(
                out_dir.join("report.json"),
                serde_json::to_string_pretty(&verdict.to_report_json())?,
            )?;
            println!("{}", verdict.one_line());
            Ok(EXIT_OK)
        }

        Command::Convergence {
            model,
            t,
            j_list,
            n_traj,
            seed,
            degree,
        } => {
            let (env, spec) = load_model(&model.model)?;
            let j_values: Vec<u64> = parse_list(&j_list, "j-list")?;
            if !(1..=3).contains(&degree) {
                return Err(CoreError::InvalidConfig(format!(
                    "observable degree {degree} not in 1..=3"
                ))
                .into());
            }
            let observable = Observable::product(&vec![0usize; degree])?;
            let x0 = SimplexPoint::new(vec![
                1.0 / (env.num_species_free() as f64 + 1.0);
                env.num_species_free()
            ])?;
            let cfg = ConvergenceConfig {
                t,
                j_values,
                n_traj,
                seed,
                h_max: 1e-3,
            };
            let res = convergence_experiment(&env, &x0, 0, &observable, &cfg)?;
            ensure_out(out_dir)?;
            echo_model(out_dir, &spec)?;
            let mut csv = String::from("J,error,std_error\n");
            for (ji, &j) in res.j_values.iter().enumerate() {
                csv.push_str(&format!("{j},{},{}\n", res.errors[ji], res.std_errors[ji]));
            }
            fs::write(out_dir.join("convergence.csv"), csv)?;
            fs::write(
                out_dir.join("convergence.json"),
                serde_json::to_string_pretty(&res)?,
            )?;
            println!(
                "convergence: slope {:.3} +/- {:.3}{}",
                res.slope,
                res.slope_halfwidth,
                if res.flagged { " (flagged: noise floor)" } else { "" }
            );
            Ok(EXIT_OK)
        }

        Command::Reproduce { seed, scale } => {
            ensure_out(out_dir)?;
            let bundle = reproduce_paper_examples(seed, out_dir, scale)?;
            print!("{}", bundle.lines());
            Ok(if bundle.passed { EXIT_OK } else { EXIT_RUNTIME })
        }
    }
}
