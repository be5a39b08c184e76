//! `polyexp` — convert Gaussian mixtures to polynomial exponential
//! densities, estimate Jeffreys divergences four ways, select model orders,
//! sample fitted densities, and run the bundled benchmark and regression
//! suites. Exit codes: 0 success, 2 validation/input error, 3 numerical
//! failure.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use polyexp::divergences::{
    default_heuristic_order, jeffreys_heuristic, jeffreys_mc, jeffreys_mle_variant,
    jeffreys_sme_variant, select_order,
};
use polyexp::estimators::{convert_pair, mle_convert, sme_convert_direct_with, ConvertOptions};
use polyexp::maxent::IlsmConfig;
use polyexp::numerics::QuadratureSettings;
use polyexp::ped::Support;
use polyexp::sampling::{auto_envelope, default_proposal, rejection_sample};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use polyexp_cli::bench::{run_bench, summary_csv, trials_csv};
use polyexp_cli::curves::{emit_curves, linear_grid, CurveModel};
use polyexp_cli::faithful::run_faithful;
use polyexp_cli::golden::run_golden;
use polyexp_cli::io::{load_data, load_gmm, load_ped, to_json_pretty, write_text};
use polyexp_cli::{CliError, Result};

#[derive(Parser)]
#[command(name = "polyexp", version, about)]
struct Cli {
    /// Master seed for every stochastic operation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Suppress informational messages on stderr.
    #[arg(long, global = true)]
    quiet: bool,
    /// Output path (for `faithful`, a prefix gaining .json/.csv).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConvertMethod {
    /// Moment fit (expected powers).
    Mle,
    /// Score-matching fit (natural coefficients).
    Sme,
    /// Both halves as one dual pair.
    Pair,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum JeffreysMethod {
    /// Monte Carlo estimate.
    Mc,
    /// Fast dual-parameter heuristic.
    Pair,
    /// Moment-fit variant (both sides through the moment map).
    Mle,
    /// Score-matching variant (moments recovered by sampling the fits).
    Sme,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a mixture to a polynomial exponential density.
    Convert {
        /// Mixture JSON file.
        #[arg(long)]
        gmm: PathBuf,
        /// Polynomial order D.
        #[arg(long)]
        order: usize,
        #[arg(long, value_enum, default_value_t = ConvertMethod::Sme)]
        method: ConvertMethod,
        /// Use the Hankel/Stein solve instead of the direct system (sme only).
        #[arg(long)]
        hankel: bool,
        /// Fit on a finite interval `A,B` instead of the real line.
        #[arg(long, value_parser = parse_interval)]
        interval: Option<(f64, f64)>,
        /// Reject real-line fits whose leading coefficient is non-negative.
        #[arg(long)]
        require_integrable: bool,
    },
    /// Estimate the Jeffreys divergence between two mixtures.
    Jeffreys {
        #[arg(long)]
        m1: PathBuf,
        #[arg(long)]
        m2: PathBuf,
        #[arg(long, value_enum, default_value_t = JeffreysMethod::Pair)]
        method: JeffreysMethod,
        /// Polynomial order (default: twice the smaller component count,
        /// capped at 16).
        #[arg(long)]
        order: Option<usize>,
        /// Monte Carlo draws (mc and sme methods).
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Score candidate polynomial orders for a mixture and pick the best.
    Modelselect {
        #[arg(long)]
        gmm: PathBuf,
        /// Comma-separated candidate orders, e.g. `2,4,8`.
        #[arg(long, value_delimiter = ',')]
        orders: Vec<usize>,
        /// Accept the smallest order whose score is at most this value.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Draw variates from a fitted density by rejection sampling.
    Sample {
        /// Density JSON file.
        #[arg(long)]
        ped: PathBuf,
        /// Number of variates.
        #[arg(long)]
        n: usize,
    },
    /// Monte-Carlo-versus-heuristic benchmark over random mixture pairs.
    Bench {
        /// Comma-separated mixture sizes, e.g. `1,2,5`.
        #[arg(long, value_delimiter = ',', default_value = "1,2,5")]
        k: Vec<usize>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Monte Carlo draws per trial.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Include wall-clock columns in the trials CSV.
        #[arg(long)]
        timings: bool,
    },
    /// Recompute the bundled reference quantities and compare.
    Golden,
    /// Fit a dataset: rescale to (0,1), smooth, fit an interval density.
    Faithful {
        /// Dataset file: one real per line, `#` comments skipped.
        #[arg(long)]
        data: PathBuf,
        /// Kernel bandwidth in rescaled coordinates.
        #[arg(long, default_value_t = 0.05)]
        sigma: f64,
        #[arg(long, default_value_t = 10)]
        order: usize,
    },
    /// Evaluate models over a grid and emit plot-ready CSV.
    Curves {
        /// Mixture JSON files (repeatable).
        #[arg(long)]
        gmm: Vec<PathBuf>,
        /// Density JSON files (repeatable).
        #[arg(long)]
        ped: Vec<PathBuf>,
        #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
        min: f64,
        #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
        max: f64,
        #[arg(long, default_value_t = 512)]
        points: usize,
    },
}

fn parse_interval(s: &str) -> std::result::Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected `A,B`, got {s:?}"));
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| format!("bad bound {:?}", parts[0]))?;
    let b: f64 = parts[1].trim().parse().map_err(|_| format!("bad bound {:?}", parts[1]))?;
    Ok((a, b))
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

/// Write to `--out` if given, else print to stdout.
fn deliver(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_text(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn note(quiet: bool, message: &str) {
    if !quiet {
        eprintln!("{message}");
    }
}

fn load_gmm_noting(path: &Path, quiet: bool) -> Result<polyexp::gmm::Gmm> {
    let loaded = load_gmm(path)?;
    if let Some(w) = loaded.warning {
        note(quiet, &format!("note: {w}"));
    }
    Ok(loaded.gmm)
}

fn run(cli: Cli) -> Result<()> {
    let Cli {
        seed,
        quiet,
        out,
        command,
    } = cli;

    match command {
        Command::Convert {
            gmm,
            order,
            method,
            hankel,
            interval,
            require_integrable,
        } => {
            let m = load_gmm_noting(&gmm, quiet)?;
            let support = match interval {
                Some((a, b)) => Support::Interval { a, b },
                None => Support::RealLine,
            };
            let options = ConvertOptions {
                support,
                require_integrable,
                ..Default::default()
            };
            let json = match method {
                ConvertMethod::Mle => {
                    if hankel {
                        return Err(CliError::Usage(
                            "--hankel applies to the sme method only".into(),
                        ));
                    }
                    to_json_pretty(&mle_convert(&m, order)?)?
                }
                ConvertMethod::Sme => {
                    let fit = if hankel {
                        polyexp::estimators::sme_convert_hankel_with(&m, order, &options)?
                    } else {
                        sme_convert_direct_with(&m, order, &options)?
                    };
                    if let Some(w) = &fit.warning {
                        note(quiet, &format!("note: {w}"));
                    }
                    to_json_pretty(&fit.ped)?
                }
                ConvertMethod::Pair => {
                    if hankel || interval.is_some() {
                        return Err(CliError::Usage(
                            "pair conversion uses the direct real-line fit".into(),
                        ));
                    }
                    to_json_pretty(&convert_pair(&m, order)?)?
                }
            };
            deliver(&out, &json)
        }

        Command::Jeffreys {
            m1,
            m2,
            method,
            order,
            samples,
        } => {
            let a = load_gmm_noting(&m1, quiet)?;
            let b = load_gmm_noting(&m2, quiet)?;
            let d = order.unwrap_or_else(|| default_heuristic_order(&a, &b));
            let estimate = match method {
                JeffreysMethod::Mc => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    jeffreys_mc(&a, &b, &mut rng, samples)?
                }
                JeffreysMethod::Pair => jeffreys_heuristic(&a, &b, d)?,
                JeffreysMethod::Mle => jeffreys_mle_variant(&a, &b, d, &IlsmConfig::default())?,
                JeffreysMethod::Sme => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    jeffreys_sme_variant(&a, &b, d, samples, &mut rng)?
                }
            };
            deliver(&out, &to_json_pretty(&estimate)?)
        }

        Command::Modelselect {
            gmm,
            orders,
            epsilon,
        } => {
            let m = load_gmm_noting(&gmm, quiet)?;
            let selection = select_order(&m, &orders, epsilon)?;
            let scores: Vec<serde_json::Value> = selection
                .scores
                .iter()
                .map(|(d, r)| match r {
                    Ok(v) => serde_json::json!({"order": d, "score": v}),
                    Err(msg) => serde_json::json!({"order": d, "error": msg}),
                })
                .collect();
            let json = serde_json::json!({
                "best": selection.best,
                "best_score": selection.best_score,
                "epsilon_satisfied": selection.epsilon_satisfied,
                "scores": scores,
            });
            deliver(&out, &format!("{:#}\n", json))
        }

        Command::Sample { ped, n } => {
            let target = load_ped(&ped)?;
            let settings = QuadratureSettings::default();
            let proposal = default_proposal(&target, &settings)?;
            let envelope = auto_envelope(&target, &proposal)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (draws, rate) = rejection_sample(&target, &proposal, envelope, &mut rng, n)?;
            note(quiet, &format!("acceptance rate {rate:.4}"));
            let mut text = String::new();
            for v in draws {
                text.push_str(&format!("{v}\n"));
            }
            deliver(&out, &text)
        }

        Command::Bench {
            k,
            trials,
            samples,
            timings,
        } => {
            let outcome = run_bench(&k, trials, samples, seed)?;
            for (k, t, msg) in &outcome.failures {
                note(quiet, &format!("excluded k={k} trial {t}: {msg}"));
            }
            let summary = summary_csv(&outcome.summaries);
            match &out {
                Some(path) => {
                    write_text(path, &trials_csv(&outcome.records, timings))?;
                    note(quiet, &format!("wrote {} trials to {}", outcome.records.len(), path.display()));
                    print!("{summary}");
                }
                None => print!("{summary}"),
            }
            Ok(())
        }

        Command::Golden => {
            let report = run_golden()?;
            print!("{}", report.render());
            if report.passed() {
                Ok(())
            } else {
                let failed = report.checks.iter().filter(|c| !c.pass).count();
                Err(CliError::CheckFailed(format!(
                    "{failed} reference check(s) failed"
                )))
            }
        }

        Command::Faithful { data, sigma, order } => {
            let xs = load_data(&data)?;
            let report = run_faithful(&xs, sigma, order)?;
            if let Some(w) = &report.warning {
                note(quiet, &format!("note: {w}"));
            }
            note(
                quiet,
                &format!(
                    "{} points in [{}, {}], order {}, {} interior mode(s)",
                    report.n, report.data_min, report.data_max, report.order,
                    report.interior_maxima
                ),
            );
            let prefix = out.unwrap_or_else(|| PathBuf::from("faithful"));
            let json_path = prefix.with_extension("json");
            let csv_path = prefix.with_extension("csv");
            write_text(&json_path, &report.ped_json)?;
            write_text(&csv_path, &report.curve_csv)?;
            note(
                quiet,
                &format!("wrote {} and {}", json_path.display(), csv_path.display()),
            );
            Ok(())
        }

        Command::Curves {
            gmm,
            ped,
            min,
            max,
            points,
        } => {
            let mut models = Vec::new();
            let mut used = std::collections::HashSet::new();
            let mut name_for = |path: &Path| -> String {
                let stem = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "model".into());
                let mut name = stem.clone();
                let mut i = 2;
                while !used.insert(name.clone()) {
                    name = format!("{stem}#{i}");
                    i += 1;
                }
                name
            };
            for path in &gmm {
                let m = load_gmm_noting(path, quiet)?;
                models.push((name_for(path), CurveModel::Mixture(m)));
            }
            for path in &ped {
                let p = load_ped(path)?;
                models.push((name_for(path), CurveModel::Density(p)));
            }
            let grid = linear_grid(min, max, points)?;
            deliver(&out, &emit_curves(&models, &grid)?)
        }
    }
}
