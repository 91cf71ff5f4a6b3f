mod error;
mod render;

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qrel_core::estimation::{
    aggregate, fit_model, model_probabilities, Estimate, SequentialProbabilities,
};
use qrel_core::io::{load_model, load_probabilities, load_responses, write_model, write_responses};
use qrel_core::model::{ltp_components, observable, Dimension, QueryModel};
use qrel_core::quantumness::{commutator_report, effect_tables, ltp_report, negativity, wigner};
use qrel_core::simulator::{
    respondent_rng, run_cascade, simulate_dataset, GroupSplit, SimConfig, SternGerlachSetup,
};

use error::CliError;
use render::{p4, round4, QueryReport};

/// Environment variable naming the directory for default output files.
const OUTPUT_DIR_VAR: &str = "QREL_OUTPUT_DIR";

#[derive(Parser)]
#[command(
    name = "qrel",
    version,
    about = "Fit, inspect and simulate quantum models of relevance judgement"
)]
struct Cli {
    /// Rendering of printed results.
    #[arg(long, global = true, value_enum, default_value_t = Format::Md)]
    format: Format,
    /// Where to write the command's main artifact.
    #[arg(long, global = true, value_name = "PATH")]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Md,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Setup {
    A,
    B,
    C,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model from a response CSV or a probability document and write the model file.
    Fit {
        input: PathBuf,
        /// Query to fit when the CSV holds several.
        #[arg(long)]
        query: Option<String>,
    },
    /// Parameter, effect, LTP, Wigner and commutator tables for every query in the inputs.
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Wigner quasi-probability tables for given P(T+) values or a model file.
    Wigner {
        #[arg(long = "t2", value_name = "P", required_unless_present = "model")]
        t2: Vec<f64>,
        #[arg(long, conflicts_with = "t2")]
        model: Option<PathBuf>,
    },
    /// Observables of a model and their commutators.
    Operators {
        #[arg(long)]
        model: PathBuf,
    },
    /// Direct versus two-path probabilities of R+ after T+.
    Ltp {
        input: PathBuf,
        #[arg(long)]
        query: Option<String>,
        /// Model supplying the interference term; fitted from the input when absent.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Simulate respondents from a model and write their responses as CSV.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, short)]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Share of respondents asked in TUR order.
        #[arg(long, default_value_t = 0.5)]
        tur_fraction: f64,
        /// Assign exactly round(n * tur_fraction) respondents to TUR.
        #[arg(long)]
        exact_split: bool,
    },
    /// Stern-Gerlach cascade with per-stage beam populations.
    SpinDemo {
        #[arg(value_enum)]
        setup: Setup,
        #[arg(long, default_value_t = 10_000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Interference term and LTP probabilities over theta_r in [0, 180] degrees, as CSV.
    SweepTheta {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 181, value_parser = clap::value_parser!(u64).range(2..))]
        steps: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Fit { input, query } => cmd_fit(cli, input, query.as_deref()),
        Command::Report { inputs } => cmd_report(cli, inputs),
        Command::Wigner { t2, model } => cmd_wigner(cli, t2, model.as_deref()),
        Command::Operators { model } => cmd_operators(cli, model),
        Command::Ltp {
            input,
            query,
            model,
        } => cmd_ltp(cli, input, query.as_deref(), model.as_deref()),
        Command::Simulate {
            model,
            n,
            seed,
            tur_fraction,
            exact_split,
        } => cmd_simulate(cli, model, *n, *seed, *tur_fraction, *exact_split),
        Command::SpinDemo { setup, shots, seed } => cmd_spin_demo(cli, *setup, *shots, *seed),
        Command::SweepTheta { model, steps } => cmd_sweep_theta(cli, model, *steps),
    }
}

fn default_path(file_name: String) -> PathBuf {
    let dir = std::env::var_os(OUTPUT_DIR_VAR).map_or_else(|| PathBuf::from("."), PathBuf::from);
    dir.join(file_name)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })
}

/// Prints `text`, or writes it to `--output` when given.
fn emit(cli: &Cli, text: &str) -> Result<(), CliError> {
    match &cli.output {
        Some(path) => {
            let mut w = create(path)?;
            w.write_all(text.as_bytes())
                .and_then(|_| w.flush())
                .map_err(|source| CliError::Io {
                    path: path.display().to_string(),
                    source,
                })
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values are finite");
    s.push('\n');
    s
}

/// Aggregated probabilities for each query in a `.csv` dataset or `.json` probability document.
fn load_input(path: &Path, query: Option<&str>) -> Result<Vec<SequentialProbabilities>, CliError> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase();
    let all = match ext.as_str() {
        "csv" => {
            let data = load_responses(path)?;
            if data.is_empty() {
                return Err(CliError::Usage(format!("{}: no responses", path.display())));
            }
            data.query_ids()
                .iter()
                .map(|q| aggregate(&data, q))
                .collect::<Result<Vec<_>, _>>()?
        }
        "json" => vec![load_probabilities(path)?],
        _ => {
            return Err(CliError::Usage(format!(
                "{}: expected a .csv response file or a .json probability document",
                path.display()
            )))
        }
    };
    match query {
        None => Ok(all),
        Some(q) => {
            let picked: Vec<_> = all.into_iter().filter(|a| a.query_id == q).collect();
            if picked.is_empty() {
                return Err(CliError::Usage(format!(
                    "{}: no query {q:?}",
                    path.display()
                )));
            }
            Ok(picked)
        }
    }
}

fn single_input(path: &Path, query: Option<&str>) -> Result<SequentialProbabilities, CliError> {
    let mut all = load_input(path, query)?;
    if all.len() > 1 {
        let ids: Vec<_> = all.iter().map(|a| a.query_id.as_str()).collect();
        return Err(CliError::Usage(format!(
            "{} holds several queries ({}); pick one with --query",
            path.display(),
            ids.join(", ")
        )));
    }
    Ok(all.remove(0))
}

fn cmd_fit(cli: &Cli, input: &Path, query: Option<&str>) -> Result<(), CliError> {
    let agg = single_input(input, query)?;
    let fit = fit_model(&agg)?;
    let path = cli
        .output
        .clone()
        .unwrap_or_else(|| default_path(format!("{}.model.json", agg.query_id)));
    let mut w = create(&path)?;
    write_model(&mut w, &fit.model)?;
    w.flush().map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;

    let text = match cli.format {
        Format::Md => {
            let mut out = format!("## Fit for query {}\n\n", agg.query_id);
            render::parameters_md(&mut out, &agg, &fit);
            out.push_str(&format!("model written to {}\n", path.display()));
            out
        }
        Format::Json => {
            let mut v = render::parameters_json(&agg, &fit);
            v["model_path"] = json!(path.display().to_string());
            json_text(&v)
        }
    };
    print!("{text}");
    Ok(())
}

fn build_report(agg: SequentialProbabilities) -> Result<QueryReport, CliError> {
    let fit = fit_model(&agg)?;
    let effects = effect_tables(&agg)?;
    let ltp = ltp_report(&agg, &fit.model)?;
    let w = wigner(fit.model.params().t().powi(2))?;
    Ok(QueryReport {
        commutators: commutator_report(&fit.model),
        negativity: negativity(&w),
        wigner: w,
        agg,
        fit,
        effects,
        ltp,
    })
}

fn cmd_report(cli: &Cli, inputs: &[PathBuf]) -> Result<(), CliError> {
    let mut reports = Vec::new();
    for path in inputs {
        for agg in load_input(path, None)? {
            reports.push(build_report(agg)?);
        }
    }
    let text = match cli.format {
        Format::Md => reports
            .iter()
            .map(render::report_md)
            .collect::<Vec<_>>()
            .join("\n"),
        Format::Json => json_text(&Value::Array(
            reports.iter().map(render::report_json).collect(),
        )),
    };
    emit(cli, &text)
}

fn cmd_wigner(cli: &Cli, t2: &[f64], model: Option<&Path>) -> Result<(), CliError> {
    let values = match model {
        Some(path) => vec![load_model(path)?.params().t().powi(2)],
        None => t2.to_vec(),
    };
    let mut md = String::new();
    let mut js = Vec::new();
    for t2 in values {
        let w = wigner(t2)?;
        let n = negativity(&w);
        render::wigner_md(&mut md, t2, &w, &n);
        js.push(render::wigner_json(t2, &w, &n));
    }
    match cli.format {
        Format::Md => emit(cli, &md),
        Format::Json => emit(cli, &json_text(&Value::Array(js))),
    }
}

fn cmd_operators(cli: &Cli, model: &Path) -> Result<(), CliError> {
    let model = load_model(model)?;
    let p = model.params();
    let commutators = commutator_report(&model);
    let text = match cli.format {
        Format::Md => {
            let mut out = format!("## Operators for query {}\n\n", model.query_id());
            for dim in Dimension::ALL {
                out.push_str(&render::matrix_md(
                    &dim.letter().to_string(),
                    &observable(p, dim).matrix(),
                ));
                out.push('\n');
            }
            render::commutators_md(&mut out, &commutators);
            out
        }
        Format::Json => {
            let ops: serde_json::Map<String, Value> = Dimension::ALL
                .iter()
                .map(|&d| {
                    (
                        d.letter().to_string(),
                        render::matrix_json(&observable(p, d).matrix()),
                    )
                })
                .collect();
            json_text(&json!({
                "query_id": model.query_id(),
                "operators": ops,
                "commutators": render::commutators_json(&commutators),
            }))
        }
    };
    emit(cli, &text)
}

fn cmd_ltp(
    cli: &Cli,
    input: &Path,
    query: Option<&str>,
    model: Option<&Path>,
) -> Result<(), CliError> {
    let given = model.map(load_model).transpose()?;
    let mut md = String::new();
    let mut js = Vec::new();
    for agg in load_input(input, query)? {
        let model = match &given {
            Some(m) => m.clone(),
            None => fit_model(&agg)?.model,
        };
        let ltp = ltp_report(&agg, &model)?;
        md.push_str(&format!("## Query {}\n\n", agg.query_id));
        render::ltp_md(&mut md, &ltp);
        let mut v = render::ltp_json(&ltp);
        v["query_id"] = json!(agg.query_id);
        js.push(v);
    }
    match cli.format {
        Format::Md => emit(cli, &md),
        Format::Json => emit(cli, &json_text(&Value::Array(js))),
    }
}

fn estimates(a: &SequentialProbabilities) -> [(&'static str, Option<Estimate>); 9] {
    [
        ("P(T+)", a.p_t_pos),
        ("P(T+) in TUR", a.p_t_pos_tur),
        ("P(T+) in TRU", a.p_t_pos_tru),
        ("P(U+|T+)", a.p_u_pos_given_t_pos),
        ("P(R+|U+,T+)", a.p_r_pos_given_u_pos_t_pos),
        ("P(R+|U-,T+)", a.p_r_pos_given_u_neg_t_pos),
        ("P(R+|T+)", a.p_r_pos_given_t_pos),
        ("P(U+|R+,T+)", a.p_u_pos_given_r_pos_t_pos),
        ("P(U+|R-,T+)", a.p_u_pos_given_r_neg_t_pos),
    ]
}

fn cmd_simulate(
    cli: &Cli,
    model: &Path,
    n: u64,
    seed: u64,
    tur_fraction: f64,
    exact_split: bool,
) -> Result<(), CliError> {
    let model: QueryModel = load_model(model)?;
    let split = if exact_split {
        GroupSplit::Exact
    } else {
        GroupSplit::Random
    };
    let config = SimConfig::new(model.clone(), n, seed)?
        .with_tur_fraction(tur_fraction)?
        .with_split(split);
    let data = simulate_dataset(&config);
    let path = cli
        .output
        .clone()
        .unwrap_or_else(|| default_path(format!("{}.responses.csv", model.query_id())));
    write_responses(create(&path)?, &data)?;

    let expected = model_probabilities(&model)?;
    let rows: Vec<_> = match aggregate(&data, model.query_id()) {
        Ok(empirical) => estimates(&empirical)
            .into_iter()
            .zip(estimates(&expected))
            .map(|((label, e), (_, m))| (label, e, m.map(|m| m.value)))
            .collect(),
        // One group may be empty for tiny runs; show the model side only.
        Err(_) => estimates(&expected)
            .into_iter()
            .map(|(l, m)| (l, None, m.map(|m| m.value)))
            .collect(),
    };
    let text = match cli.format {
        Format::Md => {
            let mut out = format!(
                "## Simulated query {} (n = {n}, seed = {seed})\n\n| probability | empirical | model | trials |\n|---|---|---|---|\n",
                model.query_id()
            );
            for (label, e, m) in &rows {
                let trials = e
                    .and_then(|e| e.counts)
                    .map_or("n/a".to_string(), |c| c.trials.to_string());
                out.push_str(&format!(
                    "| {} | {} | {} | {trials} |\n",
                    label.replace('|', "\\|"),
                    e.map_or("n/a".to_string(), |e| p4(e.value)),
                    m.map_or("n/a".to_string(), p4)
                ));
            }
            out.push_str(&format!(
                "\n{} responses written to {}\n",
                data.len(),
                path.display()
            ));
            out
        }
        Format::Json => json_text(&json!({
            "query_id": model.query_id(),
            "n": n,
            "seed": seed,
            "responses_path": path.display().to_string(),
            "probabilities": rows.iter().map(|(label, e, m)| json!({
                "label": label,
                "empirical": e.map(|e| round4(e.value)),
                "model": m.map(round4),
                "counts": e.and_then(|e| e.counts),
            })).collect::<Vec<_>>(),
        })),
    };
    print!("{text}");
    Ok(())
}

fn cmd_spin_demo(cli: &Cli, setup: Setup, shots: u64, seed: u64) -> Result<(), CliError> {
    let (setup, name) = match setup {
        Setup::A => (SternGerlachSetup::A, "a"),
        Setup::B => (SternGerlachSetup::B, "b"),
        Setup::C => (SternGerlachSetup::C, "c"),
    };
    let spec = setup.cascade(shots)?;
    let counts = run_cascade(&setup.source(), &spec, &mut respondent_rng(seed, 0));
    let text = match cli.format {
        Format::Md => format!(
            "## Stern-Gerlach setup {name} ({shots} shots, seed {seed})\n\n{}",
            render::cascade_md(spec.stages(), &counts, shots)
        ),
        Format::Json => {
            let stages: Vec<_> = spec
                .stages()
                .iter()
                .zip(&counts)
                .map(|(s, c)| json!({"axis": s.label, "positive": c.positive, "negative": c.negative, "passed": c.passed}))
                .collect();
            let mut v = json!({"setup": name, "shots": shots, "seed": seed, "stages": stages});
            if shots == 1 {
                v["trajectory"] = json!(render::trajectory(spec.stages(), &counts));
            }
            json_text(&v)
        }
    };
    emit(cli, &text)
}

fn cmd_sweep_theta(cli: &Cli, model: &Path, steps: u64) -> Result<(), CliError> {
    let model = load_model(model)?;
    let rows: Vec<(f64, _)> = (0..steps)
        .map(|k| {
            let theta = if k + 1 == steps {
                PI
            } else {
                PI * k as f64 / (steps - 1) as f64
            };
            let params = model
                .params()
                .with_theta(theta)
                .expect("theta lies in [0, pi]");
            (theta.to_degrees(), ltp_components(&params))
        })
        .collect();
    let text = match cli.format {
        Format::Md => {
            let mut out = String::from("theta_deg,interference,p_direct,p_ltp_sum\n");
            for (deg, c) in &rows {
                out.push_str(&format!(
                    "{deg:.4},{},{},{}\n",
                    p4(c.interference),
                    p4(c.direct),
                    p4(c.two_path)
                ));
            }
            out
        }
        Format::Json => json_text(&Value::Array(
            rows.iter()
                .map(|(deg, c)| {
                    json!({
                        "theta_deg": round4(*deg),
                        "interference": round4(c.interference),
                        "p_direct": round4(c.direct),
                        "p_ltp_sum": round4(c.two_path),
                    })
                })
                .collect(),
        )),
    };
    emit(cli, &text)
}
