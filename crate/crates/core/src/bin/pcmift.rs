use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pcmift::api;
use pcmift::io::{ingest, CovariateTypes, IngestOptions};
use pcmift::sim::results_table;
use pcmift::{Error, FitOptions, IftConfig};

const EXIT_OTHER: u8 = 1;
const EXIT_INGEST: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

#[derive(Parser)]
#[command(name = "pcmift", version, about = "Partial credit model fitting and DIF detection with item-focussed trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the partial credit model without DIF.
    Fit {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        output: Output,
    },
    /// Grow item-focussed trees and report DIF.
    Detect {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        tree: TreeFlags,
        #[command(flatten)]
        output: Output,
    },
    /// Run a simulation preset, e.g. `sim1-s1-strong`.
    Simulate {
        preset: String,
        #[arg(long)]
        replications: Option<usize>,
        /// Run every permutation even when the decision is already settled.
        #[arg(long)]
        full_permutations: bool,
        #[command(flatten)]
        tree: TreeFlags,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Args)]
struct Input {
    #[arg(long)]
    responses: PathBuf,
    #[arg(long)]
    covariates: Option<PathBuf>,
    /// `name=type,...` or `type,...` with types binary, ordered, numeric.
    #[arg(long, default_value = "")]
    covariate_types: String,
    /// Number of response categories; labels must then be 0..n-1.
    #[arg(long)]
    categories: Option<usize>,
    #[arg(long)]
    delimiter: Option<char>,
}

#[derive(Args)]
struct TreeFlags {
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 1000)]
    permutations: usize,
    #[arg(long, default_value_t = 30)]
    min_node_size: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Stop permutation tests once non-significance is certain.
    #[arg(long)]
    early_stop: bool,
}

impl TreeFlags {
    fn config(&self, early_stop: bool) -> IftConfig {
        IftConfig {
            alpha: self.alpha,
            n_perm: self.permutations,
            min_node_size: self.min_node_size,
            rng_seed: self.seed,
            early_stop: early_stop || self.early_stop,
            fit: FitOptions::default(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct Output {
    /// Directory for the output files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// What to print on standard output.
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

enum Failure {
    Ingest(String),
    Numeric(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Ingest(_) | Error::ConstantResponses { .. } | Error::CategoryOutOfRange { .. } => {
                Failure::Ingest(e.to_string())
            }
            Error::Numerical(_) => Failure::Numeric(e.to_string()),
            other => Failure::Other(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Ok(n) = std::env::var("PCMIFT_THREADS") {
        match n.parse::<usize>() {
            Ok(n) => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("warning: could not set thread count: {e}");
                }
            }
            Err(_) => eprintln!("warning: ignoring PCMIFT_THREADS={n}"),
        }
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit { input, output } => run_fit(&input, &output),
        Command::Detect {
            input,
            tree,
            output,
        } => run_detect(&input, &tree, &output),
        Command::Simulate {
            preset,
            replications,
            full_permutations,
            tree,
            output,
        } => run_simulate(&preset, replications, &tree.config(!full_permutations), &output),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Ingest(msg)) => {
            eprintln!("input error: {msg}");
            ExitCode::from(EXIT_INGEST)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("numerical error: {msg}");
            ExitCode::from(EXIT_NUMERIC)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_OTHER)
        }
    }
}

fn load(input: &Input) -> Result<pcmift::io::Dataset, Failure> {
    let types: CovariateTypes = input
        .covariate_types
        .parse()
        .map_err(|e: pcmift::io::IngestError| Failure::Ingest(e.to_string()))?;
    let delimiter = match input.delimiter {
        Some(c) if c.is_ascii() => Some(c as u8),
        Some(c) => return Err(Failure::Other(format!("delimiter '{c}' is not ASCII"))),
        None => None,
    };
    let options = IngestOptions {
        delimiter,
        n_categories: input.categories,
    };
    ingest(&input.responses, input.covariates.as_deref(), &types, &options)
        .map_err(|e| Failure::Ingest(e.to_string()))
}

fn out_dir(output: &Output) -> Result<Option<&Path>, Failure> {
    if let Some(dir) = &output.out {
        fs::create_dir_all(dir)?;
    }
    Ok(output.out.as_deref())
}

fn json<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn run_fit(input: &Input, output: &Output) -> Result<(), Failure> {
    let data = load(input)?;
    let (report, _) = api::fit(&data.responses, &data.item_names, &FitOptions::default())?;
    if !report.converged {
        log::warn!("fit did not converge: {}", report.diagnostic.as_deref().unwrap_or(""));
    }
    let body = json(&report)?;
    if let Some(dir) = out_dir(output)? {
        fs::write(dir.join("params.json"), &body)?;
    }
    match output.format {
        Format::Json => print!("{body}"),
        Format::Text => {
            println!(
                "{} persons, {} items, {} categories",
                report.n_persons,
                report.n_items,
                report.n_thresholds + 1
            );
            println!(
                "log-likelihood {:.4}, deviance {:.4}, {} parameters, converged {}",
                report.log_likelihood, report.deviance, report.n_parameters, report.converged
            );
            for item in &report.items {
                let t: Vec<String> = item.thresholds.iter().map(|d| format!("{d:.3}")).collect();
                println!("{}\t{}{}", item.name, t.join("\t"), if item.capped { "\t(capped)" } else { "" });
            }
        }
    }
    Ok(())
}

fn run_detect(input: &Input, tree: &TreeFlags, output: &Output) -> Result<(), Failure> {
    let data = load(input)?;
    if data.covariates.n_variables() == 0 {
        return Err(Failure::Ingest("detect needs a covariate file".into()));
    }
    let detection = api::detect(&data.responses, &data.covariates, &data.item_names, &tree.config(false))?;
    let report = &detection.report;
    let body = json(report)?;
    let text: String = detection.rendered.iter().map(|r| r.text.as_str()).collect();
    if let Some(dir) = out_dir(output)? {
        fs::write(dir.join("summary.json"), &body)?;
        fs::write(dir.join("audit.log"), report.audit_log())?;
        fs::write(dir.join("trees.txt"), &text)?;
        let trees = dir.join("trees");
        fs::create_dir_all(&trees)?;
        for r in &detection.rendered {
            let name = format!("{:03}_{}.json", r.document.item + 1, sanitize(&r.document.item_name));
            fs::write(trees.join(name), json(&r.document)?)?;
        }
        let mut plot = String::from("item\tleaf\tnode\tthreshold\tvalue\tplotted\ttruncated\n");
        for r in &detection.rendered {
            for p in &r.plot {
                plot.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                    r.document.item_name, p.leaf, p.node_spec, p.threshold, p.value, p.plotted, p.truncated
                ));
            }
        }
        fs::write(dir.join("plot_data.tsv"), plot)?;
    }
    match output.format {
        Format::Json => print!("{body}"),
        Format::Text => {
            if report.dif_items.is_empty() {
                println!("no DIF items detected");
            } else {
                println!("DIF items:");
                for d in &report.dif_items {
                    let p: Vec<String> = d.p_values.iter().map(|p| format!("{p:.4}")).collect();
                    println!("  {}: {} (p = {})", d.name, d.variables.join(", "), p.join(", "));
                }
            }
            println!("stopped: {}", report.stop_reason);
            print!("{text}");
        }
    }
    Ok(())
}

fn run_simulate(
    preset: &str,
    replications: Option<usize>,
    config: &IftConfig,
    output: &Output,
) -> Result<(), Failure> {
    let (report, study) = api::simulate(preset, replications, config)?;
    let table = results_table(std::slice::from_ref(&study));
    if let Some(dir) = out_dir(output)? {
        fs::write(dir.join("metrics.tsv"), &table)?;
        fs::write(dir.join("report.json"), json(&report)?)?;
    }
    match output.format {
        Format::Json => print!("{}", json(&report)?),
        Format::Text => {
            print!("{table}");
            if report.failed_replications > 0 {
                println!("{} replications failed", report.failed_replications);
            }
        }
    }
    Ok(())
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}
