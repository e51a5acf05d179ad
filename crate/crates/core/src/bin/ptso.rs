use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ptso::harness::{self, metrics, ExperimentConfig};
use ptso::optim::{self, bench, Algorithm, PtsoConfig};
use ptso::qnorm::StrategyKind;
use ptso::{Error, LabelVector};

#[derive(Parser)]
#[command(name = "ptso", version, about = "Tabular classification pipeline and PTSO optimizer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline described by a config file and print the report.
    Pipeline(PipelineArgs),
    /// Score predicted labels against true labels.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        /// Column holding the labels (default: the last column).
        #[arg(long)]
        label_col: Option<String>,
    },
    /// Benchmark an optimizer over several seeds; prints JSON.
    Bench {
        #[arg(long, default_value = "ptso")]
        algo: Algorithm,
        #[arg(long = "fn", default_value = "sphere")]
        function: String,
        #[arg(long, default_value_t = 10)]
        dim: usize,
        #[arg(long, default_value_t = 5000)]
        evals: usize,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long, default_value_t = 30)]
        population: usize,
    },
    /// Minimize one benchmark function once; prints JSON.
    Optimize {
        #[arg(long = "fn")]
        function: String,
        #[arg(long, default_value_t = 10)]
        dim: usize,
        #[arg(long, default_value_t = 5000)]
        evals: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "ptso")]
        algo: Algorithm,
    },
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a per-seed CSV table.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    label_col: Option<String>,
    #[arg(long)]
    qnorm: Option<StrategyKind>,
    #[arg(long)]
    batch_col: Option<String>,
    #[arg(long)]
    fused_dim: Option<usize>,
    #[arg(long)]
    dmn_depth: Option<usize>,
    #[arg(long)]
    dmn_pieces: Option<usize>,
    #[arg(long)]
    dmn_epochs: Option<usize>,
    #[arg(long)]
    smote_k: Option<usize>,
    /// Replaces the configured seed list with this single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Built-in profile name or profile file.
    #[arg(long)]
    profile: Option<String>,
}

fn pipeline(a: PipelineArgs) -> ptso::Result<()> {
    let mut c = ExperimentConfig::load(&a.config)?;
    if let Some(v) = a.label_col {
        c.label_column = v;
    }
    if let Some(v) = a.qnorm {
        c.qnorm.strategy = v;
    }
    if let Some(v) = a.batch_col {
        c.batch_column = Some(v);
    }
    if let Some(v) = a.fused_dim {
        c.fusion.fused_count = Some(v);
    }
    if let Some(v) = a.dmn_depth {
        c.fusion.depth = v;
    }
    if let Some(v) = a.dmn_pieces {
        c.fusion.pieces = v;
    }
    if let Some(v) = a.dmn_epochs {
        c.fusion.epochs = v;
    }
    if let Some(v) = a.smote_k {
        c.smote.neighbors = v;
    }
    if let Some(v) = a.seed {
        c.seeds = vec![v];
    }
    if let Some(v) = a.profile {
        c.classifier.profile = v;
    }
    let report = harness::run_pipeline(&c)?;
    match a.out {
        Some(path) => {
            harness::emit_report(&report, &path, a.csv.as_deref())?;
            eprint!("{}", report.summary_table());
        }
        None => {
            if let Some(csv) = a.csv {
                std::fs::write(&csv, report.to_csv()).map_err(|e| Error::Io { path: csv, source: e })?;
            }
            println!("{}", report.to_json());
        }
    }
    Ok(())
}

fn read_labels(path: &PathBuf, column: Option<&str>) -> ptso::Result<LabelVector> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let idx = match column {
        Some(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingLabelColumn(name.to_owned()))?,
        None => headers.len().checked_sub(1).ok_or(Error::EmptyData)?,
    };
    let mut labels = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let cell = rec.get(idx).unwrap_or("").trim();
        labels.push(ptso::tabular::parse_label(cell).ok_or_else(|| Error::BadCell {
            row: i + 1,
            column: headers[idx].to_owned(),
            value: cell.to_owned(),
        })?);
    }
    if labels.is_empty() {
        return Err(Error::EmptyData);
    }
    LabelVector::new(labels)
}

#[derive(Serialize)]
struct EvalOutput {
    counts: metrics::ConfusionCounts,
    scores: metrics::Scores,
}

fn eval(pred: PathBuf, truth: PathBuf, col: Option<String>) -> ptso::Result<()> {
    let p = read_labels(&pred, col.as_deref())?;
    let t = read_labels(&truth, col.as_deref())?;
    let counts = metrics::confusion(&p, &t, metrics::CARRIER)?;
    let out = EvalOutput {
        counts,
        scores: metrics::Scores::from_counts(&counts),
    };
    println!("{}", serde_json::to_string_pretty(&out).expect("serializes"));
    Ok(())
}

#[derive(Serialize)]
struct BenchRun {
    seed: u64,
    best_fitness: f64,
    evaluations_used: usize,
    history: Vec<f64>,
}

fn run_once(algo: Algorithm, f: &str, dim: usize, cfg: &PtsoConfig) -> ptso::Result<optim::OptimizationResult> {
    let objective = bench::benchmark_objective(f, dim)?;
    let bounds = objective.function.default_bounds(dim)?;
    optim::run(&objective, cfg, &bounds, algo)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Pipeline(a) => pipeline(a),
        Command::Eval { pred, truth, label_col } => eval(pred, truth, label_col),
        Command::Bench {
            algo,
            function,
            dim,
            evals,
            seeds,
            population,
        } => (0..seeds)
            .map(|seed| {
                let cfg = PtsoConfig {
                    max_evaluations: evals,
                    population_size: population,
                    seed,
                    ..PtsoConfig::default()
                };
                run_once(algo, &function, dim, &cfg).map(|r| BenchRun {
                    seed,
                    best_fitness: r.best_fitness,
                    evaluations_used: r.evaluations_used,
                    history: r.history,
                })
            })
            .collect::<ptso::Result<Vec<_>>>()
            .map(|runs| println!("{}", serde_json::to_string(&runs).expect("serializes"))),
        Command::Optimize {
            function,
            dim,
            evals,
            seed,
            algo,
        } => {
            let cfg = PtsoConfig {
                max_evaluations: evals,
                seed,
                ..PtsoConfig::default()
            };
            run_once(algo, &function, dim, &cfg).map(|r| {
                let out = serde_json::json!({
                    "best_fitness": r.best_fitness,
                    "best_position": r.best_position,
                    "evaluations_used": r.evaluations_used,
                });
                println!("{}", serde_json::to_string_pretty(&out).expect("serializes"));
            })
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
