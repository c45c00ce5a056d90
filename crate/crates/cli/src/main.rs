//! `infoflow` command-line pipeline.
//!
//! Every stage reads its inputs from flags or a `--config` TOML file and
//! writes into `<out>/<stage>/`. Later stages read earlier stage outputs
//! from the same directory; `report` bundles them with a manifest.

mod config;
mod error;
mod output;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::PipelineConfig;
use error::{CliError, Result};

#[derive(Parser)]
#[command(name = "infoflow", version, about = "Topic flow analysis across news sites and channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load JSONL corpus files into a unit store.
    Ingest(Flags),
    /// Check EMB1 files for structural and norm problems.
    ValidateEmb(Flags),
    /// Fit DP-Means topic clusters.
    Cluster(Flags),
    /// Platform similarity matrix and most-similar channels.
    Similarity(Flags),
    /// First-posted percentages and spread curves.
    Flow(Flags),
    /// Hawkes ecosystem fit and influence reports.
    Influence(Flags),
    /// Threshold precision sweep over labeled pairs.
    Sweep(Flags),
    /// Bundle stage outputs with a manifest.
    Report(Flags),
    /// Write the synthetic fixture corpus, embeddings and labels.
    Synth(SynthArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct Flags {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, num_args = 1..)]
    corpus: Vec<PathBuf>,
    #[arg(long, num_args = 1..)]
    emb: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    exclude: Option<PathBuf>,
    #[arg(long)]
    max_lag: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    min_events: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    pooled: bool,
    #[arg(long)]
    aggregate_map: Option<String>,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    renormalize: bool,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    dump_models: bool,
}

#[derive(Args, Debug, Clone)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2022)]
    seed: u64,
    #[arg(long, default_value_t = 185)]
    topics: usize,
}

impl Flags {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut c = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if !self.corpus.is_empty() {
            c.paths.corpus = self.corpus.clone();
        }
        if !self.emb.is_empty() {
            c.paths.emb = self.emb.clone();
        }
        macro_rules! set {
            ($flag:expr, $field:expr) => {
                if let Some(v) = $flag.clone() {
                    $field = v;
                }
            };
        }
        set!(self.tau, c.similarity.tau);
        set!(self.lambda, c.cluster.lambda);
        set!(self.max_lag, c.hawkes.max_lag);
        set!(self.iters, c.hawkes.iters);
        set!(self.burn_in, c.hawkes.burn_in);
        set!(self.min_events, c.hawkes.min_events);
        set!(self.seed, c.seed);
        if self.out.is_some() {
            c.paths.out = self.out.clone();
        }
        if self.exclude.is_some() {
            c.paths.exclude = self.exclude.clone();
        }
        if self.aggregate_map.is_some() {
            c.paths.aggregate_map = self.aggregate_map.clone();
        }
        if self.report.is_some() {
            c.paths.report = self.report.clone();
        }
        if self.labels.is_some() {
            c.paths.labels = self.labels.clone();
        }
        if self.threads.is_some() {
            c.threads = self.threads;
        }
        c.hawkes.pooled |= self.pooled;
        c.hawkes.dump_models |= self.dump_models;
        c.emb.renormalize |= self.renormalize;
        c.validate()?;
        Ok(c)
    }
}

fn run(cli: Cli) -> Result<()> {
    let (flags, stage): (Flags, fn(&PipelineConfig) -> Result<()>) = match cli.command {
        Command::Synth(a) => return stages::synth(&a.out, a.seed, a.topics),
        Command::Ingest(f) => (f, stages::ingest),
        Command::ValidateEmb(f) => (f, stages::validate_emb),
        Command::Cluster(f) => (f, stages::cluster),
        Command::Similarity(f) => (f, stages::similarity),
        Command::Flow(f) => (f, stages::flow),
        Command::Influence(f) => (f, stages::influence),
        Command::Sweep(f) => (f, stages::sweep),
        Command::Report(f) => (f, stages::report),
    };
    let cfg = flags.resolve()?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    stage(&cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
