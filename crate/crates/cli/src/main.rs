use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use exdyna::runner::{compare, format_comparison, write_csv, RunConfig, RunError, SparsifierName};

/// Simulate block-partitioned gradient sparsification on a deterministic
/// multi-worker SGD loop.
#[derive(Parser, Debug)]
#[command(name = "exdyna", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment and write its per-iteration metrics as CSV.
    Run {
        /// exdyna | exdyna-static | topk | cltk | hardthreshold
        #[arg(long)]
        sparsifier: Option<String>,
        /// Metrics CSV path; the run summary goes next to it. Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Run several sparsifiers on the same stream and seed and print a
    /// side-by-side summary.
    Compare {
        /// At least two sparsifier names.
        sparsifiers: Vec<String>,
        /// Directory for one CSV per sparsifier.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        settings: Settings,
    },
}

#[derive(Args, Debug, Default)]
struct Settings {
    /// key = value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Gradient vector length n_g.
    #[arg(long)]
    gradients: Option<usize>,
    #[arg(long)]
    density: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    /// Block count n_b (default 64 per worker).
    #[arg(long)]
    blocks: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    blk_move: Option<usize>,
    #[arg(long)]
    min_blk: Option<usize>,
    /// Initial threshold (default: estimated from the first iteration).
    #[arg(long)]
    delta0: Option<f64>,
    /// Threshold of the hard-threshold sparsifier.
    #[arg(long)]
    fixed_delta: Option<f64>,
    /// synthetic | quadratic | logistic
    #[arg(long)]
    workload: Option<String>,
    /// Freeze the initial partition topology.
    #[arg(long)]
    static_partitions: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    eta: Option<f64>,
    /// f32 | f64
    #[arg(long)]
    precision: Option<String>,
    /// Comma-separated segment scales of the synthetic stream.
    #[arg(long)]
    scales: Option<String>,
    /// Skip the per-iteration invariant checks.
    #[arg(long)]
    no_verify: bool,
    /// Any other setting, as key=value. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Settings {
    fn resolve(&self, sparsifier: Option<&str>) -> Result<RunConfig, RunError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_text(&fs::read_to_string(path)?)?,
            None => RunConfig::default(),
        };
        let mut pairs: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                pairs.push((k.to_string(), v));
            }
        };
        put("sparsifier", sparsifier.map(str::to_string));
        put("workers", self.workers.map(|v| v.to_string()));
        put("gradients", self.gradients.map(|v| v.to_string()));
        put("density", self.density.map(|v| v.to_string()));
        put("iters", self.iters.map(|v| v.to_string()));
        put("blocks", self.blocks.map(|v| v.to_string()));
        put("alpha", self.alpha.map(|v| v.to_string()));
        put("beta", self.beta.map(|v| v.to_string()));
        put("gamma", self.gamma.map(|v| v.to_string()));
        put("blk-move", self.blk_move.map(|v| v.to_string()));
        put("min-blk", self.min_blk.map(|v| v.to_string()));
        put("delta0", self.delta0.map(|v| v.to_string()));
        put("fixed-delta", self.fixed_delta.map(|v| v.to_string()));
        put("workload", self.workload.clone());
        put("static-partitions", self.static_partitions.then(|| "true".to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        put("eta", self.eta.map(|v| v.to_string()));
        put("precision", self.precision.clone());
        put("scales", self.scales.clone());
        put("verify", self.no_verify.then(|| "false".to_string()));
        for kv in &self.set {
            let Some((k, v)) = kv.split_once('=') else {
                return Err(RunError::Usage(format!("--set expects KEY=VALUE, got `{kv}`")));
            };
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        for (k, v) in pairs {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }
}

fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.txt")
}

fn run(sparsifier: Option<&str>, out: Option<&Path>, settings: &Settings) -> Result<(), RunError> {
    let cfg = settings.resolve(sparsifier)?;
    cfg.prepare()?;
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }
    let result = cfg.execute()?;
    match out {
        Some(path) => {
            write_csv(&result.rows, BufWriter::new(File::create(path)?))?;
            let summary = result.summary();
            fs::write(summary_path(path), &summary)?;
            print!("{summary}");
        }
        None => {
            write_csv(&result.rows, BufWriter::new(io::stdout().lock()))?;
            eprint!("{}", result.summary());
        }
    }
    Ok(())
}

fn run_compare(names: &[String], out: Option<&Path>, settings: &Settings) -> Result<(), RunError> {
    let sparsifiers = names
        .iter()
        .map(|n| n.parse::<SparsifierName>().map_err(|e| RunError::Usage(format!("`{n}`: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if sparsifiers.len() < 2 {
        return Err(RunError::Usage(format!(
            "compare needs at least two sparsifiers, got {}",
            sparsifiers.len()
        )));
    }
    let base = settings.resolve(None)?;
    base.prepare()?;
    let runs = compare(&base, &sparsifiers)?;
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        for result in &runs {
            let path = dir.join(format!("{}.csv", result.config.sparsifier));
            write_csv(&result.rows, BufWriter::new(File::create(&path)?))?;
            fs::write(summary_path(&path), result.summary())?;
        }
    }
    let mut stdout = io::stdout().lock();
    writeln!(stdout, "workers = {}, gradients = {}, density = {}, iters = {}, seed = {}",
        base.workers, base.gradients, base.density, base.iters, base.seed)?;
    write!(stdout, "{}", format_comparison(&runs))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { sparsifier, out, settings } => run(sparsifier.as_deref(), out.as_deref(), settings),
        Command::Compare { sparsifiers, out, settings } => run_compare(sparsifiers, out.as_deref(), settings),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                RunError::Io(_) | RunError::Engine(_) => ExitCode::FAILURE,
                _ => ExitCode::from(2),
            }
        }
    }
}
