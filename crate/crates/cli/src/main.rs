use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use varprune::pipeline::{self, collect_stats, parse_key_values, DEFAULT_HOLDOUT};
use varprune::synthetic::{self, RedundantLayerSpec};
use varprune::{
    ablate_layer, benchmark, run_job, time_layer, ChannelStats, Criterion, EcMode, Error, JobReport,
    PruneJobConfig, PruneSettings, Result, TensorFile, TimingTable,
};

#[derive(Parser)]
#[command(name = "varprune", version, about = "Post-training pruning for linear layers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Accumulate per-channel activation statistics from an activation dump.
    Stats(StatsArgs),
    /// Prune a checkpoint, writing the pruned tensors, masks and a JSON report.
    Prune(JobArgs),
    /// Pretty-print a JSON report written by `prune`.
    Report {
        path: PathBuf,
        /// Re-emit the report as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Time scoring, masking and compensation per layer.
    Bench(BenchArgs),
    /// Run the baseline, +CVR, +EC_col, +EC_col+row ladder on one layer.
    Ablate(AblateArgs),
}

#[derive(Args)]
struct StatsArgs {
    /// Activation dump, one (samples, d_in) tensor per layer name.
    #[arg(long)]
    activations: PathBuf,
    #[arg(long, short)]
    output: PathBuf,
    /// Trailing fraction of rows left out of the statistics.
    #[arg(long, default_value_t = DEFAULT_HOLDOUT)]
    holdout: f64,
    #[arg(long, default_value_t = 1024)]
    chunk_rows: usize,
}

/// Job settings. Every flag overrides the matching key of `--config`.
#[derive(Args)]
struct JobArgs {
    /// Flat `key = value` file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<String>,
    #[arg(long, short)]
    output: Option<String>,
    #[arg(long)]
    masks: Option<String>,
    #[arg(long)]
    report: Option<String>,
    #[arg(long)]
    stats: Option<String>,
    #[arg(long)]
    activations: Option<String>,
    #[arg(long)]
    holdout: Option<String>,
    /// Comma-separated globs of tensors to prune.
    #[arg(long)]
    filter: Option<String>,
    #[arg(long)]
    exclude: Option<String>,
    /// magnitude, wanda or cvr.
    #[arg(long)]
    criterion: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    /// variance or second-moment.
    #[arg(long)]
    act_factor: Option<String>,
    /// A ratio such as 0.5, or n:m such as 2:4.
    #[arg(long)]
    sparsity: Option<String>,
    /// row or layer.
    #[arg(long)]
    group: Option<String>,
    /// off, col or on.
    #[arg(long)]
    ec: Option<String>,
    #[arg(long)]
    ec_eps: Option<String>,
    #[arg(long)]
    clamp_lo: Option<String>,
    #[arg(long)]
    clamp_hi: Option<String>,
}

impl JobArgs {
    fn overrides(&self) -> [(&'static str, &Option<String>); 19] {
        [
            ("input", &self.input),
            ("output", &self.output),
            ("masks", &self.masks),
            ("report", &self.report),
            ("stats", &self.stats),
            ("activations", &self.activations),
            ("holdout", &self.holdout),
            ("filter", &self.filter),
            ("exclude", &self.exclude),
            ("criterion", &self.criterion),
            ("alpha", &self.alpha),
            ("eps", &self.eps),
            ("act_factor", &self.act_factor),
            ("sparsity", &self.sparsity),
            ("group", &self.group),
            ("ec", &self.ec),
            ("ec_eps", &self.ec_eps),
            ("clamp_lo", &self.clamp_lo),
            ("clamp_hi", &self.clamp_hi),
        ]
    }

    fn key_values(&self) -> Result<BTreeMap<String, String>> {
        let mut map = match &self.config {
            Some(path) => parse_key_values(&read_text(path)?)?,
            None => BTreeMap::new(),
        };
        for (key, value) in self.overrides() {
            if let Some(v) = value {
                map.insert(key.to_string(), v.clone());
            }
        }
        Ok(map)
    }

    fn job(&self) -> Result<PruneJobConfig> {
        PruneJobConfig::from_map(&self.key_values()?)
    }

    fn settings(&self) -> Result<PruneSettings> {
        let mut map = self.key_values()?;
        // Only the settings keys matter; fill in paths so the shared parser
        // accepts the map.
        map.insert("input".into(), "-".into());
        map.insert("output".into(), "-".into());
        map.entry("activations".into()).or_insert_with(|| "-".into());
        Ok(PruneJobConfig::from_map(&map)?.settings)
    }
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    job: JobArgs,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    /// Time a seeded N x N Gaussian layer under wanda and cvr+EC instead of
    /// reading a checkpoint.
    #[arg(long, value_name = "N")]
    synthetic: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct AblateArgs {
    /// Seed of the synthetic redundant-channel layer.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Checkpoint holding the layer; requires --activations and --layer.
    #[arg(long, requires_all = ["activations", "layer"])]
    weights: Option<PathBuf>,
    #[arg(long)]
    activations: Option<PathBuf>,
    #[arg(long)]
    layer: Option<String>,
    #[arg(long, default_value_t = DEFAULT_HOLDOUT)]
    holdout: f64,
    #[arg(long, default_value = "0.5")]
    sparsity: String,
    #[arg(long, default_value_t = varprune::scoring::DEFAULT_ALPHA)]
    alpha: f64,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io {
            path: path.to_path_buf(),
            source: e,
        },
    })
}

fn stats(args: &StatsArgs) -> Result<()> {
    if !(0.0..1.0).contains(&args.holdout) {
        return Err(Error::Config(format!(
            "holdout must lie in [0, 1), got {}",
            args.holdout
        )));
    }
    let acts = TensorFile::read(&args.activations)?;
    let file = collect_stats(&acts, args.holdout, args.chunk_rows)?;
    file.write(&args.output)?;
    for (name, s) in file.layers() {
        println!("{name}: d_in {} count {}", s.d_in(), s.count());
    }
    Ok(())
}

fn prune(args: &JobArgs) -> Result<()> {
    let summary = run_job(&args.job()?)?;
    print!("{}", summary.report);
    println!("output  {}", summary.output.display());
    println!("masks   {}", summary.masks.display());
    println!("report  {}", summary.report_path.display());
    Ok(())
}

fn report(path: &Path, json: bool) -> Result<()> {
    let report = JobReport::read(path)?;
    if json {
        print!("{}", report.to_json());
    } else {
        print!("{report}");
    }
    Ok(())
}

fn bench(args: &BenchArgs) -> Result<()> {
    let table = match args.synthetic {
        Some(n) => bench_synthetic(n, args)?,
        None => benchmark(&args.job.job()?, args.repeats)?,
    };
    print!("{table}");
    Ok(())
}

fn bench_synthetic(n: usize, args: &BenchArgs) -> Result<TimingTable> {
    if n == 0 {
        return Err(Error::Config("synthetic size must be positive".into()));
    }
    let mut rng = synthetic::rng(args.seed);
    let weights = synthetic::gaussian(&mut rng, n, n);
    let stats = ChannelStats::from_batch(&synthetic::gaussian(&mut rng, 256, n))?;
    let base = args.job.settings()?;
    let mut table = TimingTable {
        repeats: args.repeats,
        rows: Vec::new(),
    };
    for (criterion, ec) in [(Criterion::Wanda, EcMode::Off), (Criterion::Cvr, EcMode::On)] {
        let settings = PruneSettings {
            criterion,
            ec,
            ..base
        };
        let timings = time_layer(&weights, Some(&stats), &settings, args.repeats)?;
        table.rows.push(pipeline::TimingRow {
            layer: format!("synthetic/{}", args.seed),
            shape: [n, n],
            criterion,
            ec,
            timings,
        });
    }
    Ok(table)
}

fn ablate(args: &AblateArgs) -> Result<()> {
    let settings = PruneSettings {
        sparsity: args.sparsity.parse()?,
        alpha: args.alpha,
        ..PruneSettings::default()
    };
    let (name, weights, acts) = match (&args.weights, &args.activations, &args.layer) {
        (Some(w), Some(a), Some(layer)) => (
            layer.clone(),
            TensorFile::read(w)?.matrix(layer)?,
            TensorFile::read(a)?.matrix(layer)?,
        ),
        _ => {
            let layer = synthetic::redundant_layer(args.seed, &RedundantLayerSpec::default());
            (
                format!("synthetic/{}", args.seed),
                layer.weights,
                layer.activations,
            )
        }
    };
    let report = ablate_layer(&name, &weights, &acts, args.holdout, &settings)?;
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("report serializes")
        );
    } else {
        print!("{report}");
    }
    Ok(())
}

fn error_line(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": kind, "message": message }).to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let rendered = e.render().to_string();
            let first = rendered
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            eprintln!("{}", error_line("usage", first));
            eprint!("{rendered}");
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::Stats(a) => stats(a),
        Command::Prune(a) => prune(a),
        Command::Report { path, json } => report(path, *json),
        Command::Bench(a) => bench(a),
        Command::Ablate(a) => ablate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(e.kind(), &e.to_string()));
            ExitCode::FAILURE
        }
    }
}
