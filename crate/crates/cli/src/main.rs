mod console;

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use gamesys_core::analysis::{
    controllability, expressive_range, render_report, study_design, ExportFormat, OptimizerMode,
};
use gamesys_core::design::{
    load_design, save_design, validate_design, Category, DesignError, GameDesign, ValidationReport,
};
use gamesys_core::evolution::{
    balance, generate, ArgmaxSelector, CandidateSelector, EvolutionConfig, EvolutionError, SamplerCaps,
};
use gamesys_core::sim::{evaluate, Metric, MetricWeights, SimConfig};
use gamesys_service::ServiceConfig;
use serde::de::DeserializeOwned;
use serde::Serialize;

use console::ConsoleSelector;

/// Design, evaluate and evolve game systems.
#[derive(Parser, Debug)]
#[command(name = "gamesys", version)]
struct Cli {
    /// Report errors as JSON on stderr.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a design file and print its validation report.
    Validate { design: PathBuf },
    /// Play a design once and report the metrics.
    Evaluate {
        design: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
        /// Metric weight override, e.g. resourceGains=-100. Repeatable.
        #[arg(long = "weight", value_name = "METRIC=VALUE", value_parser = parse_weight)]
        weights: Vec<(Metric, f64)>,
        #[arg(long, value_enum, default_value_t = TextFormat::Text)]
        format: TextFormat,
    },
    /// Tune a design's numbers, keeping its components.
    Balance {
        design: PathBuf,
        #[command(flatten)]
        evo: EvoArgs,
    },
    /// Evolve a design's structure.
    Generate {
        design: PathBuf,
        #[command(flatten)]
        evo: EvoArgs,
        /// Component category left untouched. Repeatable.
        #[arg(long = "freeze", value_name = "CATEGORY")]
        frozen: Vec<Category>,
        /// JSON file with sampler caps bounding growth.
        #[arg(long)]
        caps: Option<PathBuf>,
    },
    /// Draw random valid designs.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        caps: CapsArgs,
        /// Write one design file per sample here instead of a JSON array on stdout.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Metric distributions over random designs.
    ExpressiveRange {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        caps: CapsArgs,
        /// Play-through length.
        #[arg(long, default_value_t = SimConfig::STUDY_EPOCHS)]
        epochs: u32,
        #[command(flatten)]
        out: ReportArgs,
    },
    /// Whether each metric's weight steers the optimizer.
    Controllability {
        #[arg(long, default_value_t = 10)]
        games: usize,
        #[arg(long)]
        mode: OptimizerMode,
        #[arg(long, default_value_t = -100.0, allow_hyphen_values = true)]
        low: f64,
        #[arg(long, default_value_t = 100.0, allow_hyphen_values = true)]
        high: f64,
        #[arg(long, default_value_t = 12)]
        population: usize,
        #[arg(long, default_value_t = 20)]
        generations: usize,
        #[arg(long, default_value_t = SimConfig::STUDY_EPOCHS)]
        epochs: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON file with the base GA config; flags above override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        out: ReportArgs,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "GAMESYS_LISTEN", default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        #[arg(long, env = "GAMESYS_DATA_DIR", default_value = "data")]
        data_dir: PathBuf,
        /// JSON file with the default play-through config.
        #[arg(long, env = "GAMESYS_SIM_CONFIG")]
        sim_config: Option<PathBuf>,
        /// JSON file with the default GA config.
        #[arg(long, env = "GAMESYS_EVOLUTION_CONFIG")]
        evolution_config: Option<PathBuf>,
    },
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum TextFormat {
    Text,
    Json,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ReportFormat {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct SimArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Play-through length in actions.
    #[arg(long)]
    epochs: Option<u32>,
    /// JSON file with a full play-through config.
    #[arg(long)]
    sim_config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvoArgs {
    /// JSON file with a GA config; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    population: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    mutation_rate: Option<f64>,
    /// Generations between candidate choices. Without --interactive the
    /// fittest candidate is taken; unset, there are no checkpoints.
    #[arg(long)]
    every: Option<usize>,
    #[arg(long)]
    candidates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<u32>,
    #[arg(long = "weight", value_name = "METRIC=VALUE", value_parser = parse_weight)]
    weights: Vec<(Metric, f64)>,
    /// Choose candidates on the console at each checkpoint.
    #[arg(long)]
    interactive: bool,
    /// Also write the best design here.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CapsArgs {
    /// JSON file with sampler caps; flags override it.
    #[arg(long = "caps")]
    file: Option<PathBuf>,
    #[arg(long)]
    max_states: Option<usize>,
    #[arg(long)]
    max_actions: Option<usize>,
    #[arg(long)]
    max_resources: Option<usize>,
    #[arg(long)]
    max_transitions: Option<usize>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
    format: ReportFormat,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_weight(s: &str) -> Result<(Metric, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("`{s}` is not METRIC=VALUE"))?;
    let metric: Metric = name.trim().parse().map_err(|e| format!("{e}"))?;
    let value: f64 = value.trim().parse().map_err(|_| format!("`{value}` is not a number"))?;
    if !value.is_finite() {
        return Err(format!("weight for `{name}` must be finite"));
    }
    Ok((metric, value))
}

/// A bad flag value found after parsing; exits like a clap usage error.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Invalid design on the `validate` path: the report already went to stdout.
#[derive(Debug)]
struct InvalidDesign(ValidationReport);

impl std::fmt::Display for InvalidDesign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "design is invalid ({} error(s))", self.0.errors().count())
    }
}

impl std::error::Error for InvalidDesign {}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())).into())
}

fn read_design(path: &Path) -> Result<GameDesign> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(load_design(&text)?)
}

fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn weights(overrides: &[(Metric, f64)], base: MetricWeights) -> MetricWeights {
    overrides.iter().fold(base, |w, &(m, v)| w.with(m, v))
}

fn sim_config(args: &SimArgs) -> Result<SimConfig> {
    let mut cfg = match &args.sim_config {
        Some(p) => read_json(p)?,
        None => SimConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(e) = args.epochs {
        cfg.max_epochs = e;
    }
    cfg.check().map_err(|e| UsageError(e.to_string()))?;
    Ok(cfg)
}

fn caps(args: &CapsArgs) -> Result<SamplerCaps> {
    let mut caps: SamplerCaps = match &args.file {
        Some(p) => read_json(p)?,
        None => SamplerCaps::default(),
    };
    let set = |slot: &mut usize, v: Option<usize>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut caps.max_states, args.max_states);
    set(&mut caps.max_actions, args.max_actions);
    set(&mut caps.max_resources, args.max_resources);
    set(&mut caps.max_transitions, args.max_transitions);
    caps.check().map_err(|e| UsageError(e.to_string()))?;
    Ok(caps)
}

fn evolution_config(args: &EvoArgs) -> Result<EvolutionConfig> {
    let mut cfg = match &args.config {
        Some(p) => read_json(p)?,
        None => EvolutionConfig::default(),
    };
    if let Some(v) = args.population {
        cfg.population_size = v;
    }
    if let Some(v) = args.generations {
        cfg.generations = v;
    }
    if let Some(v) = args.mutation_rate {
        cfg.mutation_rate = v;
    }
    if let Some(v) = args.candidates {
        cfg.candidates_shown = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.epochs {
        cfg.sim_config.max_epochs = v;
    }
    match args.every {
        Some(k) => cfg.human_every_k = k,
        // Automated runs have no checkpoints unless asked for.
        None if !args.interactive && args.config.is_none() => cfg.human_every_k = 0,
        None => {}
    }
    cfg.weights = weights(&args.weights, cfg.weights);
    Ok(cfg)
}

fn run_evolution(design_path: &Path, args: &EvoArgs, cfg: EvolutionConfig, structural: bool) -> Result<()> {
    let design = read_design(design_path)?;
    cfg.check()?;
    let mut console;
    let mut argmax = ArgmaxSelector;
    let selector: &mut dyn CandidateSelector = if args.interactive {
        console = ConsoleSelector::new(io::stdin().lock(), io::stderr());
        &mut console
    } else {
        &mut argmax
    };
    let outcome =
        if structural { generate(&design, &cfg, selector) } else { balance(&design, &cfg, selector) };
    let result = match outcome {
        Ok(r) => r,
        Err(EvolutionError::SelectorAborted(partial)) => {
            eprintln!("stopped early; reporting the best design so far");
            *partial
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(path) = &args.output {
        emit(&save_design(&result.best_design)?, Some(path))?;
    }
    emit(&pretty(&result), None)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate { design } => {
            let text =
                fs::read_to_string(&design).with_context(|| format!("reading {}", design.display()))?;
            let report = match load_design(&text) {
                Ok(d) => validate_design(&d),
                Err(DesignError::Validation(report)) => report,
                Err(e) => return Err(e.into()),
            };
            emit(&pretty(&report), None)?;
            if !report.valid {
                return Err(InvalidDesign(report).into());
            }
            Ok(())
        }
        Command::Evaluate { design, sim, weights: overrides, format } => {
            let design = read_design(&design)?;
            let cfg = sim_config(&sim)?;
            let w = weights(&overrides, MetricWeights::default());
            let (report, summary) = evaluate(&design, &w, &cfg)?;
            match format {
                TextFormat::Text => emit(&summary, None),
                TextFormat::Json => emit(
                    &pretty(&serde_json::json!({
                        "seed": cfg.seed,
                        "weights": w,
                        "simConfig": cfg,
                        "report": report,
                        "summary": summary,
                    })),
                    None,
                ),
            }
        }
        Command::Balance { design, evo } => {
            let cfg = evolution_config(&evo)?;
            run_evolution(&design, &evo, cfg, false)
        }
        Command::Generate { design, evo, frozen, caps: caps_file } => {
            let mut cfg = evolution_config(&evo)?;
            cfg.frozen_categories.extend(frozen.into_iter().collect::<BTreeSet<_>>());
            if let Some(p) = caps_file {
                cfg.caps = read_json(&p)?;
            }
            run_evolution(&design, &evo, cfg, true)
        }
        Command::Sample { n, seed, caps: caps_args, out_dir } => {
            let caps = caps(&caps_args)?;
            let designs: Vec<GameDesign> =
                (0..n).map(|i| study_design(&caps, seed, i).canonicalized()).collect();
            match out_dir {
                Some(dir) => {
                    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                    for (i, d) in designs.iter().enumerate() {
                        emit(&save_design(d)?, Some(&dir.join(format!("sample-{i:05}.json"))))?;
                    }
                    Ok(())
                }
                None => emit(&pretty(&designs), None),
            }
        }
        Command::ExpressiveRange { n, seed, caps: caps_args, epochs, out } => {
            let caps = caps(&caps_args)?;
            let sim = SimConfig { max_epochs: epochs, ..SimConfig::study() };
            sim.check().map_err(|e| UsageError(e.to_string()))?;
            let report = expressive_range(n, &caps, &sim, seed);
            emit(&render_report(&report, export_format(out.format))?, out.output.as_deref())
        }
        Command::Controllability {
            games,
            mode,
            low,
            high,
            population,
            generations,
            epochs,
            seed,
            config,
            out,
        } => {
            let base: EvolutionConfig = match &config {
                Some(p) => read_json(p)?,
                None => EvolutionConfig { human_every_k: 0, ..EvolutionConfig::default() },
            };
            let evo = EvolutionConfig {
                population_size: population,
                generations,
                sim_config: SimConfig { max_epochs: epochs, ..base.sim_config.clone() },
                ..base
            };
            let report = controllability(games, low, high, mode, &evo, seed)?;
            emit(&render_report(&report, export_format(out.format))?, out.output.as_deref())
        }
        Command::Serve { listen, data_dir, sim_config, evolution_config } => {
            let mut cfg = ServiceConfig { listen, data_dir, ..ServiceConfig::default() };
            if let Some(p) = sim_config {
                cfg.sim = read_json(&p)?;
            }
            if let Some(p) = evolution_config {
                cfg.evolution = read_json(&p)?;
            }
            eprintln!("listening on http://{listen}");
            tokio::runtime::Runtime::new()?.block_on(gamesys_service::serve(cfg))?;
            Ok(())
        }
    }
}

fn export_format(f: ReportFormat) -> ExportFormat {
    match f {
        ReportFormat::Csv => ExportFormat::Csv,
        ReportFormat::Json => ExportFormat::Json,
    }
}

/// Stable code, exit status and optional report for a failure.
fn classify(err: &anyhow::Error) -> (&'static str, u8, Option<&ValidationReport>) {
    if let Some(e) = err.downcast_ref::<InvalidDesign>() {
        return ("VALIDATION_ERROR", 1, Some(&e.0));
    }
    if let Some(e) = err.downcast_ref::<DesignError>() {
        return (e.code(), 1, e.report());
    }
    if err.downcast_ref::<UsageError>().is_some() {
        return ("USAGE_ERROR", 2, None);
    }
    if let Some(e) = err.downcast_ref::<EvolutionError>() {
        return match e {
            EvolutionError::InvalidConfig(_) => (e.code(), 2, None),
            EvolutionError::InvalidDesign(r) => (e.code(), 1, Some(r)),
            _ => (e.code(), 1, None),
        };
    }
    if let Some(e) = err.downcast_ref::<gamesys_core::sim::SimError>() {
        return (e.code(), if e.code() == "INVALID_CONFIG" { 2 } else { 1 }, None);
    }
    if let Some(e) = err.downcast_ref::<gamesys_core::analysis::ExportError>() {
        return (e.code(), 1, None);
    }
    if err.chain().any(|c| c.is::<io::Error>()) {
        return ("IO_ERROR", 1, None);
    }
    ("ERROR", 1, None)
}

fn report_error(err: &anyhow::Error, json: bool) -> ExitCode {
    let (code, status, report) = classify(err);
    let message = format!("{err:#}");
    if json {
        let mut body = serde_json::json!({ "code": code, "message": message });
        if let Some(r) = report {
            body["report"] = serde_json::to_value(r).expect("reports serialize");
        }
        eprintln!("{body}");
    } else {
        eprintln!("error [{code}]: {message}");
        for issue in report.into_iter().flat_map(|r| r.errors()) {
            eprintln!("  {} at {}: {}", issue.code, issue.component_ref, issue.message);
        }
    }
    ExitCode::from(status)
}

fn main() -> ExitCode {
    let json = std::env::args().any(|a| a == "--json");
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if json && e.use_stderr() => {
            let body = serde_json::json!({ "code": "USAGE_ERROR", "message": e.to_string().trim() });
            eprintln!("{body}");
            return ExitCode::from(2);
        }
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report_error(&e, json),
    }
}
