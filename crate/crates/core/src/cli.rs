//! Command-line interface: `synth`, `cluster`, `assess` and `estimate`.

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::clustering::{extract_profiles, kmeans_with_restarts, objective_sweep};
use crate::config::{RunConfig, ServiceRange};
use crate::error::{Error, Result};
use crate::estimation::{estimate_days, load_queries, FarGuard};
use crate::ingest::{load_dataset_with, supported_schema, synth_dataset, GapPolicy, IngestOptions, MeterFormat};
use crate::report;
use crate::riskassess::{assess, AssessOptions};
use crate::thermal::TransformerSpec;

pub const MODEL_FILE: &str = "model.json";
pub const SWEEP_FILE: &str = "objective_sweep.csv";

const EXIT_CODES: &str = "\
Exit codes:
  0   success
  2   usage or configuration error
  3   file could not be read or written
  4   malformed input (CSV, JSON, schema)
  5   unusable data (gaps, empty coverage, missing profiles)
  6   fewer records than clusters
  7   no feasible loading scale (limits broken at zero load)
  8   query far from every cluster (strict mode)
  9   thermal simulation did not converge
  10  invalid transformer spec or day profile
  11  internal invariant violated";

#[derive(Debug, Parser)]
#[command(name = "txrisk", version, about = "Overloading risk assessment for residential transformer fleets", after_help = EXIT_CODES)]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all processors).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Refuse estimates for queries outside the model's support.
    #[arg(long, global = true)]
    pub strict: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic weather, meter and calendar files.
    Synth(SynthArgs),
    /// Cluster per-service daily records and write the model.
    Cluster(ClusterArgs),
    /// Thresholds, month distribution and service-count studies.
    Assess(AssessArgs),
    /// Estimate temperatures for an unmetered transformer.
    Estimate(EstimateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MeterArg {
    Hourly,
    DailyEnergy,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub services: Option<usize>,
    #[arg(long)]
    pub days: Option<usize>,
    #[arg(long, value_name = "YYYY-MM-DD")]
    pub start_date: Option<NaiveDate>,
    #[arg(long, value_enum)]
    pub meter_format: Option<MeterArg>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Directory holding weather.csv, meter.csv and calendar.csv.
    #[arg(long, value_name = "DIR")]
    pub data: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub weather: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub meter: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub calendar: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Also write the objective for each k in A..B.
    #[arg(long, value_name = "A..B")]
    pub k_sweep: Option<ServiceRange>,
    /// Treat any incomplete day as an error instead of interpolating.
    #[arg(long)]
    pub strict_gaps: bool,
}

#[derive(Debug, Args)]
pub struct AssessArgs {
    #[arg(long, value_name = "PATH")]
    pub spec: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    /// Service counts to study, inclusive.
    #[arg(long, value_name = "A..B")]
    pub n_range: Option<ServiceRange>,
    /// Acceptable economic loss per transformer per year.
    #[arg(long)]
    pub budget: Option<f64>,
    /// Length of the study window (default: span of the model's dates).
    #[arg(long)]
    pub years: Option<f64>,
    /// Also draw the month distribution chart.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long, value_name = "PATH")]
    pub spec: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
    /// CSV of days: date,t_max_c,t_min_c,t_avg_c,l_avg_kva,weekday.
    #[arg(long, value_name = "PATH")]
    pub query: Option<PathBuf>,
    /// Services connected to the transformer.
    #[arg(long)]
    pub services: Option<usize>,
}

pub fn exit_code(error: &Error) -> u8 {
    match error {
        Error::Config(_) => 2,
        Error::Io { .. } => 3,
        Error::Parse { .. }
        | Error::Json { .. }
        | Error::Csv(_)
        | Error::SchemaMismatch(_)
        | Error::InvalidSchema(_) => 4,
        Error::Gap { .. }
        | Error::EmptyIntersection
        | Error::EmptyDataset
        | Error::MissingProfile { .. }
        | Error::KeyMismatch(_)
        | Error::OutOfRange { .. }
        | Error::EmptyMembers => 5,
        Error::TooFewPoints { .. } => 6,
        Error::NoFeasibleScale { .. } => 7,
        Error::FarFromAllClusters { .. } => 8,
        Error::NonConvergence { .. } => 9,
        Error::InvalidSpec(_) | Error::InvalidProfile(_) | Error::ZeroServices => 10,
        Error::Invariant(_) => 11,
    }
}

fn override_opt<T: Clone>(slot: &mut Option<T>, flag: &Option<T>) {
    if flag.is_some() {
        *slot = flag.clone();
    }
}

fn override_val<T: Clone>(slot: &mut T, flag: &Option<T>) {
    if let Some(v) = flag {
        *slot = v.clone();
    }
}

/// Merges the config file (if any) with the flags; flags win.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut c = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    override_val(&mut c.seed, &cli.seed);
    override_val(&mut c.out, &cli.out);
    override_opt(&mut c.threads, &cli.threads);
    c.strict |= cli.strict;
    match &cli.command {
        Command::Synth(a) => {
            override_val(&mut c.synth.services, &a.services);
            override_val(&mut c.synth.days, &a.days);
            override_val(&mut c.synth.start_date, &a.start_date);
            if let Some(f) = a.meter_format {
                c.synth.meter_format = match f {
                    MeterArg::Hourly => MeterFormat::Hourly,
                    MeterArg::DailyEnergy => MeterFormat::DailyEnergy,
                };
            }
        }
        Command::Cluster(a) => {
            override_opt(&mut c.data, &a.data.data);
            override_opt(&mut c.weather, &a.data.weather);
            override_opt(&mut c.meter, &a.data.meter);
            override_opt(&mut c.calendar, &a.data.calendar);
            override_val(&mut c.k, &a.k);
            override_val(&mut c.restarts, &a.restarts);
            if a.strict_gaps {
                c.gap_policy = GapPolicy::Strict;
            }
        }
        Command::Assess(a) => {
            override_opt(&mut c.spec, &a.spec);
            override_opt(&mut c.model, &a.model);
            override_val(&mut c.n_range, &a.n_range);
            override_val(&mut c.budget, &a.budget);
            override_opt(&mut c.years, &a.years);
            c.chart |= a.svg;
        }
        Command::Estimate(a) => {
            override_opt(&mut c.spec, &a.spec);
            override_opt(&mut c.model, &a.model);
            override_opt(&mut c.query, &a.query);
            override_opt(&mut c.services, &a.services);
        }
    }
    c.validate()?;
    Ok(c)
}

fn cmd_synth(c: &RunConfig) -> Result<()> {
    let files = synth_dataset(c.seed, &c.synth, &c.out)?;
    println!(
        "wrote {}, {} and {}",
        files.weather.display(),
        files.meter.display(),
        files.calendar.display()
    );
    Ok(())
}

fn cmd_cluster(c: &RunConfig, k_sweep: Option<ServiceRange>) -> Result<()> {
    supported_schema(&c.features)?;
    let (weather, meter, calendar) = c.dataset_paths()?;
    let options = IngestOptions {
        gap_policy: c.gap_policy,
    };
    let dataset = load_dataset_with(&weather, &meter, &calendar, &options)?;
    let records = dataset.feature_vectors(&c.features)?;
    let mut model = kmeans_with_restarts(&records, c.k, &c.features, c.seed, c.restarts)?;
    let raw = dataset.raw_profiles();
    if raw.is_empty() {
        log::warn!("meter file has no hourly readings; the model carries no 24-hour profiles and cannot be assessed");
    } else {
        model.profiles = extract_profiles(&model, &raw)?;
    }
    let model_path = report::write_text(&c.out, MODEL_FILE, &model.to_json())?;
    report::write_text(&c.out, report::COMPOSITION_FILE, &report::composition_csv(&model))?;
    if let Some(range) = k_sweep {
        let mut text = String::from("k,objective\n");
        for (k, obj) in objective_sweep(&records, range.to_range(), &c.features, c.seed, c.restarts)? {
            text.push_str(&format!("{k},{obj:.6}\n"));
        }
        report::write_text(&c.out, SWEEP_FILE, &text)?;
    }
    println!(
        "{} records, {} clusters, objective {:.4}; wrote {}",
        records.len(),
        model.k,
        model.objective,
        model_path.display()
    );
    Ok(())
}

fn cmd_assess(c: &RunConfig) -> Result<()> {
    let spec = TransformerSpec::load(RunConfig::require(&c.spec, "--spec")?)?;
    let model = crate::clustering::ClusterModel::load(RunConfig::require(&c.model, "--model")?)?;
    let options = AssessOptions {
        search: c.search,
        n_range: c.n_range.to_range(),
        budget: c.budget,
        years: c.years,
    };
    let result = assess(&spec, &model, &options)?;
    report::write_assessment(&c.out, &result, c.chart)?;
    let show = |n: Option<usize>| n.map_or("none".to_string(), |n| n.to_string());
    println!(
        "max services by temperature: {}; by life loss: {}; reports in {}",
        show(result.temperature.max_services),
        show(result.life.max_services),
        c.out.display()
    );
    Ok(())
}

fn cmd_estimate(c: &RunConfig) -> Result<()> {
    let spec = TransformerSpec::load(RunConfig::require(&c.spec, "--spec")?)?;
    let model = crate::clustering::ClusterModel::load(RunConfig::require(&c.model, "--model")?)?;
    let days = load_queries(RunConfig::require(&c.query, "--query")?)?;
    let services = c
        .services
        .ok_or_else(|| Error::Config("--services is required".into()))?;
    let guard = if c.strict { FarGuard::Strict } else { FarGuard::Lenient };
    let rows = estimate_days(&days, &model, &spec, services, guard)?;
    let path = report::write_text(&c.out, report::ESTIMATES_FILE, &report::estimates_csv(&rows))?;
    let flagged = rows.iter().filter(|r| r.far_flag).count();
    println!(
        "{} days estimated ({flagged} flagged far); wrote {}",
        rows.len(),
        path.display()
    );
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    let config = resolve_config(cli)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Synth(_) => cmd_synth(&config),
        Command::Cluster(a) => cmd_cluster(&config, a.k_sweep),
        Command::Assess(_) => cmd_assess(&config),
        Command::Estimate(_) => cmd_estimate(&config),
    })
}

/// Parses `args`, runs the command and maps failures to exit codes with a
/// one-line diagnostic on stderr.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"k": 4, "seed": 9, "budget": 300}"#).unwrap();
        let cli = Cli::try_parse_from([
            "txrisk",
            "--config",
            path.to_str().unwrap(),
            "--seed",
            "3",
            "cluster",
            "--k",
            "6",
        ])
        .unwrap();
        let c = resolve_config(&cli).unwrap();
        assert_eq!((c.k, c.seed, c.budget), (6, 3, 300.0));
    }

    #[test]
    fn bad_range_is_a_usage_error() {
        assert!(Cli::try_parse_from(["txrisk", "assess", "--n-range", "9..3"]).is_err());
    }

    #[test]
    fn every_error_class_has_a_distinct_nonzero_code() {
        let samples = [
            Error::Config(String::new()),
            Error::io("x", std::io::Error::other("x")),
            Error::Parse {
                path: "x".into(),
                line: 1,
                column: String::new(),
                message: String::new(),
            },
            Error::EmptyIntersection,
            Error::TooFewPoints { points: 1, k: 2 },
            Error::NoFeasibleScale { cluster_id: 1 },
            Error::FarFromAllClusters {
                nearest: 1.0,
                threshold: 0.5,
            },
            Error::NonConvergence {
                sweeps: 200,
                last_change: 1.0,
            },
            Error::InvalidSpec(String::new()),
            Error::Invariant(String::new()),
        ];
        let codes: std::collections::BTreeSet<u8> = samples.iter().map(exit_code).collect();
        assert_eq!(codes.len(), samples.len());
        assert!(!codes.contains(&0));
    }
}
