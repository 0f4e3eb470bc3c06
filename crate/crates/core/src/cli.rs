//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::engine::{
    self, block_deaths_to_csv, records_to_csv, summarize, RegionSource, Scenario, SimConfig, SimError,
};
use crate::epi::EpiParams;
use crate::experiments::{default_seeds, run_experiment, write_outputs, Arm, ExperimentName, ExperimentSpec};
use crate::geo::{generate_synthetic_region, load_region, write_region, RegionSpec};
use crate::kv::{KvError, KvFile};
use crate::policy::Policy;
use crate::synthpop::{agendas_to_csv, population_to_csv, validate_population, PopulationParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "episim", version, about = "Spatial agent-based epidemic simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic region (and its population) into a directory.
    GenRegion {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        setup: Setup,
        #[arg(long, default_value = "region")]
        out: PathBuf,
    },
    /// Run one simulation and write its time series.
    Simulate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        run: RunArgs,
        /// Policy file; no intervention when omitted.
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a multi-seed policy comparison.
    Experiment {
        #[arg(value_enum)]
        which: Which,
        /// Number of seeds, 0..N.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[command(flatten)]
        run: RunArgs,
        /// Policy files for `custom`, one arm each, labelled by file stem.
        #[arg(long)]
        policy: Vec<PathBuf>,
        /// Worker threads; defaults to all cores.
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check a region directory, parameter file or policy file.
    Validate {
        #[arg(long)]
        region: Option<PathBuf>,
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Which {
    ThreeMeasures,
    Containments,
    RealisticActions,
    Custom,
}

#[derive(Debug, Args)]
struct Setup {
    /// Population of the synthetic region.
    #[arg(long)]
    pop: Option<u32>,
    /// Key/value parameter file (region.*, population, epidemic keys).
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, default_value_t = 5500)]
    cycles: u64,
    #[command(flatten)]
    setup: Setup,
    /// Load the region from a directory instead of synthesizing it.
    #[arg(long, conflicts_with = "pop")]
    region: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    initial_infected: u32,
    /// Check conservation and monotonicity every cycle.
    #[arg(long)]
    assert_invariants: bool,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

impl From<KvError> for Failure {
    fn from(e: KvError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Runtime(format!("{}: {e}", path.display()))
}

/// Every key accepted by `--params`.
pub fn param_keys() -> Vec<String> {
    let mut keys: Vec<String> = RegionSpec::KEYS.iter().map(|k| k.to_string()).collect();
    keys.extend(PopulationParams::KEYS.iter().map(|k| k.to_string()));
    keys.extend(EpiParams::known_keys());
    keys
}

/// Applies a parameter file to the region spec, population and epidemic
/// parameters. Unknown keys are rejected.
pub fn apply_params(kv: &KvFile, config: &mut SimConfig) -> Result<(), KvError> {
    let keys = param_keys();
    let known: Vec<&str> = keys.iter().map(String::as_str).collect();
    if let Some(k) = kv.unknown_keys(&known).next() {
        return Err(KvError::UnknownKey(k.to_string()));
    }
    if let RegionSource::Generate(spec) = &mut config.region {
        spec.apply_kv(kv)?;
    } else if let Some(k) = kv.keys().find(|k| k.starts_with("region.")) {
        return Err(KvError::Invalid(format!("{k} has no effect on a loaded region")));
    }
    config.population.apply_kv(kv)?;
    config.epi.apply_kv(kv)?;
    Ok(())
}

fn base_config(setup: &Setup, region: Option<&Path>) -> Result<SimConfig, Failure> {
    let mut config = SimConfig::default();
    if let Some(dir) = region {
        config.region = RegionSource::Load(dir.to_path_buf());
    }
    if let Some(path) = &setup.params {
        apply_params(&KvFile::read(path)?, &mut config)?;
    }
    if let (Some(pop), RegionSource::Generate(spec)) = (setup.pop, &mut config.region) {
        spec.total_population = pop;
    }
    Ok(config)
}

fn run_config(args: &RunArgs) -> Result<SimConfig, Failure> {
    let mut config = base_config(&args.setup, args.region.as_deref())?;
    config.n_cycles = args.cycles;
    config.initial_infected = args.initial_infected;
    config.assert_invariants = args.assert_invariants;
    Ok(config)
}

fn read_policy(path: &Path) -> Result<Policy, Failure> {
    Policy::from_kv(&KvFile::read(path)?).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn write(path: PathBuf, body: &str) -> Result<(), Failure> {
    fs::write(&path, body).map_err(|e| io_failure(&path, e))
}

fn gen_region(seed: u64, setup: &Setup, out: &Path) -> Result<(), Failure> {
    let config = SimConfig {
        seed,
        ..base_config(setup, None)?
    };
    let RegionSource::Generate(spec) = &config.region else {
        unreachable!("base_config without --region synthesizes")
    };
    let region = generate_synthetic_region(spec, seed).map_err(SimError::from)?;
    write_region(out, &region).map_err(SimError::from)?;
    let scenario = Scenario::build(&config)?;
    write(out.join("population.csv"), &population_to_csv(&scenario.individuals))?;
    write(out.join("agendas.csv"), &agendas_to_csv(&scenario.individuals))?;
    println!(
        "wrote {} buildings, {} blocks, {} people to {}",
        region.buildings.len(),
        region.blocks.len(),
        scenario.individuals.len(),
        out.display()
    );
    Ok(())
}

fn simulate(seed: u64, args: &RunArgs, policy: Option<&Path>, out: &Path) -> Result<(), Failure> {
    let mut config = run_config(args)?;
    config.seed = seed;
    if let Some(p) = policy {
        config.policy = read_policy(p)?;
    }
    let records = engine::run(&config)?;
    fs::create_dir_all(out).map_err(|e| io_failure(out, e))?;
    write(out.join("timeseries.csv"), &records_to_csv(&records))?;
    write(out.join("block_deaths.csv"), &block_deaths_to_csv(&records))?;
    let s = summarize(&records);
    println!(
        "peak infected {} at cycle {}, deaths {}, attack rate {:.3}",
        s.peak_infected.0, s.peak_infected.1, s.total_deaths, s.attack_rate
    );
    Ok(())
}

fn experiment(
    which: Which,
    seeds: u64,
    args: &RunArgs,
    policies: &[PathBuf],
    threads: Option<usize>,
    out: &Path,
) -> Result<(), Failure> {
    let base = run_config(args)?;
    if !matches!(which, Which::Custom) && !policies.is_empty() {
        return Err(Failure::Config("--policy only applies to the custom experiment".into()));
    }
    let spec = match which {
        Which::ThreeMeasures => ExperimentSpec::three_measures(base),
        Which::Containments => ExperimentSpec::containments(base),
        Which::RealisticActions => ExperimentSpec::realistic_actions(base),
        Which::Custom => {
            let arms = policies
                .iter()
                .map(|p| {
                    let label = p
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default();
                    Ok(Arm::new(&label, read_policy(p)?))
                })
                .collect::<Result<Vec<_>, Failure>>()?;
            ExperimentSpec::new(ExperimentName::Custom, arms, base)
        }
    }
    .with_seeds(default_seeds(seeds));
    spec.validate()?;

    let result = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Config(e.to_string()))?
            .install(|| run_experiment(&spec))?,
        None => run_experiment(&spec)?,
    };
    let files = write_outputs(&spec, &result, out).map_err(|e| io_failure(out, e))?;
    for (a, label) in result.labels.iter().enumerate() {
        println!(
            "{label}: median peak infected {:.1} at cycle {:.0}, median deaths {:.1}",
            result.median_peak_infected(a),
            result.median_peak_cycle(a),
            result.median_total_deaths(a)
        );
    }
    println!("wrote {} files to {}", files.len(), out.display());
    Ok(())
}

fn validate(region: Option<&Path>, params: Option<&Path>, policy: Option<&Path>, seed: u64) -> Result<(), Failure> {
    if region.is_none() && params.is_none() && policy.is_none() {
        return Err(Failure::Config(
            "nothing to validate: pass --region, --params or --policy".into(),
        ));
    }
    let mut config = SimConfig {
        seed,
        ..SimConfig::default()
    };
    if let Some(path) = params {
        if region.is_some() {
            config.region = RegionSource::Load(PathBuf::new());
        }
        apply_params(&KvFile::read(path)?, &mut config)?;
        config.validate()?;
        println!("{}: ok", path.display());
    }
    if let Some(path) = policy {
        config.policy = read_policy(path)?;
        config.validate()?;
        println!("{}: ok", path.display());
    }
    if let Some(dir) = region {
        let loaded = load_region(dir).map_err(SimError::from)?;
        let mut problems = loaded.validate();
        if problems.is_empty() {
            config.region = RegionSource::Load(dir.to_path_buf());
            let scenario = Scenario::build(&config)?;
            problems.extend(
                validate_population(&scenario.individuals, &scenario.households, &loaded)
                    .into_iter()
                    .map(|v| v.to_string()),
            );
        }
        if !problems.is_empty() {
            for p in &problems {
                eprintln!("{}: {p}", dir.display());
            }
            return Err(Failure::Config(format!(
                "{} problem(s) in {}",
                problems.len(),
                dir.display()
            )));
        }
        println!(
            "{}: ok ({} buildings, {} blocks, population {})",
            dir.display(),
            loaded.buildings.len(),
            loaded.blocks.len(),
            loaded.total_population
        );
    }
    Ok(())
}

/// Parses `args` (program name first) and runs the command.
pub fn run_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let outcome = match &cli.command {
        Command::GenRegion { seed, setup, out } => gen_region(*seed, setup, out),
        Command::Simulate { seed, run, policy, out } => simulate(*seed, run, policy.as_deref(), out),
        Command::Experiment {
            which,
            seeds,
            run,
            policy,
            threads,
            out,
        } => experiment(*which, *seeds, run, policy, *threads, out),
        Command::Validate {
            region,
            params,
            policy,
            seed,
        } => validate(region.as_deref(), params.as_deref(), policy.as_deref(), *seed),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            match &f {
                Failure::Config(m) => eprintln!("configuration error: {m}"),
                Failure::Runtime(m) => eprintln!("error: {m}"),
            }
            f.code()
        }
    }
}

pub fn run() -> ExitCode {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    ExitCode::from(run_with(std::env::args_os()) as u8)
}
