//! The `replidiv` command line.
//!
//! Exit codes: 0 on success (or a safe verdict), 1 on input or validation
//! failure, 2 when `check` finds the safety condition violated.

mod figure1;

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::Ratio;

use replidiv_core::evaluate_scenario;
use replidiv_core::fault::{abundance_resilience_table, monte_carlo_safety, Execution};
use replidiv_core::ingest::{
    example1_population, load_compromise_model, load_population_spec, load_scenario,
    parse_pool_shares, serialize_population, PoolFormat,
};
use replidiv_core::metrics::{
    distribution_of, entropy_bits, is_kappa_optimal, max_entropy_bits, Grouping,
};
use replidiv_core::population::{ComponentCategory, Population, PowerUnits};
use replidiv_core::registry::{Ack, AttestationRecord, Registry};

pub use figure1::{figure1_csv, figure1_rows, significant, Figure1Row};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_UNSAFE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "replidiv",
    version,
    about = "Replica configuration diversity and fault-independence analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Entropy of a power distribution and its kappa-optimality.
    Entropy(EntropyArgs),
    /// Entropy of a pool snapshot for 1..=x-max residual miners, as CSV.
    Figure1(Figure1Args),
    /// Safety of a population under a fault scenario.
    Check(CheckArgs),
    /// Monte Carlo estimate of the probability that compromised power exceeds f.
    Simulate(SimulateArgs),
    /// Minimum operator corruptions over optimal (kappa, omega) populations, as CSV.
    Prop3(Prop3Args),
    /// Attestation registry backed by an epoch log.
    #[command(subcommand)]
    Registry(RegistryCommand),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InputFormat {
    /// Pool shares, `name,share_percent`.
    Csv,
    /// Pool shares, `[{"name": .., "share_percent": ..}]`.
    Json,
    /// Population document.
    Population,
}

#[derive(Debug, Args)]
struct EntropyArgs {
    /// Input file, `-` for stdin.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    format: InputFormat,
    /// `configuration`, `operator` or `component:CATEGORY`.
    #[arg(long, default_value = "configuration", value_parser = parse_grouping)]
    grouping: Grouping,
    /// Print `entropy_bits,support,max_entropy_bits,kappa_optimal` CSV instead.
    #[arg(long)]
    csv: bool,
    /// Miners splitting the unattributed share of pool inputs.
    #[arg(long, default_value_t = 1)]
    residual_miners: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PoolInput {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct Figure1Args {
    #[arg(long)]
    pools: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: PoolInput,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    x_max: u64,
    /// Output file; stdout when absent or `-`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// Population document.
    #[arg(long)]
    input: PathBuf,
    /// Tolerated power.
    #[arg(long)]
    f: u64,
    #[arg(long)]
    scenario: PathBuf,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Population document.
    #[arg(long)]
    input: PathBuf,
    /// Compromise model document.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    f: u64,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct Prop3Args {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    kappa_max: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    omega_max: u64,
    /// Tolerated fraction of total power, e.g. `1/2`.
    #[arg(long, value_parser = parse_fraction)]
    alpha: Ratio<u64>,
    /// Total power; defaults to the lcm of kappa * omega over the table.
    #[arg(long)]
    total: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum RegistryCommand {
    /// Register every replica of a population document at an epoch.
    Register {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        epoch: u64,
        #[arg(long)]
        input: PathBuf,
    },
    /// Write the population at an epoch (latest by default) as a population document.
    Snapshot {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        epoch: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Entropy of the published distribution with small configuration groups merged.
    Anonymize {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        epoch: Option<u64>,
        /// Minimum power share of a published group, e.g. `1/20`.
        #[arg(long, value_parser = parse_fraction)]
        min_share: Ratio<u64>,
        /// Also print `identity,power_units` rows.
        #[arg(long)]
        csv: bool,
    },
}

fn parse_grouping(s: &str) -> Result<Grouping, String> {
    match s {
        "configuration" => Ok(Grouping::ByConfiguration),
        "operator" => Ok(Grouping::ByOperator),
        _ => match s.strip_prefix("component:") {
            Some(cat) => cat
                .parse::<ComponentCategory>()
                .map(Grouping::ByComponent)
                .map_err(|e| e.to_string()),
            None => Err("expected configuration, operator or component:CATEGORY".into()),
        },
    }
}

fn parse_fraction(s: &str) -> Result<Ratio<u64>, String> {
    let r: Ratio<u64> = s
        .parse()
        .map_err(|_| format!("`{s}` is not a fraction like 1/2"))?;
    if r > Ratio::from_integer(1) {
        return Err(format!("`{s}` is greater than 1"));
    }
    Ok(r)
}

/// Runs the command line `args` (program name first).
pub fn run<I, T>(
    args: I,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(stdout, "{e}");
            return EXIT_OK;
        }
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return EXIT_FAILURE;
        }
    };
    let mut io = Io { stdin, stdout };
    match dispatch(cli.command, &mut io) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            EXIT_FAILURE
        }
    }
}

struct Io<'a> {
    stdin: &'a mut dyn Read,
    stdout: &'a mut dyn Write,
}

impl Io<'_> {
    fn read(&mut self, path: &Path) -> Result<String> {
        if path == Path::new("-") {
            let mut text = String::new();
            self.stdin
                .read_to_string(&mut text)
                .context("reading stdin")?;
            Ok(text)
        } else {
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
        }
    }

    fn emit(&mut self, out: Option<&Path>, text: &str) -> Result<()> {
        match out {
            Some(path) if path != Path::new("-") => {
                fs::write(path, text).with_context(|| format!("writing {}", path.display()))
            }
            _ => self
                .stdout
                .write_all(text.as_bytes())
                .context("writing stdout"),
        }
    }
}

fn dispatch(command: Command, io: &mut Io) -> Result<i32> {
    match command {
        Command::Entropy(a) => entropy(a, io),
        Command::Figure1(a) => {
            let text = io.read(&a.pools)?;
            let format = match a.format {
                PoolInput::Csv => PoolFormat::Csv,
                PoolInput::Json => PoolFormat::Json,
            };
            let shares = parse_pool_shares(&text, format)?;
            let rows = figure1_rows(&shares, a.x_max as usize)?;
            io.emit(a.out.as_deref(), &figure1_csv(&rows))?;
            Ok(EXIT_OK)
        }
        Command::Check(a) => check(a, io),
        Command::Simulate(a) => {
            let pop = load_population_spec(&io.read(&a.input)?)?;
            let model = load_compromise_model(&io.read(&a.model)?)?;
            let est = monte_carlo_safety(
                &pop,
                &model,
                PowerUnits(a.f),
                a.trials,
                a.seed,
                Execution::Parallel,
            )?;
            writeln!(
                io.stdout,
                "p_violation={:.6} half_width_95={:.6} violations={} trials={} seed={}",
                est.estimate, est.half_width, est.violations, est.trials, a.seed
            )?;
            Ok(EXIT_OK)
        }
        Command::Prop3(a) => prop3(a, io),
        Command::Registry(c) => registry(c, io),
    }
}

fn entropy(a: EntropyArgs, io: &mut Io) -> Result<i32> {
    let text = io.read(&a.input)?;
    let pop: Population = match a.format {
        InputFormat::Population => load_population_spec(&text)?,
        InputFormat::Csv | InputFormat::Json => {
            let format = match a.format {
                InputFormat::Csv => PoolFormat::Csv,
                _ => PoolFormat::Json,
            };
            example1_population(&parse_pool_shares(&text, format)?, a.residual_miners)?
        }
    };
    let dist = distribution_of(&pop, a.grouping)?;
    let h = entropy_bits(&dist);
    let support = dist.support_size();
    let max = max_entropy_bits(support)?;
    let optimal = is_kappa_optimal(&dist, support)?;
    if a.csv {
        writeln!(
            io.stdout,
            "entropy_bits,support,max_entropy_bits,kappa_optimal"
        )?;
        writeln!(io.stdout, "{h:.12},{support},{max:.12},{optimal}")?;
    } else {
        writeln!(
            io.stdout,
            "entropy_bits={h:.12} support={support} max={max:.12} kappa_optimal={optimal}"
        )?;
    }
    Ok(EXIT_OK)
}

fn check(a: CheckArgs, io: &mut Io) -> Result<i32> {
    let pop = load_population_spec(&io.read(&a.input)?)?;
    let scenario = load_scenario(&io.read(&a.scenario)?)?;
    let v = evaluate_scenario(&pop, &scenario, PowerUnits(a.f));
    let out = &mut io.stdout;
    writeln!(
        out,
        "k={} f={} total={}",
        scenario.k(),
        a.f,
        pop.total_power()
    )?;
    for (id, power) in &v.per_vulnerability_power {
        writeln!(out, "vulnerability={id} affected={power}")?;
    }
    writeln!(
        out,
        "sum_affected={} sum_condition={}",
        v.sum_affected, v.sum_condition_holds
    )?;
    writeln!(
        out,
        "union_affected={} union_condition={}",
        v.union_affected, v.union_condition_holds
    )?;
    if v.union_condition_holds {
        writeln!(out, "verdict=safe")?;
        Ok(EXIT_OK)
    } else {
        writeln!(out, "verdict=violated")?;
        Ok(EXIT_UNSAFE)
    }
}

fn prop3(a: Prop3Args, io: &mut Io) -> Result<i32> {
    let total = match a.total {
        Some(t) => t,
        None => {
            let mut l = 1u64;
            for k in 1..=a.kappa_max {
                for w in 1..=a.omega_max {
                    l = num_integer::lcm(l, k * w);
                    if l > u64::MAX / 1024 {
                        bail!("default total overflows; pass --total");
                    }
                }
            }
            l
        }
    };
    let table = abundance_resilience_table(
        1..=a.kappa_max as usize,
        1..=a.omega_max as usize,
        PowerUnits(total),
        a.alpha,
    )?;
    let mut csv = String::from("kappa,omega,min_corruptions\n");
    for cell in table {
        let count = cell
            .min_corruptions
            .map_or("unbreakable".to_owned(), |c| c.to_string());
        csv.push_str(&format!("{},{},{count}\n", cell.kappa, cell.omega));
    }
    io.emit(a.out.as_deref(), &csv)?;
    Ok(EXIT_OK)
}

fn load_registry(path: &Path) -> Result<Registry> {
    if !path.exists() {
        return Ok(Registry::new());
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Registry::from_log(&text).with_context(|| format!("replaying {}", path.display()))
}

fn registry_epoch(registry: &Registry, epoch: Option<u64>) -> Result<u64> {
    match epoch.or(registry.latest_epoch()) {
        Some(e) => Ok(e),
        None => bail!("registry is empty"),
    }
}

fn registry(command: RegistryCommand, io: &mut Io) -> Result<i32> {
    match command {
        RegistryCommand::Register { log, epoch, input } => {
            let mut registry = load_registry(&log)?;
            let pop = load_population_spec(&io.read(&input)?)?;
            let (mut stored, mut unchanged) = (0, 0);
            for replica in &pop {
                match registry.register(AttestationRecord::from_replica(replica, epoch))? {
                    Ack::Stored => stored += 1,
                    Ack::Unchanged => unchanged += 1,
                }
            }
            fs::write(&log, registry.to_log())
                .with_context(|| format!("writing {}", log.display()))?;
            writeln!(
                io.stdout,
                "epoch={epoch} stored={stored} unchanged={unchanged}"
            )?;
        }
        RegistryCommand::Snapshot { log, epoch, out } => {
            let registry = load_registry(&log)?;
            let epoch = registry_epoch(&registry, epoch)?;
            let snapshot = registry.snapshot(epoch);
            io.emit(out.as_deref(), &serialize_population(&snapshot.population))?;
        }
        RegistryCommand::Anonymize {
            log,
            epoch,
            min_share,
            csv,
        } => {
            let registry = load_registry(&log)?;
            let epoch = registry_epoch(&registry, epoch)?;
            let raw = distribution_of(
                &registry.snapshot(epoch).population,
                Grouping::ByConfiguration,
            )?;
            let published = registry.anonymized_distribution(epoch, min_share)?;
            writeln!(
                io.stdout,
                "epoch={epoch} groups={} entropy_bits={:.12} raw_entropy_bits={:.12}",
                published.len(),
                entropy_bits(&published),
                entropy_bits(&raw)
            )?;
            if csv {
                writeln!(io.stdout, "identity,power_units")?;
                for (id, w) in published.weights() {
                    writeln!(io.stdout, "{id},{w}")?;
                }
            }
        }
    }
    Ok(EXIT_OK)
}
