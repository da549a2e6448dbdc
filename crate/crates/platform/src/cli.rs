//! The `tdu` command line. Every verb except `serve` works offline on the
//! data directory.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tdu_core::compiler::{compile_policy, detect_conflicts, merge_theories, ConflictReport};
use tdu_core::data::{generate_synthetic, write_readings, SyntheticConfig, TransformSpec, Window};
use tdu_core::enforcement::{ConsumerRequest, Outcome, TargetSelector, DEFAULT_ACTOR};
use tdu_core::ledger::{as_data_item, HistoryFilter};
use tdu_core::scenario;
use tdu_core::tduo::{
    parse_usage_policy, serialize_data_item, sniff_format, AbstractionLevel, ActorClass, Format,
    PurposeLevel, SpatialLevel, TemporalLevel, UsagePolicy,
};

use crate::bench::{self, Mode};
use crate::{service, Config, Platform, PlatformError, Query};

#[derive(Debug, Parser)]
#[command(
    name = "tdu",
    version,
    about = "Trusted data usage: policies, data, requests and the usage ledger"
)]
pub struct Cli {
    /// Configuration file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Data directory; overrides the configuration.
    #[arg(long, global = true)]
    pub data_dir: Option<PathBuf>,
    /// Ledger file; overrides the configuration.
    #[arg(long, global = true)]
    pub ledger: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Register, list and check usage policies.
    #[command(subcommand)]
    Policy(PolicyCommand),
    /// Import, generate and transform readings.
    #[command(subcommand)]
    Data(DataCommand),
    /// Decide consumer requests.
    #[command(subcommand)]
    Request(RequestCommand),
    /// Query the usage ledger.
    #[command(subcommand)]
    Ledger(LedgerCommand),
    /// Measure trust enforcement time.
    Bench(BenchArgs),
    /// Serve the HTTP endpoints.
    Serve {
        #[arg(long)]
        port: Option<u16>,
    },
}

#[derive(Debug, Subcommand)]
pub enum PolicyCommand {
    /// Register policy documents (XML or JSON).
    Add {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// List registered policies.
    List {
        #[arg(long)]
        json: bool,
    },
    /// Compile and report unordered clashing rules, of the registered
    /// policies unless files or `--scenario` are given.
    Check {
        #[arg(long)]
        scenario: bool,
        files: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Xml,
}

#[derive(Debug, Args)]
pub struct Levels {
    #[arg(long)]
    pub spatial: SpatialLevel,
    #[arg(long)]
    pub temporal: TemporalLevel,
    #[arg(long)]
    pub abstraction: AbstractionLevel,
}

#[derive(Debug, Args)]
pub struct Selection {
    /// Window start, seconds since the epoch (inclusive).
    #[arg(long)]
    pub from: Option<i64>,
    /// Window end, seconds since the epoch (exclusive).
    #[arg(long)]
    pub to: Option<i64>,
    #[arg(long)]
    pub entity_type: Option<String>,
    /// Entity id pattern; `*` matches any run of characters.
    #[arg(long)]
    pub id_pattern: Option<String>,
}

impl Selection {
    fn window(&self) -> Option<Window> {
        (self.from.is_some() || self.to.is_some()).then(|| {
            let all = Window::all();
            Window::new(self.from.unwrap_or(all.start), self.to.unwrap_or(all.end))
        })
    }

    fn target(&self) -> TargetSelector {
        TargetSelector {
            entity_type: self.entity_type.clone(),
            id_pattern: self.id_pattern.clone(),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum DataCommand {
    /// Import readings from CSV (`-` for standard input).
    Ingest { file: PathBuf },
    /// Write seeded synthetic readings as CSV.
    Gen {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 2)]
        zones: usize,
        #[arg(long, default_value_t = 3)]
        streets: usize,
        /// First timestamp, seconds since the epoch.
        #[arg(long, default_value_t = SyntheticConfig::default().start)]
        start: i64,
        #[arg(long, default_value_t = 28)]
        days: i64,
        /// Output file; standard output if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Release stored readings at the given levels, without consulting
    /// policies.
    Transform {
        #[command(flatten)]
        levels: Levels,
        #[command(flatten)]
        selection: Selection,
        #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
        format: OutputFormat,
    },
}

#[derive(Debug, Subcommand)]
pub enum RequestCommand {
    /// Decide a request, release the granted data and record it.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Claimed actor class (DO, MA or CO).
    #[arg(long)]
    pub actor: ActorClass,
    /// Requesting subject; defaults to the first registered subject of the
    /// actor class.
    #[arg(long)]
    pub subject: Option<String>,
    #[command(flatten)]
    pub levels: Levels,
    #[arg(long)]
    pub purpose: Option<PurposeLevel>,
    #[command(flatten)]
    pub selection: Selection,
    /// Print the full response as JSON.
    #[arg(long)]
    pub json: bool,
    /// Print the proof trace.
    #[arg(long)]
    pub explain: bool,
}

fn parse_outcome(s: &str) -> Result<Outcome, String> {
    match s.to_ascii_lowercase().as_str() {
        "granted" => Ok(Outcome::Granted),
        "refused" => Ok(Outcome::Refused),
        _ => Err(format!("`{s}` is neither granted nor refused")),
    }
}

#[derive(Debug, Subcommand)]
pub enum LedgerCommand {
    /// Records matching every given filter, oldest first.
    History {
        #[arg(long)]
        policy: Option<String>,
        #[arg(long)]
        subject: Option<String>,
        #[arg(long, value_parser = parse_outcome)]
        outcome: Option<Outcome>,
        /// RFC 3339 time, inclusive.
        #[arg(long)]
        from: Option<DateTime<Utc>>,
        /// RFC 3339 time, exclusive.
        #[arg(long)]
        to: Option<DateTime<Utc>>,
        #[arg(long)]
        json: bool,
        /// Print records as data items (JSON).
        #[arg(long, conflicts_with = "json")]
        items: bool,
    },
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 50)]
    pub iterations: usize,
    /// Run only this mode; both by default.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Directory for the stats file and table.
    #[arg(long, default_value = "tdu-bench")]
    pub out: PathBuf,
}

fn config_of(cli: &Cli) -> Result<Config, PlatformError> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(d) = &cli.data_dir {
        config.data_dir = d.clone();
    }
    if let Some(l) = &cli.ledger {
        config.ledger_path = Some(l.clone());
    }
    Ok(config)
}

fn read_input(path: &PathBuf) -> Result<Vec<u8>, PlatformError> {
    if path.as_os_str() == "-" {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf)?;
        Ok(buf)
    } else {
        Ok(std::fs::read(path)?)
    }
}

fn read_policy(path: &PathBuf) -> Result<UsagePolicy, PlatformError> {
    let bytes = read_input(path)?;
    parse_usage_policy(&bytes, sniff_format(&bytes))
        .map_err(|e| PlatformError::Invalid(format!("{}: {e}", path.display())))
}

fn conflicts_of(policies: &[UsagePolicy]) -> Result<ConflictReport, PlatformError> {
    let compiled = policies
        .iter()
        .map(|p| compile_policy(p, DEFAULT_ACTOR))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(detect_conflicts(&merge_theories(&compiled)))
}

fn json_line<T: serde::Serialize>(out: &mut impl Write, value: &T) -> Result<(), PlatformError> {
    let text = serde_json::to_string_pretty(value).expect("value serializes");
    writeln!(out, "{text}")?;
    Ok(())
}

/// Runs one command, writing its output to `out`.
pub fn run(cli: Cli, out: &mut impl Write) -> Result<ExitCode, PlatformError> {
    let config = config_of(&cli)?;
    match cli.command {
        Command::Policy(PolicyCommand::Add { files }) => {
            let platform = Platform::open(config)?;
            for f in &files {
                let s = platform.add_policy(read_policy(f)?)?;
                writeln!(
                    out,
                    "registered {} ({} rules) as {}",
                    s.name, s.rules, s.file
                )?;
            }
        }
        Command::Policy(PolicyCommand::List { json }) => {
            let platform = Platform::open(config)?;
            if json {
                json_line(out, &platform.policies())?;
            } else {
                for s in platform.policy_summaries() {
                    writeln!(out, "{}\t{} rules\t{}", s.name, s.rules, s.file)?;
                }
            }
        }
        Command::Policy(PolicyCommand::Check { scenario, files }) => {
            let mut policies = if scenario {
                scenario::policies()
            } else {
                Vec::new()
            };
            for f in &files {
                policies.push(read_policy(f)?);
            }
            if !scenario && files.is_empty() {
                policies = Platform::open(config)?.policies();
            }
            let report = conflicts_of(&policies)?;
            if report.is_empty() {
                writeln!(out, "no conflicts")?;
            } else {
                for c in &report.conflicts {
                    writeln!(
                        out,
                        "conflict: {} ({}) vs {} ({})",
                        c.first, c.first_head, c.second, c.second_head
                    )?;
                }
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Data(DataCommand::Ingest { file }) => {
            let platform = Platform::open(config)?;
            let s = platform.ingest_csv(&read_input(&file)?)?;
            writeln!(
                out,
                "accepted {}, duplicates {}, total {}",
                s.accepted, s.duplicates, s.total
            )?;
        }
        Command::Data(DataCommand::Gen {
            seed,
            count,
            zones,
            streets,
            start,
            days,
            out: path,
        }) => {
            let readings = generate_synthetic::<f64>(&SyntheticConfig {
                seed,
                count,
                zones,
                streets_per_zone: streets,
                start,
                end: start + days * 86_400,
            });
            match path {
                Some(p) => write_readings(std::fs::File::create(p)?, &readings)?,
                None => write_readings(&mut *out, &readings)?,
            }
        }
        Command::Data(DataCommand::Transform {
            levels,
            selection,
            format,
        }) => {
            let platform = Platform::open(config)?;
            let spec = TransformSpec::new(levels.spatial, levels.temporal, levels.abstraction);
            let window = selection.window().unwrap_or(Window::all());
            let items = platform.transform(&spec, window, &selection.target());
            match format {
                OutputFormat::Json => json_line(out, &items)?,
                OutputFormat::Xml => {
                    for i in &items {
                        writeln!(out, "{}", serialize_data_item(i, Format::Xml))?;
                    }
                }
            }
        }
        Command::Request(RequestCommand::Eval(args)) => {
            let platform = Platform::open(config)?;
            let subject = match args.subject {
                Some(s) => s,
                None => platform
                    .subject_of(args.actor)
                    .map(str::to_string)
                    .unwrap_or_else(|| args.actor.predicate().to_ascii_lowercase()),
            };
            let mut request = ConsumerRequest::new(
                subject,
                args.actor,
                args.levels.spatial,
                args.levels.temporal,
                args.levels.abstraction,
            );
            request.purpose = args.purpose;
            request.target = args.selection.target();
            let q = Query {
                request,
                window: args.selection.window(),
            };
            let r = platform.query(&q)?;
            if args.json {
                json_line(out, &r)?;
            } else {
                let d = &r.decision;
                writeln!(out, "{:?}", d.outcome)?;
                if let Some(c) = &d.effective_constraints {
                    writeln!(
                        out,
                        "release at: spatial={} temporal={} abstraction={}",
                        c.spatial, c.temporal, c.abstraction
                    )?;
                    writeln!(out, "items released: {}", r.items.len())?;
                }
                if !d.refusal_reasons.is_empty() {
                    writeln!(out, "reasons:")?;
                    for reason in &d.refusal_reasons {
                        write!(out, "  {} {}", reason.literal, reason.tags)?;
                        if let Some(n) = &reason.note {
                            write!(out, " ({n})")?;
                        }
                        writeln!(out)?;
                    }
                }
                writeln!(out, "ledger record: {}", r.record_id)?;
                if args.explain {
                    write!(out, "{}", tdu_core::enforcement::explain(d))?;
                }
            }
        }
        Command::Ledger(LedgerCommand::History {
            policy,
            subject,
            outcome,
            from,
            to,
            json,
            items,
        }) => {
            let platform = Platform::open(config)?;
            let filter = HistoryFilter {
                policy,
                subject,
                outcome,
                from,
                to,
            };
            let records = platform.history(&filter);
            if json {
                json_line(out, &records)?;
            } else if items {
                let items: Vec<_> = records.iter().map(as_data_item).collect();
                json_line(out, &items)?;
            } else {
                writeln!(
                    out,
                    "id\ttimestamp\tsubject\tactor\tspatial\ttemporal\tabstraction\toutcome\titems\tpolicies"
                )?;
                for r in &records {
                    writeln!(
                        out,
                        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:?}\t{}\t{}",
                        r.record_id,
                        r.timestamp.to_rfc3339(),
                        r.subject,
                        r.actor_class,
                        r.spatial,
                        r.temporal,
                        r.abstraction,
                        r.outcome,
                        r.items_released,
                        r.policies.join(",")
                    )?;
                }
            }
        }
        Command::Bench(args) => {
            let modes = match args.mode {
                Some(m) => vec![m],
                None => vec![Mode::Cold, Mode::Warm],
            };
            let runs = modes
                .into_iter()
                .map(|m| bench::bench_tet(args.iterations, m))
                .collect::<Result<Vec<_>, _>>()?;
            let (stats, tsv) = bench::write_report(&args.out, &runs)?;
            write!(out, "{}", bench::table(&runs))?;
            writeln!(out, "wrote {} and {}", stats.display(), tsv.display())?;
        }
        Command::Serve { port } => {
            let mut config = config;
            if let Some(p) = port {
                config.port = p;
            }
            eprintln!(
                "tdu: serving {} on port {}",
                config.data_dir.display(),
                config.port
            );
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(service::serve(config, async {
                let _ = tokio::signal::ctrl_c().await;
            }))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Parses `args` (program name first) and runs the command. Usage errors
/// exit with status 2, failures with status 1.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(cli, &mut out) {
        Ok(code) => code,
        Err(e) => {
            let _ = out.flush();
            eprintln!("tdu: error: {e}");
            ExitCode::FAILURE
        }
    }
}
