use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use probe_cli::checks::{run_suite, Mutation, Report, SuiteOptions, DEFAULT_SEED};
use probe_cli::commands::{self, CommandError, RunOptions};
use probe_cli::config::{ConfigError, Format, RunConfig};

// a closed pipe (`probe verify | head`) should not panic
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

const EXIT_CONFIG: u8 = 1;
const EXIT_PHYSICS: u8 = 2;
const EXIT_VERIFY: u8 = 3;

#[derive(Parser)]
#[command(name = "probe", version, about = "Magnon entanglement datasets and transmon-probe verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding output.directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of csv,json.
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<String>>,
    #[arg(long)]
    workers: Option<usize>,
    /// Reduced verification suite.
    #[arg(long)]
    quick: bool,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// ω_α, ω_β along the configured k-path.
    Dispersion(Common),
    /// Entanglement entropy of excited states against r or Δ.
    Entanglement(Common),
    /// Transmon Rabi frequency for α- and β-mode probes along the k-path.
    Rabi(Common),
    /// Δ, r and entropy from a measured zero-detuning Rabi frequency.
    Invert {
        #[command(flatten)]
        common: Common,
        /// Measured Rabi frequency, overriding invert.f_measured.
        #[arg(long = "f")]
        f: Option<f64>,
    },
    /// Run the oracle suite and write verify-report.json.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, hide = true)]
        inject: Option<Mutation>,
    },
}

fn load(common: &Common, required: bool) -> Result<RunConfig, ConfigError> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None if required => {
            return Err(ConfigError::Invalid { field: "--config".into(), reason: "a config file is required".into() })
        }
        None => RunConfig::parse("schema = 1")?,
    };
    if let Some(formats) = &common.format {
        cfg.output.formats = formats
            .iter()
            .map(|f| match f.trim() {
                "csv" => Ok(Format::Csv),
                "json" => Ok(Format::Json),
                other => {
                    Err(ConfigError::Invalid { field: "--format".into(), reason: format!("unknown format `{other}`") })
                }
            })
            .collect::<Result<_, _>>()?;
    }
    Ok(cfg)
}

fn options(common: &Common) -> RunOptions {
    RunOptions { out: common.out.clone(), workers: common.workers }
}

fn fail(e: CommandError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(match e {
        CommandError::Config(_) => EXIT_CONFIG,
        CommandError::Physics(_) => EXIT_PHYSICS,
        CommandError::Io(_) | CommandError::Pool(_) => EXIT_CONFIG,
    })
}

fn verify(common: &Common, inject: Option<Mutation>) -> Result<bool, CommandError> {
    let cfg = load(common, false)?;
    let opts = options(common);
    let suite = SuiteOptions { seed: common.seed, quick: common.quick, mutation: inject };
    let checks = opts.install(|| run_suite(suite))?;
    let report = Report::new(suite, checks);
    for c in &report.checks {
        say!("{}", c.line());
    }
    say!("{} passed, {} failed", report.passed, report.failed);
    let dir = opts.out_dir(&cfg);
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("verify-report.json");
    std::fs::write(&path, serde_json::to_string_pretty(&report).expect("report serialises") + "\n")?;
    say!("report: {}", path.display());
    Ok(report.all_pass())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Dispersion(c) => {
            load(c, true).map_err(CommandError::from).and_then(|cfg| commands::dispersion(&cfg, &options(c)))
        }
        Command::Entanglement(c) => {
            load(c, true).map_err(CommandError::from).and_then(|cfg| commands::entanglement(&cfg, &options(c)))
        }
        Command::Rabi(c) => load(c, true).map_err(CommandError::from).and_then(|cfg| commands::rabi(&cfg, &options(c))),
        Command::Invert { common, f } => {
            load(common, true).map_err(CommandError::from).and_then(|cfg| commands::invert(&cfg, &options(common), *f))
        }
        Command::Verify { common, inject } => {
            return match verify(common, *inject) {
                Ok(true) => ExitCode::SUCCESS,
                Ok(false) => ExitCode::from(EXIT_VERIFY),
                Err(e) => fail(e),
            };
        }
    };
    match result {
        Ok(out) => {
            for line in &out.summary {
                say!("{line}");
            }
            for f in &out.files {
                say!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}
