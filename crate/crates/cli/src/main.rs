use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lnspdc::tags::TagStream;
use lnspdc_cli::artifacts::Artifacts;
use lnspdc_cli::commands::{self, Session};
use lnspdc_cli::config::LoadedConfig;
use lnspdc_cli::error::{CliError, CliResult, EXIT_OK};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "lnspdc", version, about = "Thin-film lithium niobate photon-pair source modelling")]
struct Cli {
    /// Run configuration (TOML). The bundled reference config is used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory receiving all artifacts and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Overrides the source and resampling seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Materials catalog overriding the one named in the config.
    #[arg(long, global = true)]
    materials: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve eigenmodes, overlap and leakage margin.
    Modes {
        /// Wavelengths in µm; repeats allowed.
        #[arg(long = "lambda")]
        lambda_um: Vec<f64>,
        /// Core mesh step in nm.
        #[arg(long = "grid")]
        grid_nm: Option<f64>,
    },
    /// Map k″ over width and etch depth and trace its zero contour.
    SweepGvd,
    /// Poling period, bandwidth and phase mismatch.
    Qpm,
    /// Joint spectral intensity and marginal spectrum.
    Jsi,
    /// Normalized second-harmonic efficiency.
    Shg,
    /// Generate or analyze time-tag streams.
    Tags {
        #[command(subcommand)]
        action: TagsAction,
    },
    /// Run every stage from the reference config.
    ReproducePaper,
}

#[derive(Subcommand)]
enum TagsAction {
    /// Simulate a tag file from the [source] section.
    Simulate {
        /// Output path, relative to the output directory.
        #[arg(long, default_value = "tags/stream.ttag")]
        out: PathBuf,
    },
    /// Singles, CAR, PCR and heralded g2 of a tag file.
    Analyze {
        path: PathBuf,
        #[arg(long)]
        window_ps: Option<u64>,
        #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
        report: ReportFormat,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_config(cli: &Cli) -> CliResult<LoadedConfig> {
    let mut c = match &cli.config {
        Some(p) => LoadedConfig::load(p)?,
        None => LoadedConfig::bundled(),
    };
    if let Some(seed) = cli.seed {
        if let Some(s) = c.config.source.as_mut() {
            s.seed = seed;
        }
        let mut a = c.analysis();
        a.seed = seed;
        c.config.analysis = Some(a);
    }
    Ok(c)
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    }
    let argv: Vec<String> = std::env::args().collect();
    let config = load_config(&cli)?;
    let origin = config.origin.clone();
    let hash = config.hash.clone();
    let mut out = Artifacts::new(&cli.out_dir)?;
    let session = || Session::new(config.clone(), cli.materials.as_deref());

    let (summary, manifest): (Value, &str) = match cli.command {
        Command::Modes { lambda_um, grid_nm } => {
            let l = (!lambda_um.is_empty()).then_some(lambda_um);
            (commands::modes(&session()?, &mut out, l, grid_nm)?, "modes.manifest.json")
        }
        Command::SweepGvd => (commands::sweep_gvd(&session()?, &mut out)?, "sweep-gvd.manifest.json"),
        Command::Qpm => (commands::qpm(&session()?, &mut out)?, "qpm.manifest.json"),
        Command::Jsi => (commands::jsi_stage(&session()?, &mut out)?, "jsi.manifest.json"),
        Command::Shg => (commands::shg(&session()?, &mut out)?, "shg.manifest.json"),
        Command::Tags {
            action: TagsAction::Simulate { out: path },
        } => {
            let source = config.source()?;
            let (_, s) = commands::tags_simulate(&source, &mut out, &path)?;
            (s, "tags-simulate.manifest.json")
        }
        Command::Tags {
            action: TagsAction::Analyze { path, window_ps, report: ReportFormat::Json },
        } => {
            let stream = read_stream(&path)?;
            let s = session()?;
            let r = commands::tags_analyze(Some(&s), &stream, window_ps, &mut out, Path::new("tags/report.json"))?;
            (serde_json::to_value(r)?, "tags-analyze.manifest.json")
        }
        Command::ReproducePaper => (
            commands::reproduce(&session()?, &mut out, cli.seed)?,
            "reproduce-paper.manifest.json",
        ),
    };
    out.commit(manifest, argv, Some((&origin, &hash)))?;
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn read_stream(path: &Path) -> CliResult<TagStream> {
    let f = std::fs::File::open(path).map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
    Ok(TagStream::read_from(&mut std::io::BufReader::new(f))?)
}
