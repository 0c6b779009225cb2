//! `pupilclean`: headless batch cleaning, chain validation, averages,
//! envelope export and the HTTP service.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use pupilclean_core::catalog::Catalog;
use pupilclean_core::filters::{validate_chain, ChainDocument, ChainWarning, Severity};
use pupilclean_core::series::{average_pupil, envelope, AverageMode, SeriesChannel};
use pupilclean_core::workers::{FileRef, FsRunner, JobSpec, JobState, PoolConfig, WorkerPool};
use pupilclean_core::{load_recording, Channel, ChannelSet, ColumnMapping, Recording};
use pupilclean_server::ServiceConfig;

const EXIT_USAGE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_PROCESSING: u8 = 4;

#[derive(Parser)]
#[command(name = "pupilclean", version, about = "Clean and inspect pupillometry recordings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a filter chain over each input and write compressed outputs.
    Clean {
        /// TSV exports or compressed series files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Chain document (JSON).
        #[arg(long)]
        chain: PathBuf,
        /// Column mapping (JSON) for TSV inputs; Tobii defaults otherwise.
        #[arg(long)]
        mapping: Option<PathBuf>,
        /// Nominal sampling rate of the inputs.
        #[arg(long)]
        sample_rate: f64,
        #[arg(long)]
        output_dir: PathBuf,
        /// Worker count; one less than the core count by default.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check a chain document against the recommended filter order.
    ValidateChain {
        chain: PathBuf,
        /// Channels the data carries, e.g. pupil_left,pupil_right; all by default.
        #[arg(long, value_delimiter = ',', value_enum)]
        channels: Option<Vec<ChannelArg>>,
    },
    /// Print the average pupil size in mm.
    Average {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        mode: ModeArg,
        #[arg(long)]
        mapping: Option<PathBuf>,
        /// Sampling rate; inferred from timestamps when absent.
        #[arg(long)]
        sample_rate: Option<f64>,
    },
    /// Write a min/max envelope as tab-separated text.
    Inspect {
        file: PathBuf,
        #[arg(long, default_value = "pupil_left")]
        channel: String,
        #[arg(long)]
        from_ms: Option<f64>,
        #[arg(long)]
        to_ms: Option<f64>,
        #[arg(long, default_value_t = 2000)]
        points: usize,
        #[arg(long)]
        mapping: Option<PathBuf>,
        #[arg(long)]
        sample_rate: Option<f64>,
        /// Write here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Add subjects from a CSV list to a study in a catalog.
    ImportSubjects {
        csv: PathBuf,
        #[arg(long)]
        study: String,
        #[arg(long, env = "PUPILCLEAN_STORAGE_ROOT")]
        storage_root: PathBuf,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "PUPILCLEAN_CONFIG")]
        config: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Both,
    Left,
    Right,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum ChannelArg {
    PupilLeft,
    PupilRight,
    GazeLeft,
    GazeRight,
}

impl From<ChannelArg> for Channel {
    fn from(c: ChannelArg) -> Channel {
        match c {
            ChannelArg::PupilLeft => Channel::PupilLeft,
            ChannelArg::PupilRight => Channel::PupilRight,
            ChannelArg::GazeLeft => Channel::GazeLeft,
            ChannelArg::GazeRight => Channel::GazeRight,
        }
    }
}

/// Failure with the exit code it maps to.
struct Failure(u8, String);

impl Failure {
    fn usage(message: impl Into<String>) -> Failure {
        Failure(EXIT_USAGE, message.into())
    }

    fn processing(message: impl Into<String>) -> Failure {
        Failure(EXIT_PROCESSING, message.into())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, message)) => {
            if !message.is_empty() {
                eprintln!("error: {message}");
            }
            ExitCode::from(code)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Clean {
            inputs,
            chain,
            mapping,
            sample_rate,
            output_dir,
            workers,
        } => clean(&inputs, &chain, mapping.as_deref(), sample_rate, output_dir, workers),
        Command::ValidateChain { chain, channels } => {
            let channels = channels.map_or_else(ChannelSet::all, |c| c.into_iter().map(Channel::from).collect());
            validate(&chain, channels)
        }
        Command::Average {
            file,
            mode,
            mapping,
            sample_rate,
        } => {
            let recording = load(&file, mapping.as_deref(), sample_rate)?;
            let mode = match mode {
                ModeArg::Both => AverageMode::Both,
                ModeArg::Left => AverageMode::Left,
                ModeArg::Right => AverageMode::Right,
            };
            let mm = average_pupil(&recording, mode).map_err(|e| Failure::processing(e.to_string()))?;
            println!("{mm:.6}");
            Ok(())
        }
        Command::Inspect {
            file,
            channel,
            from_ms,
            to_ms,
            points,
            mapping,
            sample_rate,
            output,
        } => {
            let channel: SeriesChannel = channel.parse().map_err(|e: pupilclean_core::series::SeriesError| Failure::usage(e.to_string()))?;
            let recording = load(&file, mapping.as_deref(), sample_rate)?;
            let env = envelope(&recording, channel, from_ms, to_ms, points)
                .map_err(|e| Failure::processing(e.to_string()))?;
            let mut text = String::from("start_ms\tend_ms\tmin\tmax\tcount\n");
            for b in &env.buckets {
                let cell = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
                text.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\n",
                    b.start_ms,
                    b.end_ms,
                    cell(b.min),
                    cell(b.max),
                    b.count
                ));
            }
            match output {
                Some(path) => std::fs::write(&path, text)
                    .map_err(|e| Failure::processing(format!("{}: {e}", path.display()))),
                None => std::io::stdout()
                    .write_all(text.as_bytes())
                    .map_err(|e| Failure::processing(e.to_string())),
            }
        }
        Command::ImportSubjects {
            csv,
            study,
            storage_root,
        } => {
            let bytes = read(&csv)?;
            let catalog = Catalog::open(&storage_root).map_err(|e| Failure::processing(e.to_string()))?;
            let study = match catalog.find_study(&study) {
                Some(s) => s,
                None => catalog.create_study(&study).map_err(|e| Failure(EXIT_VALIDATION, e.to_string()))?,
            };
            let added = catalog
                .import_subjects(study.id, &bytes)
                .map_err(|e| Failure(EXIT_VALIDATION, e.to_string()))?;
            for s in &added {
                println!("{}\t{}\t{}", s.id, s.external_id, s.display_name.as_deref().unwrap_or(""));
            }
            Ok(())
        }
        Command::Serve { config } => {
            let config = ServiceConfig::load(config.as_deref()).map_err(|e| Failure::usage(e.to_string()))?;
            pupilclean_server::run(config).map_err(|e| Failure::processing(e.to_string()))
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_chain(path: &Path) -> Result<ChainDocument, Failure> {
    let text = String::from_utf8(read(path)?).map_err(|_| Failure::usage(format!("{}: not UTF-8", path.display())))?;
    ChainDocument::from_json(&text).map_err(|e| Failure(EXIT_VALIDATION, format!("{}: {e}", path.display())))
}

fn load_mapping(path: Option<&Path>) -> Result<ColumnMapping, Failure> {
    let Some(path) = path else {
        return Ok(ColumnMapping::default());
    };
    let mapping: ColumnMapping = serde_json::from_slice(&read(path)?)
        .map_err(|e| Failure(EXIT_VALIDATION, format!("{}: {e}", path.display())))?;
    mapping
        .validate()
        .map_err(|e| Failure(EXIT_VALIDATION, format!("{}: {e}", path.display())))?;
    Ok(mapping)
}

fn load(path: &Path, mapping: Option<&Path>, sample_rate: Option<f64>) -> Result<Recording, Failure> {
    let mapping = load_mapping(mapping)?;
    let bytes = read(path)?;
    load_recording(&bytes, &mapping, sample_rate).map_err(|e| Failure::processing(format!("{}: {e}", path.display())))
}

/// `severity<TAB>code<TAB>[positions]<TAB>message`
fn finding_line(w: &ChainWarning) -> String {
    let severity = match w.severity {
        Severity::Error => "error",
        Severity::Warning => "warning",
    };
    let code = serde_json::to_value(w.code).ok().and_then(|v| v.as_str().map(str::to_string));
    let positions: Vec<String> = w.positions.iter().map(|p| p.to_string()).collect();
    format!("{severity}\t{}\t[{}]\t{}", code.unwrap_or_default(), positions.join(","), w.message)
}

fn validate(chain: &Path, channels: ChannelSet) -> Result<(), Failure> {
    let doc = load_chain(chain)?;
    let findings = validate_chain(&doc.filters, channels);
    for w in &findings {
        println!("{}", finding_line(w));
    }
    let errors = findings.iter().filter(|w| w.severity == Severity::Error).count();
    if errors > 0 {
        return Err(Failure(EXIT_VALIDATION, format!("{errors} error(s) in chain")));
    }
    if findings.is_empty() {
        println!("ok");
    }
    Ok(())
}

fn clean(
    inputs: &[PathBuf],
    chain: &Path,
    mapping: Option<&Path>,
    sample_rate: f64,
    output_dir: PathBuf,
    workers: Option<usize>,
) -> Result<(), Failure> {
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(Failure::usage("--sample-rate must be a positive number"));
    }
    let doc = load_chain(chain)?;
    let findings = validate_chain(&doc.filters, ChannelSet::all());
    for w in &findings {
        eprintln!("{}", finding_line(w));
    }
    if findings.iter().any(|w| w.severity == Severity::Error) {
        return Err(Failure(EXIT_VALIDATION, "chain has errors; nothing was processed".into()));
    }
    let mapping = load_mapping(mapping)?;
    let config = PoolConfig {
        max_workers: workers,
        ..PoolConfig::detect()
    };
    let workers = config.workers().map_err(|e| Failure::usage(e.to_string()))?;
    let runner = FsRunner {
        output_dir,
        mapping,
        sample_rate_hz: Some(sample_rate),
    };
    let pool = WorkerPool::new(workers, Arc::new(runner)).map_err(|e| Failure::processing(e.to_string()))?;

    let mut failed = 0;
    let mut submitted = Vec::new();
    for input in inputs {
        match pool.submit(JobSpec::clean(FileRef::Path(input.clone()), doc.filters.clone())) {
            Ok(id) => submitted.push((input, id)),
            Err(e) => {
                eprintln!("{}: {e}", input.display());
                failed += 1;
            }
        }
    }
    pool.wait_idle();

    println!("file\tstatus\tsamples\tremoved\tinterpolated\twall_ms\toutput");
    for (input, id) in submitted {
        let job = pool.job(id).expect("submitted job is tracked");
        let wall = job
            .started_at_ms
            .zip(job.finished_at_ms)
            .map_or(0, |(s, f)| f - s);
        match job.state {
            JobState::Succeeded => {
                let report = job.report.unwrap_or_default();
                let output = match &job.output {
                    Some(FileRef::Path(p)) => p.display().to_string(),
                    _ => String::new(),
                };
                println!(
                    "{}\tok\t{}\t{}\t{}\t{wall}\t{output}",
                    input.display(),
                    report.samples,
                    report.removed(),
                    report.filled(),
                );
            }
            _ => {
                failed += 1;
                println!("{}\tfailed\t\t\t\t{wall}\t", input.display());
                eprintln!("{}: {}", input.display(), job.failure.unwrap_or_default());
            }
        }
    }
    if failed > 0 {
        return Err(Failure::processing(format!("{failed} of {} file(s) failed", inputs.len())));
    }
    Ok(())
}
