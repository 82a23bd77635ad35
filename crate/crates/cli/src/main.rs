use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use lsbd_cli::{emit, Format, ModelSpecFile, OracleMode, RunConfig, RunReport};
use lsbd_core::{Error, Parallelism, SeriesControls};

/// Lie–Schwinger block-diagonalization and gap certification for quantum chains.
#[derive(Debug, Parser)]
#[command(name = "lsbd", version)]
struct Cli {
    /// Model file (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,

    /// Coupling constant; overrides the file (β for Kitaev models).
    #[arg(long, allow_hyphen_values = true, conflicts_with = "t_sweep")]
    t: Option<f64>,

    /// Comma-separated couplings; one report per value.
    #[arg(long, value_name = "LIST", value_delimiter = ',', allow_hyphen_values = true)]
    t_sweep: Option<Vec<f64>>,

    #[arg(long)]
    jmax: Option<usize>,

    #[arg(long)]
    tol_od: Option<f64>,

    #[arg(long)]
    tol_series: Option<f64>,

    #[arg(long)]
    gap_min: Option<f64>,

    /// Exact-diagonalization cross-check: auto (M^N ≤ 1024), force or off.
    #[arg(long, default_value = "auto")]
    oracle: String,

    /// Report destination; stdout when omitted. With --t-sweep, reports go to
    /// `<stem>_t<i>.<ext>` next to this path.
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,

    /// json or csv.
    #[arg(long, default_value = "json")]
    format: String,

    /// Seed for random models; overrides the file.
    #[arg(long)]
    seed: Option<u64>,

    /// Record wall-clock timings (makes reports non-reproducible).
    #[arg(long)]
    timings: bool,

    /// Disable the thread pool.
    #[arg(long)]
    sequential: bool,
}

fn config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut controls = SeriesControls::default();
    if let Some(v) = cli.jmax {
        controls.jmax = v;
    }
    if let Some(v) = cli.tol_od {
        controls.tol_od = v;
    }
    if let Some(v) = cli.tol_series {
        controls.tol_series = v;
    }
    if let Some(v) = cli.gap_min {
        controls.gap_min = v;
    }
    if cli.sequential {
        controls.parallelism = Parallelism::Sequential;
    }
    controls.validate()?;
    Ok(RunConfig {
        controls,
        oracle: cli.oracle.parse::<OracleMode>()?,
        timings: cli.timings,
    })
}

fn sweep_path(base: &Path, index: usize, format: Format) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    base.with_file_name(format!("{stem}_t{index}.{}", format.extension()))
}

fn write(report: &RunReport, format: Format, path: Option<&Path>) -> Result<(), Error> {
    let bytes = emit(report, format)?;
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(&bytes)
                .map_err(|e| Error::Io(e.to_string()))
        }
    }
}

fn announce(report: &RunReport) {
    if let Some(err) = &report.status.error {
        eprintln!("error [{}]: {}", err.kind, err.message);
    }
}

fn execute(cli: &Cli) -> Result<i32, Error> {
    let format: Format = cli.format.parse()?;
    let cfg = config(cli)?;
    let mut spec = ModelSpecFile::read(&cli.config)?;
    if let Some(seed) = cli.seed {
        spec = spec.with_seed(seed);
    }
    let mut model = spec.build()?;
    if let Some(t) = cli.t {
        model = model.with_coupling(t);
    }
    match &cli.t_sweep {
        None => {
            let report = lsbd_cli::run(&spec, &model, &cfg);
            announce(&report);
            write(&report, format, cli.report.as_deref())?;
            Ok(report.status.exit_code)
        }
        Some(ts) => {
            let base = cli
                .report
                .as_deref()
                .ok_or_else(|| Error::Validation("--t-sweep needs --report to name the output files".into()))?;
            let reports = lsbd_cli::run_grid(&spec, &model, ts, &cfg);
            let mut code = 0;
            for (i, report) in reports.iter().enumerate() {
                announce(report);
                let path = sweep_path(base, i, format);
                write(report, format, Some(&path))?;
                eprintln!("t = {:e}: {}", ts[i], path.display());
                if code == 0 {
                    code = report.status.exit_code;
                }
            }
            Ok(code)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = execute(&cli).unwrap_or_else(|e| {
        eprintln!("error [{}]: {e}", e.kind());
        e.exit_code()
    });
    ExitCode::from(code.clamp(0, 255) as u8)
}
