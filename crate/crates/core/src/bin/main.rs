use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use monitored_chain::experiments::{
    cmd_bloch_sweep, cmd_floquet, cmd_pulse, cmd_spectrum, cmd_tau_sweep, cmd_zeno_report, ExperimentConfig, Format,
    Output,
};
use monitored_chain::Error;
use serde_json::json;

#[derive(Parser)]
#[command(name = "monitored-chain", version, about = "Currents in measured, dissipative tight-binding chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output table path (stdout if absent). A `.config.json` sidecar is written next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    /// Worker threads for grid points.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Recompute on one thread and fail unless the output is byte-identical.
    #[arg(long, global = true)]
    seedless: bool,
}

#[derive(Subcommand, Clone, Copy, Debug)]
enum Command {
    /// Band energies, closed form against diagonalization.
    Spectrum,
    /// Displacement after one measurement of the equilibrium state.
    Pulse,
    /// Currents over a grid of measurement axes.
    BlochSweep,
    /// Poisson steady states along the configured sweep.
    TauSweep,
    /// Periodic measurements: sweep or single-period trace.
    Floquet,
    /// Small-τ closed forms against the full solver.
    ZenoReport,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Pulse => "pulse",
            Command::BlochSweep => "bloch-sweep",
            Command::TauSweep => "tau-sweep",
            Command::Floquet => "floquet",
            Command::ZenoReport => "zeno-report",
        }
    }

    fn run(self, cfg: &ExperimentConfig) -> monitored_chain::Result<Output> {
        match self {
            Command::Spectrum => cmd_spectrum(cfg),
            Command::Pulse => cmd_pulse(cfg),
            Command::BlochSweep => cmd_bloch_sweep(cfg),
            Command::TauSweep => cmd_tau_sweep(cfg),
            Command::Floquet => cmd_floquet(cfg),
            Command::ZenoReport => cmd_zeno_report(cfg),
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FormatArg {
    Csv,
    Json,
}

fn pool(threads: Option<usize>) -> Result<rayon::ThreadPool, Error> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::Config(e.to_string()))
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

fn run(cli: &Cli) -> Result<usize, Error> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(f) = cli.format {
        cfg.output.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
    }
    if let Some(p) = &cli.out {
        cfg.output.path = Some(p.to_string_lossy().into_owned());
    }
    let format = cfg.output.format;

    let output = pool(cli.threads)?.install(|| cli.command.run(&cfg))?;
    let bytes = output.table.to_bytes(format)?;
    if cli.seedless {
        let again = pool(Some(1))?.install(|| cli.command.run(&cfg))?.table.to_bytes(format)?;
        if again != bytes {
            eprintln!("error: output differs between runs");
            return Ok(usize::MAX);
        }
    }

    match &cfg.output.path {
        Some(p) => {
            let path = PathBuf::from(p);
            File::create(&path)?.write_all(&bytes)?;
            let sidecar = json!({
                "command": cli.command.name(),
                "config": cfg,
                "summary": output.summary,
                "failed_rows": output.failures,
            });
            let mut w = BufWriter::new(File::create(sidecar_path(&path))?);
            serde_json::to_writer_pretty(&mut w, &sidecar).map_err(|e| Error::Io(e.into()))?;
            writeln!(w)?;
            w.flush()?;
        }
        None => std::io::stdout().lock().write_all(&bytes)?,
    }
    Ok(output.failures)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(n) => {
            if n != usize::MAX {
                eprintln!("error: {n} row(s) failed the solver checks");
            }
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
