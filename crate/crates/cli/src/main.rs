use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pmgauss_core::experiments::{
    self, grid_table, snapshot_table, OutputFormat, ResultTable, ScenarioConfig,
};
use pmgauss_core::Error;

#[derive(Parser, Debug)]
#[command(
    name = "pmgauss",
    version,
    about = "Sweeps and checks for correlated Gaussian probes under scattering decoherence"
)]
struct Cli {
    /// Scenario file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for output tables.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Table format: csv or json.
    #[arg(long, global = true, default_value = "csv", value_parser = parse_format)]
    format: OutputFormat,

    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Also write a matplotlib script next to each CSV table that has a figure.
    #[arg(long, global = true)]
    plot: bool,

    /// Override a config key, e.g. `--set gamma_set=-0.5,0`. Wins over the file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Performance ratio over (lambda, gamma, t) contours.
    Ratio,
    /// QFIM against gamma at fixed time, with closed-form columns.
    Qfim,
    /// Effective Lambda information against time for the gamma set.
    Tilde,
    /// Wigner function grids.
    Wigner,
    /// Determinant of the QFIM against time.
    Det,
    /// SLD compatibility trace.
    Compat,
    /// Temperature <-> Lambda conversion with anchor deviations.
    Thermo,
    /// Run the invariant suite and write the closed-form report.
    Validate,
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn overrides(pairs: &[String]) -> Result<BTreeMap<String, String>, Error> {
    pairs
        .iter()
        .map(|p| {
            p.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{p}`")))
        })
        .collect()
}

fn load_config(cli: &Cli) -> Result<ScenarioConfig, Error> {
    let flags = overrides(&cli.overrides)?;
    match &cli.config {
        Some(path) => ScenarioConfig::load(path, &flags),
        None => ScenarioConfig::from_layers(&BTreeMap::new(), &flags),
    }
}

fn write(table: &ResultTable, out: &Path, format: OutputFormat, plot: bool) -> Result<(), Error> {
    let path = table.write(out, format)?;
    if plot {
        match (format, experiments::plot_script(&table.name)) {
            (OutputFormat::Csv, Some(script)) => {
                std::fs::write(out.join(format!("{}.py", table.name)), script)?;
            }
            (OutputFormat::Json, Some(_)) => {
                log::warn!("--plot needs csv output; skipping {}", table.name)
            }
            _ => {}
        }
    }
    for line in &table.summary {
        log::info!("{}: {line}", table.name);
    }
    println!("{}", path.display());
    Ok(())
}

/// `Ok(false)` when validation ran but a check failed.
fn run(cli: &Cli, cfg: &ScenarioConfig) -> Result<bool, Error> {
    let (out, fmt, plot) = (cli.out.as_path(), cli.format, cli.plot);
    match cli.command {
        Command::Ratio => write(&experiments::run_ratio_sweep(cfg)?, out, fmt, plot)?,
        Command::Qfim => write(&experiments::run_qfim_vs_gamma(cfg)?, out, fmt, plot)?,
        Command::Tilde => write(&experiments::run_tilde_lambda_vs_time(cfg)?, out, fmt, plot)?,
        Command::Det => write(&experiments::run_det_sweep(cfg)?, out, fmt, plot)?,
        Command::Compat => write(&experiments::run_compat_check(cfg)?, out, fmt, plot)?,
        Command::Thermo => write(&experiments::run_thermometry(cfg)?, out, fmt, plot)?,
        Command::Wigner => {
            let snaps = experiments::run_wigner_snapshots(cfg)?;
            write(&snapshot_table(cfg, &snaps), out, fmt, plot)?;
            for s in &snaps {
                if s.grid.under_spanned {
                    log::warn!(
                        "{} under-spans the state ({:.2} sigma)",
                        s.name(),
                        s.grid.span_sigmas
                    );
                }
                write(&grid_table(cfg, s), out, fmt, plot)?;
            }
        }
        Command::Validate => {
            let report = experiments::validate(cfg)?;
            write(&report.closed_form, out, fmt, plot)?;
            write(&report.table(cfg), out, fmt, plot)?;
            for c in &report.checks {
                eprintln!(
                    "{} {:<30} value={:e} threshold={:e}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.threshold
                );
            }
            return Ok(report.passed());
        }
    }
    Ok(true)
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Config(_) | Error::InvalidParameter { .. } | Error::NegativeTime(_) => "validation",
        Error::Io(_) => "io",
        _ => "numerical",
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = load_config(&cli).and_then(|cfg| {
        let threads = cli.threads;
        experiments::with_threads(threads, || run(&cli, &cfg))?
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let msg = serde_json::json!({ "error": e.to_string(), "kind": error_kind(&e) });
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}
