//! `tricam` — run, study and diag front end.
//!
//! Exit codes: 0 success, 1 assertion/check failure, 2 config or parse
//! error, 3 blow-up abort.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use tricam_core::config::{default_out_root, read_config_file, RunConfig, StudyConfig};
use tricam_core::run::{cmd_diag, cmd_run, cmd_study, DiagCheck};
use tricam_core::Error;

#[derive(Parser)]
#[command(
    name = "tricam",
    about = "Pseudospectral solver and verification lab for a two-component nonlocal transport system",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flat key overrides shared by `run` and `study`. Every flag mirrors a
/// config-file key of the same name.
#[derive(Args, Clone, Default)]
struct Overrides {
    /// Config file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    grid_n: Option<usize>,
    #[arg(long)]
    domain_l: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Fixed time step (omit for CFL-driven stepping).
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long)]
    dt_max: Option<f64>,
    /// Profile: smoothed-peakon | gaussian-bump | two-bump | random-bumps | zero.
    #[arg(long)]
    profile: Option<String>,
    /// Peaks of the a component, `amp@pos[,amp@pos...]`.
    #[arg(long)]
    peakons_a: Option<String>,
    /// Peaks of the c component.
    #[arg(long)]
    peakons_c: Option<String>,
    /// Bumps of u0, `amp@center@sigma[,...]`.
    #[arg(long)]
    bumps_u: Option<String>,
    /// Bumps of w0.
    #[arg(long)]
    bumps_w: Option<String>,
    #[arg(long)]
    bump_count: Option<usize>,
    /// Mollification index.
    #[arg(long)]
    moll_n: Option<u32>,
    /// Exponent offset for the L^{1+eps} norms.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Convolution backend: fourier | scan.
    #[arg(long)]
    backend: Option<String>,
    /// Observer stride in steps.
    #[arg(long)]
    stride: Option<usize>,
    /// Seed for randomized profiles.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dealias: Option<bool>,
    #[arg(long)]
    blowup_cap: Option<f64>,
    #[arg(long)]
    cfl_strict: Option<bool>,
    /// Comma-separated snapshot times.
    #[arg(long)]
    snapshot_times: Option<String>,
    /// Snapshot format: csv | bin.
    #[arg(long)]
    snapshot_format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one configuration and write diagnostics artifacts.
    Run(Overrides),
    /// Sweep one axis of a base configuration and write a study report.
    Study {
        #[command(flatten)]
        overrides: Overrides,
        /// Sweep axis: mollification-index | grid-resolution | time-step.
        #[arg(long)]
        sweep: Option<String>,
        /// Comma-separated, strictly increasing sweep values.
        #[arg(long)]
        values: Option<String>,
        /// Run sweep members concurrently.
        #[arg(long)]
        parallel: bool,
    },
    /// Re-verify a stored snapshot offline.
    Diag {
        /// Snapshot file (CSV or binary).
        snapshot: PathBuf,
        /// Comma-separated checks: sign,slope,elliptic,h2-gap,l1-identity
        /// (default: all).
        #[arg(long)]
        checks: Option<String>,
    },
}

/// Build a RunConfig from defaults, then config file, then flags.
fn resolve_config(
    ov: &Overrides,
    default_subdir: &str,
) -> Result<(RunConfig, Vec<(String, String)>), Error> {
    let mut cfg = RunConfig {
        out: default_out_root().join(default_subdir),
        ..RunConfig::default()
    };
    let mut study_keys = Vec::new();
    if let Some(path) = &ov.config {
        for (key, value) in read_config_file(path)? {
            if tricam_core::config::STUDY_KEYS.contains(&key.as_str()) {
                study_keys.push((key, value));
            } else {
                cfg.apply(&key, &value)?;
            }
        }
    }
    macro_rules! set {
        ($field:ident, $key:literal) => {
            if let Some(v) = &ov.$field {
                cfg.apply($key, &v.to_string())?;
            }
        };
    }
    set!(grid_n, "grid-n");
    set!(domain_l, "domain-l");
    set!(t_end, "t-end");
    set!(dt, "dt");
    set!(cfl, "cfl");
    set!(dt_max, "dt-max");
    set!(profile, "profile");
    set!(peakons_a, "peakons-a");
    set!(peakons_c, "peakons-c");
    set!(bumps_u, "bumps-u");
    set!(bumps_w, "bumps-w");
    set!(bump_count, "bump-count");
    set!(moll_n, "moll-n");
    set!(epsilon, "epsilon");
    set!(backend, "backend");
    set!(stride, "stride");
    set!(seed, "seed");
    set!(dealias, "dealias");
    set!(blowup_cap, "blowup-cap");
    set!(cfl_strict, "cfl-strict");
    set!(snapshot_times, "snapshot-times");
    set!(snapshot_format, "snapshot-format");
    if let Some(out) = &ov.out {
        cfg.out = out.clone();
    }
    Ok((cfg, study_keys))
}

fn run_command(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Run(ov) => {
            let (cfg, _) = resolve_config(&ov, "run")?;
            let artifacts = cmd_run(&cfg)?;
            println!(
                "run complete: t = {}, {} diagnostic rows, artifacts in {}",
                artifacts.final_state.t(),
                artifacts.records.len(),
                artifacts.out_dir.display()
            );
            Ok(0)
        }
        Command::Study {
            overrides,
            sweep,
            values,
            parallel,
        } => {
            let (base, study_kv) = resolve_config(&overrides, "study")?;
            let mut sweep_name = None;
            let mut values_text = None;
            let mut parallel_cfg = parallel;
            for (key, value) in study_kv {
                match key.as_str() {
                    "sweep" => sweep_name = Some(value),
                    "values" => values_text = Some(value),
                    "parallel" => {
                        parallel_cfg = value.trim() == "true" || value.trim() == "1";
                    }
                    _ => unreachable!("filtered by STUDY_KEYS"),
                }
            }
            if let Some(s) = sweep {
                sweep_name = Some(s);
            }
            if let Some(v) = values {
                values_text = Some(v);
            }
            let sweep_axis = sweep_name
                .ok_or_else(|| Error::Config {
                    key: "sweep".into(),
                    message: "missing sweep axis (flag --sweep or config key `sweep`)".into(),
                })?
                .parse()?;
            let values_text = values_text.ok_or_else(|| Error::Config {
                key: "values".into(),
                message: "missing sweep values (flag --values or config key `values`)".into(),
            })?;
            let values = values_text
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| Error::Config {
                        key: "values".into(),
                        message: format!("cannot parse '{s}'"),
                    })
                })
                .collect::<Result<Vec<f64>, Error>>()?;
            let study = StudyConfig {
                base,
                sweep: sweep_axis,
                values,
                parallel: parallel_cfg,
            };
            let report = cmd_study(&study)?;
            let text = std::fs::read_to_string(&report.report_txt)?;
            print!("{text}");
            Ok(if report.overall_pass() { 0 } else { 1 })
        }
        Command::Diag { snapshot, checks } => {
            let checks: Vec<DiagCheck> = match checks.as_deref() {
                None | Some("all") => DiagCheck::ALL.to_vec(),
                Some(list) => list
                    .split(',')
                    .map(|s| s.trim().parse())
                    .collect::<Result<Vec<DiagCheck>, Error>>()?,
            };
            let report = cmd_diag(&snapshot, &checks)?;
            print!("{}", report.render());
            Ok(if report.all_pass() { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_command(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
