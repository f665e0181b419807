//! Command-line driver: runs the simulated experiments and writes their
//! results as JSON + CSV under a per-run output directory.
//!
//! Exit codes: 0 on success, 2 on configuration/usage errors, 3 on runtime
//! failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use spamsplit::config::Config;
use spamsplit::experiments::{
    mcb_exact, mcb_expectations, run_mcb_sampled, run_rabief, run_rabief_exact,
    summarize_rabief, McbData, RabiefData, RabiefSummary, ResetMode,
};
use spamsplit::fit::{fit_decay, DecayFit};
use spamsplit::learn::{run_workflow, true_fidelities, WorkflowSettings};
use spamsplit::mitigation::{
    bootstrap_fidelities, ghz_raw_exact, ghz_raw_sampled, learn_zstar, learn_zstar_exact,
    mitigate_split, mitigate_trex, pec_estimate, run_teleportation_pec, teleport_exact_pec,
    teleport_unmitigated, GhzNoise, MitigationRow, TeleportNoise,
};
use spamsplit::sim::DeviceParams;
use spamsplit::Error;

#[derive(Parser)]
#[command(
    name = "spamsplit",
    version,
    about = "Simulated qutrit-reset experiments: noise learning and SPAM-split error mitigation",
    after_help = "CSV columns:\n  \
        rabief_<mode>.csv: angle, s_nopi, s_pi\n  \
        mcb.csv: depth, iz, iz_sigma, zi, zi_sigma, zz, zz_sigma\n  \
        ghz.csv: n, raw, raw_sigma, zstar, zstar_sigma, trex, trex_sigma, split, split_sigma\n  \
        pec.csv: theta, median, q25, q75, unmitigated"
)]
struct Cli {
    /// Path to a TOML config; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master RNG seed; identical (config, seed) give identical outputs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Root output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker thread cap (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Replace sampling with exact expectation values where supported.
    #[arg(long, global = true)]
    exact: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ef-Rabi p_sp estimation runs for one or all reset modes.
    Rabief {
        /// slow_qutrit | fast_qutrit | slow_qubit | fast_qubit (default: all).
        #[arg(long)]
        mode: Option<String>,
    },
    /// Full noise-learning workflow (Ef-Rabi + measure-copy benchmarks).
    Workflow {
        /// Fast-reset discrimination: qutrit (blue path) or qubit (purple).
        #[arg(long, default_value = "qutrit")]
        fast_reset: String,
    },
    /// Measure-copy benchmark decays alone.
    Mcb {
        /// Use the slow (thermal-equilibrium) reset instead of the fast one.
        #[arg(long)]
        slow: bool,
    },
    /// GHZ stabilizer readout with TREX and split-SPAM mitigation.
    MitigateGhz,
    /// Probabilistic error cancellation of the dynamic teleportation circuit.
    PecTeleport,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Rabief { .. } => "rabief",
            Command::Workflow { .. } => "workflow",
            Command::Mcb { .. } => "mcb",
            Command::MitigateGhz => "mitigate-ghz",
            Command::PecTeleport => "pec-teleport",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(dir) => {
            println!("results written to {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}

/// Per-task RNG: one ChaCha stream per (master seed, task index), so
/// results do not depend on thread scheduling.
fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    seed: u64,
    exact: bool,
    package_version: &'a str,
    config_sha256: String,
    config: &'a str,
}

fn run(cli: &Cli) -> Result<PathBuf, Error> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        // Ignore the error if a global pool already exists (tests).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }

    let config = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let params = config.device.to_params()?;
    let config_text =
        toml::to_string(&config).map_err(|e| Error::Config(e.to_string()))?;

    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
    let dir = cli
        .out
        .join(cli.command.name())
        .join(format!("{stamp}-{}", cli.seed));
    std::fs::create_dir_all(&dir).map_err(io_err)?;

    let manifest = Manifest {
        command: cli.command.name(),
        seed: cli.seed,
        exact: cli.exact,
        package_version: env!("CARGO_PKG_VERSION"),
        config_sha256: hex_digest(&config_text),
        config: &config_text,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;

    match &cli.command {
        Command::Rabief { mode } => cmd_rabief(cli, &config, &params, mode.as_deref(), &dir)?,
        Command::Workflow { fast_reset } => {
            cmd_workflow(cli, &config, &params, fast_reset, &dir)?
        }
        Command::Mcb { slow } => cmd_mcb(cli, &config, &params, *slow, &dir)?,
        Command::MitigateGhz => cmd_mitigate_ghz(cli, &config, &params, &dir)?,
        Command::PecTeleport => cmd_pec(cli, &config, &params, &dir)?,
    }
    Ok(dir)
}

fn hex_digest(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn io_err(e: std::io::Error) -> Error {
    Error::Consistency(format!("i/o failure: {e}"))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Consistency(format!("serialization failure: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_err)
}

fn write_csv(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<(), Error> {
    let mut text = String::from(header);
    text.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(io_err)
}

// --- rabief ----------------------------------------------------------------

#[derive(Serialize)]
struct RabiefOutput {
    summaries: Vec<RabiefSummary>,
}

fn parse_mode(name: &str) -> Result<ResetMode, Error> {
    ResetMode::all()
        .into_iter()
        .find(|m| m.name() == name)
        .ok_or_else(|| {
            Error::Config(format!(
                "unknown reset mode {name:?}; expected one of slow_qutrit, fast_qutrit, slow_qubit, fast_qubit"
            ))
        })
}

fn cmd_rabief(
    cli: &Cli,
    config: &Config,
    params: &DeviceParams,
    mode: Option<&str>,
    dir: &Path,
) -> Result<(), Error> {
    let modes: Vec<ResetMode> = match mode {
        Some(name) => vec![parse_mode(name)?],
        None => ResetMode::all().to_vec(),
    };
    let runs: Vec<Result<RabiefData, Error>> = modes
        .par_iter()
        .enumerate()
        .map(|(i, &m)| {
            let cfg = config.rabief.to_config(m);
            if cli.exact {
                run_rabief_exact(&cfg, params)
            } else {
                run_rabief(&cfg, params, &mut stream_rng(cli.seed, i as u64))
            }
        })
        .collect();

    let mut summaries = Vec::new();
    for run in runs {
        let data = run?;
        let rows: Vec<Vec<f64>> = data
            .angles
            .iter()
            .zip(data.s_nopi.iter().zip(&data.s_pi))
            .map(|(&a, (&n, &p))| vec![a, n, p])
            .collect();
        write_csv(
            &dir.join(format!("rabief_{}.csv", data.reset_mode.name())),
            "angle,s_nopi,s_pi",
            &rows,
        )?;
        summaries.push(summarize_rabief(&data)?);
    }
    write_json(&dir.join("rabief.json"), &RabiefOutput { summaries })
}

// --- workflow ----------------------------------------------------------------

fn workflow_settings(cli: &Cli, config: &Config) -> WorkflowSettings {
    let mut settings = WorkflowSettings::default();
    settings.mcb = config.mcb.to_config();
    settings.rabief_shots = config.rabief.shots;
    settings.exact = cli.exact;
    settings
}

fn cmd_workflow(
    cli: &Cli,
    config: &Config,
    params: &DeviceParams,
    fast_reset: &str,
    dir: &Path,
) -> Result<(), Error> {
    let has_qutrit_fast_reset = match fast_reset {
        "qutrit" => true,
        "qubit" => false,
        other => {
            return Err(Error::Config(format!(
                "--fast-reset must be qutrit or qubit, got {other:?}"
            )))
        }
    };
    let settings = workflow_settings(cli, config);
    let mut rng = stream_rng(cli.seed, 0);
    let mut result = run_workflow(has_qutrit_fast_reset, params, &settings, cli.seed, &mut rng)?;
    // Byte-identical reruns: the run timestamp lives in the directory name,
    // not in any output file.
    result.model.timestamp = String::new();
    write_json(&dir.join("model.json"), &result.model)?;
    write_json(&dir.join("workflow.json"), &result)
}

// --- mcb ----------------------------------------------------------------

#[derive(Serialize)]
struct McbOutput {
    slow_reset: bool,
    iz: DecayFit,
    zi: DecayFit,
    zz: DecayFit,
}

fn mcb_fit_series(data: &McbData, which: &str) -> Result<DecayFit, Error> {
    let ks = data.ks();
    let series = data.series(which);
    let ys: Vec<f64> = series.iter().map(|&(m, _)| m).collect();
    let ws: Vec<f64> = series.iter().map(|&(_, s)| 1.0 / (s * s + 1e-10)).collect();
    fit_decay(&ks, &ys, Some(&ws))
}

fn cmd_mcb(
    cli: &Cli,
    config: &Config,
    params: &DeviceParams,
    slow: bool,
    dir: &Path,
) -> Result<(), Error> {
    let settings = workflow_settings(cli, config);
    let truth = true_fidelities(params, &settings, slow)?;
    let data = if cli.exact {
        let rows = mcb_exact(&truth, &settings.mcb.depths)?;
        McbData {
            depths: rows
                .into_iter()
                .map(|(k, iz, zi, zz)| spamsplit::experiments::DepthExpectations {
                    depth: k,
                    iz: (iz, 0.0),
                    zi: (zi, 0.0),
                    zz: (zz, 0.0),
                })
                .collect(),
        }
    } else {
        let records = run_mcb_sampled(&truth, &settings.mcb, &mut stream_rng(cli.seed, 0))?;
        mcb_expectations(&records)?
    };

    let rows: Vec<Vec<f64>> = data
        .depths
        .iter()
        .map(|d| {
            vec![d.depth as f64, d.iz.0, d.iz.1, d.zi.0, d.zi.1, d.zz.0, d.zz.1]
        })
        .collect();
    write_csv(
        &dir.join("mcb.csv"),
        "depth,iz,iz_sigma,zi,zi_sigma,zz,zz_sigma",
        &rows,
    )?;
    let out = McbOutput {
        slow_reset: slow,
        iz: mcb_fit_series(&data, "iz")?,
        zi: mcb_fit_series(&data, "zi")?,
        zz: mcb_fit_series(&data, "zz")?,
    };
    write_json(&dir.join("mcb.json"), &out)
}

// --- mitigate-ghz ----------------------------------------------------------------

fn cmd_mitigate_ghz(
    cli: &Cli,
    config: &Config,
    params: &DeviceParams,
    dir: &Path,
) -> Result<(), Error> {
    let settings = workflow_settings(cli, config);
    let truth = true_fidelities(params, &settings, true)?;
    let f_sp = truth.f_sp;
    let f_meas = truth.f_a * truth.f_s;
    let section = &config.mitigation;

    let rows: Vec<Result<MitigationRow, Error>> = section
        .sizes
        .par_iter()
        .enumerate()
        .map(|(i, &n)| {
            let noise = GhzNoise::uniform(n, f_sp, f_meas);
            let mut rng = stream_rng(cli.seed, i as u64);
            let (raw, zstar) = if cli.exact {
                (
                    (ghz_raw_exact(n, &noise, section.two_layer)?, 0.0),
                    (learn_zstar_exact(n, &noise)?, 0.0),
                )
            } else {
                (
                    ghz_raw_sampled(
                        n,
                        &noise,
                        section.two_layer,
                        8 * n * n,
                        section.shots,
                        &mut rng,
                    )?,
                    learn_zstar(
                        n,
                        &noise,
                        section.zstar_randomizations,
                        section.zstar_shots,
                        &mut rng,
                    )?,
                )
            };
            let trex = mitigate_trex(raw, zstar)?;
            // The learning workflow pins f_sp with negligible uncertainty
            // compared to the stabilizer shot noise.
            let f_sp_list = vec![(f_sp, 0.0); n - 1];
            let split = mitigate_split(raw, zstar, &f_sp_list)?;
            Ok(MitigationRow { n, raw, zstar, trex, split })
        })
        .collect();

    let rows: Vec<MitigationRow> = rows.into_iter().collect::<Result<_, _>>()?;
    let csv_rows: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            vec![
                r.n as f64, r.raw.0, r.raw.1, r.zstar.0, r.zstar.1, r.trex.0, r.trex.1,
                r.split.0, r.split.1,
            ]
        })
        .collect();
    write_csv(
        &dir.join("ghz.csv"),
        "n,raw,raw_sigma,zstar,zstar_sigma,trex,trex_sigma,split,split_sigma",
        &csv_rows,
    )?;
    write_json(&dir.join("ghz.json"), &rows)
}

// --- pec-teleport ----------------------------------------------------------------

#[derive(Serialize)]
struct PecRow {
    theta: f64,
    median: f64,
    q25: f64,
    q75: f64,
    unmitigated: f64,
    estimate: (f64, f64, f64),
}

#[derive(Serialize)]
struct PecOutput {
    gamma: f64,
    noise: TeleportNoise,
    rows: Vec<PecRow>,
}

fn cmd_pec(
    cli: &Cli,
    config: &Config,
    params: &DeviceParams,
    dir: &Path,
) -> Result<(), Error> {
    let settings = workflow_settings(cli, config);
    let truth = true_fidelities(params, &settings, true)?;
    let noise = TeleportNoise {
        p_sp: (1.0 - truth.f_sp) / 2.0,
        f_s: truth.f_s,
        f_a: truth.f_a,
        f_c: truth.f_c,
    };
    let gamma = noise.gamma()?;
    let section = &config.pec;

    let rows: Vec<Result<PecRow, Error>> = section
        .thetas()
        .par_iter()
        .enumerate()
        .map(|(i, &theta)| {
            let unmitigated = teleport_unmitigated(theta, &noise)?;
            if cli.exact {
                let (rho, fidelity) = teleport_exact_pec(theta, &noise)?;
                let estimate = (
                    2.0 * rho[(1, 0)].re,
                    2.0 * rho[(1, 0)].im,
                    rho[(0, 0)].re - rho[(1, 1)].re,
                );
                return Ok(PecRow {
                    theta,
                    median: fidelity,
                    q25: fidelity,
                    q75: fidelity,
                    unmitigated,
                    estimate,
                });
            }
            let mut rng = stream_rng(cli.seed, i as u64);
            let pool =
                run_teleportation_pec(theta, &noise, section.pool, section.shots, &mut rng)?;
            let estimate = pec_estimate(&pool, gamma)?;
            let summary = bootstrap_fidelities(
                theta,
                &pool,
                gamma,
                section.resamples,
                section.resample_size,
                &mut rng,
            )?;
            Ok(PecRow {
                theta,
                median: summary.median,
                q25: summary.q25,
                q75: summary.q75,
                unmitigated,
                estimate,
            })
        })
        .collect();

    let rows: Vec<PecRow> = rows.into_iter().collect::<Result<_, _>>()?;
    let csv_rows: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| vec![r.theta, r.median, r.q25, r.q75, r.unmitigated])
        .collect();
    write_csv(
        &dir.join("pec.csv"),
        "theta,median,q25,q75,unmitigated",
        &csv_rows,
    )?;
    write_json(&dir.join("pec.json"), &PecOutput { gamma, noise, rows })
}
