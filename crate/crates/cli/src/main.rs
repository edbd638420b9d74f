//! `gatom` - command-line front end for single-photon scattering spectra of
//! a phonon-dressed giant atom in a coupled-resonator waveguide.
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical-guard error
//! (out-of-band ranges, near-bound-state points, perturbative violations,
//! inconclusive wavepacket runs).

mod config;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use serde_json::json;

use gatom_core::analytic::{reflection_analytic, AnalyticError};
use gatom_core::experiments::{
    parity_classification, sweep, width_scan, BlockKind, ExperimentsError,
};
use gatom_core::model::{exact_emitter_block, wavevector_of_energy, ModelError, SystemParams};
use gatom_core::solver::{solve_scattering, SolverError};
use gatom_core::sweff::{sw_emitter_block, sw_model, verify_sw_projection, SwError};
use gatom_core::wavepacket::{
    propagate, propagate_with_snapshots, WavepacketConfig, WavepacketError,
};

use config::{parse_config, parse_config_with_base, ConfigError, RunConfig};
use output::{fmt_f64, write_csv, write_json};
use svg::{line_plot, Series};

#[derive(Parser)]
#[command(
    name = "gatom",
    version,
    about = "Single-photon scattering in a coupled-resonator waveguide controlled by a phonon mode through a giant atom"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat `key = value` config file (`#` comments allowed).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one config key (repeatable), e.g. `--set lambda=0.4`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (default: $GATOM_OUT_DIR, then the current directory).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Comma-separated subset of csv,json,svg (meta JSON is always written).
    #[arg(long, global = true, value_delimiter = ',')]
    format: Option<Vec<String>>,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Reflection spectrum R(Delta) for the exact or effective block.
    Spectrum,
    /// Exact vs dispersive-effective spectra and their sup-norm gap.
    SwCompare,
    /// Valley/window widths while varying one coupling.
    WidthScan,
    /// Even/odd connection-distance classification at resonance.
    Parity,
    /// Time-domain Gaussian packet cross-check of the steady-state rate.
    Wavepacket,
    /// Solver-vs-formula, SW-projection and unitarity self-checks.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::SwCompare => "sw-compare",
            Command::WidthScan => "width-scan",
            Command::Parity => "parity",
            Command::Wavepacket => "wavepacket",
            Command::Verify => "verify",
        }
    }
}

enum CliError {
    Validation(String),
    Guard(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Io(_) => ExitCode::from(1),
            CliError::Validation(_) => ExitCode::from(2),
            CliError::Guard(_) => ExitCode::from(3),
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Guard(m) | CliError::Io(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::WaveVectorOutOfDomain { .. } | ModelError::EnergyOutOfBand { .. } => {
                CliError::Guard(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::NearBoundState { .. } => CliError::Guard(e.to_string()),
            SolverError::Model(m) => m.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<SwError> for CliError {
    fn from(e: SwError) -> Self {
        match e {
            SwError::Resonant | SwError::PerturbativeValidity { .. } => {
                CliError::Guard(e.to_string())
            }
            SwError::OracleConfig(_) => CliError::Validation(e.to_string()),
            SwError::Model(m) => m.into(),
            SwError::Solver(s) => s.into(),
        }
    }
}

impl From<ExperimentsError> for CliError {
    fn from(e: ExperimentsError) -> Self {
        match e {
            ExperimentsError::RangeOutOfBand { .. } => CliError::Guard(e.to_string()),
            ExperimentsError::Sw(sw) => sw.into(),
            ExperimentsError::Model(m) => m.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<WavepacketError> for CliError {
    fn from(e: WavepacketError) -> Self {
        match e {
            WavepacketError::Config(_) => CliError::Validation(e.to_string()),
            WavepacketError::Model(m) => m.into(),
            _ => CliError::Guard(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gatom: {}", e.message());
            e.exit_code()
        }
    }
}

/// Per-command default base: `sw-compare` starts from the detuned
/// comparison setup (omega_0 = 0.9 omega_c, Delta in [-1.5, 1.5]).
fn command_defaults(command: Command) -> Option<RunConfig> {
    match command {
        Command::SwCompare => {
            let mut base = RunConfig::default();
            base.params.omega_0 = 18.0;
            base.delta_min = -1.5;
            base.delta_max = 1.5;
            Some(base)
        }
        _ => None,
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let file_text = match &cli.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?,
        None => String::new(),
    };
    let mut flag_overrides = Vec::with_capacity(cli.set.len());
    for pair in &cli.set {
        let Some((key, value)) = pair.split_once('=') else {
            return Err(CliError::Validation(format!(
                "--set expects KEY=VALUE, got `{pair}`"
            )));
        };
        flag_overrides.push((key.to_string(), value.to_string()));
    }
    let mut config = match command_defaults(cli.command) {
        Some(base) => parse_config_with_base(base, &file_text, &flag_overrides)?,
        None => parse_config(&file_text, &flag_overrides)?,
    };
    config.command = cli.command.name().to_string();
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    } else if let Ok(dir) = std::env::var("GATOM_OUT_DIR") {
        if !dir.is_empty() {
            config.output_dir = PathBuf::from(dir);
        }
    }
    if let Some(formats) = &cli.format {
        config.formats = config::Formats {
            csv: false,
            json: false,
            svg: false,
        };
        for f in formats {
            match f.as_str() {
                "csv" => config.formats.csv = true,
                "json" => config.formats.json = true,
                "svg" => config.formats.svg = true,
                other => {
                    return Err(CliError::Validation(format!(
                        "unknown format `{other}` (expected csv, json, svg)"
                    )))
                }
            }
        }
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = resolve_config(&cli)?;
    std::fs::create_dir_all(&config.output_dir)?;
    match cli.command {
        Command::Spectrum => cmd_spectrum(&config),
        Command::SwCompare => cmd_sw_compare(&config),
        Command::WidthScan => cmd_width_scan(&config),
        Command::Parity => cmd_parity(&config),
        Command::Wavepacket => cmd_wavepacket(&config),
        Command::Verify => cmd_verify(&config),
    }
}

fn meta_value(config: &RunConfig, extra: serde_json::Value) -> serde_json::Value {
    json!({
        "tool": "gatom",
        "config": config,
        "results": extra,
    })
}

fn cmd_spectrum(config: &RunConfig) -> Result<(), CliError> {
    let s = sweep(
        &config.params,
        config.block,
        config.delta_min,
        config.delta_max,
        config.n_points,
    )?;
    let dir = &config.output_dir;
    if config.formats.csv {
        let rows: Vec<Vec<String>> = s
            .deltas
            .iter()
            .zip(s.values.iter())
            .map(|(d, r)| vec![fmt_f64(*d), fmt_f64(*r)])
            .collect();
        write_csv(&dir.join("spectrum.csv"), "delta,R", &rows)?;
    }
    if config.formats.svg {
        let plot = line_plot(
            &format!("Reflection spectrum ({} block)", config.block),
            "delta [xi]",
            "R",
            &[Series {
                label: "R",
                x: &s.deltas,
                y: &s.values,
            }],
        );
        output::write_atomic(&dir.join("spectrum.svg"), &plot)?;
    }
    write_json(
        &dir.join("spectrum.json"),
        &meta_value(
            config,
            json!({ "sweep_meta": s.meta, "skipped": s.skipped }),
        ),
    )?;
    println!(
        "spectrum: {} points, {} skipped -> {}",
        s.deltas.len(),
        s.skipped.len(),
        dir.display()
    );
    Ok(())
}

fn cmd_sw_compare(config: &RunConfig) -> Result<(), CliError> {
    let exact = sweep(
        &config.params,
        BlockKind::Exact,
        config.delta_min,
        config.delta_max,
        config.n_points,
    )?;
    let eff = sweep(
        &config.params,
        BlockKind::SchriefferWolff,
        config.delta_min,
        config.delta_max,
        config.n_points,
    )?;
    let diff: Vec<f64> = exact
        .values
        .iter()
        .zip(eff.values.iter())
        .map(|(a, b)| (a - b).abs())
        .collect();
    let sup_norm = diff
        .iter()
        .copied()
        .filter(|d| d.is_finite())
        .fold(0.0, f64::max);
    let sw = sw_model(&config.params)?;
    let dir = &config.output_dir;
    if config.formats.csv {
        let rows: Vec<Vec<String>> = exact
            .deltas
            .iter()
            .zip(exact.values.iter().zip(eff.values.iter().zip(diff.iter())))
            .map(|(d, (r, (rp, ad)))| vec![fmt_f64(*d), fmt_f64(*r), fmt_f64(*rp), fmt_f64(*ad)])
            .collect();
        write_csv(
            &dir.join("sw_compare.csv"),
            "delta,R,R_prime,abs_diff",
            &rows,
        )?;
    }
    if config.formats.svg {
        let plot = line_plot(
            "Exact vs dispersive-effective reflection",
            "delta [xi]",
            "R",
            &[
                Series {
                    label: "R exact",
                    x: &exact.deltas,
                    y: &exact.values,
                },
                Series {
                    label: "R' effective",
                    x: &eff.deltas,
                    y: &eff.values,
                },
            ],
        );
        output::write_atomic(&dir.join("sw_compare.svg"), &plot)?;
    }
    write_json(
        &dir.join("sw_compare.json"),
        &meta_value(
            config,
            json!({
                "sup_norm": sup_norm,
                "sw_model": sw,
                "skipped_exact": exact.skipped,
                "skipped_effective": eff.skipped,
            }),
        ),
    )?;
    println!(
        "sw-compare: sup |R - R'| = {sup_norm:.3e} -> {}",
        dir.display()
    );
    Ok(())
}

fn cmd_width_scan(config: &RunConfig) -> Result<(), CliError> {
    let rows = width_scan(
        &config.params,
        config.vary,
        &config.vary_values,
        config.vary_fixed,
    );
    let dir = &config.output_dir;
    let mut csv_rows = Vec::new();
    let mut json_rows = Vec::new();
    let mut fwhm_series = Vec::new();
    let mut window_series = Vec::new();
    for (value, features) in &rows {
        match features {
            Ok(f) => {
                let fwhm = f.central_dip_fwhm;
                let window = f.window_width;
                csv_rows.push(vec![
                    fmt_f64(*value),
                    fwhm.map(fmt_f64).unwrap_or_default(),
                    window.map(fmt_f64).unwrap_or_default(),
                    f.n_peaks.to_string(),
                ]);
                fwhm_series.push((*value, fwhm.unwrap_or(f64::NAN)));
                window_series.push((*value, window.unwrap_or(f64::NAN)));
                json_rows.push(json!({ "value": value, "features": f }));
            }
            Err(e) => {
                csv_rows.push(vec![
                    fmt_f64(*value),
                    String::new(),
                    String::new(),
                    String::new(),
                ]);
                json_rows.push(json!({ "value": value, "error": e.to_string() }));
            }
        }
    }
    if config.formats.csv {
        write_csv(
            &dir.join("width_scan.csv"),
            "vary_value,fwhm,window_width,n_peaks",
            &csv_rows,
        )?;
    }
    if config.formats.svg {
        let (fx, fy): (Vec<f64>, Vec<f64>) = fwhm_series.into_iter().unzip();
        let (wx, wy): (Vec<f64>, Vec<f64>) = window_series.into_iter().unzip();
        let plot = line_plot(
            &format!("Width control by {}", config.vary),
            &format!("{} [xi]", config.vary),
            "width [xi]",
            &[
                Series {
                    label: "valley fwhm",
                    x: &fx,
                    y: &fy,
                },
                Series {
                    label: "window width",
                    x: &wx,
                    y: &wy,
                },
            ],
        );
        output::write_atomic(&dir.join("width_scan.svg"), &plot)?;
    }
    write_json(
        &dir.join("width_scan.json"),
        &meta_value(config, json!({ "rows": json_rows })),
    )?;
    println!("width-scan: {} values -> {}", rows.len(), dir.display());
    Ok(())
}

fn cmd_parity(config: &RunConfig) -> Result<(), CliError> {
    let rows = parity_classification(&config.params, &config.parity_n)?;
    let dir = &config.output_dir;
    if config.formats.csv {
        let csv_rows: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    r.class.to_string(),
                    fmt_f64(r.r_at_zero),
                    r.width.map(fmt_f64).unwrap_or_default(),
                ]
            })
            .collect();
        write_csv(
            &dir.join("parity.csv"),
            "N,class,r_at_zero,width",
            &csv_rows,
        )?;
    }
    if config.formats.svg {
        let x: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
        let widths: Vec<f64> = rows.iter().map(|r| r.width.unwrap_or(f64::NAN)).collect();
        let r0: Vec<f64> = rows.iter().map(|r| r.r_at_zero).collect();
        let plot = line_plot(
            "Valley/window width and resonant reflection by N",
            "N",
            "width [xi] / R(0)",
            &[
                Series {
                    label: "width",
                    x: &x,
                    y: &widths,
                },
                Series {
                    label: "R(0)",
                    x: &x,
                    y: &r0,
                },
            ],
        );
        output::write_atomic(&dir.join("parity.svg"), &plot)?;
    }
    write_json(
        &dir.join("parity.json"),
        &meta_value(config, json!({ "rows": rows })),
    )?;
    println!("parity: {} rows -> {}", rows.len(), dir.display());
    Ok(())
}

fn cmd_wavepacket(config: &RunConfig) -> Result<(), CliError> {
    let params = &config.params;
    let opts = &config.wavepacket;
    let k0 = wavevector_of_energy(params, params.omega_a + opts.delta)?;
    let cfg = WavepacketConfig {
        chain_length: opts.chain_length,
        k0,
        sigma_x: opts.sigma_x,
        x0: opts.x0,
        time_step: opts.time_step,
        max_time: opts.max_time,
        absorb_guard: opts.absorb_guard,
    };
    let block = match config.block {
        BlockKind::Exact => exact_emitter_block(params),
        BlockKind::SchriefferWolff => sw_emitter_block(params)?,
    };
    // steady-state reference at the carrier: closed form for the exact
    // block, solver rate for the effective one
    let r_reference = match config.block {
        BlockKind::Exact => match reflection_analytic(params, k0) {
            Ok(r) => r.r_rate,
            Err(AnalyticError::Degenerate { .. }) => {
                return Err(CliError::Guard(
                    "carrier sits on an indeterminate 0/0 point; shift wp_delta slightly".into(),
                ))
            }
            Err(e) => return Err(CliError::Guard(e.to_string())),
        },
        BlockKind::SchriefferWolff => solve_scattering(&block, params, k0)?.reflection(),
    };

    let dir = &config.output_dir;
    let (outcome, frames) = if opts.snapshot {
        propagate_with_snapshots(&block, params, &cfg, opts.snapshot_stride)?
    } else {
        (propagate(&block, params, &cfg)?, Vec::new())
    };
    if opts.snapshot && config.formats.csv {
        let mut rows = Vec::new();
        for frame in &frames {
            for (offset, p) in frame.site_probabilities.iter().enumerate() {
                rows.push(vec![
                    fmt_f64(frame.time),
                    (frame.first_site + offset as i64).to_string(),
                    fmt_f64(*p),
                ]);
            }
        }
        write_csv(
            &dir.join("wavepacket_snapshots.csv"),
            "time,site,probability",
            &rows,
        )?;
    }
    let abs_diff = (outcome.r_wp - r_reference).abs();
    write_json(
        &dir.join("wavepacket.json"),
        &meta_value(
            config,
            json!({
                "R_wp": outcome.r_wp,
                "T_wp": outcome.t_wp,
                "leak": outcome.leak,
                "R_analytic": r_reference,
                "abs_diff": abs_diff,
                "outcome": outcome,
                "k0": k0,
            }),
        ),
    )?;
    println!(
        "wavepacket: R_wp = {:.6}, reference = {:.6}, |diff| = {:.2e} -> {}",
        outcome.r_wp,
        r_reference,
        abs_diff,
        dir.display()
    );
    Ok(())
}

fn cmd_verify(config: &RunConfig) -> Result<(), CliError> {
    const SOLVER_TOL: f64 = 1e-10;
    const UNITARITY_TOL: f64 = 1e-10;
    const PROJECTION_TOL: f64 = 1e-12;

    let mut rng = rand::rngs::StdRng::seed_from_u64(7001);
    let mut solver_max: f64 = 0.0;
    let mut unitarity_max: f64 = 0.0;
    let mut checked = 0;
    while checked < 300 {
        let omega_0 = if rng.random_bool(0.5) {
            20.0
        } else {
            rng.random_range(18.0..22.0)
        };
        let p = SystemParams::new(
            20.0,
            1.0,
            omega_0,
            20.0,
            rng.random_range(0.0..0.5),
            rng.random_range(0.0..1.0),
            rng.random_range(0..9),
        )
        .expect("draw is valid");
        let Ok(k) = wavevector_of_energy(&p, p.omega_a + rng.random_range(-1.99..1.99)) else {
            continue;
        };
        let solution = solve_scattering(&exact_emitter_block(&p), &p, k)?;
        unitarity_max = unitarity_max.max(solution.unitarity_residual);
        match reflection_analytic(&p, k) {
            Ok(r) => solver_max = solver_max.max((solution.reflection() - r.r_rate).abs()),
            Err(AnalyticError::Degenerate { .. }) => continue,
            Err(e) => return Err(CliError::Guard(e.to_string())),
        }
        checked += 1;
    }

    let reference = SystemParams::new(20.0, 1.0, 18.0, 20.0, 0.2, 0.5, 4)
        .expect("reference parameters are valid");
    let mut projection_max = verify_sw_projection(&reference, 3, 9)?;
    let mut done = 0;
    while done < 10 {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let p = SystemParams::new(
            20.0,
            1.0,
            20.0 + sign * rng.random_range(1.0..3.0),
            20.0,
            rng.random_range(0.0..0.25),
            rng.random_range(0.0..1.0),
            rng.random_range(0..5),
        )
        .expect("draw is valid");
        if sw_model(&p).is_err() {
            continue;
        }
        projection_max = projection_max.max(verify_sw_projection(&p, 3, p.n + 4)?);
        done += 1;
    }

    let pass = solver_max <= SOLVER_TOL
        && unitarity_max <= UNITARITY_TOL
        && projection_max <= PROJECTION_TOL;
    write_json(
        &config.output_dir.join("verify.json"),
        &meta_value(
            config,
            json!({
                "solver_vs_analytic_max": solver_max,
                "solver_vs_analytic_tol": SOLVER_TOL,
                "unitarity_max": unitarity_max,
                "unitarity_tol": UNITARITY_TOL,
                "sw_projection_max": projection_max,
                "sw_projection_tol": PROJECTION_TOL,
                "pass": pass,
            }),
        ),
    )?;
    println!(
        "verify: solver {solver_max:.2e}, unitarity {unitarity_max:.2e}, projection {projection_max:.2e} -> {}",
        if pass { "PASS" } else { "FAIL" }
    );
    if pass {
        Ok(())
    } else {
        Err(CliError::Guard(
            "verification deviations exceed thresholds".into(),
        ))
    }
}
