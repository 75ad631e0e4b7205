//! Command-line surface of the twinphoton toolkit.
//!
//! Every command loads one [`DeviceConfig`] (defaults, then `--config`,
//! then `--set` overrides, then subcommand flags), writes its tables into
//! `--out` together with a `<name>.meta.json` sidecar carrying the config
//! hash, and returns a [`RunReport`].

pub mod error;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Deserialize;
use serde_json::json;

use twinphoton::config::DeviceConfig;
use twinphoton::efficiency::{brightness, enhancement_factor, expected_counts, CavityParams};
use twinphoton::hom::{self, fit_dip, linear_positions, simulate_scan, HomScan, ScanPoint};
use twinphoton::modes::{fundamental_mode, guided_modes, FundamentalModes};
use twinphoton::phasematch::{angle_grid, degeneracy_angle, tuning_curve, Interaction};
use twinphoton::spectra::{fluorescence_spectrum, Grid};
use twinphoton::stack::{field_profile, find_resonance, stack_response, ProfileSampling};
use twinphoton::Polarization;

pub use error::{CliError, EXIT_INPUT, EXIT_NUMERICAL};
pub use output::{Cell, Format, RunReport, Sink, Table};

#[derive(Debug, Parser)]
#[command(name = "twinphoton", version, about = "Twin-photon ridge microcavity simulator")]
pub struct Cli {
    /// JSON device config; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// RNG seed, overrides `seed` in the config.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Format of tabular outputs.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Dotted config override, e.g. `hom.dwell_s=30`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Do not print the run report.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reflectance spectrum and field profile of the vertical cavity.
    Stack {
        #[arg(long)]
        start_nm: Option<f64>,
        #[arg(long)]
        stop_nm: Option<f64>,
        #[arg(long)]
        step_nm: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        theta_deg: Option<f64>,
        #[arg(long)]
        pol: Option<Polarization>,
    },
    /// Guided-mode table (all orders, TE and TM).
    Modes {
        #[arg(long)]
        start_nm: Option<f64>,
        #[arg(long)]
        stop_nm: Option<f64>,
        #[arg(long)]
        step_nm: Option<f64>,
    },
    /// Signal/idler wavelengths versus pump angle for both interactions.
    Tuning {
        #[arg(long, allow_negative_numbers = true)]
        start_deg: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        stop_deg: Option<f64>,
        #[arg(long)]
        step_deg: Option<f64>,
        #[arg(long)]
        pump_nm: Option<f64>,
    },
    /// Four-peak parametric fluorescence spectrum.
    Spectrum {
        #[arg(long, allow_negative_numbers = true)]
        theta_deg: Option<f64>,
        #[arg(long)]
        pump_nm: Option<f64>,
    },
    /// Two-photon interference scans.
    Hom {
        #[command(subcommand)]
        action: HomAction,
    },
    /// Cavity enhancement factor with brightness and count budget.
    Enhancement,
    /// Singles, coincidence and accidental rates of the detection chain.
    Budget,
}

#[derive(Debug, Subcommand)]
pub enum HomAction {
    /// Poisson-sampled delay scan.
    Simulate,
    /// Fit visibility and spectral width to a scan file.
    Fit {
        /// Scan CSV (delta_z_mm,total_counts,accidental_counts) or JSON array.
        #[arg(long, value_name = "PATH")]
        input: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Stack { .. } => "stack",
            Command::Modes { .. } => "modes",
            Command::Tuning { .. } => "tuning",
            Command::Spectrum { .. } => "spectrum",
            Command::Hom {
                action: HomAction::Simulate,
            } => "hom simulate",
            Command::Hom {
                action: HomAction::Fit { .. },
            } => "hom fit",
            Command::Enhancement => "enhancement",
            Command::Budget => "budget",
        }
    }

    /// Subcommand flags as config overrides, so the hash covers them.
    fn overrides(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut put = |key: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push(format!("{key}={v}"));
            }
        };
        let num = |v: &Option<f64>| v.map(|x| format!("{x:?}"));
        match self {
            Command::Stack {
                start_nm,
                stop_nm,
                step_nm,
                theta_deg,
                pol,
            } => {
                put("stack_scan.start_nm", num(start_nm));
                put("stack_scan.stop_nm", num(stop_nm));
                put("stack_scan.step_nm", num(step_nm));
                put("stack_scan.theta_deg", num(theta_deg));
                put("stack_scan.polarization", pol.map(|p| p.to_string()));
            }
            Command::Modes {
                start_nm,
                stop_nm,
                step_nm,
            } => {
                put("modes.start_nm", num(start_nm));
                put("modes.stop_nm", num(stop_nm));
                put("modes.step_nm", num(step_nm));
            }
            Command::Tuning {
                start_deg,
                stop_deg,
                step_deg,
                pump_nm,
            } => {
                put("tuning.theta_start_deg", num(start_deg));
                put("tuning.theta_stop_deg", num(stop_deg));
                put("tuning.theta_step_deg", num(step_deg));
                put("tuning.pump_wavelength_nm", num(pump_nm));
            }
            Command::Spectrum { theta_deg, pump_nm } => {
                put("spectrum.theta_deg", num(theta_deg));
                put("spectrum.pump_wavelength_nm", num(pump_nm));
            }
            _ => {}
        }
        out
    }
}

/// Loads the config, runs the command and writes every output.
pub fn run(cli: &Cli) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let text = match &cli.config {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?),
        None => None,
    };
    let mut overrides = cli.set.clone();
    overrides.extend(cli.command.overrides());
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    let cfg = DeviceConfig::load(text.as_deref(), &overrides)?;
    let hash = cfg.hash();
    let name = cli.command.name();
    let mut sink = Sink::new(&cli.out, cli.format, name, &hash, cfg.seed)?;
    let warnings = match &cli.command {
        Command::Stack { .. } => cmd_stack(&cfg, &mut sink)?,
        Command::Modes { .. } => cmd_modes(&cfg, &mut sink)?,
        Command::Tuning { .. } => cmd_tuning(&cfg, &mut sink)?,
        Command::Spectrum { .. } => cmd_spectrum(&cfg, &mut sink)?,
        Command::Hom { action } => match action {
            HomAction::Simulate => cmd_hom_simulate(&cfg, &mut sink)?,
            HomAction::Fit { input } => cmd_hom_fit(&cfg, input, &mut sink)?,
        },
        Command::Enhancement => cmd_enhancement(&cfg, &mut sink)?,
        Command::Budget => cmd_budget(&cfg, &mut sink)?,
    };
    let report = RunReport {
        command: name.into(),
        config_hash: hash,
        outputs: sink.written.iter().map(|p| p.display().to_string()).collect(),
        elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
        warnings,
    };
    let path = cli.out.join("run_report.json");
    std::fs::write(&path, output::json_bytes(&report)).map_err(|e| CliError::io(&path, e))?;
    Ok(report)
}

pub fn cmd_stack(cfg: &DeviceConfig, sink: &mut Sink) -> Result<Vec<String>, CliError> {
    let stack = cfg.build_stack()?;
    let sc = cfg.stack_scan;
    let mut warnings = Vec::new();
    let grid = Grid::spanning(sc.start_nm, sc.stop_nm, sc.step_nm)?;
    let resonance = match find_resonance(&stack, sc.resonance_window_nm, sc.theta_deg, sc.polarization) {
        Ok(r) => Some(r),
        Err(e) => {
            warnings.push(format!("resonance: {e}"));
            None
        }
    };
    let flagged = resonance.map(|r| ((r.wavelength_nm - grid.start_nm) / grid.step_nm).round());
    let mut refl = Table::new("reflectance", &["lambda_nm", "reflectance", "transmittance", "resonance"]);
    for k in 0..grid.count {
        let l = grid.at(k);
        let r = stack_response(&stack, l, sc.theta_deg, sc.polarization)?;
        refl.push(vec![
            l.into(),
            r.reflectance.into(),
            r.transmittance.into(),
            (flagged == Some(k as f64)).into(),
        ]);
    }
    refl = refl.with_meta(json!({
        "theta_deg": sc.theta_deg,
        "polarization": sc.polarization,
        "resonance": resonance,
        "layers": stack.layers.len(),
        "total_thickness_nm": stack.total_thickness_nm(),
    }));
    sink.table(&refl)?;

    let lambda = resonance.map_or(cfg.pump.wavelength_nm, |r| r.wavelength_nm);
    let sampling = ProfileSampling {
        per_layer: sc.profile_samples_per_layer,
        ..ProfileSampling::default()
    };
    let prof = field_profile(&stack, lambda, sc.theta_deg, sc.polarization, sampling)?;
    let mut t = Table::new("field_profile", &["depth_nm", "index", "layer", "intensity", "re_field", "im_field"]);
    let last = stack.layers.len();
    for i in 0..prof.depth_nm.len() {
        let layer = match prof.layer[i] {
            Some(j) => j.to_string(),
            None if prof.depth_nm[i] < 0.0 => "ambient".into(),
            None => "substrate".into(),
        };
        let e = prof.field[i];
        t.push(vec![
            prof.depth_nm[i].into(),
            prof.index[i].into(),
            layer.into(),
            e.norm_sqr().into(),
            e.re.into(),
            e.im.into(),
        ]);
    }
    t = t.with_meta(json!({
        "wavelength_nm": lambda,
        "normalization": "incident intensity = 1",
        "layer_count": last,
        "regions": stack.regions,
    }));
    sink.table(&t)?;
    Ok(warnings)
}

pub fn cmd_modes(cfg: &DeviceConfig, sink: &mut Sink) -> Result<Vec<String>, CliError> {
    let stack = cfg.build_stack()?;
    let grid = Grid::spanning(cfg.modes.start_nm, cfg.modes.stop_nm, cfg.modes.step_nm)?;
    let mut t = Table::new("modes", &["pol", "order", "lambda_nm", "n_eff", "n_g"]);
    for pol in [Polarization::TE, Polarization::TM] {
        for l in grid.wavelengths() {
            for m in guided_modes(&stack, l, pol)? {
                t.push(vec![
                    pol.to_string().into(),
                    m.order.into(),
                    l.into(),
                    m.n_eff.into(),
                    m.group_index.unwrap_or(f64::NAN).into(),
                ]);
            }
        }
    }
    sink.table(&t)?;
    Ok(Vec::new())
}

fn tracker(cfg: &DeviceConfig, lambda_p_nm: f64) -> Result<FundamentalModes, CliError> {
    Ok(FundamentalModes::new(cfg.build_stack()?, 2.0 * lambda_p_nm)?)
}

pub fn cmd_tuning(cfg: &DeviceConfig, sink: &mut Sink) -> Result<Vec<String>, CliError> {
    let tc = cfg.tuning;
    let idx = tracker(cfg, tc.pump_wavelength_nm)?;
    let angles = angle_grid(tc.theta_start_deg, tc.theta_stop_deg, tc.theta_step_deg)?;
    let curve = tuning_curve(&idx, &angles, tc.pump_wavelength_nm);
    let warnings: Vec<String> = curve
        .failures
        .iter()
        .map(|f| format!("interaction {} at {} deg: {}", f.interaction, f.theta_deg, f.message))
        .collect();
    if curve.points.is_empty() {
        return Err(CliError::Numerical(format!("every tuning row failed: {}", warnings.join("; "))));
    }
    let mut t = Table::new(
        "tuning",
        &["interaction", "theta_deg", "lambda_s_nm", "lambda_i_nm", "n_s", "n_i", "degenerate"],
    );
    for p in &curve.points {
        let q = &p.point;
        t.push(vec![
            (q.interaction.id() as u64).into(),
            q.theta_deg.into(),
            q.lambda_s_nm.into(),
            q.lambda_i_nm.into(),
            q.n_s.into(),
            q.n_i.into(),
            p.degenerate.into(),
        ]);
    }
    let degeneracy: Vec<_> = Interaction::BOTH
        .iter()
        .map(|&i| json!({"interaction": i, "theta_deg": degeneracy_angle(&idx, i, tc.pump_wavelength_nm).ok()}))
        .collect();
    t = t.with_meta(json!({
        "lambda_p_nm": tc.pump_wavelength_nm,
        "signal": "photon copropagating with the pump's in-plane component",
        "degeneracy": degeneracy,
        "failures": curve.failures,
    }));
    sink.table(&t)?;
    Ok(warnings)
}

pub fn cmd_spectrum(cfg: &DeviceConfig, sink: &mut Sink) -> Result<Vec<String>, CliError> {
    let sc = &cfg.spectrum;
    let idx = tracker(cfg, sc.pump_wavelength_nm)?;
    let opts = cfg.fluorescence_options()?;
    let f = fluorescence_spectrum(&idx, sc.theta_deg, sc.pump_wavelength_nm, &opts)?;
    let peaks = f.peaks();
    let mut warnings = Vec::new();
    let expected = 2 * opts.interactions.len();
    if peaks.len() != expected {
        warnings.push(format!("{} resolved peaks, {expected} photons expected", peaks.len()));
    }
    let mut t = Table::new("spectrum", &["lambda_nm", "intensity"]);
    for (k, &v) in f.spectrum.intensity.iter().enumerate() {
        t.push(vec![f.spectrum.grid.at(k).into(), v.into()]);
    }
    t = t.with_meta(json!({
        "spectrum": f.spectrum.meta,
        "long_wavelength_factor": opts.long_wavelength_factor,
        "intensity_unit": "unattenuated single-photon sinc^2 peak = 1 before convolution",
        "pairs": f.pairs,
        "peaks": peaks,
    }));
    sink.table(&t)?;
    Ok(warnings)
}

pub fn cmd_hom_simulate(cfg: &DeviceConfig, sink: &mut Sink) -> Result<Vec<String>, CliError> {
    let m = cfg.dip_model()?;
    let rates = cfg.scan_rates()?;
    let h = &cfg.hom;
    let positions = linear_positions(h.start_mm, h.stop_mm, h.points)?;
    let scan = simulate_scan(&m, &rates, &positions, h.dwell_s, cfg.seed)?;
    let mut t = Table::new("hom_scan", &["delta_z_mm", "total_counts", "accidental_counts"]);
    for p in &scan.points {
        t.push(vec![p.delta_z_mm.into(), p.total_counts.into(), p.accidental_counts.into()]);
    }
    t = t.with_meta(json!({
        "model": m,
        "fwhm_mm": m.fwhm_mm(),
        "rates_hz": rates,
        "dwell_s": h.dwell_s,
    }));
    sink.table(&t)?;
    Ok(Vec::new())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScanRow {
    delta_z_mm: f64,
    total_counts: u64,
    accidental_counts: u64,
}

const SCAN_COLUMNS: [&str; 3] = ["delta_z_mm", "total_counts", "accidental_counts"];

/// Reads a scan file in the documented schema; JSON when the extension
/// says so, CSV otherwise.
pub fn read_scan(path: &Path) -> Result<Vec<ScanPoint>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let bad = |m: String| CliError::Input(format!("{}: {m}", path.display()));
    let rows: Vec<ScanRow> = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?
    } else {
        let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let header = r.headers().map_err(|e| bad(e.to_string()))?.clone();
        if header.iter().map(str::trim).ne(SCAN_COLUMNS) {
            return Err(bad(format!("header must be {}", SCAN_COLUMNS.join(","))));
        }
        r.deserialize().collect::<Result<_, _>>().map_err(|e| bad(e.to_string()))?
    };
    if rows.is_empty() {
        return Err(bad("no rows".into()));
    }
    Ok(rows
        .into_iter()
        .map(|r| ScanPoint {
            delta_z_mm: r.delta_z_mm,
            total_counts: r.total_counts,
            accidental_counts: r.accidental_counts,
        })
        .collect())
}

pub fn cmd_hom_fit(cfg: &DeviceConfig, input: &Path, sink: &mut Sink) -> Result<Vec<String>, CliError> {
    let points = read_scan(input)?;
    let scan = HomScan::new(points, cfg.hom.dwell_s, None)?;
    let fit = fit_dip(&scan, cfg.hom.wavelength_nm, &cfg.hom.fit)?;
    let residual_norm = fit.residuals.iter().map(|r| r * r).sum::<f64>().sqrt();
    sink.report(
        "hom_fit",
        &json!({
            "input": input.display().to_string(),
            "converged": true,
            "visibility": fit.visibility,
            "visibility_se": fit.visibility_se,
            "delta_lambda_nm": fit.delta_lambda_nm,
            "delta_lambda_se": fit.delta_lambda_se,
            "wavelength_nm": fit.wavelength_nm,
            "fwhm_mm": fit.fwhm_mm,
            "baseline_counts": fit.baseline,
            "chi2": fit.chi2,
            "dof": fit.dof,
            "residual_norm": residual_norm,
            "iterations": fit.iterations,
            "residuals": fit.residuals,
        }),
    )?;
    Ok(Vec::new())
}

pub fn cmd_enhancement(cfg: &DeviceConfig, sink: &mut Sink) -> Result<Vec<String>, CliError> {
    let ov = cfg.cavity_override;
    let mut resonance = None;
    let base = if ov.is_complete() {
        CavityParams {
            n: 0.0,
            finesse: 0.0,
            t_up: 0.0,
            t_down: 0.0,
        }
    } else {
        let stack = cfg.build_stack()?;
        let sc = cfg.stack_scan;
        let res = find_resonance(&stack, sc.resonance_window_nm, sc.theta_deg, sc.polarization)?;
        resonance = Some(res);
        let n = match ov.n {
            Some(n) => n,
            None => {
                let l = 2.0 * cfg.pump.wavelength_nm;
                let te = fundamental_mode(&stack, l, Polarization::TE)?.n_eff;
                let tm = fundamental_mode(&stack, l, Polarization::TM)?.n_eff;
                0.5 * (te + tm)
            }
        };
        CavityParams::from_resonance(&res, n)
    };
    let cavity = ov.apply(base);
    let factor = enhancement_factor(&cavity)?;
    let pairs = brightness(
        &cfg.pump_pulse(),
        cfg.conversion_efficiency,
        cfg.illuminated_length_mm / cfg.sample_length_mm,
    )?;
    let overridden: Vec<&str> = [
        ("n", ov.n.is_some()),
        ("finesse", ov.finesse.is_some()),
        ("t_up", ov.t_up.is_some()),
        ("t_down", ov.t_down.is_some()),
    ]
    .into_iter()
    .filter_map(|(k, set)| set.then_some(k))
    .collect();
    sink.report(
        "enhancement",
        &json!({
            "n": cavity.n,
            "finesse": cavity.finesse,
            "t_up": cavity.t_up,
            "t_down": cavity.t_down,
            "enhancement_factor": factor,
            "overridden": overridden,
            "resonance": resonance,
            "brightness": pairs,
            "count_budget": expected_counts(&cfg.detection)?,
            "visibility_from_facets": hom::visibility_from_reflectivity(cfg.facet_reflectance)?,
        }),
    )?;
    Ok(Vec::new())
}

pub fn cmd_budget(cfg: &DeviceConfig, sink: &mut Sink) -> Result<Vec<String>, CliError> {
    let budget = expected_counts(&cfg.detection)?;
    sink.report("count_budget", &json!({"detection": cfg.detection, "budget": budget}))?;
    Ok(Vec::new())
}
