//! Command-line front end: simulate, map, fit, fit-map, scaling, tempfit,
//! and report.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O or parse error, 3 fit
//! non-convergence, 4 numerical or singular-model error. Diagnostics go to
//! stderr; data go to files or stdout only.

mod heatmap;
mod render;

pub use heatmap::{write_heatmap_matrix, write_heatmap_pgm};
pub use render::render_text;

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::data::{
    self, fnv1a64, Convergence, DataError, InputDigest, ReportDoc, RunManifest, SweepMeta,
};
use crate::fit::{
    fit_map, fit_scaling, fit_sweep, fit_temperature, FitError, FitOptions, MapFitConfig, SweepFit,
    SweepFitConfig, SweepInit, TempFitOptions,
};
use crate::model::{
    cooperativity, dbm_to_watts, intracavity_photons, thermal_occupation, HybridParams,
    PhysicalConstants, G0_CONVENTION_NOTE,
};
use crate::synth::{
    gen_map, gen_scaling_series, gen_sweep, gen_temperature_series, presets, MapScenario,
    NoiseSpec, SynthError,
};

const EXIT_USAGE: i32 = 1;
const EXIT_IO: i32 = 2;
const EXIT_NOT_CONVERGED: i32 = 3;
const EXIT_NUMERICAL: i32 = 4;

#[derive(Parser)]
#[command(
    name = "magnonics",
    version,
    about = "Hybrid magnon-photon cavity spectroscopy: synthesis and parameter extraction",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize one transmission sweep from a scenario.
    Simulate(SimulateArgs),
    /// Synthesize a current x frequency map, or export plots of an existing one.
    Map(MapArgs),
    /// Fit the hybrid model to a sweep and write a report.
    Fit(FitArgs),
    /// Fit every column of a map and extract the field calibration.
    FitMap(FitMapArgs),
    /// Fit the coupling-versus-diameter scaling law.
    Scaling(ScalingArgs),
    /// Fit the linewidth-versus-temperature model.
    Tempfit(TempfitArgs),
    /// Render fit reports as human-readable text.
    Report(ReportArgs),
}

#[derive(Args)]
struct ScenarioSource {
    /// Scenario document (TOML).
    #[arg(long, conflicts_with = "preset")]
    scenario: Option<PathBuf>,
    /// Bundled scenario: `fig2` (avoided-crossing map).
    #[arg(long)]
    preset: Option<String>,
    /// Override the noise seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the per-quadrature noise level.
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: ScenarioSource,
    /// Coil current of the sweep (mA); defaults to the degeneracy current.
    #[arg(long)]
    current: Option<f64>,
    /// Output sweep CSV.
    #[arg(long)]
    out: PathBuf,
    /// Also write a standalone run-manifest document.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// RFC 3339 timestamp to embed (omitted by default so reruns are
    /// byte-identical).
    #[arg(long)]
    timestamp: Option<String>,
}

#[derive(Args)]
struct MapArgs {
    #[command(flatten)]
    source: ScenarioSource,
    /// Export plots of an existing map CSV instead of synthesizing.
    #[arg(long, conflicts_with_all = ["scenario", "preset", "seed", "sigma"])]
    input: Option<PathBuf>,
    /// Output map CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grayscale raster (ASCII PGM) of Re(S21).
    #[arg(long)]
    ppm: Option<PathBuf>,
    /// Gnuplot nonuniform-matrix text of Re(S21).
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    timestamp: Option<String>,
}

#[derive(Args, Clone)]
struct FitTuning {
    /// Maximum damped least-squares iterations.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Relative cost-decrease tolerance.
    #[arg(long)]
    cost_tol: Option<f64>,
    /// Gradient infinity-norm tolerance.
    #[arg(long)]
    grad_tol: Option<f64>,
}

impl FitTuning {
    fn apply(&self, mut opts: FitOptions) -> FitOptions {
        if let Some(v) = self.max_iter {
            opts.max_iterations = v;
        }
        if let Some(v) = self.cost_tol {
            opts.cost_tolerance = v;
        }
        if let Some(v) = self.grad_tol {
            opts.gradient_tolerance = v;
        }
        opts
    }
}

#[derive(Args)]
struct FitArgs {
    /// Input sweep CSV.
    input: PathBuf,
    /// Output report (TOML).
    #[arg(long)]
    out: PathBuf,
    /// Scenario supplying the starting point (and the port split).
    #[arg(long)]
    init: Option<PathBuf>,
    /// Hold the instrument nuisance at its initial values (calibrated data).
    #[arg(long)]
    calibrated: bool,
    /// Fit |S21| instead of the complex signal.
    #[arg(long)]
    magnitude_only: bool,
    #[command(flatten)]
    tuning: FitTuning,
    #[arg(long)]
    timestamp: Option<String>,
}

#[derive(Args)]
struct FitMapArgs {
    /// Input map CSV.
    input: PathBuf,
    /// Output report (TOML).
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    tuning: FitTuning,
    #[arg(long)]
    timestamp: Option<String>,
}

#[derive(Args)]
struct ScalingArgs {
    /// Input points CSV (`diameter_m,g_hz`).
    #[arg(long, conflicts_with = "preset")]
    input: Option<PathBuf>,
    /// Bundled series: `fig3` (coupling vs diameter).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Multiplicative noise level for generated points.
    #[arg(long)]
    sigma: Option<f64>,
    /// Write the (possibly generated) points alongside the fit.
    #[arg(long)]
    points_out: Option<PathBuf>,
    /// Output report (TOML).
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    timestamp: Option<String>,
}

#[derive(Args)]
struct TempfitArgs {
    /// Input points CSV (`temperature_k,gamma_hz`).
    #[arg(long, conflicts_with = "preset")]
    input: Option<PathBuf>,
    /// Bundled series: `fig4` (linewidth vs temperature).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Additive noise level in Hz for generated points.
    #[arg(long)]
    sigma: Option<f64>,
    /// Kittel frequency entering the tanh law (Hz).
    #[arg(long, default_value_t = 10.565e9)]
    f_fmr: f64,
    /// Fit cutoff temperature (K); points above are reported as residuals.
    #[arg(long, default_value_t = 1.0)]
    cutoff: f64,
    #[arg(long)]
    points_out: Option<PathBuf>,
    /// Output report (TOML).
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    timestamp: Option<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// Report documents to render.
    inputs: Vec<PathBuf>,
    /// Write the rendered text here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        Failure::new(EXIT_IO, e.to_string())
    }
}

impl From<SynthError> for Failure {
    fn from(e: SynthError) -> Self {
        let code = match &e {
            SynthError::SingularAtGridPoint { .. } | SynthError::Model(_) => EXIT_NUMERICAL,
            SynthError::Invalid(_) | SynthError::Data(_) => EXIT_IO,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<FitError> for Failure {
    fn from(e: FitError) -> Self {
        let code = match &e {
            FitError::InvalidOptions(_) => EXIT_USAGE,
            FitError::InvalidInput(_) => EXIT_IO,
            FitError::MapFit(_) => EXIT_NOT_CONVERGED,
            FitError::Numerical(_) | FitError::Model(_) => EXIT_NUMERICAL,
        };
        Failure::new(code, e.to_string())
    }
}

/// Entry point: parse `argv` (including the program name), run, and return
/// the process exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let command_line = argv.join(" ");
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprint!("{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli, &command_line) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: Cli, command_line: &str) -> Result<(), Failure> {
    match cli.command {
        Command::Simulate(args) => simulate(args, command_line),
        Command::Map(args) => map_cmd(args, command_line),
        Command::Fit(args) => fit_cmd(args, command_line),
        Command::FitMap(args) => fit_map_cmd(args, command_line),
        Command::Scaling(args) => scaling_cmd(args, command_line),
        Command::Tempfit(args) => tempfit_cmd(args, command_line),
        Command::Report(args) => report_cmd(args),
    }
}

fn load_scenario(source: &ScenarioSource) -> Result<(MapScenario, Vec<InputDigest>), Failure> {
    let mut doc = match (&source.scenario, source.preset.as_deref()) {
        (Some(path), None) => data::read_scenario(path)?,
        (None, Some("fig2")) => presets::splitting_map(),
        (None, Some(other)) => {
            return Err(Failure::new(
                EXIT_USAGE,
                format!("unknown preset {other:?}; this command bundles only `fig2`"),
            ))
        }
        (None, None) => {
            return Err(Failure::new(EXIT_USAGE, "either --scenario or --preset is required"))
        }
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    let mut digests = Vec::new();
    if let Some(path) = &source.scenario {
        let bytes = fs::read(path)
            .map_err(|e| DataError::Io { path: path.display().to_string(), source: e })?;
        digests.push(InputDigest { path: path.display().to_string(), fnv1a64: format!("{:016x}", fnv1a64(&bytes)) });
    }
    if let Some(seed) = source.seed {
        doc.noise.seed = seed;
    }
    if let Some(sigma) = source.sigma {
        doc.noise.sigma = sigma;
    }
    Ok((MapScenario::from_doc(&doc)?, digests))
}

fn toolkit_labels(command_line: &str) -> BTreeMap<String, String> {
    [
        ("toolkit_version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("command_line".to_string(), command_line.to_string()),
    ]
    .into()
}

fn manifest(
    command_line: &str,
    inputs: Vec<InputDigest>,
    seeds: Vec<u64>,
    timestamp: Option<String>,
) -> RunManifest {
    RunManifest {
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        command_line: command_line.to_string(),
        inputs,
        timestamp,
        seeds,
    }
}

fn write_manifest(path: &PathBuf, m: &RunManifest) -> Result<(), Failure> {
    let text = toml::to_string_pretty(m)
        .map_err(|e| Failure::new(EXIT_IO, format!("manifest serialization: {e}")))?;
    fs::write(path, text)
        .map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", path.display())))?;
    Ok(())
}

fn simulate(args: SimulateArgs, command_line: &str) -> Result<(), Failure> {
    let (scenario, digests) = load_scenario(&args.source)?;
    let current = args.current.unwrap_or(scenario.calib.current_at_degeneracy);
    let (params, extras) = scenario.column_model(current);
    let mut sweep = gen_sweep(
        &params,
        &extras,
        &scenario.nuisance,
        &scenario.freq_grid,
        &scenario.noise,
    )?;
    sweep.meta.current_ma = Some(current);
    sweep.meta.temperature_k = Some(scenario.temperature_k);
    sweep.meta.power_dbm = Some(scenario.power_dbm);
    sweep.meta.labels.extend(toolkit_labels(command_line));
    data::write_sweep(&args.out, &sweep)?;
    if let Some(path) = &args.manifest {
        write_manifest(
            path,
            &manifest(command_line, digests, vec![scenario.noise.seed], args.timestamp),
        )?;
    }
    Ok(())
}

fn map_cmd(args: MapArgs, command_line: &str) -> Result<(), Failure> {
    if args.out.is_none() && args.ppm.is_none() && args.matrix.is_none() {
        return Err(Failure::new(
            EXIT_USAGE,
            "nothing to do: pass at least one of --out, --ppm, --matrix",
        ));
    }
    let (map, digests, seeds) = match &args.input {
        Some(path) => {
            let map = data::read_map(path)?;
            let bytes = fs::read(path)
                .map_err(|e| DataError::Io { path: path.display().to_string(), source: e })?;
            let digest = InputDigest {
                path: path.display().to_string(),
                fnv1a64: format!("{:016x}", fnv1a64(&bytes)),
            };
            (map, vec![digest], vec![])
        }
        None => {
            let (scenario, digests) = load_scenario(&args.source)?;
            let mut map = gen_map(&scenario)?;
            map.meta.labels.extend(toolkit_labels(command_line));
            (map, digests, vec![scenario.noise.seed])
        }
    };
    if let Some(path) = &args.out {
        data::write_map(path, &map)?;
    }
    if let Some(path) = &args.ppm {
        write_heatmap_pgm(path, &map)?;
    }
    if let Some(path) = &args.matrix {
        write_heatmap_matrix(path, &map)?;
    }
    if let Some(path) = &args.manifest {
        write_manifest(path, &manifest(command_line, digests, seeds, args.timestamp))?;
    }
    Ok(())
}

fn read_with_digest(path: &PathBuf) -> Result<(Vec<u8>, InputDigest), Failure> {
    let bytes =
        fs::read(path).map_err(|e| DataError::Io { path: path.display().to_string(), source: e })?;
    let digest = InputDigest {
        path: path.display().to_string(),
        fnv1a64: format!("{:016x}", fnv1a64(&bytes)),
    };
    Ok((bytes, digest))
}

/// Starting point from a scenario document: the hybrid parameters with the
/// Kittel frequency placed at the sweep's recorded current.
fn init_from_scenario(path: &PathBuf, meta: &SweepMeta) -> Result<(SweepInit, InputDigest), Failure> {
    let (bytes, digest) = read_with_digest(path)?;
    let doc = data::parse_scenario(
        std::str::from_utf8(&bytes)
            .map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", path.display())))?,
    )?;
    let scenario = MapScenario::from_doc(&doc)?;
    let current = meta.current_ma.unwrap_or(scenario.calib.current_at_degeneracy);
    let (params, _) = scenario.column_model(current);
    Ok((SweepInit { params, nuisance: scenario.nuisance }, digest))
}

fn occupancy_derived(
    derived: &mut BTreeMap<String, f64>,
    params: &HybridParams,
    meta: &SweepMeta,
) {
    let consts = PhysicalConstants::default();
    if let Some(t) = meta.temperature_k {
        derived.insert(
            "thermal_occupation".into(),
            thermal_occupation(params.f_c, t, &consts),
        );
    }
    if let Some(dbm) = meta.power_dbm {
        // Reference drive level: photons in the bare cavity on resonance,
        // magnon far detuned.
        let mut bare = *params;
        bare.g_m = 0.0;
        if let Ok(n) = intracavity_photons(dbm_to_watts(dbm), params.f_c, &bare, &consts) {
            derived.insert("intracavity_photons_bare".into(), n);
        }
    }
}

fn sweep_report(
    fit: &SweepFit,
    meta: &SweepMeta,
    command_line: &str,
    inputs: Vec<InputDigest>,
    timestamp: Option<String>,
) -> ReportDoc {
    let p = &fit.params;
    let e = &fit.errors;
    let params: BTreeMap<String, f64> = [
        ("f_c_hz".to_string(), p.f_c),
        ("kappa_1_hz".to_string(), p.kappa_1),
        ("kappa_2_hz".to_string(), p.kappa_2),
        ("kappa_int_hz".to_string(), p.kappa_int),
        ("kappa_total_hz".to_string(), p.kappa_total()),
        ("f_fmr_hz".to_string(), p.f_fmr),
        ("gamma_m_hz".to_string(), p.gamma_m),
        ("g_m_hz".to_string(), p.g_m),
        ("amplitude".to_string(), fit.nuisance.amplitude),
        ("phase_rad".to_string(), fit.nuisance.phase),
        ("electrical_delay_s".to_string(), fit.nuisance.electrical_delay),
        ("background_re".to_string(), fit.nuisance.background_re),
        ("background_im".to_string(), fit.nuisance.background_im),
    ]
    .into();
    let errors: BTreeMap<String, f64> = [
        ("f_c_hz".to_string(), e.f_c),
        ("kappa_1_hz".to_string(), e.kappa_1),
        ("kappa_2_hz".to_string(), e.kappa_2),
        ("kappa_int_hz".to_string(), e.kappa_int),
        ("kappa_total_hz".to_string(), e.kappa_1 + e.kappa_2 + e.kappa_int),
        ("f_fmr_hz".to_string(), e.f_fmr),
        ("gamma_m_hz".to_string(), e.gamma_m),
        ("g_m_hz".to_string(), e.g_m),
        ("amplitude".to_string(), e.amplitude),
        ("phase_rad".to_string(), e.phase),
        ("electrical_delay_s".to_string(), e.electrical_delay),
        ("background_re".to_string(), e.background_re),
        ("background_im".to_string(), e.background_im),
    ]
    .into();
    let mut derived = BTreeMap::new();
    if let Ok(c) = cooperativity(p.g_m, p.kappa_total(), p.gamma_m) {
        derived.insert("cooperativity".to_string(), c);
    }
    derived.insert("splitting_hz".to_string(), 2.0 * p.g_m);
    occupancy_derived(&mut derived, p, meta);
    ReportDoc {
        schema_version: 1,
        kind: "sweep-fit".into(),
        manifest: manifest(command_line, inputs, meta.seed.into_iter().collect(), timestamp),
        params,
        errors,
        derived,
        convergence: Convergence {
            converged: fit.converged,
            stop_reason: fit.stop_reason.as_str().to_string(),
            iterations: fit.iterations as u64,
            residual_norm: fit.residual_norm,
        },
        notes: vec![],
        columns: vec![],
        excluded: vec![],
    }
}

fn fit_cmd(args: FitArgs, command_line: &str) -> Result<(), Failure> {
    let (_, digest) = read_with_digest(&args.input)?;
    let sweep = data::read_sweep(&args.input)?;
    let mut inputs = vec![digest];
    let init = match &args.init {
        Some(path) => {
            let (init, digest) = init_from_scenario(path, &sweep.meta)?;
            inputs.push(digest);
            Some(init)
        }
        None => None,
    };
    let cfg = SweepFitConfig {
        lm: args.tuning.apply(FitOptions::default()),
        magnitude_only: args.magnitude_only,
        float_nuisance: !args.calibrated,
    };
    let fit = fit_sweep(&sweep, init.as_ref(), &cfg)?;
    let doc = sweep_report(&fit, &sweep.meta, command_line, inputs, args.timestamp);
    data::write_report(&args.out, &doc)?;
    if !fit.converged {
        return Err(Failure::new(
            EXIT_NOT_CONVERGED,
            format!("fit did not converge ({}); report written anyway", fit.stop_reason.as_str()),
        ));
    }
    Ok(())
}

fn fit_map_cmd(args: FitMapArgs, command_line: &str) -> Result<(), Failure> {
    let (_, digest) = read_with_digest(&args.input)?;
    let map = data::read_map(&args.input)?;
    let cfg = MapFitConfig {
        sweep: SweepFitConfig { lm: args.tuning.apply(FitOptions::default()), ..Default::default() },
    };
    let fit = fit_map(&map, &cfg)?;
    let consts = PhysicalConstants::default();
    let g = &fit.global;
    let params: BTreeMap<String, f64> = [
        ("f_c_hz".to_string(), g.f_c),
        ("kappa_total_hz".to_string(), g.kappa_total),
        ("gamma_m_hz".to_string(), g.gamma_m),
        ("g_m_hz".to_string(), g.g_m),
        ("slope_hz_per_ma".to_string(), fit.slope_hz_per_ma),
        ("slope_mt_per_ma".to_string(), fit.slope_mt_per_ma),
        ("degeneracy_current_ma".to_string(), fit.degeneracy_current_ma),
        ("field_offset_mt".to_string(), fit.calib.field_offset),
    ]
    .into();
    let errors: BTreeMap<String, f64> = [
        ("f_c_hz".to_string(), g.f_c_err),
        ("kappa_total_hz".to_string(), g.kappa_total_err),
        ("gamma_m_hz".to_string(), g.gamma_m_err),
        ("g_m_hz".to_string(), g.g_m_err),
        ("slope_hz_per_ma".to_string(), fit.slope_err_hz_per_ma),
        ("slope_mt_per_ma".to_string(), fit.slope_err_hz_per_ma / consts.gamma_e_hz_per_mt()),
    ]
    .into();
    let mut derived = BTreeMap::new();
    if let Ok(c) = cooperativity(g.g_m, g.kappa_total, g.gamma_m) {
        derived.insert("cooperativity".to_string(), c);
    }
    derived.insert("splitting_hz".to_string(), 2.0 * g.g_m);
    let columns = fit
        .columns
        .iter()
        .map(|c| data::ColumnSummary {
            current_ma: c.current_ma,
            converged: c.fit.converged,
            f_fmr_hz: c.fit.params.f_fmr,
            f_fmr_err_hz: c.fit.errors.f_fmr,
            residual_norm: c.fit.residual_norm,
        })
        .collect();
    let mut notes = Vec::new();
    for current in &fit.failed_currents {
        notes.push(format!("column at {current} mA failed to converge and was excluded"));
    }
    let doc = ReportDoc {
        schema_version: 1,
        kind: "map-fit".into(),
        manifest: manifest(
            command_line,
            vec![digest],
            map.meta.seed.into_iter().collect(),
            args.timestamp,
        ),
        params,
        errors,
        derived,
        convergence: Convergence {
            converged: fit.failed_currents.is_empty(),
            stop_reason: "per_column".into(),
            iterations: fit.columns.iter().map(|c| c.fit.iterations as u64).sum(),
            residual_norm: fit.columns.iter().map(|c| c.fit.residual_norm.powi(2)).sum::<f64>().sqrt(),
        },
        notes,
        columns,
        excluded: vec![],
    };
    data::write_report(&args.out, &doc)?;
    Ok(())
}

fn scaling_cmd(args: ScalingArgs, command_line: &str) -> Result<(), Failure> {
    let mut inputs = Vec::new();
    let mut seeds = Vec::new();
    let points = match (&args.input, args.preset.as_deref()) {
        (Some(path), None) => {
            let (_, digest) = read_with_digest(path)?;
            inputs.push(digest);
            data::read_scaling_points(path)?
        }
        (None, Some("fig3")) => {
            let preset = presets::coupling_scaling();
            let sigma = args.sigma.unwrap_or(preset.sigma);
            let seed = args.seed.unwrap_or(preset.seed);
            seeds.push(seed);
            gen_scaling_series(&preset.diameters_m, preset.g0_hz, &NoiseSpec { sigma, seed })
        }
        (None, Some(other)) => {
            return Err(Failure::new(EXIT_USAGE, format!("unknown preset {other:?}; expected `fig3`")))
        }
        (None, None) => {
            return Err(Failure::new(EXIT_USAGE, "either --input or --preset fig3 is required"))
        }
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    if let Some(path) = &args.points_out {
        data::write_scaling_points(path, &toolkit_labels(command_line), &points)?;
    }
    let fit = fit_scaling(&points, None)?;
    let params: BTreeMap<String, f64> = [("g0_hz".to_string(), fit.g0_hz)].into();
    let errors: BTreeMap<String, f64> = [("g0_hz".to_string(), fit.g0_err_hz)].into();
    let mut derived = BTreeMap::new();
    derived.insert(
        "g_at_half_mm_hz".to_string(),
        fit.g0_hz
            * crate::model::spin_count(&crate::model::SphereSpec::yig(0.5e-3)).sqrt(),
    );
    let doc = ReportDoc {
        schema_version: 1,
        kind: "scaling-fit".into(),
        manifest: manifest(command_line, inputs, seeds, args.timestamp),
        params,
        errors,
        derived,
        convergence: Convergence {
            converged: true,
            stop_reason: "closed_form".into(),
            iterations: 0,
            residual_norm: fit.residual_norm,
        },
        notes: vec![G0_CONVENTION_NOTE.to_string()],
        columns: vec![],
        excluded: vec![],
    };
    data::write_report(&args.out, &doc)?;
    Ok(())
}

fn tempfit_cmd(args: TempfitArgs, command_line: &str) -> Result<(), Failure> {
    let mut inputs = Vec::new();
    let mut seeds = Vec::new();
    let mut f_fmr = args.f_fmr;
    let points = match (&args.input, args.preset.as_deref()) {
        (Some(path), None) => {
            let (_, digest) = read_with_digest(path)?;
            inputs.push(digest);
            data::read_temperature_points(path)?
        }
        (None, Some("fig4")) => {
            let preset = presets::linewidth_temperature();
            let sigma = args.sigma.unwrap_or(preset.sigma_hz);
            let seed = args.seed.unwrap_or(preset.seed);
            seeds.push(seed);
            f_fmr = preset.model.f_fmr;
            gen_temperature_series(
                &preset.temps_k,
                &preset.model,
                &NoiseSpec { sigma, seed },
                &PhysicalConstants::default(),
            )
        }
        (None, Some(other)) => {
            return Err(Failure::new(EXIT_USAGE, format!("unknown preset {other:?}; expected `fig4`")))
        }
        (None, None) => {
            return Err(Failure::new(EXIT_USAGE, "either --input or --preset fig4 is required"))
        }
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    if let Some(path) = &args.points_out {
        data::write_temperature_points(path, &toolkit_labels(command_line), &points)?;
    }
    let opts = TempFitOptions { cutoff_k: args.cutoff, ..Default::default() };
    let fit = fit_temperature(&points, f_fmr, &opts)?;
    let params: BTreeMap<String, f64> = [
        ("gamma_tls0_hz".to_string(), fit.model.gamma_tls0),
        ("gamma_mm_hz".to_string(), fit.model.gamma_mm),
        ("f_fmr_hz".to_string(), fit.model.f_fmr),
    ]
    .into();
    let errors: BTreeMap<String, f64> = [
        ("gamma_tls0_hz".to_string(), fit.gamma_tls0_err),
        ("gamma_mm_hz".to_string(), fit.gamma_mm_err),
        ("f_fmr_hz".to_string(), 0.0),
    ]
    .into();
    let derived: BTreeMap<String, f64> = [(
        "gamma_zero_kelvin_hz".to_string(),
        fit.model.gamma_tls0 + fit.model.gamma_mm,
    )]
    .into();
    let doc = ReportDoc {
        schema_version: 1,
        kind: "temperature-fit".into(),
        manifest: manifest(command_line, inputs, seeds, args.timestamp),
        params,
        errors,
        derived,
        convergence: Convergence {
            converged: fit.converged,
            stop_reason: fit.stop_reason.as_str().to_string(),
            iterations: fit.iterations as u64,
            residual_norm: fit.residual_norm,
        },
        notes: vec![format!("fit cutoff {} K; points above are listed as residuals", args.cutoff)],
        columns: vec![],
        excluded: fit.excluded.clone(),
    };
    data::write_report(&args.out, &doc)?;
    if !fit.converged {
        return Err(Failure::new(EXIT_NOT_CONVERGED, "temperature fit did not converge"));
    }
    Ok(())
}

fn report_cmd(args: ReportArgs) -> Result<(), Failure> {
    if args.inputs.is_empty() {
        return Err(Failure::new(EXIT_IO, "no report files given"));
    }
    let mut out = String::new();
    for (i, path) in args.inputs.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let doc = data::read_report(path)?;
        out.push_str(&render_text(&doc));
    }
    match &args.out {
        Some(path) => {
            fs::write(path, out)
                .map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", path.display())))?;
        }
        None => print!("{out}"),
    }
    Ok(())
}
