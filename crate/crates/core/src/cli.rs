//! Command-line front end: TOML run configs, data-file emission.
//!
//! Grammar: `coolimit <command> --config <path> [--seed N] [--out <path>] [--format csv|jsonl]`.
//! Flags override the matching top-level keys of the config file. Output goes
//! to `out` when set and to stdout otherwise.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::channel::{conditional_state, singlet, unconditional_state, ChannelParams, EnvironmentSpec};
use crate::entanglement::{negativity, DEFAULT_TOL};
use crate::error::Error;
use crate::limits::{evaluate, surface, sweep, uncond_boundary, exceeds, Axis, Regime, SweepGrid};
use crate::photonics::{
    accessible_bounds, derive_seed, mix_detections, params_from_ratio, rate_ratio, simulate_streams,
    simulate_with_timetags, CoincidenceTally, NoisePolarization, RateConfig,
};
use crate::qmat::{fidelity, CMatrix, DensityMatrix, C64};
use crate::tomography::{simulate_tomography, NoiseModel, TomographySettings};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn config_err<T>(key: &str, r: crate::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError::Config(format!("{key}: {e}")))
}

fn numeric_err<T>(context: &str, r: crate::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError::Numerical(format!("{context}: {e}")))
}

fn io_err(path: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Limits,
    Surface,
    Simulate,
    Tomo,
    Pipeline,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

#[derive(Debug, Parser)]
#[command(name = "coolimit", version, about = "Cooling limits of a qubit channel in an incoherent environment")]
pub struct Cli {
    pub command: Command,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// An explicit list of values or an inclusive `steps`-point range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisSpec {
    Values(Vec<f64>),
    Range { start: f64, stop: f64, steps: usize },
}

impl AxisSpec {
    pub fn axis(&self) -> Axis {
        match self {
            AxisSpec::Values(v) => Axis(v.clone()),
            AxisSpec::Range { start, stop, steps } => Axis::linspace(*start, *stop, *steps),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_t: Option<AxisSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_l: Option<AxisSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_s: Option<AxisSpec>,
    /// Explicit (p_T, P_L, P_S) points; used instead of the axes when non-empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub points: Vec<[f64; 3]>,
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceConfig {
    pub p_t: AxisSpec,
    pub p_l: AxisSpec,
    #[serde(default = "default_true")]
    pub numeric: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedNoise {
    Ground,
    Excited,
}

/// `"ground"`, `"excited"`, or a thermal excitation probability p_T.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseSetting {
    Named(NamedNoise),
    Thermal(f64),
}

impl Default for NoiseSetting {
    fn default() -> Self {
        NoiseSetting::Named(NamedNoise::Ground)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub rate_singlet: f64,
    pub rate_singles: f64,
    pub rate_noise: f64,
    pub window: f64,
    pub duration: f64,
    #[serde(default)]
    pub noise: NoiseSetting,
    /// Optional time-tag dump path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timetags: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum StateConfig {
    Singlet,
    Mixed,
    Unconditional { ps: f64, p_t: f64 },
    Conditional { ps: f64, pl: f64, p_t: f64 },
    /// Four lines of eight comma-separated numbers: re, im of each entry.
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomoConfig {
    pub shots: u64,
    #[serde(default)]
    pub noise_model: NoiseModel,
    pub state: StateConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts_out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub rate_singlet: f64,
    pub rate_singles: f64,
    pub rate_noise: f64,
    pub window: f64,
    pub p_t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub shots: u64,
    pub duration: f64,
    #[serde(default)]
    pub noise_model: NoiseModel,
    pub scenarios: Vec<ScenarioConfig>,
}

/// Top-level run configuration, one optional block per command.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limits: Option<LimitsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub surface: Option<SurfaceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tomo: Option<TomoConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pipeline: Option<PipelineConfig>,
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serialisable")
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn block<'a, T>(block: &'a Option<T>, name: &str) -> CliResult<&'a T> {
        block
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("missing [{name}] section")))
    }
}

fn check(key: &str, value: f64, lo: f64, hi: f64) -> CliResult<()> {
    if value.is_finite() && (lo..=hi).contains(&value) {
        Ok(())
    } else {
        Err(CliError::Config(format!("{key} = {value} is outside [{lo}, {hi}]")))
    }
}

fn check_axis(key: &str, spec: &AxisSpec, lo: f64, hi: f64) -> CliResult<Axis> {
    let axis = spec.axis();
    if axis.0.is_empty() {
        return Err(CliError::Config(format!("{key} has no values")));
    }
    for v in &axis.0 {
        check(key, *v, lo, hi)?;
    }
    Ok(axis)
}

fn check_rates(prefix: &str, singlet: f64, singles: f64, noise: f64, window: f64) -> CliResult<()> {
    check(&format!("{prefix}.rate_singlet"), singlet, f64::MIN_POSITIVE, f64::MAX)?;
    check(&format!("{prefix}.rate_singles"), singles, 0.0, f64::MAX)?;
    check(&format!("{prefix}.rate_noise"), noise, 0.0, f64::MAX)?;
    check(&format!("{prefix}.window"), window, f64::MIN_POSITIVE, f64::MAX)
}

/// Writes rows as CSV (header from field names) or JSON lines.
pub fn write_rows<T: Serialize, W: Write>(rows: &[T], format: Format, out: W) -> io::Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for row in rows {
                w.serialize(row).map_err(io::Error::other)?;
            }
            w.flush()
        }
        Format::Jsonl => {
            let mut out = BufWriter::new(out);
            for row in rows {
                serde_json::to_writer(&mut out, row)?;
                writeln!(out)?;
            }
            out.flush()
        }
    }
}

fn emit<T: Serialize>(rows: &[T], config: &RunConfig) -> CliResult<()> {
    match &config.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| io_err(path, e))?;
            write_rows(rows, config.format, BufWriter::new(file)).map_err(|e| io_err(path, e))
        }
        None => write_rows(rows, config.format, io::stdout().lock())
            .map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitsRow {
    #[serde(rename = "p_T")]
    pub p_t: f64,
    #[serde(rename = "P_S")]
    pub ps: f64,
    #[serde(rename = "P_L")]
    pub pl: f64,
    #[serde(rename = "P_TL")]
    pub p_tl: f64,
    pub uncond_boundary: f64,
    pub cond_boundary: f64,
    pub uncond_ok: bool,
    pub cond_ok: bool,
    pub numeric_negativity: Option<f64>,
    pub feasible: bool,
    pub photonic_plane: bool,
}

pub fn run_limits(config: &RunConfig) -> CliResult<Vec<LimitsRow>> {
    let block = RunConfig::block(&config.limits, "limits")?;
    let grid = if !block.points.is_empty() {
        for (i, [t, l, s]) in block.points.iter().enumerate() {
            check(&format!("limits.points[{i}].p_t"), *t, 0.0, 0.5)?;
            check(&format!("limits.points[{i}].p_l"), *l, 0.0, 1.0)?;
            check(&format!("limits.points[{i}].p_s"), *s, 0.0, 1.0)?;
        }
        SweepGrid::Points(block.points.iter().map(|&[t, l, s]| (t, l, s)).collect())
    } else {
        let need = |axis: &Option<AxisSpec>, name: &str| {
            axis.clone()
                .ok_or_else(|| CliError::Config(format!("limits.{name} is required without limits.points")))
        };
        SweepGrid::Cartesian {
            p_t: check_axis("limits.p_t", &need(&block.p_t, "p_t")?, 0.0, 0.5)?,
            p_l: check_axis("limits.p_l", &need(&block.p_l, "p_l")?, 0.0, 1.0)?,
            p_s: check_axis("limits.p_s", &need(&block.p_s, "p_s")?, 0.0, 1.0)?,
        }
    };
    let records = numeric_err("limits sweep", sweep(&grid))?;
    Ok(records
        .into_iter()
        .map(|r| LimitsRow {
            p_t: r.p_t,
            ps: r.ps,
            pl: r.pl,
            p_tl: r.p_tl,
            uncond_boundary: r.verdict.uncond_boundary_ps,
            cond_boundary: r.verdict.cond_boundary_ps,
            uncond_ok: r.verdict.unconditional_ok,
            cond_ok: r.verdict.conditional_ok,
            numeric_negativity: r.numeric_negativity,
            feasible: r.feasible,
            photonic_plane: r.photonic_plane,
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SurfaceRow {
    #[serde(rename = "p_T")]
    pub p_t: f64,
    #[serde(rename = "P_L")]
    pub pl: f64,
    #[serde(rename = "P_TL")]
    pub p_tl: f64,
    pub uncond_boundary: f64,
    pub cond_boundary: f64,
    pub high_temp_boundary: f64,
    pub uncond_numeric: Option<f64>,
    pub cond_numeric: Option<f64>,
}

pub fn run_surface(config: &RunConfig) -> CliResult<Vec<SurfaceRow>> {
    let block = RunConfig::block(&config.surface, "surface")?;
    let p_t = check_axis("surface.p_t", &block.p_t, 0.0, 0.5)?;
    let p_l = check_axis("surface.p_l", &block.p_l, 0.0, 1.0)?;
    let records = numeric_err("surface", surface(&p_t, &p_l, block.numeric))?;
    Ok(records
        .into_iter()
        .map(|r| SurfaceRow {
            p_t: r.p_t,
            pl: r.pl,
            p_tl: r.p_tl,
            uncond_boundary: r.uncond_boundary,
            cond_boundary: r.cond_boundary,
            high_temp_boundary: r.high_temp_boundary,
            uncond_numeric: r.uncond_numeric,
            cond_numeric: r.cond_numeric,
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulateRow {
    pub n_triple: u64,
    pub n_success: u64,
    pub n_flip: u64,
    pub n_loss: u64,
    pub n_heralded: u64,
    #[serde(rename = "P_S")]
    pub ps: Option<f64>,
    #[serde(rename = "P_S_se")]
    pub ps_se: Option<f64>,
    #[serde(rename = "P_F")]
    pub pf: Option<f64>,
    #[serde(rename = "P_F_se")]
    pub pf_se: Option<f64>,
    #[serde(rename = "P_L")]
    pub pl: Option<f64>,
    #[serde(rename = "P_L_se")]
    pub pl_se: Option<f64>,
    /// 2·P_S + P_L − 1
    pub plane_residual: Option<f64>,
    pub plane_residual_se: Option<f64>,
    pub rate_ratio: f64,
    #[serde(rename = "model_P_S")]
    pub model_ps: f64,
    #[serde(rename = "model_P_F")]
    pub model_pf: f64,
    #[serde(rename = "model_P_L")]
    pub model_pl: f64,
    pub loss_ratio: Option<f64>,
    /// Whether the empirical P_L violates an accessible-parameter bound.
    pub bound_violated: Option<bool>,
}

fn noise_polarization(key: &str, setting: NoiseSetting) -> CliResult<NoisePolarization> {
    Ok(match setting {
        NoiseSetting::Named(NamedNoise::Ground) => NoisePolarization::Ground,
        NoiseSetting::Named(NamedNoise::Excited) => NoisePolarization::Excited,
        NoiseSetting::Thermal(p) => NoisePolarization::Thermal(config_err(key, EnvironmentSpec::new(p))?),
    })
}

fn simulate_row(config: &RateConfig, tally: &CoincidenceTally) -> CliResult<SimulateRow> {
    let ratio = numeric_err("rate ratio", rate_ratio(config))?;
    let model = numeric_err("rate ratio", params_from_ratio(ratio))?;
    let est = tally.empirical().ok();
    let plane = tally.plane_residual().ok();
    let bound_violated = match (est, config.singlet_fraction()) {
        (Some(e), Ok(r)) => Some(numeric_err("bounds", accessible_bounds(e.values[0], r))?.violated_by(e.values[2])),
        _ => None,
    };
    Ok(SimulateRow {
        n_triple: tally.n_triple(),
        n_success: tally.n_success,
        n_flip: tally.n_flip,
        n_loss: tally.n_loss,
        n_heralded: tally.n_heralded(),
        ps: est.map(|e| e.values[0]),
        ps_se: est.map(|e| e.std_errors[0]),
        pf: est.map(|e| e.values[1]),
        pf_se: est.map(|e| e.std_errors[1]),
        pl: est.map(|e| e.values[2]),
        pl_se: est.map(|e| e.std_errors[2]),
        plane_residual: plane.map(|p| p.0),
        plane_residual_se: plane.map(|p| p.1),
        rate_ratio: ratio,
        model_ps: model.ps,
        model_pf: model.pf,
        model_pl: model.pl,
        loss_ratio: tally.loss_ratio(),
        bound_violated,
    })
}

pub fn run_simulate(config: &RunConfig) -> CliResult<Vec<SimulateRow>> {
    let b = RunConfig::block(&config.simulate, "simulate")?;
    check_rates("simulate", b.rate_singlet, b.rate_singles, b.rate_noise, b.window)?;
    check("simulate.duration", b.duration, f64::MIN_POSITIVE, f64::MAX)?;
    let noise = noise_polarization("simulate.noise", b.noise)?;
    let rc = config_err(
        "simulate",
        RateConfig::new(b.rate_singlet, b.rate_singles, b.rate_noise, b.window, noise),
    )?;
    for w in rc.warnings() {
        eprintln!("warning: {w}");
    }
    let tally = match &b.timetags {
        Some(path) => {
            let file = File::create(path).map_err(|e| io_err(path, e))?;
            let mut out = BufWriter::new(file);
            let tally = simulate_with_timetags(&rc, b.duration, config.seed, &mut out)
                .map_err(|e| io_err(path, e))?;
            out.flush().map_err(|e| io_err(path, e))?;
            tally
        }
        None => numeric_err("simulation", simulate_streams(&rc, b.duration, config.seed))?,
    };
    Ok(vec![simulate_row(&rc, &tally)?])
}

/// Reads a 4×4 complex matrix: four lines of `re,im` pairs.
pub fn read_matrix_file(path: &Path) -> crate::Result<DensityMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(e.to_string()))?;
    let rows: Vec<Vec<C64>> = text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .enumerate()
        .map(|(i, line)| {
            let nums = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))?;
            if nums.len() != 8 {
                return Err(Error::Parse(format!("row {}: expected 8 numbers, got {}", i + 1, nums.len())));
            }
            Ok(nums.chunks(2).map(|c| C64::new(c[0], c[1])).collect())
        })
        .collect::<crate::Result<_>>()?;
    if rows.len() != 4 {
        return Err(Error::Parse(format!("expected 4 rows, got {}", rows.len())));
    }
    DensityMatrix::new(CMatrix::from_rows(&rows), vec![2, 2])
}

fn feasible_params(key: &str, ps: f64, pl: f64) -> CliResult<ChannelParams> {
    check(&format!("{key}.ps"), ps, 0.0, 1.0)?;
    check(&format!("{key}.pl"), pl, 0.0, 1.0)?;
    if ps + pl > 1.0 + 1e-12 {
        return Err(CliError::Config(format!(
            "{key}: P_S + P_L = {} exceeds 1",
            ps + pl
        )));
    }
    config_err(key, ChannelParams::from_success_loss(ps, pl))
}

/// Truth state and its closed-form entanglement verdict, if one applies.
fn truth_state(state: &StateConfig) -> CliResult<(DensityMatrix, Option<bool>)> {
    let key = "tomo.state";
    Ok(match state {
        StateConfig::Singlet => (singlet(), Some(true)),
        StateConfig::Mixed => (DensityMatrix::maximally_mixed(vec![2, 2]), Some(false)),
        StateConfig::Unconditional { ps, p_t } => {
            check(&format!("{key}.ps"), *ps, 0.0, 1.0)?;
            let spec = config_err(&format!("{key}.p_t"), EnvironmentSpec::new(*p_t))?;
            let rho = config_err(key, unconditional_state(*ps, &spec))?;
            (rho, Some(exceeds(*ps, numeric_err(key, uncond_boundary(*p_t))?)))
        }
        StateConfig::Conditional { ps, pl, p_t } => {
            let params = feasible_params(key, *ps, *pl)?;
            let spec = config_err(&format!("{key}.p_t"), EnvironmentSpec::new(*p_t))?;
            let (rho, _) = config_err(key, conditional_state(&params, &spec))?;
            let verdict = numeric_err(key, evaluate(*p_t, *ps, *pl))?;
            (rho, Some(verdict.conditional_ok))
        }
        StateConfig::File { path } => (config_err(&format!("{key}.path"), read_matrix_file(path))?, None),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TomoRow {
    pub shots: u64,
    pub fidelity: f64,
    pub frobenius_error: f64,
    pub negativity_true: f64,
    pub negativity_reconstructed: f64,
    pub entangled_true: bool,
    pub entangled_reconstructed: bool,
    pub closed_form_entangled: Option<bool>,
}

pub fn run_tomo(config: &RunConfig) -> CliResult<Vec<TomoRow>> {
    let b = RunConfig::block(&config.tomo, "tomo")?;
    let settings = config_err("tomo.shots", TomographySettings::new(b.shots, config.seed, b.noise_model))?;
    let (truth, closed_form) = truth_state(&b.state)?;
    let (counts, rho) = numeric_err("tomography", simulate_tomography(&truth, &settings))?;
    if let Some(path) = &b.counts_out {
        let file = File::create(path).map_err(|e| io_err(path, e))?;
        let mut w = BufWriter::new(file);
        counts.write_csv(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(path, e))?;
    }
    let n_true = numeric_err("negativity", negativity(&truth))?;
    let n_rec = numeric_err("negativity", negativity(&rho))?;
    Ok(vec![TomoRow {
        shots: b.shots,
        fidelity: numeric_err("fidelity", fidelity(&rho, &truth))?,
        frobenius_error: (rho.matrix() - truth.matrix()).frobenius_norm(),
        negativity_true: n_true,
        negativity_reconstructed: n_rec,
        entangled_true: n_true > DEFAULT_TOL,
        entangled_reconstructed: n_rec > DEFAULT_TOL,
        closed_form_entangled: closed_form,
    }])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineRow {
    pub scenario: String,
    #[serde(rename = "p_T")]
    pub p_t: f64,
    pub rate_ratio: f64,
    pub n_triple: u64,
    #[serde(rename = "P_S")]
    pub ps: f64,
    #[serde(rename = "P_F")]
    pub pf: f64,
    #[serde(rename = "P_L")]
    pub pl: f64,
    #[serde(rename = "P_S_se")]
    pub ps_se: f64,
    #[serde(rename = "model_P_S")]
    pub model_ps: f64,
    #[serde(rename = "model_P_L")]
    pub model_pl: f64,
    pub negativity_unconditional: f64,
    pub negativity_conditional: f64,
    pub class_tomography: String,
    pub class_closed_form: String,
    pub agree: bool,
}

/// simulate → mix → estimate → build states → tomography → classify.
pub fn run_scenario(
    scenario: &ScenarioConfig,
    duration: f64,
    shots: u64,
    noise_model: NoiseModel,
    seed: u64,
) -> CliResult<PipelineRow> {
    let ground = config_err(
        &scenario.name,
        RateConfig::new(
            scenario.rate_singlet,
            scenario.rate_singles,
            scenario.rate_noise,
            scenario.window,
            NoisePolarization::Ground,
        ),
    )?;
    let excited = ground.with_noise(NoisePolarization::Excited);
    let t_ground = numeric_err(&scenario.name, simulate_streams(&ground, duration, derive_seed(seed, 0, 1)))?;
    let t_excited = numeric_err(&scenario.name, simulate_streams(&excited, duration, derive_seed(seed, 0, 2)))?;
    let mixed = numeric_err(
        &scenario.name,
        mix_detections(&t_ground, &t_excited, scenario.p_t, derive_seed(seed, 0, 3)),
    )?;
    let est = numeric_err(&scenario.name, mixed.empirical())?;
    let params = numeric_err(&scenario.name, est.params())?;
    let spec = numeric_err(&scenario.name, EnvironmentSpec::new(scenario.p_t))?;

    let unheralded = numeric_err(&scenario.name, unconditional_state(params.ps, &spec))?;
    let (heralded, _) = numeric_err(&scenario.name, conditional_state(&params, &spec))?;
    let tomo = |truth: &DensityMatrix, stream: u64| -> CliResult<f64> {
        let settings = config_err("pipeline.shots", TomographySettings::new(shots, derive_seed(seed, 1, stream), noise_model))?;
        let (_, rho) = numeric_err(&scenario.name, simulate_tomography(truth, &settings))?;
        numeric_err(&scenario.name, negativity(&rho))
    };
    let n_uncond = tomo(&unheralded, 1)?;
    let n_cond = tomo(&heralded, 2)?;
    let measured = Regime::from_verdicts(n_uncond > DEFAULT_TOL, n_cond > DEFAULT_TOL);
    let closed = numeric_err(&scenario.name, evaluate(scenario.p_t, params.ps, params.pl))?.regime();

    let ratio = numeric_err(&scenario.name, rate_ratio(&ground))?;
    let model = numeric_err(&scenario.name, params_from_ratio(ratio))?;
    Ok(PipelineRow {
        scenario: scenario.name.clone(),
        p_t: scenario.p_t,
        rate_ratio: ratio,
        n_triple: mixed.n_triple(),
        ps: params.ps,
        pf: params.pf,
        pl: params.pl,
        ps_se: est.std_errors[0],
        model_ps: model.ps,
        model_pl: model.pl,
        negativity_unconditional: n_uncond,
        negativity_conditional: n_cond,
        class_tomography: measured.label().to_string(),
        class_closed_form: closed.label().to_string(),
        agree: measured == closed,
    })
}

pub fn run_pipeline(config: &RunConfig) -> CliResult<Vec<PipelineRow>> {
    let b = RunConfig::block(&config.pipeline, "pipeline")?;
    check("pipeline.duration", b.duration, f64::MIN_POSITIVE, f64::MAX)?;
    if b.shots == 0 {
        return Err(CliError::Config("pipeline.shots must be at least 1".into()));
    }
    if b.scenarios.is_empty() {
        return Err(CliError::Config("pipeline.scenarios is empty".into()));
    }
    for (i, s) in b.scenarios.iter().enumerate() {
        let key = format!("pipeline.scenarios[{i}]");
        check_rates(&key, s.rate_singlet, s.rate_singles, s.rate_noise, s.window)?;
        check(&format!("{key}.p_t"), s.p_t, 0.0, 0.5)?;
    }
    b.scenarios
        .iter()
        .enumerate()
        .map(|(i, s)| run_scenario(s, b.duration, b.shots, b.noise_model, derive_seed(config.seed, i as u64, 7)))
        .collect()
}

/// Loads the config, applies flag overrides and runs the command.
pub fn run(cli: &Cli) -> CliResult<()> {
    let mut config = RunConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.out = Some(out.clone());
    }
    if let Some(format) = cli.format {
        config.format = format;
    }
    match cli.command {
        Command::Limits => emit(&run_limits(&config)?, &config),
        Command::Surface => emit(&run_surface(&config)?, &config),
        Command::Simulate => emit(&run_simulate(&config)?, &config),
        Command::Tomo => emit(&run_tomo(&config)?, &config),
        Command::Pipeline => emit(&run_pipeline(&config)?, &config),
    }
}
