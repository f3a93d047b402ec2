//! Config-driven experiments: paired Monte Carlo comparisons across variants,
//! parameter sweeps, and the run-file/CSV output formats.
//!
//! A run is fully determined by its [`ExperimentConfig`] — every trial's
//! scenario comes from `base_seed + trial_index`, and all variants of a trial
//! see the identical scenario, so cross-variant comparisons are paired. The
//! JSON run file stores the resolved config, the seeds, and every per-trial
//! trace, which is enough to re-run any single trial exactly.

use crate::array::{min_angular_spacing, ArrayConfig, SPEED_OF_LIGHT};
use crate::channel::{Scenario, ScenarioParams};
use crate::solver::{run_fp_loop, IterationTrace, SolverOptions, Variant};
use crate::position::PositionOptions;
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::io::Write;
use std::path::{Path, PathBuf};

/// Top-level experiment description, loaded from a TOML file. Unknown keys
/// are rejected so typos surface as errors instead of silent defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub array: ArraySection,
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub solver: SolverSection,
    pub experiment: ExperimentSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySection {
    pub layers: usize,
    pub antennas_per_layer: usize,
    pub radius_m: f64,
    pub carrier_hz: f64,
}

fn default_angle_max() -> f64 {
    PI
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub users: usize,
    pub paths: usize,
    pub noise_variance: f64,
    /// Upper end of the uniform elevation range, radians.
    #[serde(default = "default_angle_max")]
    pub elevation_max: f64,
    /// Upper end of the uniform azimuth range, radians.
    #[serde(default = "default_angle_max")]
    pub azimuth_max: f64,
}

fn default_power() -> f64 {
    1.0
}

fn default_outer_iterations() -> usize {
    30
}

fn default_alternations() -> usize {
    1
}

fn default_spacing() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub power: f64,
    pub max_outer_iterations: usize,
    /// Early-stop tolerance on the sum rate; zero runs all iterations.
    pub rate_tol: f64,
    pub position_alternations: usize,
    /// Initial layer spacing, in wavelengths.
    pub initial_z_spacing_wavelengths: f64,
    pub position: PositionOptions,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            power: default_power(),
            max_outer_iterations: default_outer_iterations(),
            rate_tol: 0.0,
            position_alternations: default_alternations(),
            initial_z_spacing_wavelengths: default_spacing(),
            position: PositionOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub variants: Vec<Variant>,
    pub trials: usize,
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// Which parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// SNR in dB; the noise variance becomes `10^(-snr/10)` with the power
    /// budget left as configured.
    SnrDb,
    /// Number of propagation paths per user.
    Paths,
    /// Ring radius in meters.
    RadiusM,
    /// Initial layer spacing in wavelengths.
    ZSpacing,
}

impl SweepAxis {
    /// Column name used in CSV output.
    pub fn column_name(&self) -> &'static str {
        match self {
            SweepAxis::SnrDb => "snr_db",
            SweepAxis::Paths => "paths",
            SweepAxis::RadiusM => "radius_m",
            SweepAxis::ZSpacing => "z_spacing_wavelengths",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

/// Parse a config file's text.
pub fn load_config(text: &str) -> Result<ExperimentConfig> {
    toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
}

/// Apply `key.path=value` overrides to a config's TOML text, then parse.
/// Values are parsed as TOML scalars/arrays; anything unparseable is taken
/// as a string.
pub fn apply_overrides(text: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut table: toml::Table =
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    for spec in overrides {
        let (path, raw) = spec
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("override `{spec}` is not KEY=VALUE")))?;
        let value = parse_toml_value(raw.trim());
        let mut node = &mut table;
        let parts: Vec<&str> = path.trim().split('.').collect();
        for part in &parts[..parts.len() - 1] {
            node = node
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()))
                .as_table_mut()
                .ok_or_else(|| {
                    Error::InvalidConfig(format!("override path `{path}` crosses a non-table"))
                })?;
        }
        node.insert(parts[parts.len() - 1].to_string(), value);
    }
    let text = toml::to_string(&table).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    load_config(&text)
}

fn parse_toml_value(raw: &str) -> toml::Value {
    if let Ok(wrapped) = toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        if let Some(v) = wrapped.get("v") {
            return v.clone();
        }
    }
    toml::Value::String(raw.to_string())
}

/// Severity of a validation finding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    fn error(message: String) -> Self {
        Self {
            severity: Severity::Error,
            message,
        }
    }

    fn warning(message: String) -> Self {
        Self {
            severity: Severity::Warning,
            message,
        }
    }
}

/// Check a config for field validity and layout feasibility without running
/// anything.
pub fn validate_config(cfg: &ExperimentConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let a = &cfg.array;
    if a.layers == 0 {
        out.push(Diagnostic::error("array.layers must be at least 1".into()));
    }
    if a.antennas_per_layer == 0 {
        out.push(Diagnostic::error(
            "array.antennas_per_layer must be at least 1".into(),
        ));
    }
    if !(a.radius_m > 0.0) {
        out.push(Diagnostic::error(format!(
            "array.radius_m must be positive, got {}",
            a.radius_m
        )));
    }
    if !(a.carrier_hz > 0.0) {
        out.push(Diagnostic::error(format!(
            "array.carrier_hz must be positive, got {}",
            a.carrier_hz
        )));
    }
    if a.radius_m > 0.0 && a.carrier_hz > 0.0 {
        check_ring(a.antennas_per_layer, a.radius_m, a.carrier_hz, "array", &mut out);
    }

    let s = &cfg.scenario;
    if s.users == 0 {
        out.push(Diagnostic::error("scenario.users must be at least 1".into()));
    }
    if s.paths == 0 {
        out.push(Diagnostic::error("scenario.paths must be at least 1".into()));
    }
    if !(s.noise_variance > 0.0) {
        out.push(Diagnostic::error(format!(
            "scenario.noise_variance must be positive, got {}",
            s.noise_variance
        )));
    }
    if !(s.elevation_max > 0.0) || !(s.azimuth_max > 0.0) {
        out.push(Diagnostic::error("scenario angle ranges must be positive".into()));
    }

    let sv = &cfg.solver;
    if !(sv.power > 0.0) {
        out.push(Diagnostic::error(format!(
            "solver.power must be positive, got {}",
            sv.power
        )));
    }
    if sv.max_outer_iterations == 0 {
        out.push(Diagnostic::error(
            "solver.max_outer_iterations must be at least 1".into(),
        ));
    }
    if sv.rate_tol < 0.0 {
        out.push(Diagnostic::error("solver.rate_tol must be nonnegative".into()));
    }
    if cfg.array.layers > 1 && sv.initial_z_spacing_wavelengths < 0.5 {
        out.push(Diagnostic::error(format!(
            "solver.initial_z_spacing_wavelengths = {} is below the half-wavelength minimum",
            sv.initial_z_spacing_wavelengths
        )));
    }
    if sv.position.grid.ring_points < 2 {
        out.push(Diagnostic::error(
            "solver.position.grid.ring_points must be at least 2".into(),
        ));
    }
    if sv.position.grid.z_points < 2 {
        out.push(Diagnostic::error(
            "solver.position.grid.z_points must be at least 2".into(),
        ));
    }
    if !(sv.position.tol >= 0.0) {
        out.push(Diagnostic::error("solver.position.tol must be nonnegative".into()));
    }
    if !(sv.position.grid.z_half_width_wavelengths > 0.0) {
        out.push(Diagnostic::error(
            "solver.position.grid.z_half_width_wavelengths must be positive".into(),
        ));
    }
    if !(sv.position.alpha_psi > 0.0) || !(sv.position.alpha_z > 0.0) {
        out.push(Diagnostic::error("Adam step sizes must be positive".into()));
    }
    for (name, beta) in [("beta1", sv.position.beta1), ("beta2", sv.position.beta2)] {
        if !(0.0..1.0).contains(&beta) {
            out.push(Diagnostic::error(format!(
                "solver.position.{name} must lie in [0, 1), got {beta}"
            )));
        }
    }
    if !(sv.position.eta > 0.0) {
        out.push(Diagnostic::error("solver.position.eta must be positive".into()));
    }

    let e = &cfg.experiment;
    if e.variants.is_empty() {
        out.push(Diagnostic::error("experiment.variants must not be empty".into()));
    }
    if e.trials == 0 {
        out.push(Diagnostic::error("experiment.trials must be at least 1".into()));
    }

    if let Some(sweep) = &cfg.sweep {
        if sweep.values.is_empty() {
            out.push(Diagnostic::error("sweep.values must not be empty".into()));
        }
        for &v in &sweep.values {
            match sweep.axis {
                SweepAxis::Paths => {
                    if v.fract() != 0.0 || v < 1.0 {
                        out.push(Diagnostic::error(format!(
                            "sweep over paths needs positive integers, got {v}"
                        )));
                    }
                }
                SweepAxis::RadiusM => {
                    if !(v > 0.0) {
                        out.push(Diagnostic::error(format!("swept radius must be positive, got {v}")));
                    } else if a.carrier_hz > 0.0 {
                        check_ring(a.antennas_per_layer, v, a.carrier_hz, "swept radius", &mut out);
                    }
                }
                SweepAxis::ZSpacing => {
                    if cfg.array.layers > 1 && v < 0.5 {
                        out.push(Diagnostic::error(format!(
                            "swept layer spacing {v} wavelengths is below the half-wavelength minimum"
                        )));
                    }
                }
                SweepAxis::SnrDb => {}
            }
        }
    }
    out
}

fn check_ring(antennas: usize, radius_m: f64, carrier_hz: f64, what: &str, out: &mut Vec<Diagnostic>) {
    let wavelength = SPEED_OF_LIGHT / carrier_hz;
    match min_angular_spacing(wavelength, radius_m) {
        Err(e) => out.push(Diagnostic::error(format!("{what}: {e}"))),
        Ok(psi_min) => {
            let needed = antennas as f64 * psi_min;
            if needed > TAU + 1e-12 {
                out.push(Diagnostic::error(format!(
                    "{what}: {antennas} antennas * psi_min {psi_min:.4} rad = {needed:.4} exceeds 2*pi; \
                     no feasible ring layout"
                )));
            } else if needed > 0.8 * TAU {
                out.push(Diagnostic::warning(format!(
                    "{what}: ring nearly full ({needed:.4} of {TAU:.4} rad taken by minimum spacing); \
                     movable range is very small"
                )));
            }
        }
    }
}

/// Fully resolved parameters for one sweep point.
#[derive(Debug, Clone)]
pub struct PointSetup {
    pub array: ArrayConfig,
    pub scenario: ScenarioParams,
    pub solver: SolverOptions,
}

/// Resolve the config at one sweep value (or at its base values).
pub fn resolve_point(cfg: &ExperimentConfig, value: Option<f64>) -> Result<PointSetup> {
    let mut radius = cfg.array.radius_m;
    let mut paths = cfg.scenario.paths;
    let mut noise = cfg.scenario.noise_variance;
    let mut spacing = cfg.solver.initial_z_spacing_wavelengths;
    if let (Some(sweep), Some(v)) = (&cfg.sweep, value) {
        match sweep.axis {
            SweepAxis::SnrDb => noise = 10f64.powf(-v / 10.0),
            SweepAxis::Paths => paths = v as usize,
            SweepAxis::RadiusM => radius = v,
            SweepAxis::ZSpacing => spacing = v,
        }
    }
    let array = ArrayConfig::new(
        cfg.array.layers,
        cfg.array.antennas_per_layer,
        radius,
        cfg.array.carrier_hz,
    )?;
    let scenario = ScenarioParams {
        users: cfg.scenario.users,
        paths,
        noise_variance: noise,
        elevation_max: cfg.scenario.elevation_max,
        azimuth_max: cfg.scenario.azimuth_max,
    };
    // Variant is filled in per run.
    let mut solver = SolverOptions::new(Variant::FixedFp);
    solver.max_outer_iterations = cfg.solver.max_outer_iterations;
    solver.rate_tol = cfg.solver.rate_tol;
    solver.power = cfg.solver.power;
    solver.initial_spacing_wavelengths = spacing;
    solver.position_alternations = cfg.solver.position_alternations;
    solver.position = cfg.solver.position;
    Ok(PointSetup {
        array,
        scenario,
        solver,
    })
}

/// Per-variant aggregate over one sweep point's trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub variant: Variant,
    /// Scenario seed of every attempted trial, in trial order.
    pub seeds: Vec<u64>,
    /// Seeds of trials that failed numerically and were excluded.
    pub failed_seeds: Vec<u64>,
    /// Per completed trial: the per-iteration sum rates.
    pub traces: Vec<Vec<f64>>,
    /// Arithmetic mean across completed trials, shorter traces held at
    /// their final value.
    pub mean_trace: Vec<f64>,
    /// Mean of the final sum rates.
    pub final_mean: f64,
}

/// All variants, identically seeded, for one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub variants: Vec<VariantReport>,
}

impl MonteCarloReport {
    pub fn variant(&self, v: Variant) -> Option<&VariantReport> {
        self.variants.iter().find(|r| r.variant == v)
    }
}

/// Seed of trial `t`.
pub fn trial_seed(base_seed: u64, trial: usize) -> u64 {
    base_seed.wrapping_add(trial as u64)
}

/// Run every variant on `trials` identically-seeded scenarios.
///
/// Trials execute independently (in parallel when a rayon pool provides
/// threads); aggregation is ordered by trial index, so results do not
/// depend on scheduling.
pub fn monte_carlo(
    setup: &PointSetup,
    variants: &[Variant],
    trials: usize,
    base_seed: u64,
) -> MonteCarloReport {
    assert!(trials >= 1, "at least one trial required");
    let per_trial: Vec<Vec<std::result::Result<Vec<f64>, String>>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(base_seed, t);
            let scenario = Scenario::sample(&setup.scenario, seed);
            variants
                .iter()
                .map(|&variant| {
                    let mut options = setup.solver.clone();
                    options.variant = variant;
                    run_fp_loop(&setup.array, &scenario, &options)
                        .map(|outcome| outcome.trace.sum_rates())
                        .map_err(|e| e.to_string())
                })
                .collect()
        })
        .collect();

    let reports = variants
        .iter()
        .enumerate()
        .map(|(vi, &variant)| {
            let mut seeds = Vec::with_capacity(trials);
            let mut failed_seeds = Vec::new();
            let mut traces = Vec::with_capacity(trials);
            for (t, row) in per_trial.iter().enumerate() {
                let seed = trial_seed(base_seed, t);
                seeds.push(seed);
                match &row[vi] {
                    Ok(trace) => traces.push(trace.clone()),
                    Err(_) => failed_seeds.push(seed),
                }
            }
            let mean_trace = mean_trace(&traces);
            let final_mean = if traces.is_empty() {
                f64::NAN
            } else {
                traces.iter().map(|t| t.last().copied().unwrap_or(0.0)).sum::<f64>()
                    / traces.len() as f64
            };
            VariantReport {
                variant,
                seeds,
                failed_seeds,
                traces,
                mean_trace,
                final_mean,
            }
        })
        .collect();
    MonteCarloReport { variants: reports }
}

/// Mean across traces, holding early-converged traces at their final value.
fn mean_trace(traces: &[Vec<f64>]) -> Vec<f64> {
    let longest = traces.iter().map(|t| t.len()).max().unwrap_or(0);
    let mut out = Vec::with_capacity(longest);
    for i in 0..longest {
        let mut acc = 0.0;
        for trace in traces {
            acc += trace.get(i).copied().unwrap_or_else(|| *trace.last().unwrap());
        }
        out.push(acc / traces.len() as f64);
    }
    out
}

/// One sweep point of a finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Sweep value; absent when the run has no sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub report: MonteCarloReport,
}

/// The persisted form of a finished run: resolved config plus every trial's
/// trace. Re-running any stored seed with the stored config reproduces its
/// trace exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFile {
    pub config: ExperimentConfig,
    pub points: Vec<SweepPoint>,
}

impl RunFile {
    /// Seeds of all failed trials across points and variants.
    pub fn failed_seeds(&self) -> Vec<u64> {
        let mut out: Vec<u64> = self
            .points
            .iter()
            .flat_map(|p| p.report.variants.iter())
            .flat_map(|v| v.failed_seeds.iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Execute the whole experiment (every sweep point).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunFile> {
    let diagnostics = validate_config(cfg);
    if let Some(err) = diagnostics.iter().find(|d| d.severity == Severity::Error) {
        return Err(Error::InvalidConfig(err.message.clone()));
    }
    let values: Vec<Option<f64>> = match &cfg.sweep {
        Some(sweep) => sweep.values.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let mut points = Vec::with_capacity(values.len());
    for value in values {
        let setup = resolve_point(cfg, value)?;
        let report = monte_carlo(
            &setup,
            &cfg.experiment.variants,
            cfg.experiment.trials,
            cfg.experiment.base_seed,
        );
        points.push(SweepPoint {
            value,
            report,
        });
    }
    Ok(RunFile {
        config: cfg.clone(),
        points,
    })
}

/// Re-run a single stored trial from a run file; returns the fresh trace.
pub fn rerun_trial(
    run: &RunFile,
    point_index: usize,
    variant: Variant,
    trial_index: usize,
) -> Result<IterationTrace> {
    let point = run
        .points
        .get(point_index)
        .ok_or_else(|| Error::InvalidConfig(format!("no sweep point {point_index}")))?;
    let setup = resolve_point(&run.config, point.value)?;
    let report = point
        .report
        .variant(variant)
        .ok_or_else(|| Error::InvalidConfig(format!("variant {} not in run", variant.label())))?;
    let seed = *report
        .seeds
        .get(trial_index)
        .ok_or_else(|| Error::InvalidConfig(format!("no trial {trial_index}")))?;
    let scenario = Scenario::sample(&setup.scenario, seed);
    let mut options = setup.solver.clone();
    options.variant = variant;
    Ok(run_fp_loop(&setup.array, &scenario, &options)?.trace)
}

/// Format with 12 significant digits, so equal values print identically and
/// output is byte-reproducible.
pub fn fmt_sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Iteration-trace CSV: one row per (sweep value, variant, iteration) with
/// the mean sum rate across trials. Rows are sorted by that triple.
pub fn write_trace_csv(run: &RunFile, out: &mut impl Write) -> std::io::Result<()> {
    let axis = run.config.sweep.as_ref().map(|s| s.axis.column_name());
    match axis {
        Some(name) => writeln!(out, "{name},iteration,variant,mean_sum_rate")?,
        None => writeln!(out, "iteration,variant,mean_sum_rate")?,
    }
    for (point, report) in sorted_points(run) {
        for variant in sorted_variants(report) {
            for (i, rate) in variant.mean_trace.iter().enumerate() {
                match point {
                    Some(v) => writeln!(
                        out,
                        "{},{},{},{}",
                        fmt_sig12(v),
                        i,
                        variant.variant.label(),
                        fmt_sig12(*rate)
                    )?,
                    None => {
                        writeln!(out, "{},{},{}", i, variant.variant.label(), fmt_sig12(*rate))?
                    }
                }
            }
        }
    }
    Ok(())
}

/// Final-rate CSV: one row per (sweep value, variant) with the mean final
/// sum rate.
pub fn write_final_csv(run: &RunFile, out: &mut impl Write) -> std::io::Result<()> {
    let axis = run.config.sweep.as_ref().map(|s| s.axis.column_name());
    match axis {
        Some(name) => writeln!(out, "{name},variant,final_mean_sum_rate")?,
        None => writeln!(out, "variant,final_mean_sum_rate")?,
    }
    for (point, report) in sorted_points(run) {
        for variant in sorted_variants(report) {
            match point {
                Some(v) => writeln!(
                    out,
                    "{},{},{}",
                    fmt_sig12(v),
                    variant.variant.label(),
                    fmt_sig12(variant.final_mean)
                )?,
                None => writeln!(
                    out,
                    "{},{}",
                    variant.variant.label(),
                    fmt_sig12(variant.final_mean)
                )?,
            }
        }
    }
    Ok(())
}

fn sorted_points(run: &RunFile) -> Vec<(Option<f64>, &MonteCarloReport)> {
    let mut points: Vec<_> = run.points.iter().map(|p| (p.value, &p.report)).collect();
    points.sort_by(|a, b| {
        a.0.unwrap_or(0.0)
            .partial_cmp(&b.0.unwrap_or(0.0))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    points
}

fn sorted_variants(report: &MonteCarloReport) -> Vec<&VariantReport> {
    let mut variants: Vec<_> = report.variants.iter().collect();
    variants.sort_by_key(|v| v.variant.label());
    variants
}

/// Write `run.json`, `trace.csv`, and `final.csv` into a directory.
pub fn write_outputs(run: &RunFile, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(run).expect("run file serializes");
    std::fs::write(dir.join("run.json"), json)?;
    let mut trace = Vec::new();
    write_trace_csv(run, &mut trace)?;
    std::fs::write(dir.join("trace.csv"), trace)?;
    let mut fin = Vec::new();
    write_final_csv(run, &mut fin)?;
    std::fs::write(dir.join("final.csv"), fin)?;
    Ok(())
}
