//! The outer alternating loop: auxiliary updates, the precoder solve, and
//! (for the movable variants) one or more position passes per iteration.

use crate::array::{AntennaLayout, ArrayConfig};
use crate::channel::{build_channel, Scenario};
use crate::fp::{self, AuxiliaryVariables, Beamformer};
use crate::position::{PositionOptions, PositionProblem};
use crate::Result;
use serde::{Deserialize, Serialize};

/// Which optimization scheme to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Beamforming only; antennas stay at their initial positions.
    FixedFp,
    /// Beamforming plus grid-search + Adam position updates in both
    /// dimensions.
    FpMaAdam,
    /// Beamforming plus pure grid-search position updates (no Adam
    /// refinement).
    FpMaGrid,
    /// Position updates restricted to the revolving angles.
    HorizontalOnly,
    /// Position updates restricted to the layer heights.
    VerticalOnly,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::FixedFp,
        Variant::FpMaAdam,
        Variant::FpMaGrid,
        Variant::HorizontalOnly,
        Variant::VerticalOnly,
    ];

    /// Stable name used in config files and CSV output.
    pub fn label(&self) -> &'static str {
        match self {
            Variant::FixedFp => "fixed_fp",
            Variant::FpMaAdam => "fp_ma_adam",
            Variant::FpMaGrid => "fp_ma_grid",
            Variant::HorizontalOnly => "horizontal_only",
            Variant::VerticalOnly => "vertical_only",
        }
    }

    pub fn moves_angles(&self) -> bool {
        matches!(
            self,
            Variant::FpMaAdam | Variant::FpMaGrid | Variant::HorizontalOnly
        )
    }

    pub fn moves_heights(&self) -> bool {
        matches!(
            self,
            Variant::FpMaAdam | Variant::FpMaGrid | Variant::VerticalOnly
        )
    }

    pub fn moves_positions(&self) -> bool {
        self.moves_angles() || self.moves_heights()
    }
}

/// Everything the outer loop needs besides the array and the scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub variant: Variant,
    /// Maximum outer iterations.
    pub max_outer_iterations: usize,
    /// Stop early once the sum-rate change drops below this; zero runs all
    /// iterations.
    pub rate_tol: f64,
    /// Total transmit power budget.
    pub power: f64,
    /// Initial layer spacing, in wavelengths.
    pub initial_spacing_wavelengths: f64,
    /// Angle/height alternations per outer iteration.
    pub position_alternations: usize,
    pub position: PositionOptions,
}

impl SolverOptions {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            max_outer_iterations: 30,
            rate_tol: 0.0,
            power: 1.0,
            initial_spacing_wavelengths: 1.0,
            position_alternations: 1,
            position: PositionOptions::default(),
        }
    }
}

/// One outer iteration's record. Index 0 of a trace holds the initial state
/// (matched-filter precoder on the initial layout).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// Sum rate in bits per channel use.
    pub sum_rate: f64,
    /// Surrogate value at this iteration's auxiliaries (natural log).
    pub lagrangian: f64,
    /// Power multiplier from the precoder solve.
    pub lambda: f64,
    /// Layout fingerprint for determinism checks.
    pub layout_hash: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IterationTrace {
    pub entries: Vec<TraceEntry>,
}

impl IterationTrace {
    pub fn sum_rates(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.sum_rate).collect()
    }

    pub fn final_rate(&self) -> f64 {
        self.entries.last().map(|e| e.sum_rate).unwrap_or(0.0)
    }
}

/// Final state of one solver run.
pub struct FpRunOutcome {
    pub trace: IterationTrace,
    pub beamformer: Beamformer,
    pub layout: AntennaLayout,
}

/// Run the alternating loop on one scenario.
///
/// Each iteration updates the auxiliaries in closed form, re-solves the
/// precoder, and, for the movable variants, runs the position passes with
/// the auxiliaries and precoder frozen. The recorded sum rate never
/// decreases from one iteration to the next: every block update can only
/// raise the surrogate, and the surrogate touches the true rate at the
/// start of each iteration.
pub fn run_fp_loop(
    config: &ArrayConfig,
    scenario: &Scenario,
    options: &SolverOptions,
) -> Result<FpRunOutcome> {
    let noise = scenario.noise_variances();
    let spacing = options.initial_spacing_wavelengths * config.wavelength_m();
    let mut layout = AntennaLayout::uniform(config, spacing)?;
    let mut h = build_channel(config, &layout, scenario);
    let mut beamformer = fp::matched_filter(&h, options.power);

    // Pure grid search drops the Adam refinement but keeps the same grid.
    let mut position_options = options.position;
    if options.variant == Variant::FpMaGrid {
        position_options.adam_steps = 0;
    }

    let mut entries = Vec::with_capacity(options.max_outer_iterations + 1);
    let initial_rate = fp::sum_rate(&h, &beamformer, noise);
    entries.push(TraceEntry {
        sum_rate: initial_rate,
        lagrangian: initial_rate * std::f64::consts::LN_2,
        lambda: 0.0,
        layout_hash: layout.snapshot_hash(),
    });

    let mut prev_rate = initial_rate;
    for _ in 0..options.max_outer_iterations {
        let aux = AuxiliaryVariables::optimal(&h, &beamformer, noise);
        let surrogates = fp::build_surrogates(&h, &aux, noise);
        let (f_new, lambda) = fp::solve_beamformer(&surrogates, options.power)?;
        beamformer = f_new;

        if options.variant.moves_positions() {
            let mut problem =
                PositionProblem::new(config, scenario, layout, &beamformer, &aux);
            for _ in 0..options.position_alternations.max(1) {
                if options.variant.moves_angles() {
                    problem.optimize_psi(&position_options);
                }
                if options.variant.moves_heights() {
                    problem.optimize_z(&position_options);
                }
            }
            h = problem.channel();
            layout = problem.into_layout();
        }

        let rate = fp::sum_rate(&h, &beamformer, noise);
        entries.push(TraceEntry {
            sum_rate: rate,
            lagrangian: fp::lagrangian_value(&h, &beamformer, &aux, noise),
            lambda,
            layout_hash: layout.snapshot_hash(),
        });
        if options.rate_tol > 0.0 && (rate - prev_rate).abs() < options.rate_tol {
            break;
        }
        prev_rate = rate;
    }

    Ok(FpRunOutcome {
        trace: IterationTrace { entries },
        beamformer,
        layout,
    })
}
