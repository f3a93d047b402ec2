//! Cylindrical array geometry: configuration, antenna layouts, Cartesian
//! position mapping, and the minimum-spacing constraint logic.
//!
//! Antennas sit on `M` stacked circular layers of radius `R`, `N` antennas
//! per layer. An antenna's free coordinates are its revolving angle `psi` on
//! the layer's track and the (shared) layer height `z`. Two antennas on the
//! same layer must keep an angular distance of at least [`ArrayConfig::psi_min`]
//! (the central angle whose chord is half a wavelength); two layers must stay
//! at least half a wavelength apart vertically.

use crate::{Error, Result};
use std::f64::consts::TAU;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Static description of the cylindrical array.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayConfig {
    num_layers: usize,
    antennas_per_layer: usize,
    radius_m: f64,
    carrier_hz: f64,
    wavelength_m: f64,
}

impl ArrayConfig {
    /// Build a configuration, validating that at least one feasible layout
    /// exists: `N * psi_min <= 2*pi` (going around the ring, the `N`
    /// consecutive gaps sum to `2*pi` and each must be at least `psi_min`).
    pub fn new(
        num_layers: usize,
        antennas_per_layer: usize,
        radius_m: f64,
        carrier_hz: f64,
    ) -> Result<Self> {
        if num_layers == 0 || antennas_per_layer == 0 {
            return Err(Error::InfeasibleConfig(
                "layer and per-layer antenna counts must be at least 1".into(),
            ));
        }
        if !(radius_m > 0.0) {
            return Err(Error::InfeasibleConfig(format!(
                "radius must be positive, got {radius_m}"
            )));
        }
        if !(carrier_hz > 0.0) {
            return Err(Error::InfeasibleConfig(format!(
                "carrier frequency must be positive, got {carrier_hz}"
            )));
        }
        let wavelength_m = SPEED_OF_LIGHT / carrier_hz;
        let psi_min = min_angular_spacing(wavelength_m, radius_m)?;
        if antennas_per_layer as f64 * psi_min > TAU + 1e-12 {
            return Err(Error::InfeasibleConfig(format!(
                "{antennas_per_layer} antennas with minimum angular spacing {psi_min:.6} rad \
                 exceed the full ring: N * psi_min = {:.6} > 2*pi",
                antennas_per_layer as f64 * psi_min
            )));
        }
        Ok(Self {
            num_layers,
            antennas_per_layer,
            radius_m,
            carrier_hz,
            wavelength_m,
        })
    }

    pub fn num_layers(&self) -> usize {
        self.num_layers
    }

    pub fn antennas_per_layer(&self) -> usize {
        self.antennas_per_layer
    }

    /// Total antenna count `M * N`.
    pub fn num_antennas(&self) -> usize {
        self.num_layers * self.antennas_per_layer
    }

    pub fn radius_m(&self) -> f64 {
        self.radius_m
    }

    pub fn carrier_hz(&self) -> f64 {
        self.carrier_hz
    }

    pub fn wavelength_m(&self) -> f64 {
        self.wavelength_m
    }

    /// Free-space wavenumber `2*pi / wavelength`.
    pub fn wavenumber(&self) -> f64 {
        TAU / self.wavelength_m
    }

    /// Minimum angular spacing between two antennas on the same layer,
    /// `2 * asin(wavelength / (4 R))`: the central angle whose chord equals
    /// half a wavelength.
    pub fn psi_min(&self) -> f64 {
        // Safe: validated at construction.
        min_angular_spacing(self.wavelength_m, self.radius_m).unwrap()
    }

    /// Minimum vertical spacing between two layers, half a wavelength.
    pub fn z_min(&self) -> f64 {
        self.wavelength_m / 2.0
    }

    /// Map `(layer, slot)` to the flat antenna index `s = layer * N + slot`.
    /// All indices are zero-based; the map is a bijection onto `0..M*N`.
    pub fn flat_index(&self, layer: usize, slot: usize) -> usize {
        assert!(
            layer < self.num_layers,
            "layer index {layer} out of range (M = {})",
            self.num_layers
        );
        assert!(
            slot < self.antennas_per_layer,
            "slot index {slot} out of range (N = {})",
            self.antennas_per_layer
        );
        layer * self.antennas_per_layer + slot
    }

    /// Inverse of [`flat_index`](Self::flat_index).
    pub fn layer_slot(&self, s: usize) -> (usize, usize) {
        assert!(s < self.num_antennas(), "antenna index {s} out of range");
        (s / self.antennas_per_layer, s % self.antennas_per_layer)
    }
}

/// `2 * asin(wavelength / (4 R))`, rejecting radii too small for two
/// antennas to share a ring.
pub fn min_angular_spacing(wavelength_m: f64, radius_m: f64) -> Result<f64> {
    let ratio = wavelength_m / (4.0 * radius_m);
    if ratio > 1.0 {
        return Err(Error::InfeasibleConfig(format!(
            "wavelength/(4R) = {ratio:.6} > 1: no two antennas fit on one ring"
        )));
    }
    Ok(2.0 * ratio.asin())
}

/// Cartesian coordinates of one antenna, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AntennaPosition {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl AntennaPosition {
    pub fn distance_to(&self, other: &AntennaPosition) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// The movable decision variables: per-antenna revolving angles (wrapped to
/// `[0, 2*pi)`) and per-layer heights.
#[derive(Debug, Clone, PartialEq)]
pub struct AntennaLayout {
    /// Row-major `M x N` angles in radians.
    psi: Vec<f64>,
    /// Length-`M` heights in meters.
    z: Vec<f64>,
    antennas_per_layer: usize,
}

impl AntennaLayout {
    /// Build from explicit coordinates. Angles are wrapped to `[0, 2*pi)`.
    pub fn new(config: &ArrayConfig, psi: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        if psi.len() != config.num_antennas() || z.len() != config.num_layers() {
            return Err(Error::DimensionMismatch(format!(
                "layout wants {}x{} angles and {} heights, got {} and {}",
                config.num_layers(),
                config.antennas_per_layer(),
                config.num_layers(),
                psi.len(),
                z.len()
            )));
        }
        Ok(Self {
            psi: psi.into_iter().map(wrap_angle).collect(),
            z,
            antennas_per_layer: config.antennas_per_layer(),
        })
    }

    /// Uniform ring layout with a chosen vertical layer spacing:
    /// `psi[m][n] = 2*pi*n/N`, `z[m] = m * spacing`.
    pub fn uniform(config: &ArrayConfig, layer_spacing_m: f64) -> Result<Self> {
        let n = config.antennas_per_layer();
        if layer_spacing_m < config.z_min() - 1e-12 && config.num_layers() > 1 {
            return Err(Error::InfeasibleConfig(format!(
                "layer spacing {layer_spacing_m} m below the minimum {}",
                config.z_min()
            )));
        }
        let mut psi = Vec::with_capacity(config.num_antennas());
        for _ in 0..config.num_layers() {
            for slot in 0..n {
                psi.push(TAU * slot as f64 / n as f64);
            }
        }
        let z = (0..config.num_layers())
            .map(|m| m as f64 * layer_spacing_m)
            .collect();
        Self::new(config, psi, z)
    }

    pub fn psi(&self, layer: usize, slot: usize) -> f64 {
        self.psi[layer * self.antennas_per_layer + slot]
    }

    pub fn z(&self, layer: usize) -> f64 {
        self.z[layer]
    }

    pub fn set_psi(&mut self, layer: usize, slot: usize, value: f64) {
        self.psi[layer * self.antennas_per_layer + slot] = wrap_angle(value);
    }

    pub fn set_z(&mut self, layer: usize, value: f64) {
        self.z[layer] = value;
    }

    /// All angles of one layer.
    pub fn layer_angles(&self, layer: usize) -> &[f64] {
        let n = self.antennas_per_layer;
        &self.psi[layer * n..(layer + 1) * n]
    }

    pub fn heights(&self) -> &[f64] {
        &self.z
    }

    pub fn angles(&self) -> &[f64] {
        &self.psi
    }

    /// Stable FNV-1a hash over the coordinate bit patterns, for trace
    /// snapshots and determinism checks.
    pub fn snapshot_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |v: f64| {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        self.psi.iter().copied().for_each(&mut eat);
        self.z.iter().copied().for_each(&mut eat);
        h
    }
}

/// Default initial layout: uniform rings spaced one wavelength apart.
pub fn default_layout(config: &ArrayConfig) -> AntennaLayout {
    AntennaLayout::uniform(config, config.wavelength_m()).expect("validated config")
}

/// Cartesian position of antenna `(layer, slot)`:
/// `(R cos(psi), R sin(psi), z_layer)`.
pub fn position_of(
    config: &ArrayConfig,
    layout: &AntennaLayout,
    layer: usize,
    slot: usize,
) -> AntennaPosition {
    assert!(layer < config.num_layers() && slot < config.antennas_per_layer());
    let psi = layout.psi(layer, slot);
    AntennaPosition {
        x: config.radius_m() * psi.cos(),
        y: config.radius_m() * psi.sin(),
        z: layout.z(layer),
    }
}

/// Wrap an angle to `[0, 2*pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    // rem_euclid can return exactly TAU when a is a tiny negative number.
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Circular distance between two angles, in `[0, pi]`.
pub fn wrapped_angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// One violated spacing constraint, as reported by [`check_feasible`].
#[derive(Debug, Clone, PartialEq)]
pub enum SpacingViolation {
    /// Two antennas on `layer` closer than `psi_min` in angle.
    Angular {
        layer: usize,
        slots: (usize, usize),
        distance: f64,
    },
    /// Two layers closer than `z_min` in height.
    Vertical { layers: (usize, usize), distance: f64 },
}

/// Outcome of a layout feasibility check.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub violations: Vec<SpacingViolation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Slack below the constraint boundary tolerated as floating-point noise.
pub(crate) const FEASIBILITY_SLACK: f64 = 1e-9;

/// Check both spacing constraints, reporting every violated pair.
pub fn check_feasible(config: &ArrayConfig, layout: &AntennaLayout) -> FeasibilityReport {
    let mut violations = Vec::new();
    let psi_min = config.psi_min();
    for layer in 0..config.num_layers() {
        let angles = layout.layer_angles(layer);
        for i in 0..angles.len() {
            for j in (i + 1)..angles.len() {
                let d = wrapped_angular_distance(angles[i], angles[j]);
                if d < psi_min - FEASIBILITY_SLACK {
                    violations.push(SpacingViolation::Angular {
                        layer,
                        slots: (i, j),
                        distance: d,
                    });
                }
            }
        }
    }
    let z_min = config.z_min();
    let heights = layout.heights();
    for i in 0..heights.len() {
        for j in (i + 1)..heights.len() {
            let d = (heights[i] - heights[j]).abs();
            if d < z_min - FEASIBILITY_SLACK {
                violations.push(SpacingViolation::Vertical {
                    layers: (i, j),
                    distance: d,
                });
            }
        }
    }
    FeasibilityReport { violations }
}
