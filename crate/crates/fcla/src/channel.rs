//! Multipath far-field channel synthesis.
//!
//! Each user's channel is a sum of `L` plane-wave paths. A path is described
//! by a complex gain and an (elevation, azimuth) arrival direction; the array
//! response of an antenna at ring angle `psi` and height `z` is the unit
//! phasor `exp(-j * 2*pi/lambda * (phi_x R cos(psi) + phi_y R sin(psi) + z
//! theta))` in the direction cosines `phi_x`, `phi_y`, `theta`.

use crate::array::{AntennaLayout, ArrayConfig};
use crate::{Complex64, Error, Result};
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// One propagation path: complex gain plus arrival direction, with the
/// direction cosines cached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawPath", into = "RawPath")]
pub struct PathParameters {
    gain: Complex64,
    elevation: f64,
    azimuth: f64,
    phi_x: f64,
    phi_y: f64,
    theta: f64,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
struct RawPath {
    gain_re: f64,
    gain_im: f64,
    elevation: f64,
    azimuth: f64,
}

impl From<RawPath> for PathParameters {
    fn from(r: RawPath) -> Self {
        PathParameters::new(Complex64::new(r.gain_re, r.gain_im), r.elevation, r.azimuth)
    }
}

impl From<PathParameters> for RawPath {
    fn from(p: PathParameters) -> Self {
        RawPath {
            gain_re: p.gain.re,
            gain_im: p.gain.im,
            elevation: p.elevation,
            azimuth: p.azimuth,
        }
    }
}

impl PathParameters {
    pub fn new(gain: Complex64, elevation: f64, azimuth: f64) -> Self {
        let (sin_el, cos_el) = elevation.sin_cos();
        let (sin_az, cos_az) = azimuth.sin_cos();
        Self {
            gain,
            elevation,
            azimuth,
            phi_x: sin_el * cos_az,
            phi_y: sin_el * sin_az,
            theta: cos_el,
        }
    }

    pub fn gain(&self) -> Complex64 {
        self.gain
    }

    pub fn elevation(&self) -> f64 {
        self.elevation
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth
    }

    /// Direction cosine along x: `sin(elevation) * cos(azimuth)`.
    pub fn phi_x(&self) -> f64 {
        self.phi_x
    }

    /// Direction cosine along y: `sin(elevation) * sin(azimuth)`.
    pub fn phi_y(&self) -> f64 {
        self.phi_y
    }

    /// Direction cosine along z: `cos(elevation)`.
    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// How to sample a random environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub users: usize,
    pub paths: usize,
    /// Per-user noise power, linear scale.
    pub noise_variance: f64,
    /// Upper end of the uniform elevation range (lower end is 0).
    pub elevation_max: f64,
    /// Upper end of the uniform azimuth range (lower end is 0).
    pub azimuth_max: f64,
}

impl ScenarioParams {
    pub fn new(users: usize, paths: usize, noise_variance: f64) -> Self {
        Self {
            users,
            paths,
            noise_variance,
            elevation_max: PI,
            azimuth_max: PI,
        }
    }
}

/// The random environment: `K` users with `L` paths each, plus per-user
/// noise powers. All users carry the same path count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScenario", into = "RawScenario")]
pub struct Scenario {
    users: Vec<Vec<PathParameters>>,
    noise_variances: Vec<f64>,
}

#[derive(Serialize, Deserialize, Clone)]
struct RawScenario {
    users: Vec<Vec<PathParameters>>,
    noise_variances: Vec<f64>,
}

impl TryFrom<RawScenario> for Scenario {
    type Error = Error;
    fn try_from(r: RawScenario) -> Result<Self> {
        Scenario::new(r.users, r.noise_variances)
    }
}

impl From<Scenario> for RawScenario {
    fn from(s: Scenario) -> Self {
        RawScenario {
            users: s.users,
            noise_variances: s.noise_variances,
        }
    }
}

impl Scenario {
    pub fn new(users: Vec<Vec<PathParameters>>, noise_variances: Vec<f64>) -> Result<Self> {
        if users.is_empty() {
            return Err(Error::DimensionMismatch("scenario needs at least one user".into()));
        }
        let paths = users[0].len();
        if paths == 0 || users.iter().any(|u| u.len() != paths) {
            return Err(Error::DimensionMismatch(
                "all users must carry the same positive path count".into(),
            ));
        }
        if noise_variances.len() != users.len() {
            return Err(Error::DimensionMismatch(
                "one noise variance per user required".into(),
            ));
        }
        if noise_variances.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::InvalidConfig("noise variances must be positive".into()));
        }
        Ok(Self {
            users,
            noise_variances,
        })
    }

    /// Draw a scenario from the given seed. Elevations and azimuths are
    /// uniform on their configured ranges; gains are circularly-symmetric
    /// complex Gaussian with unit average power. The draw order is fixed
    /// (users outer, paths inner; elevation, azimuth, gain-real, gain-imag)
    /// so a seed pins the scenario exactly.
    pub fn sample(params: &ScenarioParams, seed: u64) -> Self {
        assert!(params.users >= 1 && params.paths >= 1, "K, L must be >= 1");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gauss = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).unwrap();
        let users = (0..params.users)
            .map(|_| {
                (0..params.paths)
                    .map(|_| {
                        let elevation = rng.gen_range(0.0..params.elevation_max);
                        let azimuth = rng.gen_range(0.0..params.azimuth_max);
                        let re = gauss.sample(&mut rng);
                        let im = gauss.sample(&mut rng);
                        PathParameters::new(Complex64::new(re, im), elevation, azimuth)
                    })
                    .collect()
            })
            .collect();
        let noise_variances = vec![params.noise_variance; params.users];
        Self {
            users,
            noise_variances,
        }
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_paths(&self) -> usize {
        self.users[0].len()
    }

    pub fn paths(&self, user: usize) -> &[PathParameters] {
        &self.users[user]
    }

    pub fn noise_variances(&self) -> &[f64] {
        &self.noise_variances
    }
}

/// Convenience wrapper over [`Scenario::sample`] with the default angle
/// ranges and a shared noise power.
pub fn sample_scenario(seed: u64, users: usize, paths: usize, noise_variance: f64) -> Scenario {
    Scenario::sample(&ScenarioParams::new(users, paths, noise_variance), seed)
}

/// The `MN x K` channel matrix; column `k` is user `k`'s channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix(pub DMatrix<Complex64>);

impl ChannelMatrix {
    pub fn num_antennas(&self) -> usize {
        self.0.nrows()
    }

    pub fn num_users(&self) -> usize {
        self.0.ncols()
    }

    pub fn user_column(&self, k: usize) -> nalgebra::DVectorView<'_, Complex64> {
        self.0.column(k)
    }
}

/// Array response of antenna `(layer, slot)` to one path: the unit-modulus
/// phasor of the path's plane wave at that antenna's position.
pub fn steering_entry(
    config: &ArrayConfig,
    layout: &AntennaLayout,
    layer: usize,
    slot: usize,
    path: &PathParameters,
) -> Complex64 {
    steering_at(config, path, layout.psi(layer, slot), layout.z(layer))
}

/// Same response at explicit candidate coordinates.
pub fn steering_at(config: &ArrayConfig, path: &PathParameters, psi: f64, z: f64) -> Complex64 {
    let r = config.radius_m();
    let phase = -config.wavenumber()
        * (path.phi_x() * r * psi.cos() + path.phi_y() * r * psi.sin() + z * path.theta());
    Complex64::from_polar(1.0, phase)
}

/// One channel coefficient `h[k][s]` evaluated at explicit antenna
/// coordinates, without touching any layout: the primitive used by grid
/// search and gradient evaluation.
pub fn channel_entry(config: &ArrayConfig, scenario: &Scenario, user: usize, psi: f64, z: f64) -> Complex64 {
    let paths = scenario.paths(user);
    let scale = (1.0 / paths.len() as f64).sqrt();
    let mut acc = Complex64::new(0.0, 0.0);
    for path in paths {
        acc += path.gain() * steering_at(config, path, psi, z);
    }
    scale * acc
}

/// Synthesize the full `MN x K` channel for a layout and scenario.
pub fn build_channel(
    config: &ArrayConfig,
    layout: &AntennaLayout,
    scenario: &Scenario,
) -> ChannelMatrix {
    assert_eq!(
        layout.angles().len(),
        config.num_antennas(),
        "layout does not match the array configuration"
    );
    let mn = config.num_antennas();
    let k_users = scenario.num_users();
    let mut h = DMatrix::zeros(mn, k_users);
    for k in 0..k_users {
        let paths = scenario.paths(k);
        let scale = (1.0 / paths.len() as f64).sqrt();
        for layer in 0..config.num_layers() {
            let z = layout.z(layer);
            for slot in 0..config.antennas_per_layer() {
                let psi = layout.psi(layer, slot);
                let mut acc = Complex64::new(0.0, 0.0);
                for path in paths {
                    acc += path.gain() * steering_at(config, path, psi, z);
                }
                h[(config.flat_index(layer, slot), k)] = scale * acc;
            }
        }
    }
    ChannelMatrix(h)
}

#[cfg(test)]
pub(crate) fn tests_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
