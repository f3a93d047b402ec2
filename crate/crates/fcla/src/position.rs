//! Antenna position optimization inside the FP surrogate.
//!
//! With the auxiliaries and the precoder frozen, the surrogate objective is a
//! function `f(psi, z)` of the revolving angles and layer heights only. It
//! decomposes into per-antenna terms `f_s` through coefficients `c[k][s]`,
//! `d[k][s]` that freeze every other antenna's channel entry. Optimization
//! runs antenna by antenna (layer by layer for heights): a grid search over
//! ring candidates picks a basin, Adam ascent refines inside it, and spacing
//! constraints are enforced by discarding infeasible candidates, projecting
//! violating iterates back to the constraint boundary, and reverting when
//! nothing feasible improves on the current coordinate.

use crate::array::{
    wrap_angle, wrapped_angular_distance, AntennaLayout, ArrayConfig, FEASIBILITY_SLACK,
};
use crate::channel::{build_channel, ChannelMatrix, PathParameters, Scenario};
use crate::fp::{signal_amplitude, total_receive_power, AuxiliaryVariables, Beamformer};
use crate::Complex64;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Adam step-size and moment-decay parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyperparams {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eta: f64,
}

impl AdamHyperparams {
    /// Standard decay rates with a caller-chosen step size.
    pub fn with_step(alpha: f64) -> Self {
        Self {
            alpha,
            beta1: 0.9,
            beta2: 0.999,
            eta: 1e-8,
        }
    }
}

/// First- and second-moment estimates for one scalar coordinate.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdamState {
    pub m: f64,
    pub v: f64,
    pub t: u32,
}

impl AdamState {
    pub fn new() -> Self {
        Self::default()
    }
}

/// One bias-corrected ascent step; returns the updated coordinate.
pub fn adam_step(state: &mut AdamState, hyper: &AdamHyperparams, grad: f64, x: f64) -> f64 {
    state.t += 1;
    state.m = hyper.beta1 * state.m + (1.0 - hyper.beta1) * grad;
    state.v = hyper.beta2 * state.v + (1.0 - hyper.beta2) * grad * grad;
    let m_hat = state.m / (1.0 - hyper.beta1.powi(state.t as i32));
    let v_hat = state.v / (1.0 - hyper.beta2.powi(state.t as i32));
    x + hyper.alpha * m_hat / (v_hat.sqrt() + hyper.eta)
}

/// Grid-search candidate sets for both coordinate kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    /// Ring candidates per angle update, spread uniformly over the full ring.
    pub ring_points: usize,
    /// Height candidates per layer update, spread over the window below.
    pub z_points: usize,
    /// Half-width of the height candidate window, in wavelengths, centered
    /// on the layer's current height.
    pub z_half_width_wavelengths: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            ring_points: 64,
            z_points: 21,
            z_half_width_wavelengths: 1.0,
        }
    }
}

/// Knobs for the constrained grid-search + Adam position optimizers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PositionOptions {
    /// Full sweeps over all antennas (layers) per call.
    pub sweeps: usize,
    /// Adam iterations per antenna; zero disables gradient refinement and
    /// leaves a pure grid search.
    pub adam_steps: usize,
    pub grid: GridSpec,
    /// Convergence threshold on objective change, for both the Adam loop and
    /// the outer sweep loop.
    pub tol: f64,
    /// Adam step size for revolving angles, radians.
    pub alpha_psi: f64,
    /// Adam step size for layer heights, meters.
    pub alpha_z: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eta: f64,
}

impl Default for PositionOptions {
    fn default() -> Self {
        Self {
            sweeps: 3,
            adam_steps: 100,
            grid: GridSpec::default(),
            tol: 1e-6,
            alpha_psi: 0.01,
            alpha_z: 0.005,
            beta1: 0.9,
            beta2: 0.999,
            eta: 1e-8,
        }
    }
}

/// Coefficients of one antenna's term in the objective decomposition, with
/// every other antenna frozen: `f_s = sum_k (2 Re{conj(h[k][s]) c[k]} -
/// d[k] |h[k][s]|^2 - lift_k |mu_k|^2 sigma_k^2 / MN)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerAntennaCoefficients {
    pub c: Vec<Complex64>,
    pub d: Vec<f64>,
}

/// Precoder Gram matrix `W = sum_k f_k f_k^H`.
pub fn precoder_gram(f: &Beamformer) -> DMatrix<Complex64> {
    &f.0 * f.0.adjoint()
}

/// Coefficients of antenna `s`'s objective term.
pub fn per_antenna_coeffs(
    h: &ChannelMatrix,
    f: &Beamformer,
    aux: &AuxiliaryVariables,
    s: usize,
) -> PerAntennaCoefficients {
    per_antenna_coeffs_with_gram(h, f, aux, &precoder_gram(f), s)
}

fn per_antenna_coeffs_with_gram(
    h: &ChannelMatrix,
    f: &Beamformer,
    aux: &AuxiliaryVariables,
    gram: &DMatrix<Complex64>,
    s: usize,
) -> PerAntennaCoefficients {
    let k_users = h.num_users();
    let mut c = Vec::with_capacity(k_users);
    let mut d = Vec::with_capacity(k_users);
    for k in 0..k_users {
        let lift = 1.0 + aux.epsilon[k];
        let mu = aux.mu[k];
        // (W h_k)_s minus the diagonal term leaves sum_{s' != s} W[s][s'] h[k][s'].
        let row_dot = (gram.row(s) * h.0.column(k))[(0, 0)];
        let cross = row_dot - gram[(s, s)] * h.0[(s, k)];
        c.push(
            Complex64::new(lift, 0.0)
                * (mu * f.0[(s, k)] - Complex64::new(0.5 * mu.norm_sqr(), 0.0) * cross),
        );
        d.push(lift * mu.norm_sqr() * gram[(s, s)].re);
    }
    PerAntennaCoefficients { c, d }
}

/// Antenna `s`'s objective term evaluated at channel entries `h_s[k]`.
pub fn per_antenna_objective(
    coeffs: &PerAntennaCoefficients,
    h_s: &[Complex64],
    aux: &AuxiliaryVariables,
    noise: &[f64],
    num_antennas: usize,
) -> f64 {
    let mut acc = 0.0;
    for (k, &entry) in h_s.iter().enumerate() {
        let lift = 1.0 + aux.epsilon[k];
        let mu_sq = aux.mu[k].norm_sqr();
        acc += 2.0 * (entry.conj() * coeffs.c[k]).re
            - coeffs.d[k] * entry.norm_sqr()
            - lift * mu_sq * noise[k] / num_antennas as f64;
    }
    acc
}

/// The position-dependent part of the FP surrogate:
/// `sum_k (1+eps_k)(2 Re{conj(mu_k) a_k} - |mu_k|^2 b_k)`.
///
/// Adding the constant `sum_k [ln(1+eps_k) - eps_k]` recovers the full
/// surrogate value.
pub fn total_objective(
    h: &ChannelMatrix,
    f: &Beamformer,
    aux: &AuxiliaryVariables,
    noise: &[f64],
) -> f64 {
    let mut acc = 0.0;
    for k in 0..h.num_users() {
        let a = signal_amplitude(h, f, k);
        let b = total_receive_power(h, f, noise, k);
        acc += (1.0 + aux.epsilon[k]) * (2.0 * (aux.mu[k].conj() * a).re - aux.mu[k].norm_sqr() * b);
    }
    acc
}

/// `phi_x R cos(psi) + phi_y R sin(psi) + z theta`: the position/direction
/// inner product whose scaled negative is the steering phase.
fn phase_dot(config: &ArrayConfig, path: &PathParameters, psi: f64, z: f64) -> f64 {
    let r = config.radius_m();
    path.phi_x() * r * psi.cos() + path.phi_y() * r * psi.sin() + z * path.theta()
}

/// Tangential gradient component `(1/R) df/dpsi[m][n]` of the surrogate in
/// one antenna's revolving angle: the antenna's own phase term plus the
/// coupling through every other antenna's coefficient.
#[allow(clippy::too_many_arguments)]
pub fn grad_psi(
    config: &ArrayConfig,
    layout: &AntennaLayout,
    scenario: &Scenario,
    h: &ChannelMatrix,
    f: &Beamformer,
    aux: &AuxiliaryVariables,
    m: usize,
    n: usize,
) -> f64 {
    let gram = precoder_gram(f);
    let psi = layout.psi(m, n);
    let s = config.flat_index(m, n);
    // d(phase_dot)/dpsi = -R (phi_x sin psi - phi_y cos psi); the component
    // is pre-divided by R, leaving this unit direction factor.
    gradient_wrt_coordinate(config, layout, scenario, h, f, aux, &gram, s, &|p| {
        -(p.phi_x() * psi.sin() - p.phi_y() * psi.cos())
    })
}

/// `df/dz[m]` with the layer's antennas moving rigidly: the per-antenna
/// height derivatives summed over the layer.
pub fn grad_z(
    config: &ArrayConfig,
    layout: &AntennaLayout,
    scenario: &Scenario,
    h: &ChannelMatrix,
    f: &Beamformer,
    aux: &AuxiliaryVariables,
    m: usize,
) -> f64 {
    let gram = precoder_gram(f);
    (0..config.antennas_per_layer())
        .map(|n| {
            let s = config.flat_index(m, n);
            gradient_wrt_coordinate(config, layout, scenario, h, f, aux, &gram, s, &|p| p.theta())
        })
        .sum()
}

/// Derivative of the surrogate in one scalar coordinate of antenna `s`,
/// where the steering phase-dot of path `(k, l)` has derivative `dir(path)`.
///
/// Three sums assemble the derivative: the focal antenna's linear term (its
/// conjugate phasor against `c[k][s]`), the focal antenna's path-pair term
/// (from `|h[k][s]|^2` when several paths interfere), and the cross term
/// (the focal entry inside every other antenna's coefficient).
#[allow(clippy::too_many_arguments)]
fn gradient_wrt_coordinate(
    config: &ArrayConfig,
    layout: &AntennaLayout,
    scenario: &Scenario,
    h: &ChannelMatrix,
    f: &Beamformer,
    aux: &AuxiliaryVariables,
    gram: &DMatrix<Complex64>,
    s: usize,
    dir: &dyn Fn(&PathParameters) -> f64,
) -> f64 {
    let kappa = config.wavenumber();
    let (m, n) = config.layer_slot(s);
    let (psi_s, z_s) = (layout.psi(m, n), layout.z(m));
    let coeffs = per_antenna_coeffs_with_gram(h, f, aux, gram, s);
    let num_paths = scenario.num_paths();
    let inv_l = 1.0 / num_paths as f64;
    let mut total = 0.0;
    for k in 0..h.num_users() {
        let paths = scenario.paths(k);
        let weight = (1.0 + aux.epsilon[k]) * aux.mu[k].norm_sqr();
        let focal_phases: Vec<f64> = paths
            .iter()
            .map(|p| kappa * phase_dot(config, p, psi_s, z_s))
            .collect();

        // Linear term:
        // -(2 kappa / sqrt(L)) sum_l |conj(beta_l) c| dir_l
        //   sin(phase_l + arg(conj(beta_l) c)).
        for (l, p) in paths.iter().enumerate() {
            let bc = p.gain().conj() * coeffs.c[k];
            total -= 2.0 * kappa * inv_l.sqrt()
                * bc.norm()
                * dir(p)
                * (focal_phases[l] + bc.arg()).sin();
        }

        // Path-pair term:
        // +(kappa d_k / L) sum_{l != l'} (dir_l - dir_l') |beta_l beta_l'|
        //   sin(phase_l - phase_l' + arg(beta_l') - arg(beta_l)).
        for l in 0..num_paths {
            for lp in 0..num_paths {
                if l == lp {
                    continue;
                }
                let coef = paths[l].gain().norm() * paths[lp].gain().norm();
                let angle = focal_phases[l] - focal_phases[lp] + paths[lp].gain().arg()
                    - paths[l].gain().arg();
                total += kappa
                    * coeffs.d[k]
                    * inv_l
                    * (dir(&paths[l]) - dir(&paths[lp]))
                    * coef
                    * angle.sin();
            }
        }

        // Cross term:
        // -(kappa w_k / L) sum_{s' != s} sum_{l, l'} dir_l'
        //   |W[s'][s] beta_l beta_l'|
        //   sin(phase'_l - phase_l' + arg(W[s'][s] conj(beta_l) beta_l')).
        for sp in 0..config.num_antennas() {
            if sp == s {
                continue;
            }
            let w_entry = gram[(sp, s)];
            if w_entry.norm_sqr() == 0.0 {
                continue;
            }
            let (mp, np) = config.layer_slot(sp);
            let (psi_p, z_p) = (layout.psi(mp, np), layout.z(mp));
            let other_phases: Vec<f64> = paths
                .iter()
                .map(|p| kappa * phase_dot(config, p, psi_p, z_p))
                .collect();
            for l in 0..num_paths {
                let base = w_entry * paths[l].gain().conj();
                for lp in 0..num_paths {
                    let x = base * paths[lp].gain();
                    let angle = other_phases[l] - focal_phases[lp] + x.arg();
                    total -= kappa * weight * inv_l * dir(&paths[lp]) * x.norm() * angle.sin();
                }
            }
        }
    }
    total
}

/// Working state for the sequential position optimizers: the layout and
/// channel are kept in sync while antennas commit one at a time, with the
/// precoder Gram products cached for incremental objective evaluation.
pub struct PositionProblem<'a> {
    config: &'a ArrayConfig,
    scenario: &'a Scenario,
    beamformer: &'a Beamformer,
    aux: &'a AuxiliaryVariables,
    noise: Vec<f64>,
    gram: DMatrix<Complex64>,
    layout: AntennaLayout,
    h: DMatrix<Complex64>,
    /// `W * H`, column per user.
    wh: DMatrix<Complex64>,
    /// `a_k = f_k^H h_k`.
    signal: Vec<Complex64>,
    objective: f64,
}

impl<'a> PositionProblem<'a> {
    pub fn new(
        config: &'a ArrayConfig,
        scenario: &'a Scenario,
        layout: AntennaLayout,
        beamformer: &'a Beamformer,
        aux: &'a AuxiliaryVariables,
    ) -> Self {
        let gram = precoder_gram(beamformer);
        let noise = scenario.noise_variances().to_vec();
        let mut problem = Self {
            config,
            scenario,
            beamformer,
            aux,
            noise,
            gram,
            layout,
            h: DMatrix::zeros(0, 0),
            wh: DMatrix::zeros(0, 0),
            signal: Vec::new(),
            objective: 0.0,
        };
        problem.refresh();
        problem
    }

    /// Recompute the caches from the current layout, clearing any drift that
    /// incremental updates accumulated.
    fn refresh(&mut self) {
        self.h = build_channel(self.config, &self.layout, self.scenario).0;
        self.wh = &self.gram * &self.h;
        self.signal = (0..self.h.ncols())
            .map(|k| self.beamformer.0.column(k).dotc(&self.h.column(k)))
            .collect();
        self.objective = (0..self.h.ncols())
            .map(|k| {
                let b = self.noise[k] + self.h.column(k).dotc(&self.wh.column(k)).re;
                (1.0 + self.aux.epsilon[k])
                    * (2.0 * (self.aux.mu[k].conj() * self.signal[k]).re
                        - self.aux.mu[k].norm_sqr() * b)
            })
            .sum();
    }

    pub fn objective(&self) -> f64 {
        self.objective
    }

    pub fn layout(&self) -> &AntennaLayout {
        &self.layout
    }

    pub fn channel(&self) -> ChannelMatrix {
        ChannelMatrix(self.h.clone())
    }

    pub fn into_layout(self) -> AntennaLayout {
        self.layout
    }

    /// Channel entries (per user) of antenna `(m, n)` moved to `psi`.
    fn antenna_entries_at(&self, m: usize, psi: f64) -> Vec<Complex64> {
        let z = self.layout.z(m);
        (0..self.h.ncols())
            .map(|k| crate::channel::channel_entry(self.config, self.scenario, k, psi, z))
            .collect()
    }

    /// Channel entries (slot-major, then user) of layer `m` moved to `z`.
    fn layer_entries_at(&self, m: usize, z: f64) -> Vec<Complex64> {
        let k_users = self.h.ncols();
        let mut out = Vec::with_capacity(self.config.antennas_per_layer() * k_users);
        for n in 0..self.config.antennas_per_layer() {
            let psi = self.layout.psi(m, n);
            for k in 0..k_users {
                out.push(crate::channel::channel_entry(
                    self.config,
                    self.scenario,
                    k,
                    psi,
                    z,
                ));
            }
        }
        out
    }

    /// Objective change if antenna `s` took the given channel entries.
    fn delta_for_antenna(&self, s: usize, entries: &[Complex64]) -> f64 {
        let mut delta = 0.0;
        for (k, &new_entry) in entries.iter().enumerate() {
            let step = new_entry - self.h[(s, k)];
            if step.norm_sqr() == 0.0 {
                continue;
            }
            let d_signal = self.beamformer.0[(s, k)].conj() * step;
            let d_quad =
                2.0 * (step.conj() * self.wh[(s, k)]).re + self.gram[(s, s)].re * step.norm_sqr();
            delta += (1.0 + self.aux.epsilon[k])
                * (2.0 * (self.aux.mu[k].conj() * d_signal).re
                    - self.aux.mu[k].norm_sqr() * d_quad);
        }
        delta
    }

    /// Objective change if layer `m` took the given (slot-major) entries.
    fn delta_for_layer(&self, m: usize, entries: &[Complex64]) -> f64 {
        let k_users = self.h.ncols();
        let slots = self.config.antennas_per_layer();
        let mut delta = 0.0;
        let mut steps = vec![Complex64::new(0.0, 0.0); slots];
        for k in 0..k_users {
            let mut d_signal = Complex64::new(0.0, 0.0);
            let mut linear = 0.0;
            for n in 0..slots {
                let s = self.config.flat_index(m, n);
                let step = entries[n * k_users + k] - self.h[(s, k)];
                d_signal += self.beamformer.0[(s, k)].conj() * step;
                linear += 2.0 * (step.conj() * self.wh[(s, k)]).re;
                steps[n] = step;
            }
            let mut quad = 0.0;
            for n in 0..slots {
                let sn = self.config.flat_index(m, n);
                for np in 0..slots {
                    let snp = self.config.flat_index(m, np);
                    quad += (steps[n].conj() * self.gram[(sn, snp)] * steps[np]).re;
                }
            }
            delta += (1.0 + self.aux.epsilon[k])
                * (2.0 * (self.aux.mu[k].conj() * d_signal).re
                    - self.aux.mu[k].norm_sqr() * (linear + quad));
        }
        delta
    }

    fn commit_antenna(&mut self, m: usize, n: usize, psi: f64, entries: &[Complex64], delta: f64) {
        let s = self.config.flat_index(m, n);
        let col = self.gram.column(s).into_owned();
        for (k, &new_entry) in entries.iter().enumerate() {
            let step = new_entry - self.h[(s, k)];
            self.signal[k] += self.beamformer.0[(s, k)].conj() * step;
            self.wh.column_mut(k).axpy(step, &col, Complex64::new(1.0, 0.0));
            self.h[(s, k)] = new_entry;
        }
        self.layout.set_psi(m, n, psi);
        self.objective += delta;
    }

    fn commit_layer(&mut self, m: usize, z: f64, entries: &[Complex64], delta: f64) {
        let k_users = self.h.ncols();
        for n in 0..self.config.antennas_per_layer() {
            let s = self.config.flat_index(m, n);
            let col = self.gram.column(s).into_owned();
            for k in 0..k_users {
                let new_entry = entries[n * k_users + k];
                let step = new_entry - self.h[(s, k)];
                self.signal[k] += self.beamformer.0[(s, k)].conj() * step;
                self.wh.column_mut(k).axpy(step, &col, Complex64::new(1.0, 0.0));
                self.h[(s, k)] = new_entry;
            }
        }
        self.layout.set_z(m, z);
        self.objective += delta;
    }

    /// Entry and its angle derivative for user `k` at trial coordinates.
    fn entry_and_dpsi(&self, k: usize, psi: f64, z: f64) -> (Complex64, Complex64) {
        let kappa = self.config.wavenumber();
        let r = self.config.radius_m();
        let paths = self.scenario.paths(k);
        let scale = (1.0 / paths.len() as f64).sqrt();
        let (sin_psi, cos_psi) = psi.sin_cos();
        let mut value = Complex64::new(0.0, 0.0);
        let mut deriv = Complex64::new(0.0, 0.0);
        for p in paths {
            let dot = p.phi_x() * r * cos_psi + p.phi_y() * r * sin_psi + z * p.theta();
            let phasor = p.gain() * Complex64::from_polar(1.0, -kappa * dot);
            value += phasor;
            // d/dpsi of the phase brings down +j kappa R (phi_x sin - phi_y cos).
            let psi_factor = p.phi_x() * sin_psi - p.phi_y() * cos_psi;
            deriv += Complex64::new(0.0, kappa * r * psi_factor) * phasor;
        }
        (scale * value, scale * deriv)
    }

    /// Entry and its height derivative for user `k` at trial coordinates.
    fn entry_and_dz(&self, k: usize, psi: f64, z: f64) -> (Complex64, Complex64) {
        let kappa = self.config.wavenumber();
        let r = self.config.radius_m();
        let paths = self.scenario.paths(k);
        let scale = (1.0 / paths.len() as f64).sqrt();
        let (sin_psi, cos_psi) = psi.sin_cos();
        let mut value = Complex64::new(0.0, 0.0);
        let mut deriv = Complex64::new(0.0, 0.0);
        for p in paths {
            let dot = p.phi_x() * r * cos_psi + p.phi_y() * r * sin_psi + z * p.theta();
            let phasor = p.gain() * Complex64::from_polar(1.0, -kappa * dot);
            value += phasor;
            deriv += Complex64::new(0.0, -kappa * p.theta()) * phasor;
        }
        (scale * value, scale * deriv)
    }

    /// `(1/R) df/dpsi` with antenna `(m, n)` trialed at `psi` and everything
    /// else committed. Matrix form of the assembled gradient:
    /// `df/dx = sum_k lift_k (2 Re{conj(mu_k f[s][k]) h'}
    ///          - 2 |mu_k|^2 Re{conj(h') (W h)_s})`
    /// with the trial entry patched into `(W h)_s`.
    pub fn grad_psi_trial(&self, m: usize, n: usize, psi: f64) -> f64 {
        let s = self.config.flat_index(m, n);
        let z = self.layout.z(m);
        let mut total = 0.0;
        for k in 0..self.h.ncols() {
            let (value, deriv) = self.entry_and_dpsi(k, psi, z);
            let wh_trial = self.wh[(s, k)] + self.gram[(s, s)] * (value - self.h[(s, k)]);
            let lin = (self.aux.mu[k].conj() * self.beamformer.0[(s, k)].conj() * deriv).re;
            let quad = (deriv.conj() * wh_trial).re;
            total += (1.0 + self.aux.epsilon[k])
                * 2.0
                * (lin - self.aux.mu[k].norm_sqr() * quad);
        }
        total / self.config.radius_m()
    }

    /// `df/dz` with layer `m` trialed at height `z`.
    pub fn grad_z_trial(&self, m: usize, z: f64) -> f64 {
        let k_users = self.h.ncols();
        let slots = self.config.antennas_per_layer();
        let mut total = 0.0;
        let mut values = vec![Complex64::new(0.0, 0.0); slots];
        let mut derivs = vec![Complex64::new(0.0, 0.0); slots];
        for k in 0..k_users {
            for n in 0..slots {
                let (value, deriv) = self.entry_and_dz(k, self.layout.psi(m, n), z);
                values[n] = value;
                derivs[n] = deriv;
            }
            for n in 0..slots {
                let sn = self.config.flat_index(m, n);
                // (W h_trial)_{s_n}: committed product patched with the
                // layer's trial entries.
                let mut wh_trial = self.wh[(sn, k)];
                for np in 0..slots {
                    let snp = self.config.flat_index(m, np);
                    wh_trial += self.gram[(sn, snp)] * (values[np] - self.h[(snp, k)]);
                }
                let lin =
                    (self.aux.mu[k].conj() * self.beamformer.0[(sn, k)].conj() * derivs[n]).re;
                let quad = (derivs[n].conj() * wh_trial).re;
                total += (1.0 + self.aux.epsilon[k])
                    * 2.0
                    * (lin - self.aux.mu[k].norm_sqr() * quad);
            }
        }
        total
    }

    /// Constrained grid-search + Adam pass over every revolving angle,
    /// swept up to `opts.sweeps` times.
    pub fn optimize_psi(&mut self, opts: &PositionOptions) {
        self.refresh();
        let psi_min = self.config.psi_min();
        for _ in 0..opts.sweeps.max(1) {
            let before = self.objective;
            for m in 0..self.config.num_layers() {
                for n in 0..self.config.antennas_per_layer() {
                    self.update_one_angle(m, n, opts, psi_min);
                }
            }
            if (self.objective - before).abs() < opts.tol {
                break;
            }
        }
    }

    fn update_one_angle(&mut self, m: usize, n: usize, opts: &PositionOptions, psi_min: f64) {
        let current = self.layout.psi(m, n);
        let others: Vec<f64> = (0..self.config.antennas_per_layer())
            .filter(|&j| j != n)
            .map(|j| self.layout.psi(m, j))
            .collect();
        let feasible = |x: f64| {
            others
                .iter()
                .all(|&o| wrapped_angular_distance(x, o) >= psi_min - FEASIBILITY_SLACK)
        };

        // Grid search over the ring. The current angle is always a candidate,
        // so the update can never lose objective value.
        let s = self.config.flat_index(m, n);
        let mut best = Candidate {
            delta: 0.0,
            distance: 0.0,
            coord: current,
            entries: self.antenna_entries_at(m, current),
        };
        for i in 0..opts.grid.ring_points {
            let cand = TAU * i as f64 / opts.grid.ring_points as f64;
            if !feasible(cand) {
                continue;
            }
            let entries = self.antenna_entries_at(m, cand);
            let delta = self.delta_for_antenna(s, &entries);
            best.consider(delta, wrapped_angular_distance(cand, current), cand, entries);
        }

        if opts.adam_steps > 0 {
            let hyper = AdamHyperparams {
                alpha: opts.alpha_psi,
                beta1: opts.beta1,
                beta2: opts.beta2,
                eta: opts.eta,
            };
            let mut state = AdamState::new();
            let mut x = best.coord;
            let mut prev = best.delta;
            for _ in 0..opts.adam_steps {
                let grad = self.grad_psi_trial(m, n, x);
                x = wrap_angle(adam_step(&mut state, &hyper, grad, x));
                if !feasible(x) {
                    x = project_angle(x, &others, psi_min);
                }
                let entries = self.antenna_entries_at(m, x);
                let delta = self.delta_for_antenna(s, &entries);
                if feasible(x) {
                    best.consider(delta, wrapped_angular_distance(x, current), x, entries);
                }
                if (delta - prev).abs() < opts.tol {
                    break;
                }
                prev = delta;
            }
        }

        if best.coord != current {
            let Candidate {
                coord,
                entries,
                delta,
                ..
            } = best;
            self.commit_antenna(m, n, coord, &entries, delta);
        }
    }

    /// Constrained grid-search + Adam pass over every layer height, swept up
    /// to `opts.sweeps` times.
    pub fn optimize_z(&mut self, opts: &PositionOptions) {
        self.refresh();
        let z_min = self.config.z_min();
        for _ in 0..opts.sweeps.max(1) {
            let before = self.objective;
            for m in 0..self.config.num_layers() {
                self.update_one_height(m, opts, z_min);
            }
            if (self.objective - before).abs() < opts.tol {
                break;
            }
        }
    }

    fn update_one_height(&mut self, m: usize, opts: &PositionOptions, z_min: f64) {
        let current = self.layout.z(m);
        let others: Vec<f64> = (0..self.config.num_layers())
            .filter(|&i| i != m)
            .map(|i| self.layout.z(i))
            .collect();
        let feasible =
            |z: f64| others.iter().all(|&o| (z - o).abs() >= z_min - FEASIBILITY_SLACK);

        let mut best = Candidate {
            delta: 0.0,
            distance: 0.0,
            coord: current,
            entries: self.layer_entries_at(m, current),
        };
        let points = opts.grid.z_points.max(2);
        let half_width = opts.grid.z_half_width_wavelengths * self.config.wavelength_m();
        for i in 0..points {
            let cand = current - half_width + 2.0 * half_width * i as f64 / (points - 1) as f64;
            if !feasible(cand) {
                continue;
            }
            let entries = self.layer_entries_at(m, cand);
            let delta = self.delta_for_layer(m, &entries);
            best.consider(delta, (cand - current).abs(), cand, entries);
        }

        if opts.adam_steps > 0 {
            let hyper = AdamHyperparams {
                alpha: opts.alpha_z,
                beta1: opts.beta1,
                beta2: opts.beta2,
                eta: opts.eta,
            };
            let mut state = AdamState::new();
            let mut x = best.coord;
            let mut prev = best.delta;
            for _ in 0..opts.adam_steps {
                let grad = self.grad_z_trial(m, x);
                x = adam_step(&mut state, &hyper, grad, x);
                if !feasible(x) {
                    x = project_height(x, &others, z_min);
                }
                let entries = self.layer_entries_at(m, x);
                let delta = self.delta_for_layer(m, &entries);
                if feasible(x) {
                    best.consider(delta, (x - current).abs(), x, entries);
                }
                if (delta - prev).abs() < opts.tol {
                    break;
                }
                prev = delta;
            }
        }

        if best.coord != current {
            let Candidate {
                coord,
                entries,
                delta,
                ..
            } = best;
            self.commit_layer(m, coord, &entries, delta);
        }
    }
}

/// Best coordinate seen so far; ties in objective go to the candidate with
/// the least physical movement.
struct Candidate {
    delta: f64,
    distance: f64,
    coord: f64,
    entries: Vec<Complex64>,
}

impl Candidate {
    fn consider(&mut self, delta: f64, distance: f64, coord: f64, entries: Vec<Complex64>) {
        if delta > self.delta || (delta == self.delta && distance < self.distance) {
            self.delta = delta;
            self.distance = distance;
            self.coord = coord;
            self.entries = entries;
        }
    }
}

/// Move an angle violating the spacing constraint onto the boundary of its
/// most-violated neighbor, on the side nearer the iterate.
fn project_angle(x: f64, others: &[f64], psi_min: f64) -> f64 {
    let mut worst: Option<(f64, f64)> = None;
    for &o in others {
        let d = wrapped_angular_distance(x, o);
        if d < psi_min && worst.map_or(true, |(wd, _)| d < wd) {
            worst = Some((d, o));
        }
    }
    match worst {
        None => x,
        Some((_, o)) => {
            let hi = wrap_angle(o + psi_min);
            let lo = wrap_angle(o - psi_min);
            if wrapped_angular_distance(x, hi) <= wrapped_angular_distance(x, lo) {
                hi
            } else {
                lo
            }
        }
    }
}

/// Height analogue of [`project_angle`].
fn project_height(x: f64, others: &[f64], z_min: f64) -> f64 {
    let mut worst: Option<(f64, f64)> = None;
    for &o in others {
        let d = (x - o).abs();
        if d < z_min && worst.map_or(true, |(wd, _)| d < wd) {
            worst = Some((d, o));
        }
    }
    match worst {
        None => x,
        Some((_, o)) => {
            if x >= o {
                o + z_min
            } else {
                o - z_min
            }
        }
    }
}

/// Constrained grid-search + Adam update of all revolving angles.
pub fn cgs_adam_psi(
    config: &ArrayConfig,
    scenario: &Scenario,
    layout: AntennaLayout,
    f: &Beamformer,
    aux: &AuxiliaryVariables,
    opts: &PositionOptions,
) -> AntennaLayout {
    let mut problem = PositionProblem::new(config, scenario, layout, f, aux);
    problem.optimize_psi(opts);
    problem.into_layout()
}

/// Constrained grid-search + Adam update of all layer heights.
pub fn cgs_adam_z(
    config: &ArrayConfig,
    scenario: &Scenario,
    layout: AntennaLayout,
    f: &Beamformer,
    aux: &AuxiliaryVariables,
    opts: &PositionOptions,
) -> AntennaLayout {
    let mut problem = PositionProblem::new(config, scenario, layout, f, aux);
    problem.optimize_z(opts);
    problem.into_layout()
}
