//! Fractional-programming machinery for the sum-rate objective.
//!
//! The log-of-SINR objective is lifted with auxiliaries `epsilon` (one
//! positive real per user) and `mu` (one complex per user) into a surrogate
//! that is concave in each block. Both auxiliaries have closed-form optima;
//! the precoder subproblem collapses to `F = (C + lambda I)^{-1} D` with
//! `lambda >= 0` a Lagrange multiplier pinned by a bisection search on the
//! transmit power.

use crate::channel::ChannelMatrix;
use crate::{Complex64, Error, Result};
use nalgebra::{DMatrix, DVector};

/// The `MN x K` precoding matrix; column `k` carries user `k`'s stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Beamformer(pub DMatrix<Complex64>);

impl Beamformer {
    pub fn zeros(num_antennas: usize, num_users: usize) -> Self {
        Self(DMatrix::zeros(num_antennas, num_users))
    }

    /// Transmit power `trace(F F^H)` (the squared Frobenius norm).
    pub fn power(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn num_users(&self) -> usize {
        self.0.ncols()
    }
}

/// Matched-filter initializer: `f_k = sqrt(P/K) h_k / |h_k|`, meeting the
/// power budget with equality at iteration zero.
pub fn matched_filter(h: &ChannelMatrix, power: f64) -> Beamformer {
    let k_users = h.num_users();
    let mut f = DMatrix::zeros(h.num_antennas(), k_users);
    let per_user = (power / k_users as f64).sqrt();
    for k in 0..k_users {
        let col = h.user_column(k);
        let norm = col.norm();
        if norm > 0.0 {
            f.column_mut(k).copy_from(&(col * Complex64::new(per_user / norm, 0.0)));
        }
    }
    Beamformer(f)
}

/// FP auxiliary variables.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliaryVariables {
    pub epsilon: DVector<f64>,
    pub mu: DVector<Complex64>,
}

impl AuxiliaryVariables {
    /// Closed-form optimum of both auxiliaries for the current precoder.
    pub fn optimal(h: &ChannelMatrix, f: &Beamformer, noise: &[f64]) -> Self {
        Self {
            epsilon: update_epsilon(h, f, noise),
            mu: update_mu(h, f, noise),
        }
    }
}

/// `a_k = f_k^H h_k`.
pub(crate) fn signal_amplitude(h: &ChannelMatrix, f: &Beamformer, k: usize) -> Complex64 {
    f.0.column(k).dotc(&h.user_column(k))
}

/// `b_k = sigma_k^2 + sum_i |f_i^H h_k|^2`.
pub(crate) fn total_receive_power(h: &ChannelMatrix, f: &Beamformer, noise: &[f64], k: usize) -> f64 {
    let hk = h.user_column(k);
    let mut acc = noise[k];
    for i in 0..f.num_users() {
        acc += f.0.column(i).dotc(&hk).norm_sqr();
    }
    acc
}

/// Signal-to-interference-plus-noise ratio of user `k`.
pub fn sinr(h: &ChannelMatrix, f: &Beamformer, noise: &[f64], k: usize) -> f64 {
    let signal = signal_amplitude(h, f, k).norm_sqr();
    let denom = total_receive_power(h, f, noise, k) - signal;
    signal / denom
}

/// Sum rate in bits per channel use: `sum_k log2(1 + SINR_k)`.
pub fn sum_rate(h: &ChannelMatrix, f: &Beamformer, noise: &[f64]) -> f64 {
    (0..f.num_users())
        .map(|k| (1.0 + sinr(h, f, noise, k)).log2())
        .sum()
}

/// Optimal `epsilon_k`: exactly the per-user SINR.
pub fn update_epsilon(h: &ChannelMatrix, f: &Beamformer, noise: &[f64]) -> DVector<f64> {
    DVector::from_fn(f.num_users(), |k, _| sinr(h, f, noise, k))
}

/// Optimal `mu_k = a_k / b_k`.
pub fn update_mu(h: &ChannelMatrix, f: &Beamformer, noise: &[f64]) -> DVector<Complex64> {
    DVector::from_fn(f.num_users(), |k, _| {
        signal_amplitude(h, f, k) / Complex64::new(total_receive_power(h, f, noise, k), 0.0)
    })
}

/// The lifted objective (natural log):
/// `sum_k [ln(1+eps_k) - eps_k + (1+eps_k)(2 Re{conj(mu_k) a_k} - |mu_k|^2 b_k)]`.
///
/// Right after both auxiliary updates this equals `sum_k ln(1 + SINR_k)`.
pub fn lagrangian_value(
    h: &ChannelMatrix,
    f: &Beamformer,
    aux: &AuxiliaryVariables,
    noise: &[f64],
) -> f64 {
    let mut acc = 0.0;
    for k in 0..f.num_users() {
        let a = signal_amplitude(h, f, k);
        let b = total_receive_power(h, f, noise, k);
        let eps = aux.epsilon[k];
        let mu = aux.mu[k];
        acc += (1.0 + eps).ln() - eps
            + (1.0 + eps) * (2.0 * (mu.conj() * a).re - mu.norm_sqr() * b);
    }
    acc
}

/// Matrices of the quadratic precoder subproblem
/// `q(F) = tr(M) + tr(F^H C F) - 2 Re tr(F^H D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateMatrices {
    /// Hermitian PSD `MN x MN`: `sum_k (1+eps_k) |mu_k|^2 h_k h_k^H`.
    pub c: DMatrix<Complex64>,
    /// `MN x K`, column `k` is `(1+eps_k) conj(mu_k) h_k`.
    pub d: DMatrix<Complex64>,
    /// Diagonal of `M`: `(1+eps_k) |mu_k|^2 sigma_k^2`.
    pub m_diag: DVector<f64>,
}

pub fn build_surrogates(
    h: &ChannelMatrix,
    aux: &AuxiliaryVariables,
    noise: &[f64],
) -> SurrogateMatrices {
    let mn = h.num_antennas();
    let k_users = h.num_users();
    let mut c = DMatrix::zeros(mn, mn);
    let mut d = DMatrix::zeros(mn, k_users);
    let mut m_diag = DVector::zeros(k_users);
    for k in 0..k_users {
        let hk = h.user_column(k);
        let weight = (1.0 + aux.epsilon[k]) * aux.mu[k].norm_sqr();
        // c += weight * h_k h_k^H
        for col in 0..mn {
            let scale = Complex64::new(weight, 0.0) * hk[col].conj();
            for row in 0..mn {
                c[(row, col)] += hk[row] * scale;
            }
        }
        let dk = Complex64::new(1.0 + aux.epsilon[k], 0.0) * aux.mu[k].conj();
        d.column_mut(k).copy_from(&(hk * dk));
        m_diag[k] = weight * noise[k];
    }
    SurrogateMatrices { c, d, m_diag }
}

/// Transmit power of `F(lambda) = (C + lambda I)^{-1} D` expressed through
/// the eigendecomposition `C = Q diag(evals) Q^H`:
/// `sum_n w_n / (evals_n + lambda)^2` with `w_n` the squared row norms of
/// `Q^H D`. Strictly decreasing in `lambda` whenever `D` is nonzero.
pub fn power_at_lambda(evals: &DVector<f64>, row_weights: &[f64], lambda: f64) -> f64 {
    evals
        .iter()
        .zip(row_weights)
        .map(|(&ev, &w)| w / ((ev + lambda) * (ev + lambda)))
        .sum()
}

/// Relative tolerance on the power constraint at the bisection solution.
pub const POWER_TOL: f64 = 1e-8;

/// Solve the precoder subproblem under the power budget.
///
/// Returns the optimizer and the Lagrange multiplier `lambda`. When the
/// unconstrained solution already fits inside the budget, `lambda` is zero;
/// otherwise `lambda > 0` is located by bisection and the power constraint
/// is tight to `POWER_TOL * power`.
pub fn solve_beamformer(s: &SurrogateMatrices, power: f64) -> Result<(Beamformer, f64)> {
    assert!(power > 0.0, "power budget must be positive");
    let mn = s.c.nrows();
    let k_users = s.d.ncols();
    let d_norm_sqr: f64 = s.d.iter().map(|c| c.norm_sqr()).sum();
    if d_norm_sqr == 0.0 {
        return Ok((Beamformer::zeros(mn, k_users), 0.0));
    }

    let eig = s.c.clone().symmetric_eigen();
    let evals = eig.eigenvalues.map(|v| v.max(0.0));
    let q = eig.eigenvectors;
    let g = q.ad_mul(&s.d); // Q^H D
    let row_weights: Vec<f64> = (0..mn)
        .map(|n| g.row(n).iter().map(|c| c.norm_sqr()).sum())
        .collect();

    // Unconstrained branch: pseudo-solve F0 = C^+ D. Only valid when D has
    // no component in C's (numerical) null space; otherwise the subproblem
    // forces the power constraint active and lambda must be positive.
    let ev_max = evals.max();
    let rank_tol = 1e-12 * ev_max.max(1e-300);
    let null_component = evals
        .iter()
        .zip(&row_weights)
        .any(|(&ev, &w)| ev <= rank_tol && w > 1e-14 * d_norm_sqr);
    if !null_component {
        let power0: f64 = evals
            .iter()
            .zip(&row_weights)
            .filter(|(&ev, _)| ev > rank_tol)
            .map(|(&ev, &w)| w / (ev * ev))
            .sum();
        if power0 <= power {
            let scaled = scale_rows(&g, &evals, 0.0, rank_tol);
            return Ok((Beamformer(&q * scaled), 0.0));
        }
    }

    // Bracket [lo, hi] with power(hi) < power, then bisect. Power is the
    // left-hand side of the multiplier equation, strictly decreasing here.
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    let mut expansions = 0;
    while power_at_lambda(&evals, &row_weights, hi) >= power {
        hi *= 2.0;
        expansions += 1;
        if expansions > 2000 {
            return Err(Error::Numerical(
                "power multiplier bracket expansion failed".into(),
            ));
        }
    }
    let mut lambda = hi;
    let mut residual = f64::INFINITY;
    // Both stops are required: the residual alone would leave a power error
    // of up to POWER_TOL * power, whose objective effect (lambda times the
    // power error) breaks the per-round monotonicity budget when lambda is
    // order one.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let p = power_at_lambda(&evals, &row_weights, mid);
        lambda = mid;
        residual = (p - power).abs();
        if residual <= POWER_TOL * power && hi - lo < 1e-12 * (1.0 + mid) {
            break;
        }
        if p > power {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if residual > POWER_TOL * power {
        return Err(Error::Numerical(format!(
            "power bisection stalled: residual {residual:.3e} at lambda {lambda:.6e}"
        )));
    }
    let scaled = scale_rows(&g, &evals, lambda, -1.0);
    Ok((Beamformer(&q * scaled), lambda))
}

/// Rows of `G` scaled by `1/(eval_n + lambda)`; rows with
/// `eval_n + lambda <= floor` are zeroed (pseudo-inverse behaviour).
fn scale_rows(
    g: &DMatrix<Complex64>,
    evals: &DVector<f64>,
    lambda: f64,
    floor: f64,
) -> DMatrix<Complex64> {
    let mut out = g.clone();
    for n in 0..g.nrows() {
        let denom = evals[n] + lambda;
        let scale = if denom > floor { 1.0 / denom } else { 0.0 };
        out.row_mut(n).scale_mut(scale);
    }
    out
}
