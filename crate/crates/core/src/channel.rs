//! Fingerprint embedding, the linear-average-plus-noise collusion attack,
//! forgery extraction, and recovery of the host signal by a large coalition.
//!
//! Fingerprints are stored unit-norm in a [`DesignMatrix`]; the energy scale
//! gamma = sqrt(N * D_f) is applied here at embedding time.

use std::collections::BTreeMap;

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::designs::DesignMatrix;
use crate::error::{Error, Result};

/// The unmarked content vector.
#[derive(Debug, Clone, PartialEq)]
pub struct HostSignal {
    samples: Array1<f64>,
}

impl HostSignal {
    pub fn new(samples: Array1<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::domain("host signal must be non-empty"));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation("host signal has non-finite entries"));
        }
        Ok(HostSignal { samples })
    }

    pub fn zeros(n: usize) -> Self {
        HostSignal { samples: Array1::zeros(n) }
    }

    pub fn samples(&self) -> &Array1<f64> {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Embedding energy: D_f per dimension, so each scaled fingerprint has total
/// energy gamma^2 = N * D_f.
#[derive(Debug, Clone, Copy)]
pub struct EmbeddingParams {
    per_dim_energy: f64,
    gamma2: f64,
}

impl EmbeddingParams {
    pub fn new(n: usize, per_dim_energy: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("dimension must be positive"));
        }
        if !(per_dim_energy > 0.0) || !per_dim_energy.is_finite() {
            return Err(Error::domain(format!(
                "per-dimension energy must be positive, got {per_dim_energy}"
            )));
        }
        Ok(EmbeddingParams { per_dim_energy, gamma2: n as f64 * per_dim_energy })
    }

    /// Energy per dimension D_f.
    pub fn per_dim_energy(&self) -> f64 {
        self.per_dim_energy
    }

    /// Fingerprint amplitude gamma = sqrt(N * D_f).
    pub fn gamma(&self) -> f64 {
        self.gamma2.sqrt()
    }

    /// Fingerprint energy gamma^2 = N * D_f.
    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }
}

/// A coalition, its averaging weights, the per-dimension noise power, and the
/// noise seed. Weight keys are the coalition (1-based user indices); weights
/// are nonnegative, at most one, and sum to one within 1e-9.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackSpec {
    weights: BTreeMap<usize, f64>,
    noise_sigma2: f64,
    seed: u64,
}

/// Tolerance on the weight sum; absorbs decimal rounding in input files.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

impl AttackSpec {
    pub fn new(weights: BTreeMap<usize, f64>, noise_sigma2: f64, seed: u64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::domain("coalition must be non-empty"));
        }
        if let Some((&user, _)) = weights.iter().next() {
            if user == 0 {
                return Err(Error::domain("user indices are 1-based"));
            }
        }
        for (&user, &w) in &weights {
            if !w.is_finite() || !(0.0..=1.0).contains(&w) {
                return Err(Error::domain(format!("weight {w} for user {user} is outside [0, 1]")));
            }
        }
        let sum: f64 = weights.values().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::domain(format!(
                "weights sum to {sum}, expected 1 within {WEIGHT_SUM_TOLERANCE:e}"
            )));
        }
        if !(noise_sigma2 >= 0.0) || !noise_sigma2.is_finite() {
            return Err(Error::domain(format!("noise power must be >= 0, got {noise_sigma2}")));
        }
        Ok(AttackSpec { weights, noise_sigma2, seed })
    }

    /// Equal weights 1/K over the given coalition.
    pub fn uniform(
        coalition: impl IntoIterator<Item = usize>,
        noise_sigma2: f64,
        seed: u64,
    ) -> Result<Self> {
        let users: Vec<usize> = coalition.into_iter().collect();
        if users.is_empty() {
            return Err(Error::domain("coalition must be non-empty"));
        }
        let w = 1.0 / users.len() as f64;
        let weights: BTreeMap<usize, f64> = users.into_iter().map(|u| (u, w)).collect();
        AttackSpec::new(weights, noise_sigma2, seed)
    }

    /// Coalition members (1-based), ascending.
    pub fn coalition(&self) -> impl Iterator<Item = usize> + '_ {
        self.weights.keys().copied()
    }

    /// (user, weight) pairs, ascending by user.
    pub fn weights(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights.iter().map(|(&u, &w)| (u, w))
    }

    pub fn coalition_size(&self) -> usize {
        self.weights.len()
    }

    pub fn noise_sigma2(&self) -> f64 {
        self.noise_sigma2
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.values().copied().fold(0.0, f64::max)
    }
}

/// A forged copy together with the spec that generated it (ground truth for
/// experiments).
#[derive(Debug, Clone)]
pub struct Forgery {
    y: Array1<f64>,
    spec: AttackSpec,
}

impl Forgery {
    pub fn y(&self) -> &Array1<f64> {
        &self.y
    }

    pub fn spec(&self) -> &AttackSpec {
        &self.spec
    }
}

/// Marked copy for user `m` (1-based): x_m = s + gamma * f_m.
pub fn embed(
    host: &HostSignal,
    design: &DesignMatrix,
    params: &EmbeddingParams,
    user: usize,
) -> Result<Array1<f64>> {
    if user == 0 || user > design.m() {
        return Err(Error::domain(format!(
            "user index {user} out of range 1..={}",
            design.m()
        )));
    }
    if host.len() != design.n() {
        return Err(Error::dimension(format!(
            "host has {} samples, design dimension is {}",
            host.len(),
            design.n()
        )));
    }
    Ok(host.samples() + &(&design.column(user - 1) * params.gamma()))
}

/// Draws an i.i.d. zero-mean Gaussian vector with the given per-dimension
/// variance from a seeded generator.
pub fn gaussian_noise(rng: &mut impl Rng, n: usize, sigma2: f64) -> Array1<f64> {
    let sigma = sigma2.sqrt();
    Array1::from_shape_fn(n, |_| sigma * rng.sample::<f64, _>(StandardNormal))
}

/// The coalition's forgery: y = sum_k alpha_k (s + gamma f_k) + eps, with eps
/// i.i.d. Gaussian of per-dimension variance sigma^2 drawn from the spec's
/// seed.
pub fn forge(
    host: &HostSignal,
    design: &DesignMatrix,
    params: &EmbeddingParams,
    spec: &AttackSpec,
) -> Result<Forgery> {
    if host.len() != design.n() {
        return Err(Error::dimension(format!(
            "host has {} samples, design dimension is {}",
            host.len(),
            design.n()
        )));
    }
    let gamma = params.gamma();
    let mut y = Array1::zeros(design.n());
    for (user, weight) in spec.weights() {
        if user == 0 || user > design.m() {
            return Err(Error::domain(format!(
                "coalition member {user} out of range 1..={}",
                design.m()
            )));
        }
        let copy = host.samples() + &(&design.column(user - 1) * gamma);
        y += &(&copy * weight);
    }
    if spec.noise_sigma2() > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed());
        y += &gaussian_noise(&mut rng, design.n(), spec.noise_sigma2());
    }
    Ok(Forgery { y, spec: spec.clone() })
}

/// Isolates the fingerprint combination: z = y - s.
pub fn extract(forgery: &Forgery, host: &HostSignal) -> Result<Array1<f64>> {
    if forgery.y().len() != host.len() {
        return Err(Error::dimension(format!(
            "forgery has {} samples, host has {}",
            forgery.y().len(),
            host.len()
        )));
    }
    Ok(forgery.y() - host.samples())
}

/// Watermark-to-noise ratio in decibels: 10 log10(D_f / sigma^2).
pub fn wnr(per_dim_energy: f64, sigma2: f64) -> Result<f64> {
    if !(per_dim_energy > 0.0) || !(sigma2 > 0.0) {
        return Err(Error::domain(format!(
            "WNR requires positive energies, got D_f={per_dim_energy} sigma2={sigma2}"
        )));
    }
    Ok(10.0 * (per_dim_energy / sigma2).log10())
}

/// The coalition's host-recovery objective
/// g(x) = sum_k (||x - c_k||^2 - mean_k' ||x - c_k'||^2)^2,
/// which vanishes at x = s when the copies carry equal-energy fingerprints.
pub fn host_recovery_objective(x: &Array1<f64>, copies: &[Array1<f64>]) -> Result<f64> {
    let deviations = distance_deviations(x, copies)?;
    Ok(deviations.iter().map(|e| e * e).sum())
}

/// Analytic gradient of [`host_recovery_objective`]:
/// grad g(x) = 4 sum_k e_k (c_bar - c_k) where e_k is the centered squared
/// distance and c_bar the mean copy.
pub fn host_recovery_gradient(x: &Array1<f64>, copies: &[Array1<f64>]) -> Result<Array1<f64>> {
    let deviations = distance_deviations(x, copies)?;
    let count = copies.len() as f64;
    let mut mean_copy = Array1::zeros(x.len());
    for c in copies {
        mean_copy += c;
    }
    mean_copy /= count;
    let mut grad = Array1::zeros(x.len());
    for (c, e) in copies.iter().zip(&deviations) {
        grad += &((&mean_copy - c) * (4.0 * *e));
    }
    Ok(grad)
}

fn distance_deviations(x: &Array1<f64>, copies: &[Array1<f64>]) -> Result<Vec<f64>> {
    if copies.len() < 2 {
        return Err(Error::domain("host recovery needs at least two marked copies"));
    }
    for c in copies {
        if c.len() != x.len() {
            return Err(Error::dimension(format!(
                "copy has {} samples, point has {}",
                c.len(),
                x.len()
            )));
        }
    }
    let sq_dists: Vec<f64> = copies
        .iter()
        .map(|c| {
            let d = x - c;
            d.dot(&d)
        })
        .collect();
    let mean = sq_dists.iter().sum::<f64>() / sq_dists.len() as f64;
    Ok(sq_dists.into_iter().map(|d| d - mean).collect())
}

/// Step controls for [`recover_host`]: Armijo backtracking line search with
/// shrink 0.5 and slope factor 1e-4, capped at 100,000 iterations.
#[derive(Debug, Clone, Copy)]
pub struct DescentControls {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub armijo_shrink: f64,
    pub armijo_slope: f64,
}

impl Default for DescentControls {
    fn default() -> Self {
        DescentControls {
            max_iterations: 100_000,
            tolerance: 1e-12,
            armijo_shrink: 0.5,
            armijo_slope: 1e-4,
        }
    }
}

/// Result of a host-recovery run; `converged` is false when the iteration cap
/// was reached before the objective dropped to the tolerance.
#[derive(Debug, Clone)]
pub struct RecoveryOutcome {
    pub x: Array1<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes the host-recovery objective by gradient descent with Armijo
/// backtracking. When the copies' fingerprints do not lie in a common affine
/// hyperplane (which requires a coalition of at least N+1), the minimizer is
/// the host signal itself. With fewer copies the minimizer is not unique and
/// the returned point is one of many that zero the objective.
pub fn recover_host(
    copies: &[Array1<f64>],
    init: &Array1<f64>,
    controls: &DescentControls,
) -> Result<RecoveryOutcome> {
    let mut x = init.clone();
    let mut objective = host_recovery_objective(&x, copies)?;
    if objective <= controls.tolerance {
        return Ok(RecoveryOutcome { x, objective, iterations: 0, converged: true });
    }
    // Warm-start each line search from twice the previously accepted step.
    let mut step = 1.0f64;
    for iteration in 1..=controls.max_iterations {
        let grad = host_recovery_gradient(&x, copies)?;
        let grad_norm2 = grad.dot(&grad);
        if grad_norm2 == 0.0 {
            return Ok(RecoveryOutcome { x, objective, iterations: iteration, converged: false });
        }
        let mut t = step * 2.0;
        loop {
            let candidate = &x - &(&grad * t);
            let value = host_recovery_objective(&candidate, copies)?;
            if value <= objective - controls.armijo_slope * t * grad_norm2 {
                x = candidate;
                objective = value;
                step = t;
                break;
            }
            t *= controls.armijo_shrink;
            if t < 1e-300 {
                return Ok(RecoveryOutcome {
                    x,
                    objective,
                    iterations: iteration,
                    converged: false,
                });
            }
        }
        if objective <= controls.tolerance {
            return Ok(RecoveryOutcome { x, objective, iterations: iteration, converged: true });
        }
    }
    Ok(RecoveryOutcome {
        x,
        objective,
        iterations: controls.max_iterations,
        converged: false,
    })
}
