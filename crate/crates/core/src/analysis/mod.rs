//! Collusion-resistance analysis: restricted-isometry constants, guilty /
//! not-guilty set distances, correlation-detector error bounds, the minmax
//! threshold, and related closed forms.
//!
//! Brute-force routines here are oracles for small instances; they enumerate
//! subsets under an explicit capacity guard and cross-check the closed-form
//! bounds.

mod jacobi;
mod qfunc;

pub use jacobi::{spectral_norm_symmetric, symmetric_eigenvalues};
pub use qfunc::q_function;

use itertools::Itertools;
use ndarray::{Array1, Array2};
use rayon::prelude::*;

use crate::designs::DesignMatrix;
use crate::error::{Error, Result};

/// Subset-enumeration guard for the brute-force routines.
pub const ENUMERATION_GUARD: u128 = 1_000_000;

/// Shared inputs of the detection-error bounds.
#[derive(Debug, Clone, Copy)]
pub struct BoundInputs {
    n: usize,
    m: usize,
    k: usize,
    d_f: f64,
    sigma2: f64,
    mu: f64,
}

impl BoundInputs {
    pub fn new(n: usize, m: usize, k: usize, d_f: f64, sigma2: f64, mu: f64) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::domain("N and M must be positive"));
        }
        if k < 1 {
            return Err(Error::domain("coalition bound K must be at least 1"));
        }
        if !(d_f > 0.0) || !(sigma2 > 0.0) {
            return Err(Error::domain(format!(
                "energies must be positive, got D_f={d_f} sigma2={sigma2}"
            )));
        }
        if !(0.0..=1.0).contains(&mu) {
            return Err(Error::domain(format!("coherence must lie in [0, 1], got {mu}")));
        }
        Ok(BoundInputs { n, m, k, d_f, sigma2, mu })
    }

    /// Inputs taken from a design's dimensions and cached coherence.
    pub fn for_design(design: &DesignMatrix, k: usize, d_f: f64, sigma2: f64) -> Result<Self> {
        BoundInputs::new(design.n(), design.m(), k, d_f, sigma2, design.mu())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d_f(&self) -> f64 {
        self.d_f
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Fingerprint amplitude gamma = sqrt(N * D_f).
    pub fn gamma(&self) -> f64 {
        (self.n as f64 * self.d_f).sqrt()
    }

    /// The deflection coefficient gamma / sigma that scales every bound.
    pub fn gamma_over_sigma(&self) -> f64 {
        self.gamma() / self.sigma2.sqrt()
    }
}

/// C(n, k), capped so guard comparisons cannot overflow.
fn binomial_capped(n: usize, k: usize, cap: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut value: u128 = 1;
    for i in 0..k {
        value = value * (n - i) as u128 / (i + 1) as u128;
        if value > cap {
            return cap + 1;
        }
    }
    value
}

/// Smallest delta for which the design is (K, delta)-RIP, by enumerating all
/// size-K column subsets and taking the largest spectral norm of
/// F_S^T F_S - I. Guarded at [`ENUMERATION_GUARD`] subsets.
pub fn rip_delta_bruteforce(design: &DesignMatrix, k: usize) -> Result<f64> {
    let m = design.m();
    if k < 1 || k > m {
        return Err(Error::domain(format!("subset size K={k} out of range 1..={m}")));
    }
    let subsets = binomial_capped(m, k, ENUMERATION_GUARD);
    if subsets > ENUMERATION_GUARD {
        return Err(Error::capacity(format!(
            "C({m},{k}) exceeds {ENUMERATION_GUARD} subsets; use gershgorin_delta_bound instead"
        )));
    }
    if k == 1 {
        let worst = (0..m)
            .map(|j| {
                let c = design.column(j);
                (c.dot(&c) - 1.0).abs()
            })
            .fold(0.0, f64::max);
        return Ok(worst);
    }
    let gram = design.matrix().t().dot(design.matrix());
    let delta = (0..m)
        .combinations(k)
        .par_bridge()
        .map(|subset| {
            let mut b = Array2::zeros((k, k));
            for (a, &i) in subset.iter().enumerate() {
                for (c, &j) in subset.iter().enumerate() {
                    b[[a, c]] = gram[[i, j] ] - if a == c { 1.0 } else { 0.0 };
                }
            }
            spectral_norm_symmetric(b)
        })
        .reduce(|| 0.0, f64::max);
    Ok(delta)
}

/// Gershgorin bound on the 2K-column isometry constant: delta_2K <= (2K-1) mu.
pub fn gershgorin_delta_bound(mu: f64, k: usize) -> f64 {
    assert!(k >= 1, "gershgorin_delta_bound requires K >= 1");
    assert!(mu >= 0.0, "coherence must be nonnegative");
    (2 * k - 1) as f64 * mu
}

/// A distance lower bound; `vacuous` marks the clamped case where the bound
/// argument went nonpositive and the bound carries no information.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceBound {
    pub value: f64,
    pub vacuous: bool,
}

/// Guilty/not-guilty set distance bound from an isometry constant:
/// dist >= sqrt((1 - delta_2K) / (K(K-1))), clamped at zero.
pub fn distance_lower_bound_rip(delta_2k: f64, k: usize) -> Result<DistanceBound> {
    if k < 2 {
        return Err(Error::domain("distance bounds require K >= 2"));
    }
    let numerator = 1.0 - delta_2k;
    if numerator <= 0.0 {
        return Ok(DistanceBound { value: 0.0, vacuous: true });
    }
    let value = (numerator / (k * (k - 1)) as f64).sqrt();
    Ok(DistanceBound { value, vacuous: false })
}

/// Coherence form of the distance bound:
/// dist >= sqrt((1 - (2K-1) mu) / (K(K-1))).
pub fn distance_lower_bound_coherence(mu: f64, k: usize) -> Result<DistanceBound> {
    if k < 2 {
        return Err(Error::domain("distance bounds require K >= 2"));
    }
    distance_lower_bound_rip(gershgorin_delta_bound(mu, k), k)
}

/// Exact guilty/not-guilty distance for the regular simplex with M vertices:
/// sqrt((1 / (K(K-1))) * M / (M-1)).
pub fn simplex_distance_exact(m: usize, k: usize) -> Result<f64> {
    if m < 3 {
        return Err(Error::domain("simplex distance requires M >= 3"));
    }
    if k < 2 || k > m - 1 {
        return Err(Error::domain(format!("coalition size K={k} out of range 2..={}", m - 1)));
    }
    let (m, k) = (m as f64, k as f64);
    Ok((1.0 / (k * (k - 1.0)) * m / (m - 1.0)).sqrt())
}

/// The guilty/not-guilty enumeration problem for one user: uniform-weight
/// combinations of up to `max_size` fingerprints that include `user` versus
/// those that exclude it.
#[derive(Debug, Clone, Copy)]
pub struct GuiltySetSpec<'a> {
    design: &'a DesignMatrix,
    user: usize,
    max_size: usize,
}

impl<'a> GuiltySetSpec<'a> {
    /// `user` is 1-based; `max_size` is the coalition bound K with
    /// 2 <= K <= M.
    pub fn new(design: &'a DesignMatrix, user: usize, max_size: usize) -> Result<Self> {
        if user == 0 || user > design.m() {
            return Err(Error::domain(format!(
                "user index {user} out of range 1..={}",
                design.m()
            )));
        }
        if max_size < 2 || max_size > design.m() {
            return Err(Error::domain(format!(
                "coalition bound {max_size} out of range 2..={}",
                design.m()
            )));
        }
        Ok(GuiltySetSpec { design, user, max_size })
    }
}

/// Exact distance between the guilty and not-guilty sets of uniform-weight
/// fingerprint combinations, by full enumeration. Guarded at
/// [`ENUMERATION_GUARD`] mean pairs.
pub fn distance_exact_bruteforce(spec: &GuiltySetSpec<'_>) -> Result<f64> {
    let design = spec.design;
    let m = design.m();
    let k = spec.max_size;
    let others: Vec<usize> = (0..m).filter(|&j| j != spec.user - 1).collect();

    let mut guilty_count: u128 = 0;
    for a in 0..k {
        guilty_count += binomial_capped(m - 1, a, ENUMERATION_GUARD);
    }
    let mut not_guilty_count: u128 = 0;
    for b in 1..=k {
        not_guilty_count += binomial_capped(m - 1, b, ENUMERATION_GUARD);
    }
    if guilty_count.saturating_mul(not_guilty_count) > ENUMERATION_GUARD {
        return Err(Error::capacity(format!(
            "{guilty_count} x {not_guilty_count} coalition pairs exceed {ENUMERATION_GUARD}"
        )));
    }

    let mean_of = |members: &[usize]| -> Array1<f64> {
        let mut sum = Array1::zeros(design.n());
        for &j in members {
            sum += &design.column(j);
        }
        sum / members.len() as f64
    };

    // All guilty means are kept in memory; not-guilty means are streamed.
    let mut guilty_means = Vec::new();
    for a in 0..k {
        for subset in others.iter().copied().combinations(a) {
            let mut members = subset;
            members.push(spec.user - 1);
            guilty_means.push(mean_of(&members));
        }
    }

    let mut min_dist2 = f64::INFINITY;
    for b in 1..=k {
        for subset in others.iter().copied().combinations(b) {
            let candidate = mean_of(&subset);
            for g in &guilty_means {
                let diff = g - &candidate;
                min_dist2 = min_dist2.min(diff.dot(&diff));
            }
        }
    }
    Ok(min_dist2.sqrt())
}

/// Worst-case probability of accusing a fixed innocent user at threshold
/// tau: Q((gamma/sigma) (tau - mu)).
pub fn type1_bound(inputs: &BoundInputs, tau: f64) -> f64 {
    clamp_probability(q_function(inputs.gamma_over_sigma() * (tau - inputs.mu())))
}

/// Worst-case probability of missing the most vulnerable colluder:
/// Q((gamma/sigma) ((1 + mu) max_k alpha_k - mu - tau)). With uniform
/// weights, alpha_max = 1/K maximizes this bound.
pub fn type2_bound(inputs: &BoundInputs, tau: f64, alpha_max: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha_max) {
        return Err(Error::domain(format!("alpha_max must lie in [0, 1], got {alpha_max}")));
    }
    let arg = inputs.gamma_over_sigma() * ((1.0 + inputs.mu()) * alpha_max - inputs.mu() - tau);
    Ok(clamp_probability(q_function(arg)))
}

/// The threshold that equalizes the two error bounds under uniform weights:
/// tau* = (1 + mu) / (2K).
pub fn optimal_threshold(mu: f64, k: usize) -> f64 {
    assert!(k >= 1, "optimal_threshold requires K >= 1");
    (1.0 + mu) / (2 * k) as f64
}

/// Bounds on the minmax error probability, with the separation statistics
/// they derive from and the orthogonal/simplex comparison values.
#[derive(Debug, Clone, Copy)]
pub struct MinmaxBounds {
    /// Sphere-packing lower bound Q(d_low / 2); undefined for K < 2.
    pub lower: Option<f64>,
    /// Upper bound Q(d_up / 2) at the minmax threshold tau*.
    pub upper: f64,
    /// d_low = sqrt(M/(M-1)) * sqrt(N D_f) / (sigma sqrt(K(K-1))).
    pub d_low: Option<f64>,
    /// d_up = (sqrt(N D_f) / (sigma K)) (1 - (2K-1) mu).
    pub d_up: f64,
    /// Orthogonal-design separation sqrt(N D_f) / (sigma K).
    pub d_star_orthogonal: f64,
    /// Simplex-design separation (sqrt(N D_f) / (sigma K)) * M/(M-1).
    pub d_star_simplex: f64,
}

/// Evaluates the minmax error-probability bounds for the given inputs.
pub fn minmax_bounds(inputs: &BoundInputs) -> MinmaxBounds {
    let k = inputs.k();
    let base = inputs.gamma_over_sigma() / k as f64;
    let ratio = inputs.m() as f64 / (inputs.m() as f64 - 1.0);
    let d_up = base * (1.0 - gershgorin_delta_bound(inputs.mu(), k));
    let (d_low, lower) = if k >= 2 {
        let d = ratio.sqrt() * inputs.gamma_over_sigma() / ((k * (k - 1)) as f64).sqrt();
        (Some(d), Some(clamp_probability(q_function(d / 2.0))))
    } else {
        (None, None)
    };
    MinmaxBounds {
        lower,
        upper: clamp_probability(q_function(d_up / 2.0)),
        d_low,
        d_up,
        d_star_orthogonal: base,
        d_star_simplex: base * ratio,
    }
}

/// Asymptotic error exponent of the minmax test: 1 / (8 K^2).
pub fn error_exponent(k: usize) -> f64 {
    assert!(k >= 1, "error_exponent requires K >= 1");
    1.0 / (8 * k * k) as f64
}

/// Order-of-magnitude coalition size sqrt(N / ln N) beyond which any
/// fingerprint design can be defeated (constant factor unspecified).
pub fn ergun_scale(n: usize) -> f64 {
    assert!(n >= 2, "ergun_scale requires N >= 2");
    let n = n as f64;
    (n / n.ln()).sqrt()
}

fn clamp_probability(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}
