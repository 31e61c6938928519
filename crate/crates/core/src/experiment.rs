//! Monte Carlo harness: simulate uniform-average attacks at several coalition
//! sizes, sweep the detection threshold, pick the smallest threshold meeting
//! the false-alarm budget, and tabulate detection probability against
//! coalition size.
//!
//! The host signal is fixed to zero throughout: detection subtracts the host
//! exactly, so it cancels from every statistic and simulating it would only
//! add arithmetic.
//!
//! Every trial draws from its own generator seeded by
//! `splitmix64(splitmix64(splitmix64(master_seed) ^ K) ^ trial)`, so trials
//! form independent streams and any parallel schedule produces identical
//! counts (all aggregation is commutative integer addition).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::designs::{
    load_steiner_incidence, orthogonal_design, simplex_design, steiner_etf, sylvester_hadamard,
    steiner_pairs_incidence, DesignMatrix,
};
use crate::error::{Error, Result};
use crate::io;

/// splitmix64 avalanche step.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trial seed: a splitmix64 chain over (master seed, coalition size K,
/// trial index).
pub fn trial_seed(master_seed: u64, k: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master_seed) ^ k) ^ trial)
}

/// Where a design comes from: constructed by kind and parameters, or read
/// from a design file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DesignSource {
    /// Pair-system ETF: (2,2,v) blocks with a Sylvester Hadamard of order v.
    PairsEtf { v: usize },
    /// ETF from an incidence file; the Hadamard order r+1 must be a power of
    /// two.
    IncidenceEtf { path: PathBuf },
    Orthogonal { n: usize },
    Simplex { n: usize },
    Import { path: PathBuf },
}

impl DesignSource {
    /// Parses forms like `etf v=16`, `etf incidence=steiner.txt`,
    /// `orthogonal n=120`, `simplex n=120`, `import path=design.txt`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let kind = tokens
            .next()
            .ok_or_else(|| Error::parse("empty design source"))?;
        let arg = tokens
            .next()
            .ok_or_else(|| Error::parse(format!("design source `{text}` is missing parameters")))?;
        if tokens.next().is_some() {
            return Err(Error::parse(format!("design source `{text}` has trailing tokens")));
        }
        let (key, value) = arg
            .split_once('=')
            .ok_or_else(|| Error::parse(format!("expected key=value parameter in `{text}`")))?;
        let parse_count = |value: &str| -> Result<usize> {
            value
                .parse()
                .map_err(|_| Error::parse(format!("invalid integer `{value}` in `{text}`")))
        };
        match (kind, key) {
            ("etf", "v") => Ok(DesignSource::PairsEtf { v: parse_count(value)? }),
            ("etf", "incidence") => Ok(DesignSource::IncidenceEtf { path: value.into() }),
            ("orthogonal", "n") => Ok(DesignSource::Orthogonal { n: parse_count(value)? }),
            ("simplex", "n") => Ok(DesignSource::Simplex { n: parse_count(value)? }),
            ("import", "path") => Ok(DesignSource::Import { path: value.into() }),
            _ => Err(Error::parse(format!("unknown design source `{text}`"))),
        }
    }

    /// Stable series label used in CSV rows and plot legends.
    pub fn label(&self) -> String {
        fn stem(path: &Path) -> String {
            path.file_stem().map_or_else(|| "file".to_string(), |s| s.to_string_lossy().into_owned())
        }
        match self {
            DesignSource::PairsEtf { v } => format!("etf-v{v}"),
            DesignSource::IncidenceEtf { path } => format!("etf-{}", stem(path)),
            DesignSource::Orthogonal { n } => format!("orthogonal-{n}"),
            DesignSource::Simplex { n } => format!("simplex-{n}"),
            DesignSource::Import { path } => format!("import-{}", stem(path)),
        }
    }

    pub fn build(&self) -> Result<DesignMatrix> {
        match self {
            DesignSource::PairsEtf { v } => {
                let incidence = steiner_pairs_incidence(*v)?;
                let h = sylvester_for_order(incidence.r() + 1)?;
                steiner_etf(&incidence, &h)
            }
            DesignSource::IncidenceEtf { path } => {
                let incidence = load_steiner_incidence(path)?;
                let h = sylvester_for_order(incidence.r() + 1)?;
                steiner_etf(&incidence, &h)
            }
            DesignSource::Orthogonal { n } => orthogonal_design(*n),
            DesignSource::Simplex { n } => simplex_design(*n),
            DesignSource::Import { path } => io::read_design(path),
        }
    }
}

fn sylvester_for_order(order: usize) -> Result<crate::designs::HadamardMatrix> {
    if order == 0 || !order.is_power_of_two() {
        return Err(Error::domain(format!(
            "needs a Hadamard matrix of order {order}, but only Sylvester orders \
             (powers of two) are generated"
        )));
    }
    sylvester_hadamard(order.trailing_zeros())
}

/// Full experiment description. `master_seed` is `None` until a seed is
/// supplied by the config file or the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub designs: Vec<DesignSource>,
    pub k_values: Vec<usize>,
    pub trials: u64,
    pub d_f: f64,
    pub sigma2: f64,
    pub p_fa_max: f64,
    pub tau_points: usize,
    pub tau_min: f64,
    /// Upper end of the threshold grid; `None` selects 1 + mu per design.
    pub tau_max: Option<f64>,
    pub master_seed: Option<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            designs: Vec::new(),
            k_values: Vec::new(),
            trials: 50_000,
            d_f: 1.0,
            sigma2: 1.0,
            p_fa_max: 1e-3,
            tau_points: 512,
            tau_min: 0.0,
            tau_max: None,
            master_seed: None,
        }
    }
}

impl ExperimentConfig {
    /// Parses the flat key-value config format. Keys match the struct fields;
    /// `design` may repeat, `k_values` accepts a list and `a..b` ranges, `#`
    /// starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let bad_num =
                |k: &str, v: &str| Error::parse(format!("invalid value `{v}` for {k}"));
            match key {
                "design" => cfg.designs.push(DesignSource::parse(value)?),
                "k_values" => cfg.k_values = parse_k_values(value)?,
                "trials" => cfg.trials = value.parse().map_err(|_| bad_num(key, value))?,
                "d_f" => cfg.d_f = value.parse().map_err(|_| bad_num(key, value))?,
                "sigma2" => cfg.sigma2 = value.parse().map_err(|_| bad_num(key, value))?,
                "p_fa_max" => cfg.p_fa_max = value.parse().map_err(|_| bad_num(key, value))?,
                "tau_points" => cfg.tau_points = value.parse().map_err(|_| bad_num(key, value))?,
                "tau_min" => cfg.tau_min = value.parse().map_err(|_| bad_num(key, value))?,
                "tau_max" => cfg.tau_max = Some(value.parse().map_err(|_| bad_num(key, value))?),
                "master_seed" => {
                    cfg.master_seed = Some(value.parse().map_err(|_| bad_num(key, value))?)
                }
                other => return Err(Error::parse(format!("unknown config key `{other}`"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.designs.is_empty() {
            return Err(Error::domain("config declares no designs"));
        }
        if self.k_values.is_empty() {
            return Err(Error::domain("config declares no coalition sizes"));
        }
        if self.trials < 1 {
            return Err(Error::domain("trials must be at least 1"));
        }
        if !(self.d_f > 0.0) || !(self.sigma2 >= 0.0) {
            return Err(Error::domain(format!(
                "energies must satisfy D_f > 0 and sigma2 >= 0, got {} and {}",
                self.d_f, self.sigma2
            )));
        }
        if !(self.p_fa_max > 0.0 && self.p_fa_max < 1.0) {
            return Err(Error::domain(format!(
                "p_fa_max must lie in (0, 1), got {}",
                self.p_fa_max
            )));
        }
        if self.tau_points < 1 {
            return Err(Error::domain("tau grid needs at least one point"));
        }
        if let Some(hi) = self.tau_max {
            if self.tau_points > 1 && !(hi > self.tau_min) {
                return Err(Error::domain(format!(
                    "tau grid range [{}, {hi}] is not increasing",
                    self.tau_min
                )));
            }
        }
        Ok(())
    }

    /// The threshold grid for a design with the given coherence: `tau_points`
    /// evenly spaced values from `tau_min` to `tau_max` (default 1 + mu).
    pub fn tau_grid(&self, mu: f64) -> Vec<f64> {
        let hi = self.tau_max.unwrap_or(1.0 + mu);
        if self.tau_points == 1 {
            return vec![self.tau_min];
        }
        let lo = self.tau_min;
        let step = (hi - lo) / (self.tau_points - 1) as f64;
        (0..self.tau_points).map(|i| lo + step * i as f64).collect()
    }
}

fn parse_k_values(value: &str) -> Result<Vec<usize>> {
    let mut ks = Vec::new();
    for tok in value.split_whitespace() {
        if let Some((a, b)) = tok.split_once("..") {
            let a: usize = a
                .parse()
                .map_err(|_| Error::parse(format!("invalid range start `{a}` in k_values")))?;
            let b: usize = b
                .parse()
                .map_err(|_| Error::parse(format!("invalid range end `{b}` in k_values")))?;
            if b < a {
                return Err(Error::parse(format!("empty range `{tok}` in k_values")));
            }
            ks.extend(a..=b);
        } else {
            ks.push(
                tok.parse()
                    .map_err(|_| Error::parse(format!("invalid value `{tok}` in k_values")))?,
            );
        }
    }
    if ks.iter().any(|&k| k == 0) {
        return Err(Error::domain("coalition sizes must be at least 1"));
    }
    ks.sort_unstable();
    ks.dedup();
    Ok(ks)
}

/// Event counts for one coalition size across the threshold grid.
#[derive(Debug, Clone)]
pub struct KAggregate {
    pub k: usize,
    pub trials: u64,
    /// detection_counts[i] trials had at least one colluder at or above
    /// grid point i.
    pub detection_counts: Vec<u64>,
    /// false_alarm_counts[i] trials had at least one innocent at or above
    /// grid point i.
    pub false_alarm_counts: Vec<u64>,
}

/// Sweep output: one count pair per (K, tau) cell.
#[derive(Debug, Clone)]
pub struct SweepAggregate {
    pub tau_grid: Vec<f64>,
    pub per_k: Vec<KAggregate>,
}

/// Column access that skips stored zeros when the design is sparse enough;
/// adding or multiplying by an exact zero never changes an IEEE sum, so both
/// layouts produce bit-identical statistics.
enum ColumnStore {
    Dense { n: usize, data: Vec<f64> },
    Sparse { cols: Vec<(Vec<u32>, Vec<f64>)> },
}

impl ColumnStore {
    fn from_design(design: &DesignMatrix) -> Self {
        let (n, m) = (design.n(), design.m());
        let nnz = design.matrix().iter().filter(|v| **v != 0.0).count();
        if nnz * 4 <= n * m {
            let cols = (0..m)
                .map(|j| {
                    let mut idx = Vec::new();
                    let mut val = Vec::new();
                    for (i, &v) in design.column(j).iter().enumerate() {
                        if v != 0.0 {
                            idx.push(i as u32);
                            val.push(v);
                        }
                    }
                    (idx, val)
                })
                .collect();
            ColumnStore::Sparse { cols }
        } else {
            let mut data = Vec::with_capacity(n * m);
            for j in 0..m {
                data.extend(design.column(j).iter().copied());
            }
            ColumnStore::Dense { n, data }
        }
    }

    fn add_scaled(&self, col: usize, w: f64, z: &mut [f64]) {
        match self {
            ColumnStore::Dense { n, data } => {
                let c = &data[col * n..(col + 1) * n];
                for (zi, ci) in z.iter_mut().zip(c) {
                    *zi += w * ci;
                }
            }
            ColumnStore::Sparse { cols } => {
                let (idx, val) = &cols[col];
                for (&i, &v) in idx.iter().zip(val) {
                    z[i as usize] += w * v;
                }
            }
        }
    }

    fn dot(&self, col: usize, z: &[f64]) -> f64 {
        match self {
            ColumnStore::Dense { n, data } => {
                let c = &data[col * n..(col + 1) * n];
                c.iter().zip(z).map(|(a, b)| a * b).sum()
            }
            ColumnStore::Sparse { cols } => {
                let (idx, val) = &cols[col];
                idx.iter().zip(val).map(|(&i, &v)| v * z[i as usize]).sum()
            }
        }
    }
}

// Per-thread scratch carried through a rayon fold; the permutation is kept
// identity-restored between trials.
struct FoldState {
    hist_det: Vec<u64>,
    hist_fa: Vec<u64>,
    perm: Vec<u32>,
    swaps: Vec<usize>,
    guilty_stamp: Vec<u32>,
    stamp: u32,
    z: Vec<f64>,
    coalition: Vec<u32>,
}

impl FoldState {
    fn new(grid_len: usize, n: usize, m: usize) -> Self {
        FoldState {
            hist_det: vec![0; grid_len + 1],
            hist_fa: vec![0; grid_len + 1],
            perm: (0..m as u32).collect(),
            swaps: Vec::new(),
            guilty_stamp: vec![0; m],
            stamp: 0,
            z: vec![0.0; n],
            coalition: Vec::new(),
        }
    }
}

/// Runs `cfg.trials` attacks for every K in `cfg.k_values` on the given
/// design and counts detection / false-alarm events at every grid threshold.
///
/// Each trial samples a uniform size-K coalition (partial Fisher-Yates),
/// averages its fingerprints with equal weights, adds i.i.d. Gaussian noise
/// of per-dimension variance sigma2, computes all M statistics, and records
/// which grid thresholds the best colluder and best innocent reach.
pub fn run_sweep(cfg: &ExperimentConfig, design: &DesignMatrix) -> Result<SweepAggregate> {
    cfg.validate()?;
    let master_seed = cfg
        .master_seed
        .ok_or_else(|| Error::domain("master seed is not set"))?;
    let (n, m) = (design.n(), design.m());
    for &k in &cfg.k_values {
        if k > m {
            return Err(Error::domain(format!(
                "coalition size {k} exceeds the design's {m} users"
            )));
        }
    }
    let grid = cfg.tau_grid(design.mu());
    let gamma = (n as f64 * cfg.d_f).sqrt();
    let columns = ColumnStore::from_design(design);

    let mut per_k = Vec::with_capacity(cfg.k_values.len());
    for &k in &cfg.k_values {
        let weight = gamma / k as f64;
        let (hist_det, hist_fa) = (0..cfg.trials)
            .into_par_iter()
            .fold(
                || FoldState::new(grid.len(), n, m),
                |mut st, trial| {
                    one_trial(&columns, &grid, k, m, weight, gamma, cfg.sigma2,
                              trial_seed(master_seed, k as u64, trial), &mut st);
                    st
                },
            )
            .map(|st| (st.hist_det, st.hist_fa))
            .reduce(
                || (vec![0u64; grid.len() + 1], vec![0u64; grid.len() + 1]),
                |mut a, b| {
                    for (x, y) in a.0.iter_mut().zip(&b.0) {
                        *x += y;
                    }
                    for (x, y) in a.1.iter_mut().zip(&b.1) {
                        *x += y;
                    }
                    a
                },
            );

        // hist[c] counts trials whose statistic reached exactly c grid
        // points; the per-threshold counts are its suffix sums.
        let suffix = |hist: &[u64]| -> Vec<u64> {
            let mut counts = vec![0u64; grid.len()];
            let mut acc = 0u64;
            for i in (0..grid.len()).rev() {
                acc += hist[i + 1];
                counts[i] = acc;
            }
            counts
        };
        per_k.push(KAggregate {
            k,
            trials: cfg.trials,
            detection_counts: suffix(&hist_det),
            false_alarm_counts: suffix(&hist_fa),
        });
    }
    Ok(SweepAggregate { tau_grid: grid, per_k })
}

#[allow(clippy::too_many_arguments)]
fn one_trial(
    columns: &ColumnStore,
    grid: &[f64],
    k: usize,
    m: usize,
    weight: f64,
    gamma: f64,
    sigma2: f64,
    seed: u64,
    st: &mut FoldState,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Uniform size-k subset; the swaps are undone afterwards so the
    // permutation is identity again for the next trial.
    st.swaps.clear();
    for i in 0..k {
        let j = rng.random_range(i..m);
        st.perm.swap(i, j);
        st.swaps.push(j);
    }
    st.coalition.clear();
    st.coalition.extend_from_slice(&st.perm[..k]);
    for i in (0..k).rev() {
        let j = st.swaps[i];
        st.perm.swap(i, j);
    }
    st.coalition.sort_unstable();

    if sigma2 > 0.0 {
        let sigma = sigma2.sqrt();
        for zi in st.z.iter_mut() {
            *zi = sigma * rng.sample::<f64, _>(StandardNormal);
        }
    } else {
        st.z.fill(0.0);
    }
    for &c in &st.coalition {
        columns.add_scaled(c as usize, weight, &mut st.z);
    }

    st.stamp = st.stamp.wrapping_add(1);
    if st.stamp == 0 {
        st.guilty_stamp.fill(0);
        st.stamp = 1;
    }
    for &c in &st.coalition {
        st.guilty_stamp[c as usize] = st.stamp;
    }

    let mut max_guilty = f64::NEG_INFINITY;
    let mut max_innocent = f64::NEG_INFINITY;
    for col in 0..m {
        let t = columns.dot(col, &st.z) / gamma;
        if st.guilty_stamp[col] == st.stamp {
            max_guilty = max_guilty.max(t);
        } else {
            max_innocent = max_innocent.max(t);
        }
    }

    // Number of grid thresholds at or below the statistic = number of
    // thresholds where the event fires (accusation uses >=).
    let det_reach = grid.partition_point(|&tau| tau <= max_guilty);
    let fa_reach = grid.partition_point(|&tau| tau <= max_innocent);
    st.hist_det[det_reach] += 1;
    st.hist_fa[fa_reach] += 1;
}

/// Threshold choice for one K: the empirical operating point at the smallest
/// grid threshold whose false-alarm rate is within budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSample {
    pub tau: f64,
    pub p_fa: f64,
    pub p_d: f64,
}

/// Selects the smallest grid tau with false_alarm_count / trials <= p_fa_max.
/// Returns `None` (infeasible) when no grid point qualifies.
pub fn select_threshold(
    agg: &SweepAggregate,
    k: usize,
    p_fa_max: f64,
) -> Result<Option<CurveSample>> {
    let entry = agg
        .per_k
        .iter()
        .find(|e| e.k == k)
        .ok_or_else(|| Error::domain(format!("aggregate has no entry for K={k}")))?;
    let trials = entry.trials as f64;
    for (i, &tau) in agg.tau_grid.iter().enumerate() {
        let p_fa = entry.false_alarm_counts[i] as f64 / trials;
        if p_fa <= p_fa_max {
            let p_d = entry.detection_counts[i] as f64 / trials;
            return Ok(Some(CurveSample { tau, p_fa, p_d }));
        }
    }
    Ok(None)
}

/// One row of the results table. `sample` is `None` when no threshold met
/// the false-alarm budget.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub design: String,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub trials: u64,
    pub sample: Option<CurveSample>,
    pub seed: u64,
}

/// The detection-probability-versus-coalition-size table, one row per
/// (design, K), K ascending within each design.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentCurve {
    pub points: Vec<CurvePoint>,
}

/// CSV header of the results table.
pub const CSV_HEADER: &str = "design,N,M,K,trials,tau,p_fa,p_d,seed";

/// Formats with six significant digits in plain decimal notation.
pub fn fmt_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (5 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

impl ExperimentCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for p in &self.points {
            let (tau, p_fa, p_d) = match &p.sample {
                Some(s) => (fmt_sig6(s.tau), fmt_sig6(s.p_fa), fmt_sig6(s.p_d)),
                None => (String::new(), String::new(), String::new()),
            };
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                p.design, p.n, p.m, p.k, p.trials, tau, p_fa, p_d, p.seed
            )
            .expect("string write cannot fail");
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse("empty results file"))?;
        if header.trim() != CSV_HEADER {
            return Err(Error::parse(format!("unexpected CSV header `{header}`")));
        }
        let mut points = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 9 {
                return Err(Error::parse(format!(
                    "row {}: expected 9 fields, found {}",
                    i + 2,
                    fields.len()
                )));
            }
            let num = |s: &str, what: &str| -> Result<f64> {
                s.parse()
                    .map_err(|_| Error::parse(format!("row {}: bad {what} `{s}`", i + 2)))
            };
            let int = |s: &str, what: &str| -> Result<u64> {
                s.parse()
                    .map_err(|_| Error::parse(format!("row {}: bad {what} `{s}`", i + 2)))
            };
            let sample = if fields[5].is_empty() && fields[6].is_empty() && fields[7].is_empty() {
                None
            } else {
                Some(CurveSample {
                    tau: num(fields[5], "tau")?,
                    p_fa: num(fields[6], "p_fa")?,
                    p_d: num(fields[7], "p_d")?,
                })
            };
            points.push(CurvePoint {
                design: fields[0].to_string(),
                n: int(fields[1], "N")? as usize,
                m: int(fields[2], "M")? as usize,
                k: int(fields[3], "K")? as usize,
                trials: int(fields[4], "trials")?,
                sample,
                seed: int(fields[8], "seed")?,
            });
        }
        Ok(ExperimentCurve { points })
    }
}

/// Builds every design in the config, runs the sweep, and selects thresholds:
/// the complete reproduction pipeline. Deterministic given the master seed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentCurve> {
    cfg.validate()?;
    let seed = cfg
        .master_seed
        .ok_or_else(|| Error::domain("master seed is not set"))?;
    let mut curve = ExperimentCurve::default();
    for source in &cfg.designs {
        let design = source.build()?;
        let agg = run_sweep(cfg, &design)?;
        for &k in &cfg.k_values {
            let sample = select_threshold(&agg, k, cfg.p_fa_max)?;
            curve.points.push(CurvePoint {
                design: source.label(),
                n: design.n(),
                m: design.m(),
                k,
                trials: cfg.trials,
                sample,
                seed,
            });
        }
    }
    Ok(curve)
}
