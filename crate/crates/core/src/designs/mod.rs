//! Fingerprint design matrices: Steiner/Hadamard equiangular tight frames,
//! regular simplexes, orthogonal bases, and imported ensembles.
//!
//! A design is an N x M real matrix whose M unit-norm columns are the
//! fingerprints handed to users. The figure of merit throughout is the
//! worst-case coherence mu, the largest |<f_i, f_j>| over distinct columns.

mod hadamard;
mod steiner;

pub use hadamard::{sylvester_hadamard, HadamardMatrix, MAX_SYLVESTER_EXPONENT};
pub use steiner::{
    load_steiner_incidence, parse_steiner_incidence, steiner_pairs_incidence, SteinerIncidence,
};

use ndarray::{s, Array2, ArrayView1};

use crate::error::{Error, Result};

/// How a design matrix was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignKind {
    Etf,
    Simplex,
    Orthogonal,
    Imported,
}

impl DesignKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DesignKind::Etf => "etf",
            DesignKind::Simplex => "simplex",
            DesignKind::Orthogonal => "orthogonal",
            DesignKind::Imported => "imported",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "etf" => Ok(DesignKind::Etf),
            "simplex" => Ok(DesignKind::Simplex),
            "orthogonal" => Ok(DesignKind::Orthogonal),
            "imported" => Ok(DesignKind::Imported),
            other => Err(Error::parse(format!("unknown design kind `{other}`"))),
        }
    }
}

/// An N x M fingerprint ensemble with unit-norm columns and cached coherence.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    kind: DesignKind,
    columns: Array2<f64>,
    coherence: f64,
}

impl DesignMatrix {
    /// Signal dimension N (rows).
    pub fn n(&self) -> usize {
        self.columns.nrows()
    }

    /// User count M (columns).
    pub fn m(&self) -> usize {
        self.columns.ncols()
    }

    pub fn kind(&self) -> DesignKind {
        self.kind
    }

    /// Cached worst-case coherence mu.
    pub fn mu(&self) -> f64 {
        self.coherence
    }

    /// The full N x M matrix.
    pub fn matrix(&self) -> &Array2<f64> {
        &self.columns
    }

    /// Fingerprint column `j` (0-based; user m holds column m-1).
    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.columns.column(j)
    }

    /// Wraps an arbitrary column ensemble, enforcing the shape rule of `kind`
    /// and unit column norms (within 1e-10), and computing the coherence.
    pub fn from_columns(kind: DesignKind, columns: Array2<f64>) -> Result<Self> {
        let (n, m) = columns.dim();
        if n == 0 || m == 0 {
            return Err(Error::dimension("design must have at least one row and column"));
        }
        match kind {
            DesignKind::Etf if m < n => {
                return Err(Error::dimension(format!("etf design requires M >= N, got N={n} M={m}")))
            }
            DesignKind::Simplex if m != n + 1 => {
                return Err(Error::dimension(format!(
                    "simplex design requires M = N+1, got N={n} M={m}"
                )))
            }
            DesignKind::Orthogonal if m != n => {
                return Err(Error::dimension(format!(
                    "orthogonal design requires M = N, got N={n} M={m}"
                )))
            }
            _ => {}
        }
        for j in 0..m {
            let norm = columns.column(j).dot(&columns.column(j)).sqrt();
            if !norm.is_finite() || (norm - 1.0).abs() > 1e-10 {
                return Err(Error::validation(format!(
                    "column {} has norm {norm:.12}, expected 1 within 1e-10",
                    j + 1
                )));
            }
        }
        let coherence = max_abs_offdiag_gram(&columns);
        Ok(DesignMatrix { kind, columns, coherence })
    }
}

/// Largest |G_ij| over i != j, computed in column blocks so the full M x M
/// Gram matrix is never materialized.
fn max_abs_offdiag_gram(columns: &Array2<f64>) -> f64 {
    let m = columns.ncols();
    let block = 512;
    let mut max = 0.0f64;
    let mut j0 = 0;
    while j0 < m {
        let j1 = (j0 + block).min(m);
        let gram = columns.t().dot(&columns.slice(s![.., j0..j1]));
        for (c, col) in gram.columns().into_iter().enumerate() {
            let j = j0 + c;
            for (i, &g) in col.iter().enumerate() {
                if i != j {
                    max = max.max(g.abs());
                }
            }
        }
        j0 = j1;
    }
    max
}

/// Tensor-style ETF construction from a Steiner incidence and a Hadamard
/// matrix of order r+1.
///
/// Point column j of the incidence contributes r+1 fingerprint columns. Its
/// i-th one (top to bottom) is replaced by Hadamard row i+2 (1-based; the
/// all-ones first row is skipped), spread across those r+1 columns, and every
/// column is scaled by 1/sqrt(r). The result is an N x M ETF with N = b,
/// M = v(r+1), and coherence exactly 1/r.
pub fn steiner_etf(incidence: &SteinerIncidence, hadamard: &HadamardMatrix) -> Result<DesignMatrix> {
    let r = incidence.r();
    if hadamard.order() != r + 1 {
        return Err(Error::dimension(format!(
            "Hadamard order {} does not match replication r+1 = {}",
            hadamard.order(),
            r + 1
        )));
    }
    let n = incidence.b();
    let m = incidence.v() * (r + 1);
    let scale = 1.0 / (r as f64).sqrt();
    let mut columns = Array2::zeros((n, m));
    for point in 0..incidence.v() {
        let rows = incidence.blocks_of_point(point);
        debug_assert_eq!(rows.len(), r);
        let base = point * (r + 1);
        for (i, &block_row) in rows.iter().enumerate() {
            let h_row = hadamard.row(i + 1);
            for c in 0..(r + 1) {
                columns[[block_row, base + c]] = f64::from(h_row[c]) * scale;
            }
        }
    }
    Ok(DesignMatrix { kind: DesignKind::Etf, columns, coherence: 1.0 / r as f64 })
}

/// Regular simplex of N+1 unit vectors in N dimensions, built by fixing one
/// dimension at a time: the first column is e_1, and each later dimension's
/// values are forced by the unit-norm and -1/N inner-product constraints.
pub fn simplex_design(n: usize) -> Result<DesignMatrix> {
    if n < 1 {
        return Err(Error::domain("simplex requires N >= 1"));
    }
    let m = n + 1;
    let target = -1.0 / n as f64;
    let mut columns = Array2::zeros((n, m));
    let mut shared_sq = 0.0f64; // sum of d_i^2 over dimensions fixed so far
    for t in 0..n {
        let pivot = (1.0 - shared_sq).sqrt();
        columns[[t, t]] = pivot;
        let d = (target - shared_sq) / pivot;
        for col in (t + 1)..m {
            columns[[t, col]] = d;
        }
        shared_sq += d * d;
    }
    Ok(DesignMatrix { kind: DesignKind::Simplex, columns, coherence: 1.0 / n as f64 })
}

/// The N x N identity: one standard basis fingerprint per user.
pub fn orthogonal_design(n: usize) -> Result<DesignMatrix> {
    if n < 1 {
        return Err(Error::domain("orthogonal design requires N >= 1"));
    }
    Ok(DesignMatrix { kind: DesignKind::Orthogonal, columns: Array2::eye(n), coherence: 0.0 })
}

/// Worst-case coherence recomputed from the columns: max |<f_i, f_j>|, i != j.
pub fn coherence(design: &DesignMatrix) -> Result<f64> {
    if design.m() < 2 {
        return Err(Error::domain("coherence requires at least two fingerprints"));
    }
    Ok(max_abs_offdiag_gram(design.matrix()))
}

/// Lower bound sqrt((M-N)/(N(M-1))) on the coherence of M unit vectors in
/// N dimensions; attained exactly by equiangular tight frames.
pub fn welch_bound(n: usize, m: usize) -> Result<f64> {
    if n < 1 || m <= n {
        return Err(Error::domain(format!(
            "Welch bound requires M > N >= 1, got N={n} M={m}"
        )));
    }
    let (n, m) = (n as f64, m as f64);
    Ok(((m - n) / (n * (m - 1.0))).sqrt())
}

/// Outcome of the three structural ETF checks at a given tolerance.
#[derive(Debug, Clone)]
pub struct EtfReport {
    /// All column norms within tol of 1.
    pub unit_norm: bool,
    /// All |off-diagonal Gram entries| within tol of a common value.
    pub equiangular: bool,
    /// F F^T within tol of (M/N) I entrywise.
    pub tight: bool,
    /// Worst |column norm - 1|.
    pub worst_norm_dev: f64,
    /// Worst ||G_ij| - common| over off-diagonal entries.
    pub worst_equiangle_dev: f64,
    /// Worst |(F F^T)_ij - (M/N) delta_ij|.
    pub worst_tight_dev: f64,
    /// The common off-diagonal magnitude (mean of |G_ij| over i != j).
    pub common_offdiag: f64,
}

impl EtfReport {
    pub fn pass(&self) -> bool {
        self.unit_norm && self.equiangular && self.tight
    }
}

/// Checks the three ETF properties: unit-norm columns, equiangular columns,
/// and orthogonal equal-norm rows (F F^T = (M/N) I).
pub fn verify_etf(design: &DesignMatrix, tol: f64) -> Result<EtfReport> {
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let cols = design.matrix();
    let (n, m) = cols.dim();

    let mut worst_norm_dev = 0.0f64;
    for j in 0..m {
        let norm = cols.column(j).dot(&cols.column(j)).sqrt();
        worst_norm_dev = worst_norm_dev.max((norm - 1.0).abs());
    }

    // Two blocked passes over the Gram matrix: mean of |G_ij|, then the
    // worst deviation from that mean.
    let block = 512;
    let mut offdiag_sum = 0.0;
    let offdiag_count = (m * m - m) as f64;
    let mut j0 = 0;
    while j0 < m {
        let j1 = (j0 + block).min(m);
        let gram = cols.t().dot(&cols.slice(s![.., j0..j1]));
        for (c, col) in gram.columns().into_iter().enumerate() {
            let j = j0 + c;
            for (i, &g) in col.iter().enumerate() {
                if i != j {
                    offdiag_sum += g.abs();
                }
            }
        }
        j0 = j1;
    }
    let common_offdiag = if m > 1 { offdiag_sum / offdiag_count } else { 0.0 };

    let mut worst_equiangle_dev = 0.0f64;
    let mut j0 = 0;
    while j0 < m {
        let j1 = (j0 + block).min(m);
        let gram = cols.t().dot(&cols.slice(s![.., j0..j1]));
        for (c, col) in gram.columns().into_iter().enumerate() {
            let j = j0 + c;
            for (i, &g) in col.iter().enumerate() {
                if i != j {
                    worst_equiangle_dev = worst_equiangle_dev.max((g.abs() - common_offdiag).abs());
                }
            }
        }
        j0 = j1;
    }

    let redundancy = m as f64 / n as f64;
    let row_gram = cols.dot(&cols.t());
    let mut worst_tight_dev = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { redundancy } else { 0.0 };
            worst_tight_dev = worst_tight_dev.max((row_gram[[i, j]] - target).abs());
        }
    }

    Ok(EtfReport {
        unit_norm: worst_norm_dev <= tol,
        equiangular: worst_equiangle_dev <= tol,
        tight: worst_tight_dev <= tol,
        worst_norm_dev,
        worst_equiangle_dev,
        worst_tight_dev,
        common_offdiag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pairs_etf(v: usize) -> DesignMatrix {
        let inc = steiner_pairs_incidence(v).unwrap();
        let h = sylvester_hadamard((v as u32).trailing_zeros()).unwrap();
        steiner_etf(&inc, &h).unwrap()
    }

    #[test]
    fn etf_6x16_shape_and_coherence() {
        let f = pairs_etf(4);
        assert_eq!((f.n(), f.m()), (6, 16));
        assert_eq!(f.kind(), DesignKind::Etf);
        assert!((f.mu() - 1.0 / 3.0).abs() < 1e-15);
        assert!((coherence(&f).unwrap() - welch_bound(6, 16).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn etf_gram_entries_all_equal_magnitude() {
        // v=16: N=120, M=256, every off-diagonal inner product is +-1/15.
        let f = pairs_etf(16);
        assert_eq!((f.n(), f.m()), (120, 256));
        let gram = f.matrix().t().dot(f.matrix());
        for i in 0..f.m() {
            for j in 0..f.m() {
                if i != j {
                    assert!(
                        (gram[[i, j]].abs() - 1.0 / 15.0).abs() < 1e-12,
                        "G[{i}][{j}] = {}",
                        gram[[i, j]]
                    );
                }
            }
        }
    }

    #[test]
    fn etf_requires_matching_hadamard_order() {
        let inc = steiner_pairs_incidence(4).unwrap();
        let h = sylvester_hadamard(3).unwrap();
        assert!(matches!(steiner_etf(&inc, &h), Err(Error::Dimension(_))));
    }

    #[test]
    fn steiner_etfs_pass_verification() {
        for v in [4usize, 8, 16] {
            let f = pairs_etf(v);
            let report = verify_etf(&f, 1e-10).unwrap();
            assert!(report.pass(), "v={v}: {report:?}");
            let mu = coherence(&f).unwrap();
            let welch = welch_bound(f.n(), f.m()).unwrap();
            assert!((mu - welch).abs() < 1e-12, "v={v}: mu={mu} welch={welch}");
            assert!((f.mu() - mu).abs() < 1e-12);
        }
    }

    #[test]
    fn etf_row_gram_diagonal_is_redundancy() {
        let f = pairs_etf(8);
        let row_gram = f.matrix().dot(&f.matrix().t());
        let redundancy = f.m() as f64 / f.n() as f64;
        for i in 0..f.n() {
            assert!((row_gram[[i, i]] - redundancy).abs() < 1e-10);
        }
    }

    #[test]
    fn simplex_n1_is_antipodal_pair() {
        let f = simplex_design(1).unwrap();
        assert_eq!((f.n(), f.m()), (1, 2));
        assert!((f.matrix()[[0, 0]] - 1.0).abs() < 1e-15);
        assert!((f.matrix()[[0, 1]] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn simplex_n2_gram() {
        let f = simplex_design(2).unwrap();
        let gram = f.matrix().t().dot(f.matrix());
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { -0.5 };
                assert!((gram[[i, j]] - expected).abs() < 1e-12, "G[{i}][{j}]");
            }
        }
    }

    #[test]
    fn simplex_coherence_is_reciprocal_n() {
        let f = simplex_design(4).unwrap();
        assert!((f.mu() - 0.25).abs() < 1e-15);
        assert!((coherence(&f).unwrap() - 0.25).abs() < 1e-12);
        let f = simplex_design(6).unwrap();
        assert!((coherence(&f).unwrap() - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn simplex_is_an_etf() {
        for n in [1usize, 2, 5, 17, 120] {
            let f = simplex_design(n).unwrap();
            assert!(verify_etf(&f, 1e-10).unwrap().pass(), "n={n}");
        }
    }

    #[test]
    fn orthogonal_is_identity() {
        let f = orthogonal_design(3).unwrap();
        assert_eq!((f.n(), f.m()), (3, 3));
        assert_eq!(f.mu(), 0.0);
        assert!((coherence(&f).unwrap()).abs() == 0.0);
        assert!(verify_etf(&f, 1e-10).unwrap().pass());
        let big = orthogonal_design(195).unwrap();
        assert_eq!(big.m(), 195);
    }

    #[test]
    fn coherence_requires_two_columns() {
        let f = orthogonal_design(1).unwrap();
        assert!(matches!(coherence(&f), Err(Error::Domain(_))));
    }

    #[test]
    fn welch_bound_values() {
        assert!((welch_bound(6, 16).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((welch_bound(6, 7).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!((welch_bound(120, 256).unwrap() - 1.0 / 15.0).abs() < 1e-15);
        assert!(matches!(welch_bound(6, 6), Err(Error::Domain(_))));
        assert!(matches!(welch_bound(6, 5), Err(Error::Domain(_))));
    }

    #[test]
    fn perturbed_etf_fails_verification() {
        let mut f = pairs_etf(4);
        f.columns[[0, 0]] += 1e-3;
        let report = verify_etf(&f, 1e-10).unwrap();
        assert!(!report.pass());
        let worst = report
            .worst_norm_dev
            .max(report.worst_equiangle_dev)
            .max(report.worst_tight_dev);
        assert!(worst > 1e-4 && worst < 1e-2, "violation should be near 1e-3, got {worst}");
    }

    #[test]
    fn from_columns_rejects_bad_norms() {
        let mut cols = Array2::eye(3);
        cols[[0, 0]] = 0.5;
        assert!(matches!(
            DesignMatrix::from_columns(DesignKind::Imported, cols),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn from_columns_enforces_shape_rules() {
        assert!(matches!(
            DesignMatrix::from_columns(DesignKind::Simplex, Array2::eye(3)),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            DesignMatrix::from_columns(DesignKind::Etf, Array2::eye(3).slice(s![.., 0..2]).to_owned()),
            Err(Error::Dimension(_))
        ));
    }

    proptest! {
        #[test]
        fn simplex_gram_identity(n in 1usize..40) {
            let f = simplex_design(n).unwrap();
            let gram = f.matrix().t().dot(f.matrix());
            let target = -1.0 / n as f64;
            for i in 0..f.m() {
                for j in 0..f.m() {
                    let expected = if i == j { 1.0 } else { target };
                    prop_assert!((gram[[i, j]] - expected).abs() < 1e-12);
                }
            }
        }
    }
}
