//! Per-user correlation statistics and focused binary-hypothesis detection.

use std::collections::BTreeSet;

use ndarray::Array1;

use crate::channel::EmbeddingParams;
use crate::designs::DesignMatrix;
use crate::error::{Error, Result};

/// Normalized correlation statistics, one per user:
/// T_m = <z, gamma f_m> / gamma^2.
#[derive(Debug, Clone)]
pub struct TestStatistics {
    values: Vec<f64>,
    gamma2: f64,
}

impl TestStatistics {
    /// All M statistics; index m-1 belongs to user m.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Statistic of user `m` (1-based).
    pub fn user(&self, m: usize) -> f64 {
        self.values[m - 1]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The fingerprint energy gamma^2 used for normalization.
    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }

    pub fn from_values(values: Vec<f64>, gamma2: f64) -> Self {
        TestStatistics { values, gamma2 }
    }
}

/// Computes the statistics for every user by a dense transpose-vector
/// product: T = F^T z / gamma (columns are unit norm, so dividing the
/// energy-scaled correlation by gamma^2 leaves a single factor of gamma).
pub fn test_statistics(
    z: &Array1<f64>,
    design: &DesignMatrix,
    params: &EmbeddingParams,
) -> Result<TestStatistics> {
    if z.len() != design.n() {
        return Err(Error::dimension(format!(
            "signal has {} samples, design dimension is {}",
            z.len(),
            design.n()
        )));
    }
    let gamma = params.gamma();
    let values: Vec<f64> = design.matrix().t().dot(z).iter().map(|t| t / gamma).collect();
    Ok(TestStatistics { values, gamma2: params.gamma2() })
}

/// Detector output: the threshold and the users decided guilty.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionOutcome {
    tau: f64,
    accused: BTreeSet<usize>,
}

impl DetectionOutcome {
    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Accused users (1-based), ascending.
    pub fn accused(&self) -> &BTreeSet<usize> {
        &self.accused
    }
}

/// Accuses every user with T_m >= tau. Equality accuses, so threshold sweeps
/// are deterministic.
pub fn focused_detect(stats: &TestStatistics, tau: f64) -> DetectionOutcome {
    let accused = stats
        .values
        .iter()
        .enumerate()
        .filter(|(_, &t)| t >= tau)
        .map(|(i, _)| i + 1)
        .collect();
    DetectionOutcome { tau, accused }
}

/// Outcome events of one simulated attack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialEvents {
    /// At least one coalition member was accused.
    pub detected: bool,
    /// At least one innocent user was accused.
    pub false_alarm: bool,
}

/// Compares the accusation set against the true coalition.
pub fn trial_events(outcome: &DetectionOutcome, truth: &BTreeSet<usize>) -> TrialEvents {
    let detected = outcome.accused.intersection(truth).next().is_some();
    let false_alarm = outcome.accused.difference(truth).next().is_some();
    TrialEvents { detected, false_alarm }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{forge, AttackSpec, HostSignal};
    use crate::designs::{orthogonal_design, steiner_etf, steiner_pairs_incidence, sylvester_hadamard};
    use proptest::prelude::*;

    fn etf_6x16() -> DesignMatrix {
        let inc = steiner_pairs_incidence(4).unwrap();
        let h = sylvester_hadamard(2).unwrap();
        steiner_etf(&inc, &h).unwrap()
    }

    #[test]
    fn own_fingerprint_scores_one() {
        let f = etf_6x16();
        let p = EmbeddingParams::new(6, 1.0).unwrap();
        for m in [1usize, 7, 16] {
            let z = f.column(m - 1).to_owned() * p.gamma();
            let stats = test_statistics(&z, &f, &p).unwrap();
            assert!((stats.user(m) - 1.0).abs() < 1e-12, "user {m}: {}", stats.user(m));
        }
    }

    #[test]
    fn cross_statistics_have_coherence_magnitude() {
        let f = etf_6x16();
        let p = EmbeddingParams::new(6, 1.0).unwrap();
        let j = 3usize;
        let z = f.column(j - 1).to_owned() * p.gamma();
        let stats = test_statistics(&z, &f, &p).unwrap();
        for m in 1..=f.m() {
            if m != j {
                assert!(
                    (stats.user(m).abs() - f.mu()).abs() < 1e-12,
                    "user {m}: {}",
                    stats.user(m)
                );
            }
        }
    }

    #[test]
    fn zero_signal_gives_zero_statistics() {
        let f = etf_6x16();
        let p = EmbeddingParams::new(6, 2.0).unwrap();
        let stats = test_statistics(&Array1::zeros(6), &f, &p).unwrap();
        assert!(stats.values().iter().all(|&t| t == 0.0));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let f = etf_6x16();
        let p = EmbeddingParams::new(6, 1.0).unwrap();
        assert!(test_statistics(&Array1::zeros(5), &f, &p).is_err());
    }

    #[test]
    fn thresholding_accuses_at_and_above_tau() {
        let stats = TestStatistics::from_values(vec![1.0, 0.3, -0.3], 1.0);
        let outcome = focused_detect(&stats, 0.5);
        assert_eq!(outcome.accused().iter().copied().collect::<Vec<_>>(), vec![1]);
        // Equality accuses.
        let outcome = focused_detect(&stats, 0.3);
        assert_eq!(outcome.accused().iter().copied().collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn infinite_thresholds() {
        let stats = TestStatistics::from_values(vec![0.1, -0.5, 2.0], 1.0);
        assert_eq!(focused_detect(&stats, f64::NEG_INFINITY).accused().len(), 3);
        assert!(focused_detect(&stats, 2.5).accused().is_empty());
    }

    #[test]
    fn trial_event_cases() {
        let truth: BTreeSet<usize> = [1, 2].into_iter().collect();
        let stats = TestStatistics::from_values(vec![1.0, 0.0, 0.0], 1.0);
        let hit = trial_events(&focused_detect(&stats, 0.5), &truth);
        assert_eq!(hit, TrialEvents { detected: true, false_alarm: false });

        let stats = TestStatistics::from_values(vec![0.0, 0.0, 1.0], 1.0);
        let miss = trial_events(&focused_detect(&stats, 0.5), &truth);
        assert_eq!(miss, TrialEvents { detected: false, false_alarm: true });

        let none = trial_events(&focused_detect(&stats, 2.0), &truth);
        assert_eq!(none, TrialEvents { detected: false, false_alarm: false });
    }

    #[test]
    fn innocent_statistic_distribution_under_noise() {
        // Innocent user's statistic is Gaussian with mean sum_k alpha_k g_k
        // (signed inner products with the coalition) and variance sigma^2 /
        // gamma^2.
        let f = etf_6x16();
        let p = EmbeddingParams::new(6, 1.0).unwrap();
        let host = HostSignal::zeros(6);
        let coalition = [2usize, 5];
        let innocent = 1usize;
        let sigma2 = 1.0;
        let trials = 100_000u64;

        let mut theory_mean = 0.0;
        for &k in &coalition {
            theory_mean += 0.5 * f.column(innocent - 1).dot(&f.column(k - 1));
        }

        let mut sum = 0.0;
        let mut sq_sum = 0.0;
        for t in 0..trials {
            let spec = AttackSpec::uniform(coalition, sigma2, t).unwrap();
            let forgery = forge(&host, &f, &p, &spec).unwrap();
            let stats = test_statistics(forgery.y(), &f, &p).unwrap();
            let v = stats.user(innocent);
            sum += v;
            sq_sum += v * v;
        }
        let n = trials as f64;
        let mean = sum / n;
        let var = sq_sum / n - mean * mean;
        let theory_var = sigma2 / p.gamma2();
        assert!(
            (var - theory_var).abs() / theory_var < 0.05,
            "sample variance {var}, theory {theory_var}"
        );
        let se = (theory_var / n).sqrt();
        assert!(
            (mean - theory_mean).abs() < 3.0 * se,
            "sample mean {mean}, theory {theory_mean}, se {se}"
        );
    }

    proptest! {
        #[test]
        fn accusations_shrink_as_tau_grows(
            values in proptest::collection::vec(-2.0f64..2.0, 1..32),
            tau1 in -2.0f64..2.0,
            delta in 0.0f64..2.0,
        ) {
            let stats = TestStatistics::from_values(values, 1.0);
            let low = focused_detect(&stats, tau1);
            let high = focused_detect(&stats, tau1 + delta);
            prop_assert!(high.accused().is_subset(low.accused()));
        }

        #[test]
        fn statistics_are_linear_in_z(
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
            z1 in proptest::collection::vec(-1.0f64..1.0, 6),
            z2 in proptest::collection::vec(-1.0f64..1.0, 6),
        ) {
            let f = etf_6x16();
            let p = EmbeddingParams::new(6, 1.0).unwrap();
            let z1 = Array1::from_vec(z1);
            let z2 = Array1::from_vec(z2);
            let combo = &(&z1 * a) + &(&z2 * b);
            let t_combo = test_statistics(&combo, &f, &p).unwrap();
            let t1 = test_statistics(&z1, &f, &p).unwrap();
            let t2 = test_statistics(&z2, &f, &p).unwrap();
            for m in 0..f.m() {
                let expected = a * t1.values()[m] + b * t2.values()[m];
                prop_assert!((t_combo.values()[m] - expected).abs() < 1e-12);
            }
        }
    }
}
