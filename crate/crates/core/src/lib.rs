//! Equiangular-tight-frame fingerprinting toolkit.
//!
//! Builds fingerprint design matrices (Steiner/Hadamard ETFs, regular
//! simplexes, orthogonal bases), models the linear-average-plus-noise
//! collusion attack with correlation detection, evaluates the closed-form
//! collusion-resistance bounds, and runs the Monte Carlo experiments that
//! trace detection probability against coalition size.
//!
//! Modules
//! - [`designs`]: design construction, validation, coherence, Welch bound
//! - [`channel`]: embedding, attack, extraction, host recovery
//! - [`detection`]: correlation statistics and focused thresholding
//! - [`analysis`]: RIP constants, set distances, error bounds, minmax threshold
//! - [`experiment`]: seeded Monte Carlo sweeps and the results table
//! - [`io`]: text file formats and atomic writes

pub mod analysis;
pub mod channel;
pub mod designs;
pub mod detection;
pub mod error;
pub mod experiment;
pub mod io;

pub use channel::{AttackSpec, DescentControls, EmbeddingParams, Forgery, HostSignal};
pub use designs::{DesignKind, DesignMatrix, EtfReport, HadamardMatrix, SteinerIncidence};
pub use detection::{DetectionOutcome, TestStatistics, TrialEvents};
pub use error::{Error, Result};
pub use experiment::{CurvePoint, CurveSample, ExperimentConfig, ExperimentCurve};
