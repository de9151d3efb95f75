//! Statistics for planning and running rigorous evaluations of binary
//! detectors (malware scanners, spam filters, or any yes/no classifier).
//!
//! The toolkit answers the questions that decide whether an evaluation's
//! numbers mean anything:
//!
//! - How many samples does it take to measure a rate p to within a tolerance,
//!   at a chosen confidence? Exact binomial coverage, no normal
//!   approximation, usable down to p = 10^-5 and out to n = 10^8
//!   ([`planner`]).
//! - How badly does a too-small sample skew the estimate low, and how often
//!   does it miss by half or more? ([`bias`]).
//! - What do ROC curves and low-FPR operating points look like, and how
//!   optimistic do they get when the benign sample is small?
//!   ([`roc`]).
//! - How do per-category detection rates combine under a deployment's sample
//!   mix? ([`category`]).
//! - Which samples may a time-delayed evaluation protocol legitimately use,
//!   and how contaminated is naive feed-based selection? ([`timedelay`]).
//!
//! [`ingest`] parses the on-disk CSV/TOML formats shared by every module,
//! with line-numbered diagnostics.

#![forbid(unsafe_code)]
#![deny(missing_docs)]

mod special;

pub mod bias;
pub mod binom;
pub mod category;
pub mod ingest;
pub mod planner;
pub mod roc;
pub mod timedelay;

pub use bias::{bias_curves, severe_underestimation, underestimation_skew, BiasError, SkewReport};
pub use category::{
    aggregate, compare_profiles, AggregateResult, CategoryError, CategoryStats, WeightProfile,
};
pub use binom::{
    binom_cdf, binom_cdf_strict_between, binom_log_pmf, BinomError, Proportion, SampleSize,
    TrialCount,
};
pub use ingest::{
    parse_category_stats, parse_manifest, parse_profile, parse_scores, write_category_stats,
    write_manifest, write_profile, write_scores, IngestError, WeightHandling,
};
pub use planner::{
    coverage, plan_curve, required_sample_size, ConfidenceLevel, PlanError, PlanResult,
    ToleranceSpec,
};
pub use roc::{
    roc_from_samples, subsample_bias_experiment, synth_analytic_tpr, synth_scores, tpr_at_fpr,
    Label, RocCurve, RocError, RocPoint, ScoredSample, SubsampleBiasReport,
};
pub use timedelay::{
    contamination_rate, run_delay_protocol, select_eligible, DelayProtocolConfig, DelayRunReport,
    ManifestEntry, TimedelayError,
};
