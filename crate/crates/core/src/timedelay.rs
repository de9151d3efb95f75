//! The time-delay evaluation protocol: freeze a detector snapshot, wait out
//! a lag, then evaluate only on files first seen after the lag expired.
//!
//! A detector that keeps updating during a test is being graded on samples
//! its vendor may already have blacklisted, and the measured rates say more
//! about feed latency than about detection. The protocol here separates the
//! two: the snapshot frozen at `freeze_date` goes unused for `lag_days`,
//! then is evaluated only on files first seen inside the collection window
//! that follows. The module also quantifies the failure mode it replaces:
//! [`contamination_rate`] reports how much of a naively chosen test set the
//! frozen product could have already seen.
//!
//! Everything operates on recorded manifests (first-seen dates, labels,
//! scores), not live feeds, so protocol runs are offline and repeatable.

use std::collections::HashSet;

use chrono::{Days, NaiveDate};
use serde::Serialize;
use thiserror::Error;

use crate::binom::{Proportion, SampleSize};
use crate::planner::{self, PlanError, ToleranceSpec};
use crate::roc::Label;

/// Default lag between the snapshot freeze and the start of collection.
pub const DEFAULT_LAG_DAYS: u32 = 100;

/// Default days a label must have had to settle before it is trusted.
pub const DEFAULT_LABEL_MATURITY_DAYS: u32 = 30;

/// Relative half-width used by the adequacy warnings: can the eligible
/// class sizes pin their rates to within a factor of 2?
const ADEQUACY_HALF_WIDTH: f64 = 0.5;

/// Coverage below this triggers an adequacy warning.
const ADEQUACY_TARGET: f64 = 0.95;

/// Invalid manifest entry, configuration, or protocol input.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TimedelayError {
    /// A label date earlier than the sample's first appearance.
    #[error("sample {sample_id}: label_date predates first_seen")]
    LabelPredatesFirstSeen {
        /// Offending sample.
        sample_id: String,
    },
    /// A NaN or infinite score.
    #[error("sample {sample_id}: score is not finite")]
    NonFiniteScore {
        /// Offending sample.
        sample_id: String,
    },
    /// A duration that must be at least one day was zero.
    #[error("{field} must be at least 1 day")]
    BadDuration {
        /// Which configuration field was zero.
        field: &'static str,
    },
    /// The configured dates run off the calendar.
    #[error("freeze_date plus lag and window overflows the supported date range")]
    DateOverflow,
    /// Contamination of an empty selection is undefined.
    #[error("naive selection is empty; contamination is undefined")]
    EmptyNaiveSelection,
    /// The naive selection must be a subset of the manifest.
    #[error("naive selection contains {sample_id}, which is not in the manifest")]
    NotInManifest {
        /// The foreign sample.
        sample_id: String,
    },
    /// Thresholds may be infinite but not NaN.
    #[error("threshold is NaN")]
    BadThreshold,
    /// An eligible entry had no recorded score to threshold.
    #[error("eligible sample {sample_id} has no score; cannot evaluate")]
    MissingScore {
        /// Offending sample.
        sample_id: String,
    },
}

/// One dataset record: when a sample was first seen, what it turned out to
/// be, and optionally when its label settled, its category, and the frozen
/// detector's score for it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestEntry {
    sample_id: String,
    first_seen: NaiveDate,
    label: Label,
    label_date: Option<NaiveDate>,
    category: Option<String>,
    score: Option<f64>,
}

impl ManifestEntry {
    /// Builds a minimal entry.
    pub fn new(sample_id: impl Into<String>, first_seen: NaiveDate, label: Label) -> ManifestEntry {
        ManifestEntry {
            sample_id: sample_id.into(),
            first_seen,
            label,
            label_date: None,
            category: None,
            score: None,
        }
    }

    /// Records when the label became trustworthy; must not predate
    /// `first_seen`.
    pub fn with_label_date(mut self, date: NaiveDate) -> Result<ManifestEntry, TimedelayError> {
        if date < self.first_seen {
            return Err(TimedelayError::LabelPredatesFirstSeen {
                sample_id: self.sample_id,
            });
        }
        self.label_date = Some(date);
        Ok(self)
    }

    /// Attaches a category tag.
    pub fn with_category(mut self, category: impl Into<String>) -> ManifestEntry {
        self.category = Some(category.into());
        self
    }

    /// Attaches the frozen detector's score; must be finite.
    pub fn with_score(mut self, score: f64) -> Result<ManifestEntry, TimedelayError> {
        if !score.is_finite() {
            return Err(TimedelayError::NonFiniteScore {
                sample_id: self.sample_id,
            });
        }
        self.score = Some(score);
        Ok(self)
    }

    /// Identifier, unique within a manifest.
    pub fn sample_id(&self) -> &str {
        &self.sample_id
    }

    /// Date the sample first appeared.
    pub fn first_seen(&self) -> NaiveDate {
        self.first_seen
    }

    /// Ground-truth class.
    pub fn label(&self) -> Label {
        self.label
    }

    /// Date the label settled, if recorded.
    pub fn label_date(&self) -> Option<NaiveDate> {
        self.label_date
    }

    /// Category tag, if any.
    pub fn category(&self) -> Option<&str> {
        self.category.as_deref()
    }

    /// Frozen detector's score, if recorded.
    pub fn score(&self) -> Option<f64> {
        self.score
    }
}

/// Protocol parameters: when the snapshot froze, how long it sat idle, how
/// long collection ran after that, and how settled a label must be.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DelayProtocolConfig {
    freeze_date: NaiveDate,
    lag_days: u32,
    label_maturity_days: u32,
    evaluation_window_days: u32,
}

impl DelayProtocolConfig {
    /// Builds a config with the default lag (100 days) and label maturity
    /// (30 days). The collection window has no natural default; it is how
    /// long the evaluator keeps gathering post-lag files and must be given.
    pub fn new(
        freeze_date: NaiveDate,
        evaluation_window_days: u32,
    ) -> Result<DelayProtocolConfig, TimedelayError> {
        if evaluation_window_days == 0 {
            return Err(TimedelayError::BadDuration {
                field: "evaluation_window_days",
            });
        }
        let cfg = DelayProtocolConfig {
            freeze_date,
            lag_days: DEFAULT_LAG_DAYS,
            label_maturity_days: DEFAULT_LABEL_MATURITY_DAYS,
            evaluation_window_days,
        };
        cfg.check_range()?;
        Ok(cfg)
    }

    /// Overrides the lag; must be at least one day.
    pub fn with_lag_days(mut self, lag_days: u32) -> Result<DelayProtocolConfig, TimedelayError> {
        if lag_days == 0 {
            return Err(TimedelayError::BadDuration { field: "lag_days" });
        }
        self.lag_days = lag_days;
        self.check_range()?;
        Ok(self)
    }

    /// Overrides the label maturity requirement; 0 disables it and trusts
    /// every label as recorded.
    pub fn with_label_maturity_days(mut self, days: u32) -> DelayProtocolConfig {
        self.label_maturity_days = days;
        self
    }

    fn check_range(&self) -> Result<(), TimedelayError> {
        self.freeze_date
            .checked_add_days(Days::new(
                self.lag_days as u64 + self.evaluation_window_days as u64,
            ))
            .map(|_| ())
            .ok_or(TimedelayError::DateOverflow)
    }

    /// Snapshot freeze date.
    pub fn freeze_date(&self) -> NaiveDate {
        self.freeze_date
    }

    /// Days the snapshot sits idle before collection starts.
    pub fn lag_days(&self) -> u32 {
        self.lag_days
    }

    /// Days a label must have had to settle; 0 disables the check.
    pub fn label_maturity_days(&self) -> u32 {
        self.label_maturity_days
    }

    /// Length of the collection window after the lag expires.
    pub fn evaluation_window_days(&self) -> u32 {
        self.evaluation_window_days
    }

    /// Last day the frozen-but-previously-updated product could have seen:
    /// freeze_date + lag_days. Eligibility starts strictly after this.
    pub fn cutoff_date(&self) -> NaiveDate {
        self.freeze_date
            .checked_add_days(Days::new(self.lag_days as u64))
            .expect("range checked at construction")
    }

    /// Last day of the collection window (inclusive).
    pub fn window_end(&self) -> NaiveDate {
        self.cutoff_date()
            .checked_add_days(Days::new(self.evaluation_window_days as u64))
            .expect("range checked at construction")
    }
}

/// Whether the entry's label has settled long enough to trust.
fn label_mature(entry: &ManifestEntry, cfg: &DelayProtocolConfig) -> bool {
    if cfg.label_maturity_days == 0 {
        return true;
    }
    let Some(label_date) = entry.label_date else {
        return false;
    };
    match entry
        .first_seen
        .checked_add_days(Days::new(cfg.label_maturity_days as u64))
    {
        Some(earliest_trusted) => label_date >= earliest_trusted,
        // Maturity horizon off the calendar: never satisfiable.
        None => false,
    }
}

/// Splits a manifest into protocol-eligible entries and entries that are in
/// the collection window but whose labels have not matured.
///
/// Eligible means first seen strictly after the cutoff (freeze + lag) and
/// no later than the window end, with a mature label. Entries outside the
/// window appear in neither list. An empty result is a valid outcome: it
/// means the feed produced nothing usable in the window.
pub fn select_eligible<'m>(
    manifest: &'m [ManifestEntry],
    cfg: &DelayProtocolConfig,
) -> (Vec<&'m ManifestEntry>, Vec<&'m ManifestEntry>) {
    let cutoff = cfg.cutoff_date();
    let end = cfg.window_end();
    let mut eligible = Vec::new();
    let mut immature = Vec::new();
    for entry in manifest {
        if entry.first_seen <= cutoff || entry.first_seen > end {
            continue;
        }
        if label_mature(entry, cfg) {
            eligible.push(entry);
        } else {
            immature.push(entry);
        }
    }
    (eligible, immature)
}

/// Fraction of a candidate test set the frozen product could have already
/// seen: entries first seen on or before freeze + lag.
///
/// The selection must be a subset of the manifest (matched by sample id)
/// and nonempty, since contamination of nothing is undefined.
pub fn contamination_rate(
    manifest: &[ManifestEntry],
    cfg: &DelayProtocolConfig,
    naive_selection: &[&ManifestEntry],
) -> Result<Proportion, TimedelayError> {
    if naive_selection.is_empty() {
        return Err(TimedelayError::EmptyNaiveSelection);
    }
    let known: HashSet<&str> = manifest.iter().map(|e| e.sample_id.as_str()).collect();
    let cutoff = cfg.cutoff_date();
    let mut stale = 0u64;
    for entry in naive_selection {
        if !known.contains(entry.sample_id.as_str()) {
            return Err(TimedelayError::NotInManifest {
                sample_id: entry.sample_id.clone(),
            });
        }
        if entry.first_seen <= cutoff {
            stale += 1;
        }
    }
    Ok(Proportion::clamped(
        stale as f64 / naive_selection.len() as f64,
    ))
}

/// Outcome of one protocol run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayRunReport {
    /// Samples the protocol evaluated, in manifest order.
    pub eligible_ids: Vec<String>,
    /// In-window entries dropped because their labels had not matured.
    pub excluded_immature_labels: u64,
    /// Contamination a naive evaluator would incur by testing on every
    /// manifest entry seen by the window's end; None if that pool is empty.
    pub contamination_rate_naive: Option<Proportion>,
    /// Detection rate over eligible malware; None if none was eligible.
    pub tpr: Option<Proportion>,
    /// False positive rate over eligible benign; None if none was eligible.
    pub fpr: Option<Proportion>,
    /// Eligible malware count.
    pub n_pos: u64,
    /// Eligible benign count.
    pub n_neg: u64,
    /// Probability that n_pos samples pin the observed TPR within a factor
    /// of 2 (±50% relative window); None at degenerate rates.
    pub tpr_coverage: Option<Proportion>,
    /// Same adequacy probability for the FPR side.
    pub fpr_coverage: Option<Proportion>,
    /// Human-readable adequacy and degeneracy warnings.
    pub warnings: Vec<String>,
}

/// Coverage of the ±50% relative window at the observed rate, plus a
/// warning when the class sample is too small to trust the rate.
fn adequacy(
    metric: &str,
    rate: Option<Proportion>,
    n: u64,
    warnings: &mut Vec<String>,
) -> Option<Proportion> {
    let rate = rate?;
    let n = SampleSize::new(n).expect("rate exists, so n >= 1");
    let tol = ToleranceSpec::relative(ADEQUACY_HALF_WIDTH).expect("0.5 is a valid half-width");
    match planner::coverage(rate, n, tol) {
        Ok(cov) => {
            if cov.value() < ADEQUACY_TARGET {
                warnings.push(format!(
                    "{metric} = {} from n = {n}: only {:.3} probability of being within \
                     a factor of 2 of the true rate; collect more samples",
                    rate.value(),
                    cov.value(),
                ));
            }
            Some(cov)
        }
        Err(PlanError::DegenerateRate(_)) => {
            warnings.push(format!(
                "{metric} = {} from n = {n} is degenerate; relative-window adequacy \
                 is undefined at rates of exactly 0 or 1",
                rate.value(),
            ));
            None
        }
        Err(other) => unreachable!("coverage on validated inputs: {other}"),
    }
}

/// Runs the protocol end to end: selects eligible entries, thresholds their
/// scores (score >= threshold means flagged malicious), and reports rates
/// with sample-size adequacy attached.
///
/// Every eligible entry must carry a score. A missing class yields None for
/// that rate rather than an error; the report says what could be measured.
pub fn run_delay_protocol(
    manifest: &[ManifestEntry],
    cfg: &DelayProtocolConfig,
    threshold: f64,
) -> Result<DelayRunReport, TimedelayError> {
    if threshold.is_nan() {
        return Err(TimedelayError::BadThreshold);
    }
    let (eligible, immature) = select_eligible(manifest, cfg);

    let (mut n_pos, mut tp, mut n_neg, mut fp) = (0u64, 0u64, 0u64, 0u64);
    for entry in &eligible {
        let score = entry.score.ok_or_else(|| TimedelayError::MissingScore {
            sample_id: entry.sample_id.clone(),
        })?;
        let flagged = score >= threshold;
        match entry.label {
            Label::Malware => {
                n_pos += 1;
                tp += u64::from(flagged);
            }
            Label::Benign => {
                n_neg += 1;
                fp += u64::from(flagged);
            }
        }
    }
    let tpr = (n_pos > 0).then(|| Proportion::clamped(tp as f64 / n_pos as f64));
    let fpr = (n_neg > 0).then(|| Proportion::clamped(fp as f64 / n_neg as f64));

    let naive_pool: Vec<&ManifestEntry> = manifest
        .iter()
        .filter(|e| e.first_seen <= cfg.window_end())
        .collect();
    let contamination_rate_naive = if naive_pool.is_empty() {
        None
    } else {
        Some(
            contamination_rate(manifest, cfg, &naive_pool)
                .expect("pool is a nonempty manifest subset"),
        )
    };

    let mut warnings = Vec::new();
    if eligible.is_empty() {
        warnings.push("no eligible entries in the collection window".to_owned());
    }
    if n_pos == 0 {
        warnings.push("no eligible malware; tpr unavailable".to_owned());
    }
    if n_neg == 0 {
        warnings.push("no eligible benign files; fpr unavailable".to_owned());
    }
    let tpr_coverage = adequacy("tpr", tpr, n_pos, &mut warnings);
    let fpr_coverage = adequacy("fpr", fpr, n_neg, &mut warnings);

    Ok(DelayRunReport {
        eligible_ids: eligible.iter().map(|e| e.sample_id.clone()).collect(),
        excluded_immature_labels: immature.len() as u64,
        contamination_rate_naive,
        tpr,
        fpr,
        n_pos,
        n_neg,
        tpr_coverage,
        fpr_coverage,
        warnings,
    })
}
