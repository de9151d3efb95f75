//! Per-category detection statistics recombined under deployment-specific
//! weight profiles.
//!
//! A lab measures TPR and FPR separately for each file category it can
//! source (commodity malware, targeted malware, common benign software,
//! shareware, ...). Deployments differ in which categories they actually
//! see, so a single vendor-published rate pair answers nobody's question.
//! Given the per-category rates and a profile of category weights that
//! models one deployment's file mix, the aggregate rates are the weighted
//! sums, letting one set of measurements serve many environments.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::binom::{Proportion, SampleSize, TrialCount};
use crate::roc::Label;

/// Tolerance for a weight map's deviation from sum 1.
const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Tolerance for a reported rate's deviation from detected/n.
const RATE_TOL: f64 = 1e-12;

/// Invalid category statistics or weight profile.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CategoryError {
    /// A category reported more detections than samples.
    #[error("category {category}: detected {detected} exceeds sample size {n}")]
    DetectedExceedsSamples {
        /// Offending category.
        category: String,
        /// Reported detections.
        detected: u64,
        /// Reported sample size.
        n: u64,
    },
    /// A reported rate disagrees with detected/n.
    #[error(
        "category {category}: reported rate {reported} is not detected/n = {computed} \
         (difference exceeds 1e-12)"
    )]
    InconsistentRate {
        /// Offending category.
        category: String,
        /// Rate found in the input.
        reported: f64,
        /// detected/n.
        computed: f64,
    },
    /// The same (category, class) pair appeared twice in one stats list.
    #[error("duplicate {class:?} category {category} in stats")]
    DuplicateCategory {
        /// Offending category.
        category: String,
        /// Class under which it was duplicated.
        class: Label,
    },
    /// A profile weights a category the stats do not contain.
    #[error("profile {profile}: unknown {class:?} category {category}")]
    UnknownCategory {
        /// Profile naming the category.
        profile: String,
        /// Missing category.
        category: String,
        /// Class whose stats were searched.
        class: Label,
    },
    /// A weight was negative or non-finite.
    #[error("profile {profile}: {class:?} weight for {category} is {weight}, must be >= 0")]
    BadWeight {
        /// Offending profile.
        profile: String,
        /// Class of the weight map.
        class: Label,
        /// Weighted category.
        category: String,
        /// The weight found.
        weight: f64,
    },
    /// A weight map does not sum to 1.
    #[error(
        "profile {profile}: {class:?} weights sum to {sum}, not 1 \
         (pass them normalized, or normalize explicitly)"
    )]
    NotNormalized {
        /// Offending profile.
        profile: String,
        /// Class of the weight map.
        class: Label,
        /// The sum found.
        sum: f64,
    },
    /// A weight map cannot be rescaled because it sums to zero.
    #[error("profile {profile}: cannot normalize {class:?} weights, they sum to 0")]
    ZeroWeightSum {
        /// Offending profile.
        profile: String,
        /// Class of the weight map.
        class: Label,
    },
}

/// Detection statistics for one category of one class.
///
/// For a malware category the rate is that category's TPR; for a benign
/// category it is the FPR.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryStats {
    category: String,
    class: Label,
    n: SampleSize,
    detected: TrialCount,
    rate: Proportion,
}

impl CategoryStats {
    /// Builds stats from raw counts; the rate is detected/n.
    pub fn new(
        category: impl Into<String>,
        class: Label,
        n: SampleSize,
        detected: u64,
    ) -> Result<CategoryStats, CategoryError> {
        let category = category.into();
        if detected > n.value() {
            return Err(CategoryError::DetectedExceedsSamples {
                category,
                detected,
                n: n.value(),
            });
        }
        let rate = Proportion::clamped(detected as f64 / n.value() as f64);
        Ok(CategoryStats {
            category,
            class,
            n,
            detected: TrialCount::new(detected),
            rate,
        })
    }

    /// As [`CategoryStats::new`], but cross-checks a rate reported
    /// alongside the counts (as in stats files) against detected/n.
    pub fn with_reported_rate(
        category: impl Into<String>,
        class: Label,
        n: SampleSize,
        detected: u64,
        reported: f64,
    ) -> Result<CategoryStats, CategoryError> {
        let stats = CategoryStats::new(category, class, n, detected)?;
        if (reported - stats.rate.value()).abs() > RATE_TOL || reported.is_nan() {
            return Err(CategoryError::InconsistentRate {
                category: stats.category,
                reported,
                computed: stats.rate.value(),
            });
        }
        Ok(stats)
    }

    /// Category name.
    pub fn category(&self) -> &str {
        &self.category
    }

    /// Whether this is a benign or malware category.
    pub fn class(&self) -> Label {
        self.class
    }

    /// Samples measured in this category.
    pub fn n(&self) -> SampleSize {
        self.n
    }

    /// Samples flagged malicious.
    pub fn detected(&self) -> TrialCount {
        self.detected
    }

    /// detected/n: the category's TPR (malware) or FPR (benign).
    pub fn rate(&self) -> Proportion {
        self.rate
    }
}

/// Per-category weights modeling one deployment's file mix.
///
/// The two maps are independent: benign weights recombine benign-category
/// FPRs, malware weights recombine malware-category TPRs. Each map must be
/// supplied already summing to 1; [`WeightProfile::normalized`] rescales
/// explicitly when that is wanted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightProfile {
    /// Profile name, carried into results and error messages.
    pub name: String,
    /// Weight per benign category.
    pub benign_weights: BTreeMap<String, f64>,
    /// Weight per malware category.
    pub malware_weights: BTreeMap<String, f64>,
}

impl WeightProfile {
    /// Checks nonnegativity and that each map sums to 1 within 1e-9.
    pub fn validate(&self) -> Result<(), CategoryError> {
        for (class, weights) in [
            (Label::Benign, &self.benign_weights),
            (Label::Malware, &self.malware_weights),
        ] {
            let mut sum = 0.0;
            for (category, &w) in weights {
                if !w.is_finite() || w < 0.0 {
                    return Err(CategoryError::BadWeight {
                        profile: self.name.clone(),
                        class,
                        category: category.clone(),
                        weight: w,
                    });
                }
                sum += w;
            }
            if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
                return Err(CategoryError::NotNormalized {
                    profile: self.name.clone(),
                    class,
                    sum,
                });
            }
        }
        Ok(())
    }

    /// Returns a copy with each weight map rescaled to sum to 1.
    ///
    /// Rescaling is explicit, never implicit: a profile that does not sum
    /// to 1 is usually a transcription error, and silently repairing it
    /// would hide that in vendor comparisons.
    pub fn normalized(&self) -> Result<WeightProfile, CategoryError> {
        let mut out = self.clone();
        for (class, weights) in [
            (Label::Benign, &mut out.benign_weights),
            (Label::Malware, &mut out.malware_weights),
        ] {
            let mut sum = 0.0;
            for (category, &w) in weights.iter() {
                if !w.is_finite() || w < 0.0 {
                    return Err(CategoryError::BadWeight {
                        profile: self.name.clone(),
                        class,
                        category: category.clone(),
                        weight: w,
                    });
                }
                sum += w;
            }
            if sum == 0.0 {
                return Err(CategoryError::ZeroWeightSum {
                    profile: self.name.clone(),
                    class,
                });
            }
            for w in weights.values_mut() {
                *w /= sum;
            }
        }
        Ok(out)
    }
}

/// Aggregate rates of one profile over one stats list.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateResult {
    /// Name of the profile that produced this row.
    pub profile_name: String,
    /// Weighted sum of malware-category rates.
    pub tpr: Proportion,
    /// Weighted sum of benign-category rates.
    pub fpr: Proportion,
    /// Weight-harmonic effective malware sample size (diagnostic).
    pub effective_n_pos: f64,
    /// Weight-harmonic effective benign sample size (diagnostic).
    pub effective_n_neg: f64,
}

/// Looks up stats per (class, category), rejecting duplicates.
fn stats_index(
    stats: &[CategoryStats],
) -> Result<BTreeMap<(Label, &str), &CategoryStats>, CategoryError> {
    let mut index = BTreeMap::new();
    for s in stats {
        if index.insert((s.class, s.category.as_str()), s).is_some() {
            return Err(CategoryError::DuplicateCategory {
                category: s.category.clone(),
                class: s.class,
            });
        }
    }
    Ok(index)
}

/// Weighted rate and effective sample size for one class's weight map.
///
/// The effective sample size is (sum w)^2 / sum(w^2 / n), the equivalent
/// number of equally-weighted samples behind the weighted estimate; it is
/// what the sample-size planner's adequacy checks should be fed.
fn combine(
    profile: &str,
    class: Label,
    weights: &BTreeMap<String, f64>,
    index: &BTreeMap<(Label, &str), &CategoryStats>,
) -> Result<(Proportion, f64), CategoryError> {
    let mut rate = 0.0;
    let mut w_sum = 0.0;
    let mut w2_over_n = 0.0;
    for (category, &w) in weights {
        let stats = index.get(&(class, category.as_str())).ok_or_else(|| {
            CategoryError::UnknownCategory {
                profile: profile.to_owned(),
                category: category.clone(),
                class,
            }
        })?;
        rate += w * stats.rate.value();
        w_sum += w;
        w2_over_n += w * w / stats.n.value() as f64;
    }
    let effective_n = if w2_over_n > 0.0 {
        w_sum * w_sum / w2_over_n
    } else {
        0.0
    };
    Ok((Proportion::clamped(rate), effective_n))
}

/// Recombines per-category rates into one (TPR, FPR) pair under a profile.
///
/// The profile must already be normalized (each weight map summing to 1
/// within 1e-9) and may only weight categories present in `stats`.
pub fn aggregate(
    stats: &[CategoryStats],
    profile: &WeightProfile,
) -> Result<AggregateResult, CategoryError> {
    profile.validate()?;
    let index = stats_index(stats)?;
    let (tpr, effective_n_pos) =
        combine(&profile.name, Label::Malware, &profile.malware_weights, &index)?;
    let (fpr, effective_n_neg) =
        combine(&profile.name, Label::Benign, &profile.benign_weights, &index)?;
    Ok(AggregateResult {
        profile_name: profile.name.clone(),
        tpr,
        fpr,
        effective_n_pos,
        effective_n_neg,
    })
}

/// Evaluates several profiles over the same stats, one result per profile
/// in input order.
///
/// A profile that fails (unknown category, bad normalization) yields its
/// error in place; the remaining profiles are still evaluated, so one bad
/// profile cannot sink a vendor comparison.
pub fn compare_profiles(
    stats: &[CategoryStats],
    profiles: &[WeightProfile],
) -> Vec<Result<AggregateResult, CategoryError>> {
    profiles.iter().map(|p| aggregate(stats, p)).collect()
}
