//! ROC curves for score-thresholding detectors, and the stratified
//! subsampling experiment that exposes how small benign sets inflate
//! low-false-positive-rate operating points.
//!
//! The decision rule throughout is `score >= threshold` implies flagged
//! malicious. Curves are exact step functions over the distinct observed
//! scores; nothing is interpolated, because an interpolated point promises
//! an operating point no deterministic threshold can achieve.

use chrono::NaiveDate;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal as NormalCdf};
use thiserror::Error;

use crate::binom::{Proportion, SampleSize};

/// Ground-truth class of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Label {
    /// Benign: flagging it is a false positive.
    Benign,
    /// Malicious: flagging it is a true positive.
    Malware,
}

impl Label {
    /// Decodes the on-disk encoding: benign is 0, malware is 1.
    pub fn from_bit(bit: u8) -> Option<Label> {
        match bit {
            0 => Some(Label::Benign),
            1 => Some(Label::Malware),
            _ => None,
        }
    }

    /// The on-disk encoding.
    pub fn as_bit(self) -> u8 {
        match self {
            Label::Benign => 0,
            Label::Malware => 1,
        }
    }
}

/// Invalid input to a curve construction or to the subsampling experiment.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RocError {
    /// A sample carried a NaN or infinite score.
    #[error("score for sample {sample_id} is not finite")]
    NonFiniteScore {
        /// Identifier of the offending sample.
        sample_id: String,
    },
    /// Every sample was in the same class, so one of the two rates has an
    /// empty denominator.
    #[error(
        "degenerate class balance: got {n_pos} malicious and {n_neg} benign samples, \
         need at least one of each"
    )]
    DegenerateClassBalance {
        /// Malicious samples seen.
        n_pos: u64,
        /// Benign samples seen.
        n_neg: u64,
    },
    /// A requested subsample is larger than the pool it draws from.
    #[error("subsample of {requested} exceeds the {available} available {class} samples")]
    SubsampleTooLarge {
        /// Requested subsample size.
        requested: u64,
        /// Pool size for that class.
        available: u64,
        /// Which class ran short.
        class: &'static str,
    },
    /// Score separation must be finite and nonnegative.
    #[error("separation must be finite and nonnegative, got {0}")]
    BadSeparation(f64),
    /// The experiment needs at least one trial.
    #[error("trial count must be at least 1")]
    ZeroTrials,
}

/// One labeled detector output.
///
/// The score is the detector's maliciousness estimate; higher means more
/// suspicious. Construction rejects non-finite scores so every downstream
/// sort and comparison is total.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredSample {
    sample_id: String,
    label: Label,
    score: f64,
    category: Option<String>,
    first_seen: Option<NaiveDate>,
}

impl ScoredSample {
    /// Builds a sample, rejecting NaN and infinite scores.
    pub fn new(
        sample_id: impl Into<String>,
        label: Label,
        score: f64,
    ) -> Result<ScoredSample, RocError> {
        let sample_id = sample_id.into();
        if !score.is_finite() {
            return Err(RocError::NonFiniteScore { sample_id });
        }
        Ok(ScoredSample {
            sample_id,
            label,
            score,
            category: None,
            first_seen: None,
        })
    }

    /// Attaches a family or source category.
    pub fn with_category(mut self, category: impl Into<String>) -> ScoredSample {
        self.category = Some(category.into());
        self
    }

    /// Attaches the date the sample was first observed in the wild.
    pub fn with_first_seen(mut self, date: NaiveDate) -> ScoredSample {
        self.first_seen = Some(date);
        self
    }

    /// Identifier, unique within a dataset.
    pub fn sample_id(&self) -> &str {
        &self.sample_id
    }

    /// Ground-truth class.
    pub fn label(&self) -> Label {
        self.label
    }

    /// Detector score; always finite.
    pub fn score(&self) -> f64 {
        self.score
    }

    /// Category tag, if any.
    pub fn category(&self) -> Option<&str> {
        self.category.as_deref()
    }

    /// First-seen date, if known.
    pub fn first_seen(&self) -> Option<NaiveDate> {
        self.first_seen
    }
}

/// One operating point: the rates achieved by flagging everything with
/// `score >= threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint {
    /// Fraction of benign samples flagged at this threshold.
    pub fpr: Proportion,
    /// Fraction of malicious samples flagged at this threshold.
    pub tpr: Proportion,
    /// The threshold itself; positive infinity for the flag-nothing point.
    pub threshold: f64,
}

/// An empirical ROC curve.
///
/// Points are ordered by strictly decreasing threshold. The first point is
/// the flag-nothing sentinel (0, 0) at threshold positive infinity; the
/// last is (1, 1) at the minimum observed score, where everything is
/// flagged. Tied scores are inseparable by any threshold, so each group of
/// ties contributes a single step. Both rate sequences are nondecreasing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocCurve {
    points: Vec<RocPoint>,
    n_pos: SampleSize,
    n_neg: SampleSize,
}

impl RocCurve {
    /// Operating points in decreasing-threshold order.
    pub fn points(&self) -> &[RocPoint] {
        &self.points
    }

    /// Number of malicious samples behind the curve.
    pub fn n_pos(&self) -> SampleSize {
        self.n_pos
    }

    /// Number of benign samples behind the curve.
    pub fn n_neg(&self) -> SampleSize {
        self.n_neg
    }

    /// Area under the curve by the trapezoid rule over the step points.
    pub fn auc(&self) -> f64 {
        let mut area = 0.0;
        for pair in self.points.windows(2) {
            let width = pair[1].fpr.value() - pair[0].fpr.value();
            area += width * 0.5 * (pair[0].tpr.value() + pair[1].tpr.value());
        }
        area
    }
}

/// Builds the empirical ROC curve of a scored dataset.
///
/// Needs at least one sample of each class; otherwise one of the rates has
/// an empty denominator and the curve is meaningless.
pub fn roc_from_samples(samples: &[ScoredSample]) -> Result<RocCurve, RocError> {
    let pairs = samples
        .iter()
        .map(|s| (s.score, s.label == Label::Malware))
        .collect();
    curve_from_pairs(pairs)
}

/// Curve construction on bare (score, is_malicious) pairs. Scores must be
/// finite; `ScoredSample` guarantees that for the public entry point.
fn curve_from_pairs(mut pairs: Vec<(f64, bool)>) -> Result<RocCurve, RocError> {
    let n_pos = pairs.iter().filter(|&&(_, m)| m).count() as u64;
    let n_neg = pairs.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(RocError::DegenerateClassBalance { n_pos, n_neg });
    }
    pairs.sort_unstable_by(|a, b| b.0.total_cmp(&a.0));

    let mut points = Vec::with_capacity(pairs.len() + 1);
    points.push(RocPoint {
        fpr: Proportion::clamped(0.0),
        tpr: Proportion::clamped(0.0),
        threshold: f64::INFINITY,
    });
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < pairs.len() {
        let threshold = pairs[i].0;
        // Numeric equality, not bit equality, so 0.0 and -0.0 stay one tie
        // group even though total_cmp separates them in the sort.
        while i < pairs.len() && pairs[i].0 == threshold {
            if pairs[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: Proportion::clamped(fp as f64 / n_neg as f64),
            tpr: Proportion::clamped(tp as f64 / n_pos as f64),
            threshold,
        });
    }

    Ok(RocCurve {
        points,
        n_pos: SampleSize::new(n_pos).expect("checked nonzero"),
        n_neg: SampleSize::new(n_neg).expect("checked nonzero"),
    })
}

/// TPR of the last curve point with `fpr <= fpr_target`.
///
/// This is the conservative step-function read-off: the best achievable
/// detection rate without exceeding the false positive budget.
pub fn tpr_at_fpr(curve: &RocCurve, fpr_target: Proportion) -> Proportion {
    let idx = curve
        .points
        .partition_point(|pt| pt.fpr.value() <= fpr_target.value());
    // idx >= 1 always: the sentinel has fpr = 0.
    curve.points[idx - 1].tpr
}

// Key-derivation domains. Keeping the synthetic generator and the
// subsampling trials in disjoint windows means passing the same seed to
// both cannot correlate their streams.
const DOMAIN_SYNTH: u64 = 0;
const DOMAIN_TRIAL: u64 = 1;

/// Derives an independent ChaCha12 generator from an experiment seed.
///
/// Each (domain, index) pair keys the generator with a disjoint four-word
/// window of a SplitMix64 stream, so per-trial generators are uncorrelated
/// and depend only on the seed and the trial index, never on scheduling.
fn derived_rng(seed: u64, domain: u64, index: u64) -> ChaCha12Rng {
    const PHI: u64 = 0x9e37_79b9_7f4a_7c15;
    let window = domain.wrapping_shl(32).wrapping_add(index);
    let mut state = seed.wrapping_add(PHI.wrapping_mul(window.wrapping_mul(4)));
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = state.wrapping_add(PHI);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
        chunk.copy_from_slice(&z.to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

/// Generates scores from a detector model whose true ROC is known exactly.
///
/// Benign scores are standard normal; malicious scores are normal with the
/// same unit scale shifted up by `separation`. The true curve is therefore
/// TPR(f) = Phi(Phi^inv(f) + separation), available from
/// [`synth_analytic_tpr`] for ground-truth comparisons.
///
/// Output is deterministic in (`n_pos`, `n_neg`, `separation`, `seed`):
/// benign scores are drawn first, then malicious, from a ChaCha12 stream
/// keyed by the seed.
pub fn synth_scores(
    n_pos: SampleSize,
    n_neg: SampleSize,
    separation: f64,
    seed: u64,
) -> Result<Vec<ScoredSample>, RocError> {
    if !separation.is_finite() || separation < 0.0 {
        return Err(RocError::BadSeparation(separation));
    }
    let mut rng = derived_rng(seed, DOMAIN_SYNTH, 0);
    let unit = Normal::new(0.0, 1.0).expect("unit normal is valid");
    let mut out = Vec::with_capacity((n_neg.value() + n_pos.value()) as usize);
    for i in 0..n_neg.value() {
        out.push(ScoredSample {
            sample_id: format!("neg-{i}"),
            label: Label::Benign,
            score: unit.sample(&mut rng),
            category: None,
            first_seen: None,
        });
    }
    for i in 0..n_pos.value() {
        out.push(ScoredSample {
            sample_id: format!("pos-{i}"),
            label: Label::Malware,
            score: unit.sample(&mut rng) + separation,
            category: None,
            first_seen: None,
        });
    }
    Ok(out)
}

/// True TPR of the [`synth_scores`] model at a given FPR:
/// TPR(f) = Phi(Phi^inv(f) + separation).
pub fn synth_analytic_tpr(fpr: Proportion, separation: f64) -> Result<Proportion, RocError> {
    if !separation.is_finite() || separation < 0.0 {
        return Err(RocError::BadSeparation(separation));
    }
    let f = fpr.value();
    if f == 0.0 || f == 1.0 {
        // Phi^inv is infinite at the endpoints; the limit is the endpoint
        // itself for any finite separation.
        return Ok(fpr);
    }
    let std = NormalCdf::new(0.0, 1.0).expect("unit normal is valid");
    Ok(Proportion::clamped(std.cdf(std.inverse_cdf(f) + separation)))
}

/// Outcome of [`subsample_bias_experiment`]: every vector is indexed by
/// position in `fpr_targets`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsampleBiasReport {
    /// FPR budgets at which the curves were read off.
    pub fpr_targets: Vec<Proportion>,
    /// Read-off of the full-sample curve at each target.
    pub tpr_full: Vec<Proportion>,
    /// Mean over trials of the subsample curve read-offs.
    pub mean_tpr_sub: Vec<Proportion>,
    /// Ground truth the optimism is measured against: the analytic curve
    /// when a separation was supplied, otherwise the full-sample read-off.
    pub reference_tpr: Vec<Proportion>,
    /// Whether `reference_tpr` came from the analytic model.
    pub analytic_reference: bool,
    /// `mean_tpr_sub - reference_tpr`, per target. Positive means the
    /// subsampled evaluations overstate detection performance.
    pub optimism: Vec<f64>,
    /// Number of subsampling trials.
    pub trials: u64,
    /// Per-target, per-trial read-offs, for distributional checks.
    #[serde(skip)]
    pub tpr_sub_trials: Vec<Vec<f64>>,
}

/// Measures the optimism introduced by evaluating on stratified subsamples.
///
/// Each trial draws `sub_n_neg` benign and `sub_n_pos` malicious samples
/// without replacement from the respective classes of `samples`, builds the
/// subsample's ROC curve, and reads it off at every target. Per-trial
/// generators are derived from `seed` and the trial index alone, so results
/// are bitwise reproducible and independent of thread scheduling.
///
/// When the scores came from [`synth_scores`], pass the same separation as
/// `analytic_separation` to measure optimism against the exact curve;
/// otherwise optimism is measured against the full-sample read-off.
pub fn subsample_bias_experiment(
    samples: &[ScoredSample],
    sub_n_neg: SampleSize,
    sub_n_pos: SampleSize,
    fpr_targets: &[Proportion],
    trials: u64,
    seed: u64,
    analytic_separation: Option<f64>,
) -> Result<SubsampleBiasReport, RocError> {
    if trials == 0 {
        return Err(RocError::ZeroTrials);
    }
    let full = roc_from_samples(samples)?;
    let neg: Vec<f64> = samples
        .iter()
        .filter(|s| s.label == Label::Benign)
        .map(|s| s.score)
        .collect();
    let pos: Vec<f64> = samples
        .iter()
        .filter(|s| s.label == Label::Malware)
        .map(|s| s.score)
        .collect();
    if sub_n_neg.value() > neg.len() as u64 {
        return Err(RocError::SubsampleTooLarge {
            requested: sub_n_neg.value(),
            available: neg.len() as u64,
            class: "benign",
        });
    }
    if sub_n_pos.value() > pos.len() as u64 {
        return Err(RocError::SubsampleTooLarge {
            requested: sub_n_pos.value(),
            available: pos.len() as u64,
            class: "malicious",
        });
    }

    let tpr_full: Vec<Proportion> = fpr_targets.iter().map(|&t| tpr_at_fpr(&full, t)).collect();
    let (reference_tpr, analytic_reference) = match analytic_separation {
        Some(sep) => {
            let r = fpr_targets
                .iter()
                .map(|&t| synth_analytic_tpr(t, sep))
                .collect::<Result<Vec<_>, _>>()?;
            (r, true)
        }
        None => (tpr_full.clone(), false),
    };

    // One row per trial, collected in trial order regardless of which
    // thread ran it.
    let rows: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = derived_rng(seed, DOMAIN_TRIAL, trial);
            // Benign indices are drawn before malicious ones; part of the
            // reproducibility contract.
            let ni = index::sample(&mut rng, neg.len(), sub_n_neg.value() as usize);
            let pi = index::sample(&mut rng, pos.len(), sub_n_pos.value() as usize);
            let mut pairs =
                Vec::with_capacity((sub_n_neg.value() + sub_n_pos.value()) as usize);
            pairs.extend(ni.iter().map(|i| (neg[i], false)));
            pairs.extend(pi.iter().map(|i| (pos[i], true)));
            let curve = curve_from_pairs(pairs).expect("both classes drawn by construction");
            fpr_targets
                .iter()
                .map(|&t| tpr_at_fpr(&curve, t).value())
                .collect()
        })
        .collect();

    let mut tpr_sub_trials = vec![Vec::with_capacity(trials as usize); fpr_targets.len()];
    for row in &rows {
        for (t, &v) in row.iter().enumerate() {
            tpr_sub_trials[t].push(v);
        }
    }
    let mean_tpr_sub: Vec<Proportion> = tpr_sub_trials
        .iter()
        .map(|vs| Proportion::clamped(vs.iter().sum::<f64>() / trials as f64))
        .collect();
    let optimism: Vec<f64> = mean_tpr_sub
        .iter()
        .zip(&reference_tpr)
        .map(|(m, r)| m.value() - r.value())
        .collect();

    Ok(SubsampleBiasReport {
        fpr_targets: fpr_targets.to_vec(),
        tpr_full,
        mean_tpr_sub,
        reference_tpr,
        analytic_reference,
        optimism,
        trials,
        tpr_sub_trials,
    })
}
