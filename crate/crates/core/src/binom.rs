//! Exact binomial probability mass and distribution functions, stable out to
//! n = 10^8, plus the strict-window probability that drives sample-size
//! planning.
//!
//! The CDF is a regularized incomplete beta evaluated by continued fraction
//! (modified Lentz), switching tails for stability. Degenerate rates (p = 0
//! or p = 1) take closed forms. Window boundaries are compared to the lattice
//! by exact integer tests with a few-ulp guard, never by floating equality:
//! a k/n that lands exactly on a boundary is excluded, as the strict
//! inequalities require.

use serde::Serialize;
use thiserror::Error;

use crate::special;

/// Violations of the domain contracts of the binomial operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BinomError {
    /// A probability or rate outside [0, 1].
    #[error("proportion {0} is outside [0, 1]")]
    ProportionOutOfRange(f64),
    /// A proportion that must not be NaN.
    #[error("proportion is NaN")]
    ProportionNan,
    /// Sample sizes are strictly positive.
    #[error("sample size must be >= 1")]
    ZeroSampleSize,
    /// The success count exceeds the number of trials.
    #[error("trial count {k} out of range for n = {n}")]
    TrialCountOutOfRange {
        /// Offending success count.
        k: u64,
        /// Number of trials.
        n: u64,
    },
    /// Strict-window bounds must satisfy lo < hi.
    #[error("window is inverted or empty: lo = {lo}, hi = {hi}")]
    WindowInverted {
        /// Lower window edge.
        lo: f64,
        /// Upper window edge.
        hi: f64,
    },
}

/// A probability or rate, guaranteed to lie in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Proportion(f64);

impl Proportion {
    /// Validates and wraps a value in [0, 1].
    pub fn new(value: f64) -> Result<Self, BinomError> {
        if value.is_nan() {
            return Err(BinomError::ProportionNan);
        }
        if !(0.0..=1.0).contains(&value) {
            return Err(BinomError::ProportionOutOfRange(value));
        }
        Ok(Proportion(value))
    }

    /// The wrapped value.
    pub fn value(self) -> f64 {
        self.0
    }

    /// Wraps a computed probability, absorbing float excursions a hair
    /// outside [0, 1] that arise from roundoff in otherwise-valid sums.
    pub(crate) fn clamped(value: f64) -> Self {
        Proportion(value.clamp(0.0, 1.0))
    }

    /// True for the degenerate rates 0 and 1.
    pub fn is_degenerate(self) -> bool {
        self.0 == 0.0 || self.0 == 1.0
    }
}

impl std::fmt::Display for Proportion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl TryFrom<f64> for Proportion {
    type Error = BinomError;
    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Proportion::new(value)
    }
}

/// A number of trials or samples, strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct SampleSize(u64);

impl SampleSize {
    /// Validates and wraps a count >= 1.
    pub fn new(value: u64) -> Result<Self, BinomError> {
        if value == 0 {
            return Err(BinomError::ZeroSampleSize);
        }
        Ok(SampleSize(value))
    }

    /// The wrapped count.
    pub fn value(self) -> u64 {
        self.0
    }
}

impl std::fmt::Display for SampleSize {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An observed success count; the pairing 0 <= k <= n is checked at each
/// operation boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct TrialCount(u64);

impl TrialCount {
    /// Wraps a success count.
    pub fn new(value: u64) -> Self {
        TrialCount(value)
    }

    /// The wrapped count.
    pub fn value(self) -> u64 {
        self.0
    }
}

impl std::fmt::Display for TrialCount {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn check_k(k: TrialCount, n: SampleSize) -> Result<(u64, u64), BinomError> {
    if k.value() > n.value() {
        return Err(BinomError::TrialCountOutOfRange {
            k: k.value(),
            n: n.value(),
        });
    }
    Ok((k.value(), n.value()))
}

/// ln P(X = k) for X ~ Binomial(n, p).
///
/// Returns negative infinity for impossible outcomes under degenerate p.
/// Relative error of exp(result) is within 1e-12 for n <= 10^6 and within
/// ~1e-11 at n = 10^8.
pub fn binom_log_pmf(k: TrialCount, n: SampleSize, p: Proportion) -> Result<f64, BinomError> {
    let (k, n) = check_k(k, n)?;
    let pv = p.value();
    if pv == 0.0 {
        return Ok(if k == 0 { 0.0 } else { f64::NEG_INFINITY });
    }
    if pv == 1.0 {
        return Ok(if k == n { 0.0 } else { f64::NEG_INFINITY });
    }
    Ok(special::log_pmf_raw(k, n, pv, 1.0 - pv))
}

/// P(X <= k) for X ~ Binomial(n, p).
pub fn binom_cdf(k: TrialCount, n: SampleSize, p: Proportion) -> Result<Proportion, BinomError> {
    let (k, n) = check_k(k, n)?;
    let pv = p.value();
    if k == n || pv == 0.0 {
        return Ok(Proportion(1.0));
    }
    if pv == 1.0 {
        // k < n here
        return Ok(Proportion(0.0));
    }
    Ok(Proportion::clamped(special::cdf_raw(k, n, pv, 1.0 - pv)))
}

/// P(X > k), the upper tail complementing [`binom_cdf`]. Computed directly
/// rather than as 1 - cdf so small tails keep their relative accuracy.
pub(crate) fn binom_sf(k: u64, n: u64, p: f64) -> f64 {
    debug_assert!(k <= n);
    if k == n || p == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return 1.0;
    }
    special::sf_raw(k, n, p, 1.0 - p).clamp(0.0, 1.0)
}

/// Relative slack for deciding whether a window edge lands exactly on the
/// integer lattice: lo*n and hi*n carry a few rounding steps, so equality is
/// tested within 8 ulps instead of bitwise.
fn lattice_eps(t: f64) -> f64 {
    8.0 * f64::EPSILON * t.abs().max(1.0)
}

/// The integer t provably sits on, treating near-integers within the guard
/// as exact lattice hits (t itself carries the rounding of a product like
/// lo * n, so bitwise integrality would misclassify).
pub(crate) fn lattice_integer(t: f64) -> Option<f64> {
    let r = t.round();
    ((t - r).abs() <= lattice_eps(t)).then_some(r)
}

/// Smallest integer strictly greater than t, with lattice hits excluded.
fn lattice_above(t: f64) -> f64 {
    match lattice_integer(t) {
        Some(r) => r + 1.0,
        None => t.ceil(),
    }
}

/// Largest integer strictly less than t, same lattice treatment.
fn lattice_below(t: f64) -> f64 {
    match lattice_integer(t) {
        Some(r) => r - 1.0,
        None => t.floor(),
    }
}

/// The inclusive integer window {k : lo*n < k < hi*n} intersected with
/// [0, n], or None when empty.
pub(crate) fn strict_window(lo: f64, hi: f64, n: u64) -> Option<(u64, u64)> {
    let nf = n as f64;
    let k_min = lattice_above(lo * nf).max(0.0);
    let k_max = lattice_below(hi * nf).min(nf);
    if k_min > k_max {
        return None;
    }
    Some((k_min as u64, k_max as u64))
}

/// Windows at most this wide are summed term by term; wider ones go through
/// two continued-fraction tail evaluations.
const WINDOW_SUM_MAX: u64 = 4096;

/// P(lo < X/n < hi) for X ~ Binomial(n, p), both inequalities strict.
///
/// A k/n exactly equal to lo or hi is excluded via the lattice guard. The
/// window is clamped to [0, n]; an empty window yields probability zero.
pub fn binom_cdf_strict_between(
    lo: f64,
    hi: f64,
    n: SampleSize,
    p: Proportion,
) -> Result<Proportion, BinomError> {
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(BinomError::WindowInverted { lo, hi });
    }
    let n = n.value();
    let pv = p.value();
    let Some((a, b)) = strict_window(lo, hi, n) else {
        return Ok(Proportion(0.0));
    };
    Ok(Proportion::clamped(strict_window_mass(a, b, n, pv)))
}

/// P(a <= X <= b) with the window already resolved to lattice bounds.
pub(crate) fn strict_window_mass(a: u64, b: u64, n: u64, p: f64) -> f64 {
    debug_assert!(a <= b && b <= n);
    if p == 0.0 {
        return if a == 0 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return if b == n { 1.0 } else { 0.0 };
    }
    let q = 1.0 - p;
    if b - a <= WINDOW_SUM_MAX {
        return special::window_sum(a, b, n, p, q).clamp(0.0, 1.0);
    }
    let below = if a == 0 {
        0.0
    } else {
        special::cdf_raw(a - 1, n, p, q)
    };
    let above = if b == n {
        0.0
    } else {
        special::sf_raw(b, n, p, q)
    };
    (1.0 - below - above).clamp(0.0, 1.0)
}
