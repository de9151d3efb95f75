//! Small-sample estimator bias: the direction an empirical rate leans, and
//! the probability that it misses low by a damaging margin.
//!
//! For rare events the estimate p-hat = k/n from a too-small sample is more
//! likely to come out below p than above it, and a sample that produces zero
//! or one hit understates the rate by half or worse. These operations
//! quantify both effects exactly, so the sawtooth structure that the lattice
//! imposes at small n comes through instead of being smoothed away.

use serde::Serialize;
use thiserror::Error;

use crate::binom::{self, Proportion, SampleSize};
use crate::special;

/// Violations of the bias-analysis domain contracts.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BiasError {
    /// The estimator is exact at p = 0 and p = 1; bias is vacuous there.
    #[error("estimator bias is undefined at the degenerate rate p = {0}")]
    DegenerateRate(f64),
    /// Severity thresholds are interior fractions of p.
    #[error("fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
}

/// Where the probability mass of p-hat = k/n sits relative to the true rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SkewReport {
    /// P(p-hat < p).
    pub p_under: Proportion,
    /// P(p-hat > p).
    pub p_over: Proportion,
    /// P(p-hat = p); nonzero only when n*p lands on the lattice.
    pub p_exact: Proportion,
    /// p_under - p_over: positive means underestimation is the likelier miss.
    pub skew: f64,
}

/// One cell of a bias table: the skew decomposition plus the severe-miss
/// probability at a given (p, n).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BiasRow {
    /// True rate.
    pub p: Proportion,
    /// Sample size.
    pub n: SampleSize,
    /// P(p-hat < p) - P(p-hat > p).
    pub skew: f64,
    /// P(p-hat < p).
    pub p_under: Proportion,
    /// P(p-hat > p).
    pub p_over: Proportion,
    /// P(p-hat = p).
    pub p_exact: Proportion,
    /// P(p-hat < (1-fraction)*p) at the table's severity fraction.
    pub severe: Proportion,
}

/// Splits the distribution of p-hat around the true rate: mass below, at,
/// and above p, with the directional skew of the two miss probabilities.
///
/// The point mass P(p-hat = p) exists only when n*p is an integer, decided
/// by the same few-ulp lattice guard the window operations use.
pub fn underestimation_skew(p: Proportion, n: SampleSize) -> Result<SkewReport, BiasError> {
    if p.is_degenerate() {
        return Err(BiasError::DegenerateRate(p.value()));
    }
    let nv = n.value();
    let pv = p.value();
    let qv = 1.0 - pv;
    let t = nv as f64 * pv;
    let (under, exact, over) = match binom::lattice_integer(t) {
        Some(m) => {
            let m = m as u64;
            let under = if m == 0 {
                0.0
            } else {
                special::cdf_raw(m - 1, nv, pv, qv)
            };
            let exact = special::log_pmf_raw(m, nv, pv, qv).exp();
            (under, exact, binom::binom_sf(m, nv, pv))
        }
        None => {
            let m = t.floor() as u64; // t < n, so m <= n - 1
            let under = special::cdf_raw(m, nv, pv, qv);
            (under, 0.0, binom::binom_sf(m, nv, pv))
        }
    };
    Ok(SkewReport {
        p_under: Proportion::clamped(under),
        p_over: Proportion::clamped(over),
        p_exact: Proportion::clamped(exact),
        skew: under - over,
    })
}

/// P(p-hat < (1-fraction)*p): the probability of understating the rate by
/// more than the given fraction. Strict inequality; a count exactly on the
/// threshold does not qualify as severe.
pub fn severe_underestimation(
    p: Proportion,
    n: SampleSize,
    fraction: f64,
) -> Result<Proportion, BiasError> {
    if p.is_degenerate() {
        return Err(BiasError::DegenerateRate(p.value()));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(BiasError::BadFraction(fraction));
    }
    let nv = n.value();
    let pv = p.value();
    let t = nv as f64 * pv * (1.0 - fraction);
    let cutoff = match binom::lattice_integer(t) {
        Some(m) if m == 0.0 => return Ok(Proportion::clamped(0.0)),
        Some(m) => m as u64 - 1, // lattice hit is excluded by strictness
        None => t.floor() as u64,
    };
    Ok(Proportion::clamped(special::cdf_raw(
        cutoff,
        nv,
        pv,
        1.0 - pv,
    )))
}

/// The (p, n) cross product of [`underestimation_skew`] and
/// [`severe_underestimation`], row-ordered by p first, then n: plot-ready
/// for the bias-versus-sample-size curves.
pub fn bias_curves(
    p_grid: &[Proportion],
    n_list: &[SampleSize],
    fraction: f64,
) -> Result<Vec<BiasRow>, BiasError> {
    let mut rows = Vec::with_capacity(p_grid.len() * n_list.len());
    for &p in p_grid {
        for &n in n_list {
            let s = underestimation_skew(p, n)?;
            let severe = severe_underestimation(p, n, fraction)?;
            rows.push(BiasRow {
                p,
                n,
                skew: s.skew,
                p_under: s.p_under,
                p_over: s.p_over,
                p_exact: s.p_exact,
                severe,
            });
        }
    }
    Ok(rows)
}
