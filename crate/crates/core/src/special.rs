//! Internal special-function kernels for the binomial distribution.
//!
//! Everything here works in log space and keeps every intermediate quantity
//! small, so the results stay accurate out to trial counts of 10^8 where the
//! naive `lgamma(n+1) - lgamma(k+1) - lgamma(n-k+1)` route loses eight digits
//! to cancellation between ~1e9-magnitude terms.

/// ln(2*pi)
pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_3;

/// ln(sqrt(2*pi))
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// Error of the Stirling approximation: stirlerr(n) = ln(n!) - ln(sqrt(2*pi*n)*(n/e)^n).
///
/// Exact factorials below 16 (15! < 2^53, so the table entries are exact
/// integers in f64); the asymptotic series above. Series truncation error at
/// n = 16 is ~1e-16 absolute and falls off as n^-11.
pub(crate) fn stirlerr(n: f64) -> f64 {
    debug_assert!(n >= 1.0);
    if n < 15.5 {
        let mut fact = 1.0_f64;
        let mut i = 2.0_f64;
        while i <= n {
            fact *= i;
            i += 1.0;
        }
        return fact.ln() - (n + 0.5) * n.ln() + n - LN_SQRT_2PI;
    }
    let nn = n * n;
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
}

/// Binomial deviance term bd0(x, m) = x*ln(x/m) + m - x, evaluated without
/// cancellation when x is close to m.
///
/// Near x = m the direct form subtracts two nearly equal quantities; the
/// expansion in v = (x-m)/(x+m) sums only positive, shrinking terms:
/// bd0 = (x-m)*v + sum_{j>=1} 2*x*v^(2j+1)/(2j+1).
pub(crate) fn bd0(x: f64, m: f64) -> f64 {
    debug_assert!(x > 0.0 && m > 0.0);
    if (x - m).abs() < 0.1 * (x + m) {
        let v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        let v2 = v * v;
        let mut j = 1.0_f64;
        loop {
            ej *= v2;
            let s1 = s + ej / (2.0 * j + 1.0);
            if s1 == s {
                return s1;
            }
            s = s1;
            j += 1.0;
        }
    }
    x * (x / m).ln() + m - x
}

/// ln P(X = k) for X ~ Binomial(n, p), interior p only. `q` is the caller's
/// exact complement of `p`; keeping the pair avoids re-rounding 1 - p.
pub(crate) fn log_pmf_raw(k: u64, n: u64, p: f64, q: f64) -> f64 {
    debug_assert!(n >= 1 && k <= n);
    debug_assert!(p > 0.0 && p < 1.0);
    let nf = n as f64;
    if k == 0 {
        // n*ln(q); ln_1p on the exact -p dodges the rounding of 1 - p.
        return if p <= 0.5 {
            nf * (-p).ln_1p()
        } else {
            nf * q.ln()
        };
    }
    if k == n {
        // n*ln(p); for p >= 0.5 the difference p - 1 is exact (Sterbenz).
        return if p >= 0.5 {
            nf * (p - 1.0).ln_1p()
        } else {
            nf * p.ln()
        };
    }
    let kf = k as f64;
    let nk = (n - k) as f64;
    let lc = stirlerr(nf) - stirlerr(kf) - stirlerr(nk) - bd0(kf, nf * p) - bd0(nk, nf * q);
    // k*(n-k) is exact below 2^53 (n up to ~1.9e8), and writing the factor
    // this way is bit-symmetric under k <-> n-k, so mirror-image windows at
    // p = 0.5 sum to bitwise-identical masses.
    let lf = LN_2PI + (kf * nk).ln() - nf.ln();
    lc - 0.5 * lf
}

/// Continued fraction for the regularized incomplete beta function, evaluated
/// with the modified Lentz algorithm. Caller guarantees x is on the
/// fast-converging side (x below the distribution mean).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 3e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    // Convergence near the transition region needs O(sqrt(min(a,b))) terms.
    let max_iter = 600 + 10 * (a.min(b).sqrt() as usize);
    for m in 1..=max_iter {
        let mf = m as f64;
        let m2 = 2.0 * mf;
        let aa = mf * (b - mf) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + mf) * (qab + mf) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta I_x(a, b) for integer a, b >= 1, evaluated
/// directly (no tail switch; caller picks the orientation).
///
/// The prefactor x^a*(1-x)^b/(a*B(a,b)) equals pmf(b-1; a+b-1, cx) * cx, so
/// it rides on the stable log-PMF kernel instead of a cancellation-prone
/// lgamma difference. `cx` is the caller's complement of `x`.
fn inc_beta_direct(a: u64, b: u64, x: f64, cx: f64) -> f64 {
    debug_assert!(a >= 1 && b >= 1);
    debug_assert!(x > 0.0 && x < 1.0);
    let ln_pref = log_pmf_raw(b - 1, a + b - 1, cx, x);
    let v = ln_pref.exp() * cx * beta_cf(a as f64, b as f64, x);
    v.clamp(0.0, 1.0)
}

/// Tails with at most this many terms are summed directly; the PMF recurrence
/// is immune to the rounding of q = 1 - p, which costs the continued-fraction
/// route up to ~1e-10 of relative accuracy near the distribution center at
/// n = 10^8.
pub(crate) const TAIL_SUM_MAX: u64 = 4096;

/// P(a <= X <= b) for X ~ Binomial(n, p), interior p, summed from an anchor
/// PMF near the in-window mode by the two-term ratio recurrence. Terms fall
/// off away from the mode; Neumaier compensation keeps the summation error
/// at a few ulps.
pub(crate) fn window_sum(a: u64, b: u64, n: u64, p: f64, q: f64) -> f64 {
    debug_assert!(a <= b && b <= n);
    let k0 = ((n as f64 * p).round() as u64).clamp(a, b);
    let anchor = log_pmf_raw(k0, n, p, q).exp();

    let mut sum = anchor;
    let mut comp = 0.0_f64;
    let add = |term: f64, sum: &mut f64, comp: &mut f64| {
        let t = *sum + term;
        if sum.abs() >= term.abs() {
            *comp += (*sum - t) + term;
        } else {
            *comp += (term - t) + *sum;
        }
        *sum = t;
    };

    // downward: pmf(k-1) = pmf(k) * k*q / ((n-k+1)*p)
    let mut term = anchor;
    let mut k = k0;
    while k > a {
        term *= k as f64 * q / ((n - k + 1) as f64 * p);
        add(term, &mut sum, &mut comp);
        k -= 1;
    }
    // upward: pmf(k+1) = pmf(k) * (n-k)*p / ((k+1)*q)
    let mut term = anchor;
    let mut k = k0;
    while k < b {
        term *= (n - k) as f64 * p / ((k + 1) as f64 * q);
        add(term, &mut sum, &mut comp);
        k += 1;
    }
    sum + comp
}

/// Central-band half-width, in standard deviations, inside which the
/// continued fraction is re-oriented so its argument is the exactly
/// representable p rather than the rounded complement.
const EXACT_ARG_BAND_SD: f64 = 3.0;

/// P(X <= k) for X ~ Binomial(n, p), interior p, k < n.
pub(crate) fn cdf_raw(k: u64, n: u64, p: f64, q: f64) -> f64 {
    debug_assert!(k < n);
    if k + 1 <= TAIL_SUM_MAX {
        return window_sum(0, k, n, p, q).clamp(0.0, 1.0);
    }
    if n - k <= TAIL_SUM_MAX {
        let t = window_sum(k + 1, n, n, p, q);
        // complementing inflates the sum's ~1e-15 relative error by t/(1-t);
        // up to t = 0.9 that still beats the continued fraction's ~1e-13
        if t <= 0.9 {
            return (1.0 - t).clamp(0.0, 1.0);
        }
    }
    // lower orientation I_q(n-k, k+1) converges fast iff q*(n+3) < n-k+1;
    // the complementary condition governs the upper orientation
    let nf = n as f64;
    let kf = k as f64;
    let lower_converges = q * (nf + 3.0) < nf - kf + 1.0;
    if lower_converges && !central_band(kf, nf, p, q) {
        inc_beta_direct(n - k, k + 1, q, p)
    } else {
        (1.0 - inc_beta_direct(k + 1, n - k, p, q)).clamp(0.0, 1.0)
    }
}

/// True within a few standard deviations of the mean when p < 0.5 (where
/// q = 1 - p carries a half-ulp rounding that the continued fraction would
/// amplify); there the orientation with exact argument p is preferred.
fn central_band(kf: f64, nf: f64, p: f64, q: f64) -> bool {
    p < 0.5 && (kf - nf * p).abs() < EXACT_ARG_BAND_SD * (nf * p * q).sqrt()
}

/// P(X > k) for X ~ Binomial(n, p), interior p, k < n.
pub(crate) fn sf_raw(k: u64, n: u64, p: f64, q: f64) -> f64 {
    debug_assert!(k < n);
    if n - k <= TAIL_SUM_MAX {
        return window_sum(k + 1, n, n, p, q).clamp(0.0, 1.0);
    }
    if k + 1 <= TAIL_SUM_MAX {
        let t = window_sum(0, k, n, p, q);
        if t <= 0.9 {
            return (1.0 - t).clamp(0.0, 1.0);
        }
    }
    let nf = n as f64;
    let kf = k as f64;
    let upper_converges = p * (nf + 3.0) < kf + 2.0;
    if upper_converges || central_band(kf, nf, p, q) {
        inc_beta_direct(k + 1, n - k, p, q)
    } else {
        (1.0 - inc_beta_direct(n - k, k + 1, q, p)).clamp(0.0, 1.0)
    }
}
