//! Acceptance suite: one test per headline claim the toolkit makes, with
//! every tolerance pinned in code. Test names carry the criterion number,
//! so the harness output doubles as a pass/fail checklist; each test also
//! prints a `criterion NN: PASS` line with the measured values (visible
//! under `--nocapture`).
//!
//! Reference values below were frozen from independent high-precision
//! scans (exact PMF summation, 40+ digit arithmetic where margins were
//! tight) so a regression in the Rust kernels cannot hide behind itself.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use chrono::{Days, NaiveDate};
use evalplan_core::{
    aggregate, bias_curves, binom_cdf, contamination_rate, coverage, required_sample_size,
    roc_from_samples, run_delay_protocol, select_eligible, severe_underestimation,
    subsample_bias_experiment, synth_analytic_tpr, synth_scores, underestimation_skew,
    CategoryStats, ConfidenceLevel, DelayProtocolConfig, Label, ManifestEntry, Proportion,
    SampleSize, ScoredSample, ToleranceSpec, TrialCount, WeightProfile,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};

fn prop(v: f64) -> Proportion {
    Proportion::new(v).unwrap()
}

fn size(v: u64) -> SampleSize {
    SampleSize::new(v).unwrap()
}

fn default_n_max() -> SampleSize {
    size(evalplan_core::planner::DEFAULT_N_MAX)
}

/// Criterion 1: planning for rare benign-family FPRs lands in the expected
/// order of magnitude, and does so fast enough to sit in a CLI.
#[test]
fn criterion_01_rare_rate_sample_sizes() {
    const BUDGET: Duration = Duration::from_secs(10);
    // Frozen from the independent exact scan.
    const PIN_1E5: u64 = 1_466_667;
    const PIN_1E3: u64 = 14_667;

    let t0 = Instant::now();
    let tol = ToleranceSpec::relative(0.5).unwrap();
    let c = ConfidenceLevel::new(0.95).unwrap();
    let rare = required_sample_size(prop(1e-5), tol, c, default_n_max(), 0).unwrap();
    let common = required_sample_size(prop(1e-3), tol, c, default_n_max(), 0).unwrap();
    let elapsed = t0.elapsed();

    assert_eq!(rare.n_required.value(), PIN_1E5);
    assert!((1_000_000..=3_000_000).contains(&rare.n_required.value()));
    assert_eq!(common.n_required.value(), PIN_1E3);
    assert!((10_000..=30_000).contains(&common.n_required.value()));
    assert!(
        elapsed < BUDGET,
        "planner took {elapsed:.2?}, budget {BUDGET:?}"
    );
    println!(
        "criterion 01: PASS n*(p=1e-5)={} n*(p=1e-3)={} in {elapsed:.2?}",
        rare.n_required, common.n_required
    );
}

/// Criterion 2: planning a tight TPR estimate is cheap and lands in range.
#[test]
fn criterion_02_tpr_sample_size() {
    const BUDGET: Duration = Duration::from_secs(5);
    const PIN: u64 = 9_505;

    let t0 = Instant::now();
    let r = required_sample_size(
        prop(0.8),
        ToleranceSpec::relative(0.01).unwrap(),
        ConfidenceLevel::new(0.95).unwrap(),
        default_n_max(),
        0,
    )
    .unwrap();
    let elapsed = t0.elapsed();

    assert_eq!(r.n_required.value(), PIN);
    assert!((5_000..=50_000).contains(&r.n_required.value()));
    assert!(
        elapsed < BUDGET,
        "planner took {elapsed:.2?}, budget {BUDGET:?}"
    );
    println!(
        "criterion 02: PASS n*(p=0.8, 1% rel)={} in {elapsed:.2?}",
        r.n_required
    );
}

/// Criterion 3: analytic coverage agrees with brute-force Monte Carlo on a
/// spread of (p, n, sigma) triples. Every triple must land within 3 standard
/// errors of the simulation, and at least 18 of 20 within 2.
#[test]
fn criterion_03_coverage_matches_monte_carlo() {
    const BUDGET: Duration = Duration::from_secs(60);
    const DRAWS: u64 = 100_000;
    // Window edges all sit >= 0.05 counts from the nearest integer so the
    // plain comparisons below agree with the library's lattice handling.
    const TRIPLES: [(f64, u64, f64); 20] = [
        (0.073, 137, 0.05),
        (0.217, 450, 0.04),
        (0.5, 999, 0.035),
        (0.31, 47, 0.11),
        (0.013, 2000, 0.0071),
        (0.13, 89, 0.077),
        (0.42, 5000, 0.0133),
        (0.66, 777, 0.033),
        (0.91, 1234, 0.0173),
        (0.0047, 9973, 0.0023),
        (0.27, 33, 0.17),
        (0.55, 10000, 0.00913),
        (0.815, 61, 0.097),
        (0.38, 311, 0.053),
        (0.047, 813, 0.019),
        (0.62, 97, 0.087),
        (0.205, 4999, 0.011),
        (0.74, 151, 0.067),
        (0.095, 677, 0.021),
        (0.33, 29, 0.21),
    ];

    let t0 = Instant::now();
    let mut rng = ChaCha12Rng::seed_from_u64(0xacc3);
    let mut within_two = 0usize;
    let mut worst_z = 0.0f64;
    for &(p, n, sigma) in &TRIPLES {
        let cov = coverage(prop(p), size(n), ToleranceSpec::absolute(sigma).unwrap())
            .unwrap()
            .value();
        let lo = (p - sigma) * n as f64;
        let hi = (p + sigma) * n as f64;
        assert!(
            (lo - lo.round()).abs() > 0.04 && (hi - hi.round()).abs() > 0.04,
            "triple (p={p}, n={n}, sigma={sigma}) puts a window edge on the lattice"
        );
        let dist = Binomial::new(n, p).unwrap();
        let mut hits = 0u64;
        for _ in 0..DRAWS {
            let k = dist.sample(&mut rng) as f64;
            if k > lo && k < hi {
                hits += 1;
            }
        }
        let emp = hits as f64 / DRAWS as f64;
        let se = (cov * (1.0 - cov) / DRAWS as f64).sqrt();
        let z = (emp - cov).abs() / se;
        worst_z = worst_z.max(z);
        assert!(
            z <= 3.0,
            "coverage({p}, {n}, {sigma}) = {cov} vs MC {emp}: z = {z:.2}"
        );
        if z <= 2.0 {
            within_two += 1;
        }
    }
    let elapsed = t0.elapsed();
    assert!(within_two >= 18, "only {within_two}/20 within 2 SE");
    assert!(elapsed < BUDGET, "MC took {elapsed:.2?}, budget {BUDGET:?}");
    println!(
        "criterion 03: PASS 20/20 within 3 SE, {within_two}/20 within 2 SE, worst |z|={worst_z:.2} in {elapsed:.2?}"
    );
}

/// Criterion 4: two closed-form anchors hold exactly. A coin flip needs six
/// tosses for 95% confidence at half-width 0.5, and ten tosses land within
/// 0.15 of fair with probability 672/1024.
#[test]
fn criterion_04_closed_form_anchors() {
    let r = required_sample_size(
        prop(0.5),
        ToleranceSpec::absolute(0.5).unwrap(),
        ConfidenceLevel::new(0.95).unwrap(),
        default_n_max(),
        0,
    )
    .unwrap();
    assert_eq!(r.n_required.value(), 6);

    let cov = coverage(prop(0.5), size(10), ToleranceSpec::absolute(0.15).unwrap())
        .unwrap()
        .value();
    assert!(
        (cov - 0.65625).abs() < 1e-12,
        "coverage(0.5, 10, 0.15) = {cov}, want 672/1024"
    );
    println!("criterion 04: PASS n*(coin, 0.5)=6, coverage(0.5, 10, 0.15)={cov}");
}

/// Criterion 5: the point estimate skews toward underestimation everywhere
/// on a small-rate grid, the pinned reference value holds, and the skew is
/// antisymmetric under p -> 1-p.
#[test]
fn criterion_05_underestimation_skew() {
    // Frozen from 45-digit exact computation.
    const PIN: f64 = 0.101794;
    const PIN_TOL: f64 = 1e-5;

    for &p in &[0.001, 0.01, 0.1] {
        for &n in &[30u64, 100, 300] {
            let s = underestimation_skew(prop(p), size(n)).unwrap();
            assert!(
                s.skew > 0.0,
                "skew(p={p}, n={n}) = {} not positive",
                s.skew
            );
        }
    }

    let pinned = underestimation_skew(prop(0.01), size(100)).unwrap().skew;
    assert!(
        (pinned - PIN).abs() < PIN_TOL,
        "skew(0.01, 100) = {pinned}, want {PIN} +/- {PIN_TOL}"
    );

    // Antisymmetry: draw p in the upper half so 1-p is exact in f64 and the
    // identity is testable at full precision.
    let mut rng = ChaCha12Rng::seed_from_u64(0xacc5);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let p_hi = 0.5 + 0.5 * rng.gen::<f64>();
        let q = 1.0 - p_hi;
        let n = rng.gen_range(1..=3000u64);
        let a = underestimation_skew(prop(p_hi), size(n)).unwrap().skew;
        let b = underestimation_skew(prop(q), size(n)).unwrap().skew;
        worst = worst.max((a + b).abs());
        assert!(
            (a + b).abs() <= 1e-12,
            "skew({p_hi}, {n}) + skew({q}, {n}) = {}",
            a + b
        );
    }
    println!(
        "criterion 05: PASS positive on 3x3 grid, skew(0.01, 100)={pinned:.9}, worst antisymmetry residual {worst:.2e}"
    );
}

/// Criterion 6: the severe-underestimation probability matches its closed
/// form at the pinned point, and along the preset n ladder it is monotone
/// nonincreasing at p = 0.5 once n reaches 100.
#[test]
fn criterion_06_severe_underestimation() {
    // P(clean run of 100 at fpr 0.01) = 0.99^100; frozen exact value.
    const PIN: f64 = 0.3660323412732295;

    let got = severe_underestimation(prop(0.01), size(100), 0.5)
        .unwrap()
        .value();
    assert!((got - PIN).abs() < 1e-12, "severe = {got}, want {PIN}");
    assert!(
        (got - 0.99f64.powi(100)).abs() < 1e-12,
        "severe = {got} disagrees with direct 0.99^100"
    );

    let ns: Vec<SampleSize> = [30u64, 100, 300, 1000, 3000]
        .iter()
        .map(|&n| size(n))
        .collect();
    let rows = bias_curves(&[prop(0.5)], &ns, 0.5).unwrap();
    for w in rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.n.value() >= 100 {
            assert!(
                b.severe.value() <= a.severe.value(),
                "severe rose from {} (n={}) to {} (n={})",
                a.severe,
                a.n,
                b.severe,
                b.n
            );
        } else if b.severe.value() > a.severe.value() {
            // Small-n lattice effects may break monotonicity below n = 100;
            // allowed, but kept visible.
            println!(
                "criterion 06: note: severe rose {} -> {} between n={} and n={} (below the n=100 regime)",
                a.severe, b.severe, a.n, b.n
            );
        }
    }
    println!("criterion 06: PASS severe(0.01, 100, 0.5)={got:.16}, ladder monotone for n >= 100");
}

/// Criterion 7: read-offs at fpr = 1e-3 from 1k/1k subsamples of a synthetic
/// detector are optimistic: the trial mean sits strictly above the analytic
/// truth, a sign test over 200 trials rejects a fair coin at p < 0.01, and
/// growing the subsample to 10k/10k shrinks the optimism.
#[test]
fn criterion_07_subsample_optimism() {
    const BUDGET: Duration = Duration::from_secs(300);
    const TRIALS: u64 = 200;
    const SIGN_TEST_ALPHA: f64 = 0.01;

    let t0 = Instant::now();
    let samples = synth_scores(size(100_000), size(100_000), 2.0, 0xacc7).unwrap();
    let targets = [prop(1e-3)];
    let truth = synth_analytic_tpr(targets[0], 2.0).unwrap().value();

    let small =
        subsample_bias_experiment(&samples, size(1_000), size(1_000), &targets, TRIALS, 7, Some(2.0))
            .unwrap();
    assert!(
        small.mean_tpr_sub[0].value() > truth,
        "mean subsampled read-off {} not above truth {truth}",
        small.mean_tpr_sub[0]
    );
    assert!(small.optimism[0] > 0.0);

    // One-sided sign test: under unbiased read-offs each trial clears the
    // truth with probability 1/2, so P(X >= above) with X ~ Bin(200, 0.5).
    let above = small.tpr_sub_trials[0]
        .iter()
        .filter(|&&t| t > truth)
        .count() as u64;
    assert!(above >= 1);
    let p_value = 1.0
        - binom_cdf(TrialCount::new(above - 1), size(TRIALS), prop(0.5))
            .unwrap()
            .value();
    assert!(
        p_value < SIGN_TEST_ALPHA,
        "sign test: {above}/{TRIALS} above truth, p = {p_value}"
    );

    let big = subsample_bias_experiment(
        &samples,
        size(10_000),
        size(10_000),
        &targets,
        TRIALS,
        8,
        Some(2.0),
    )
    .unwrap();
    assert!(
        big.optimism[0] < small.optimism[0],
        "optimism did not shrink: 1k/1k {} vs 10k/10k {}",
        small.optimism[0],
        big.optimism[0]
    );

    let elapsed = t0.elapsed();
    assert!(
        elapsed < BUDGET,
        "experiment took {elapsed:.2?}, budget {BUDGET:?}"
    );
    println!(
        "criterion 07: PASS mean read-off {:.4} vs truth {truth:.4}, {above}/{TRIALS} trials above (p={p_value:.2e}), optimism {:.4} -> {:.4} in {elapsed:.2?}",
        small.mean_tpr_sub[0].value(),
        small.optimism[0],
        big.optimism[0]
    );
}

/// Every achievable operating point, by trying every threshold on the raw
/// samples. Quadratic and only for cross-checking the real constructor.
fn exhaustive_curve(samples: &[ScoredSample]) -> Vec<(f64, f64, f64)> {
    let mut thresholds: Vec<f64> = samples.iter().map(|s| s.score()).collect();
    thresholds.sort_unstable_by(f64::total_cmp);
    thresholds.dedup();
    thresholds.reverse();
    let n_pos = samples.iter().filter(|s| s.label() == Label::Malware).count() as f64;
    let n_neg = samples.len() as f64 - n_pos;
    let mut out = vec![(f64::INFINITY, 0.0, 0.0)];
    for t in thresholds {
        let fp = samples
            .iter()
            .filter(|s| s.label() == Label::Benign && s.score() >= t)
            .count() as f64;
        let tp = samples
            .iter()
            .filter(|s| s.label() == Label::Malware && s.score() >= t)
            .count() as f64;
        out.push((t, fp / n_neg, tp / n_pos));
    }
    out
}

/// Criterion 8: the curve constructor agrees point-for-point with exhaustive
/// threshold enumeration on 1000 random small instances, and flipping all
/// labels inverts the AUC.
#[test]
fn criterion_08_curve_matches_exhaustive_enumeration() {
    let mut rng = ChaCha12Rng::seed_from_u64(0xacc8);
    for case in 0..1000 {
        let total = rng.gen_range(2..=20usize);
        let n_pos = rng.gen_range(1..total);
        let samples: Vec<ScoredSample> = (0..total)
            .map(|i| {
                let label = if i < n_pos { Label::Malware } else { Label::Benign };
                // Half the scores come from a coarse lattice to force ties.
                let score = if rng.gen_bool(0.5) {
                    rng.gen_range(0..=8) as f64 / 4.0
                } else {
                    rng.gen_range(-2.0..2.0)
                };
                ScoredSample::new(format!("s{case}-{i}"), label, score).unwrap()
            })
            .collect();

        let curve = roc_from_samples(&samples).unwrap();
        let got: Vec<(f64, f64, f64)> = curve
            .points()
            .iter()
            .map(|pt| (pt.threshold, pt.fpr.value(), pt.tpr.value()))
            .collect();
        assert_eq!(got, exhaustive_curve(&samples), "case {case}");

        let flipped: Vec<ScoredSample> = samples
            .iter()
            .map(|s| {
                let label = match s.label() {
                    Label::Malware => Label::Benign,
                    Label::Benign => Label::Malware,
                };
                ScoredSample::new(s.sample_id(), label, s.score()).unwrap()
            })
            .collect();
        let auc_flipped = roc_from_samples(&flipped).unwrap().auc();
        assert!(
            (curve.auc() + auc_flipped - 1.0).abs() <= 1e-12,
            "case {case}: auc {} + flipped {} != 1",
            curve.auc(),
            auc_flipped
        );
    }
    println!("criterion 08: PASS 1000/1000 exact point-set matches, AUC inversion within 1e-12");
}

/// Criterion 9: aggregation identities on 1000 random instances. A one-hot
/// profile returns the single category's rate bitwise, mixing two profiles
/// mixes their results linearly, and every aggregate stays inside the convex
/// hull of the category rates.
#[test]
fn criterion_09_aggregation_identities() {
    let mut rng = ChaCha12Rng::seed_from_u64(0xacc9);
    for case in 0..1000 {
        let nb = rng.gen_range(1..=4usize);
        let nm = rng.gen_range(1..=4usize);
        let mut stats = Vec::new();
        for i in 0..nb {
            let n = rng.gen_range(1..=500u64);
            let detected = rng.gen_range(0..=n);
            stats.push(CategoryStats::new(format!("b{i}"), Label::Benign, size(n), detected).unwrap());
        }
        for i in 0..nm {
            let n = rng.gen_range(1..=500u64);
            let detected = rng.gen_range(0..=n);
            stats.push(CategoryStats::new(format!("m{i}"), Label::Malware, size(n), detected).unwrap());
        }

        // One-hot identity, bitwise.
        let bi = rng.gen_range(0..nb);
        let mi = rng.gen_range(0..nm);
        let onehot = WeightProfile {
            name: format!("onehot-{case}"),
            benign_weights: BTreeMap::from([(format!("b{bi}"), 1.0)]),
            malware_weights: BTreeMap::from([(format!("m{mi}"), 1.0)]),
        };
        let r = aggregate(&stats, &onehot).unwrap();
        assert_eq!(r.fpr.value(), stats[bi].rate().value(), "case {case}");
        assert_eq!(r.tpr.value(), stats[nb + mi].rate().value(), "case {case}");
        let n_b = stats[bi].n().value() as f64;
        let n_m = stats[nb + mi].n().value() as f64;
        assert!((r.effective_n_neg - n_b).abs() <= 1e-9 * n_b, "case {case}");
        assert!((r.effective_n_pos - n_m).abs() <= 1e-9 * n_m, "case {case}");

        // Two random normalized profiles and a random mixture of them.
        let draw_profile = |tag: &str, rng: &mut ChaCha12Rng| {
            let mut benign = BTreeMap::new();
            let mut malware = BTreeMap::new();
            for i in 0..nb {
                benign.insert(format!("b{i}"), rng.gen_range(1..=16u32) as f64);
            }
            for i in 0..nm {
                malware.insert(format!("m{i}"), rng.gen_range(1..=16u32) as f64);
            }
            WeightProfile {
                name: format!("{tag}-{case}"),
                benign_weights: benign,
                malware_weights: malware,
            }
            .normalized()
            .unwrap()
        };
        let pa = draw_profile("a", &mut rng);
        let pb = draw_profile("b", &mut rng);
        let lambda: f64 = rng.gen();
        let mix = WeightProfile {
            name: format!("mix-{case}"),
            benign_weights: pa
                .benign_weights
                .iter()
                .map(|(k, &w)| (k.clone(), lambda * w + (1.0 - lambda) * pb.benign_weights[k]))
                .collect(),
            malware_weights: pa
                .malware_weights
                .iter()
                .map(|(k, &w)| (k.clone(), lambda * w + (1.0 - lambda) * pb.malware_weights[k]))
                .collect(),
        };
        let ra = aggregate(&stats, &pa).unwrap();
        let rb = aggregate(&stats, &pb).unwrap();
        let rm = aggregate(&stats, &mix).unwrap();
        let want_tpr = lambda * ra.tpr.value() + (1.0 - lambda) * rb.tpr.value();
        let want_fpr = lambda * ra.fpr.value() + (1.0 - lambda) * rb.fpr.value();
        assert!((rm.tpr.value() - want_tpr).abs() <= 1e-12, "case {case}");
        assert!((rm.fpr.value() - want_fpr).abs() <= 1e-12, "case {case}");

        // Convex-hull containment for every aggregate computed above.
        let bounds = |class: Label| {
            let rates = stats
                .iter()
                .filter(|s| s.class() == class)
                .map(|s| s.rate().value());
            (
                rates.clone().fold(f64::INFINITY, f64::min),
                rates.fold(f64::NEG_INFINITY, f64::max),
            )
        };
        let (b_min, b_max) = bounds(Label::Benign);
        let (m_min, m_max) = bounds(Label::Malware);
        for r in [&ra, &rb, &rm] {
            assert!(
                r.fpr.value() >= b_min - 1e-12 && r.fpr.value() <= b_max + 1e-12,
                "case {case}"
            );
            assert!(
                r.tpr.value() >= m_min - 1e-12 && r.tpr.value() <= m_max + 1e-12,
                "case {case}"
            );
        }
    }
    println!("criterion 09: PASS one-hot, linearity, and hull containment on 1000 instances");
}

/// Criterion 10: protocol hygiene. The eligible set never contains samples
/// the frozen product could have seen, and on date-randomized synthetic
/// manifests the eligible-set rates track the full-population rates within
/// ordinary binomial noise.
#[test]
fn criterion_10_delay_protocol_hygiene() {
    // Part A: contamination of the protocol's own selection is identically
    // zero across randomized manifests and configurations.
    let mut rng = ChaCha12Rng::seed_from_u64(0xacca);
    let base = NaiveDate::from_ymd_opt(2015, 6, 1).unwrap();
    for case in 0..100 {
        let freeze = base + Days::new(rng.gen_range(0..=60));
        let lag = rng.gen_range(30..=150u32);
        let window = rng.gen_range(30..=200u32);
        let maturity = if rng.gen_bool(0.5) { 0 } else { 30 };
        let cfg = DelayProtocolConfig::new(freeze, window)
            .unwrap()
            .with_lag_days(lag)
            .unwrap()
            .with_label_maturity_days(maturity);
        let cutoff = cfg.cutoff_date();

        let n = rng.gen_range(5..=40usize);
        let manifest: Vec<ManifestEntry> = (0..n)
            .map(|i| {
                // The first three entries are planted inside the window with
                // settled labels so the eligible set cannot be empty.
                let planted = i < 3 || rng.gen_bool(0.4);
                let first_seen = if planted {
                    cutoff + Days::new(rng.gen_range(1..=window as u64))
                } else {
                    base + Days::new(rng.gen_range(0..=500))
                };
                let label = if rng.gen_bool(0.5) { Label::Malware } else { Label::Benign };
                let entry = ManifestEntry::new(format!("e{case}-{i}"), first_seen, label);
                if planted {
                    entry
                        .with_label_date(first_seen + Days::new(maturity as u64 + rng.gen_range(0..30)))
                        .unwrap()
                } else if rng.gen_bool(0.7) {
                    entry
                        .with_label_date(first_seen + Days::new(rng.gen_range(0..90)))
                        .unwrap()
                } else {
                    entry
                }
            })
            .collect();

        let (eligible, _) = select_eligible(&manifest, &cfg);
        assert!(eligible.len() >= 3, "case {case}: planting failed");
        let c = contamination_rate(&manifest, &cfg, &eligible).unwrap();
        assert_eq!(c.value(), 0.0, "case {case}: eligible set contaminated");
    }

    // Part B: with arrival dates independent of scores, restricting to the
    // eligible window is plain subsampling, so eligible TPR/FPR must sit
    // within 3 sigma of the full-population rates essentially always.
    let year_start = NaiveDate::from_ymd_opt(2016, 1, 1).unwrap();
    let freeze = NaiveDate::from_ymd_opt(2016, 3, 1).unwrap();
    let cfg = DelayProtocolConfig::new(freeze, 120)
        .unwrap()
        .with_label_maturity_days(0);
    let threshold = 1.0;
    let per_class = 2000u64;
    let mut ok_runs = 0u32;
    for run in 0..100u64 {
        let samples = synth_scores(size(per_class), size(per_class), 2.0, 0xb000 + run).unwrap();
        let mut date_rng = ChaCha12Rng::seed_from_u64(0xda7e_0000 + run);
        let manifest: Vec<ManifestEntry> = samples
            .iter()
            .map(|s| {
                let first_seen = year_start + Days::new(date_rng.gen_range(0..366));
                ManifestEntry::new(s.sample_id(), first_seen, s.label())
                    .with_score(s.score())
                    .unwrap()
            })
            .collect();
        let report = run_delay_protocol(&manifest, &cfg, threshold).unwrap();

        let full_rate = |class: Label| {
            let hits = manifest
                .iter()
                .filter(|e| e.label() == class && e.score().unwrap() >= threshold)
                .count();
            hits as f64 / per_class as f64
        };
        let tpr_full = full_rate(Label::Malware);
        let fpr_full = full_rate(Label::Benign);
        let (n_pos, n_neg) = (report.n_pos as f64, report.n_neg as f64);
        assert!(n_pos >= 100.0 && n_neg >= 100.0, "window caught too little");
        let sd_tpr = (tpr_full * (1.0 - tpr_full) / n_pos).sqrt();
        let sd_fpr = (fpr_full * (1.0 - fpr_full) / n_neg).sqrt();
        let tpr = report.tpr.expect("positives eligible").value();
        let fpr = report.fpr.expect("negatives eligible").value();
        if (tpr - tpr_full).abs() <= 3.0 * sd_tpr && (fpr - fpr_full).abs() <= 3.0 * sd_fpr {
            ok_runs += 1;
        }
    }
    assert!(ok_runs >= 95, "only {ok_runs}/100 runs within 3 sigma");
    println!(
        "criterion 10: PASS contamination 0 on 100 manifests; eligible rates within 3 sigma in {ok_runs}/100 runs"
    );
}
