//! Subcommand implementations: translate flags into library calls, map
//! every failure to a one-line message for the error stream, and route
//! data to the requested sink.

use std::env;
use std::fmt::Display;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use evalplan_core::{
    bias_curves, compare_profiles, parse_category_stats, parse_manifest, parse_profile,
    parse_scores, plan_curve, roc_from_samples, run_delay_protocol, subsample_bias_experiment,
    synth_scores, ConfidenceLevel, DelayProtocolConfig, Proportion, SampleSize, ToleranceSpec,
    WeightHandling,
};

use crate::args::{
    AggregateArgs, BiasArgs, BiasPreset, Cli, Command, OutputFormat, PlanArgs, PlanPreset,
    RocArgs, TimedelayArgs,
};
use crate::grid::parse_grid;
use crate::table::{open_sink, write_report, write_rows, AggregateRow, CurveRow, PlanRow};

/// Sample sizes behind the fig2 preset: a ladder of typical published
/// evaluation sizes.
const FIG2_N_LADDER: [u64; 5] = [30, 100, 300, 1000, 3000];

/// Rate sweep the fig2 preset falls back to when no rate was given.
const FIG2_DEFAULT_P_GRID: &str = "1e-4:0.5:log25";

pub fn dispatch(cli: Cli) -> Result<(), String> {
    init_threads()?;
    match cli.command {
        Command::Plan(args) => plan(args),
        Command::Bias(args) => bias(args),
        Command::Roc(args) => roc(args),
        Command::Aggregate(args) => aggregate(args),
        Command::Timedelay(args) => timedelay(args),
    }
}

fn msg<E: Display>(e: E) -> String {
    e.to_string()
}

/// Applies the EVALPLAN_THREADS cap before any parallel work starts.
fn init_threads() -> Result<(), String> {
    let raw = match env::var("EVALPLAN_THREADS") {
        Err(env::VarError::NotPresent) => return Ok(()),
        Err(e) => return Err(format!("EVALPLAN_THREADS: {e}")),
        Ok(raw) => raw,
    };
    let workers: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&k| k > 0)
        .ok_or_else(|| format!("EVALPLAN_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(msg)
}

fn open(path: &Path) -> Result<BufReader<File>, String> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| format!("{}: {e}", path.display()))
}

fn proportions(values: &[f64]) -> Result<Vec<Proportion>, String> {
    values
        .iter()
        .map(|&v| Proportion::new(v).map_err(msg))
        .collect()
}

fn sizes(values: &[u64]) -> Result<Vec<SampleSize>, String> {
    values
        .iter()
        .map(|&v| SampleSize::new(v).map_err(msg))
        .collect()
}

fn plan(args: PlanArgs) -> Result<(), String> {
    let (grid_values, tol) = match args.preset {
        Some(PlanPreset::Fig1a) => (parse_grid("1e-5:1e-3:log25")?, ToleranceSpec::relative(0.5)),
        Some(PlanPreset::Fig1b) => (parse_grid("0.5:0.95:lin10")?, ToleranceSpec::relative(0.01)),
        None => {
            let values = match (args.p, &args.p_grid) {
                (Some(p), None) => vec![p],
                (None, Some(spec)) => parse_grid(spec)?,
                _ => unreachable!("the rate group admits exactly one source"),
            };
            let tol = match (args.alpha, args.sigma) {
                (Some(alpha), None) => ToleranceSpec::relative(alpha),
                (None, Some(sigma)) => ToleranceSpec::absolute(sigma),
                _ => unreachable!("the tolerance group admits exactly one source"),
            };
            (values, tol)
        }
    };
    let tol = tol.map_err(msg)?;
    let grid = proportions(&grid_values)?;
    let c = ConfidenceLevel::new(args.c).map_err(msg)?;
    let n_max = SampleSize::new(args.n_max).map_err(msg)?;

    let results = plan_curve(&grid, tol, c, n_max, args.stable_window).map_err(msg)?;
    let rows: Vec<PlanRow> = results
        .iter()
        .map(|(p, r)| PlanRow {
            p: p.value(),
            n_required: r.n_required.value(),
            coverage: r.coverage_at_n.value(),
            stable: r.stable,
        })
        .collect();
    let mut sink = open_sink(&args.output.out)?;
    write_rows(&rows, args.output.format, &mut sink)
}

fn bias(args: BiasArgs) -> Result<(), String> {
    let grid_values = match (args.p, &args.p_grid) {
        (Some(p), None) => vec![p],
        (None, Some(spec)) => parse_grid(spec)?,
        (None, None) if args.preset.is_some() => parse_grid(FIG2_DEFAULT_P_GRID)?,
        (None, None) => return Err("give --p, --p-grid, or --preset".into()),
        (Some(_), Some(_)) => unreachable!("the rate group admits at most one source"),
    };
    let n_values: Vec<u64> = match args.preset {
        Some(BiasPreset::Fig2) => FIG2_N_LADDER.to_vec(),
        None if args.n.is_empty() => return Err("give --n or --preset".into()),
        None => args.n.clone(),
    };
    let grid = proportions(&grid_values)?;
    let ns = sizes(&n_values)?;

    let rows = bias_curves(&grid, &ns, args.fraction).map_err(msg)?;
    let mut sink = open_sink(&args.output.out)?;
    write_rows(&rows, args.output.format, &mut sink)
}

fn roc(args: RocArgs) -> Result<(), String> {
    let samples = if args.synthetic {
        let separation = args
            .separation
            .expect("clap: --synthetic requires --separation");
        let (n_pos, n_neg) = match (args.n, args.n_pos, args.n_neg) {
            (Some(n), None, None) => (n, n),
            (None, Some(pos), Some(neg)) => (pos, neg),
            (None, None, None) => {
                return Err("--synthetic needs --n or --n-pos with --n-neg".into())
            }
            _ => unreachable!("clap conflicts keep --n and the pair apart"),
        };
        synth_scores(
            SampleSize::new(n_pos).map_err(msg)?,
            SampleSize::new(n_neg).map_err(msg)?,
            separation,
            args.seed,
        )
        .map_err(msg)?
    } else {
        let path = args.scores.as_ref().expect("clap: source group");
        parse_scores(open(path)?).map_err(|e| format!("{}: {e}", path.display()))?
    };

    let curve = roc_from_samples(&samples).map_err(msg)?;
    let curve_rows: Vec<CurveRow> = curve
        .points()
        .iter()
        .map(|pt| CurveRow {
            threshold: pt.threshold,
            fpr: pt.fpr.value(),
            tpr: pt.tpr.value(),
        })
        .collect();

    match (args.sub_neg, args.sub_pos) {
        (None, None) => {
            let mut sink = open_sink(&args.output.out)?;
            write_rows(&curve_rows, args.output.format, &mut sink)
        }
        (Some(sub_neg), Some(sub_pos)) => {
            let targets = proportions(&args.targets)?;
            // With a synthetic detector the true curve is known in closed
            // form; measured optimism is then against the truth rather
            // than against the full sample's own read-off.
            let reference = if args.synthetic { args.separation } else { None };
            let report = subsample_bias_experiment(
                &samples,
                SampleSize::new(sub_neg).map_err(msg)?,
                SampleSize::new(sub_pos).map_err(msg)?,
                &targets,
                args.trials,
                args.seed,
                reference,
            )
            .map_err(msg)?;
            if let Some(curve_path) = &args.curve_out {
                let mut sink = open_sink(&Some(curve_path.clone()))?;
                write_rows(&curve_rows, OutputFormat::Csv, &mut sink)?;
            }
            let mut sink = open_sink(&args.output.out)?;
            write_report(&report, &mut sink)
        }
        _ => unreachable!("clap requires the subsample sizes in pairs"),
    }
}

fn aggregate(args: AggregateArgs) -> Result<(), String> {
    let stats = parse_category_stats(open(&args.stats)?)
        .map_err(|e| format!("{}: {e}", args.stats.display()))?;
    let handling = if args.normalize {
        WeightHandling::Normalize
    } else {
        WeightHandling::RequireNormalized
    };
    let mut profiles = Vec::with_capacity(args.profiles.len());
    for path in &args.profiles {
        let profile =
            parse_profile(open(path)?, handling).map_err(|e| format!("{}: {e}", path.display()))?;
        profiles.push(profile);
    }

    let mut rows = Vec::with_capacity(profiles.len());
    for result in compare_profiles(&stats, &profiles) {
        let r = result.map_err(msg)?;
        rows.push(AggregateRow {
            profile: r.profile_name,
            tpr: r.tpr.value(),
            fpr: r.fpr.value(),
            effective_n_pos: r.effective_n_pos,
            effective_n_neg: r.effective_n_neg,
        });
    }
    let mut sink = open_sink(&args.output.out)?;
    write_rows(&rows, args.output.format, &mut sink)
}

fn timedelay(args: TimedelayArgs) -> Result<(), String> {
    let manifest = parse_manifest(open(&args.manifest)?)
        .map_err(|e| format!("{}: {e}", args.manifest.display()))?;
    let cfg = DelayProtocolConfig::new(args.freeze, args.window)
        .and_then(|c| c.with_lag_days(args.lag))
        .map(|c| c.with_label_maturity_days(args.maturity))
        .map_err(msg)?;
    let report = run_delay_protocol(&manifest, &cfg, args.threshold).map_err(msg)?;
    let mut sink = open_sink(&args.out)?;
    write_report(&report, &mut sink)
}
