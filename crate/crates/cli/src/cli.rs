//! Command-line front end. Every subcommand prints its JSON report to stdout
//! and, with `--report`, also writes it atomically to a file.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use plurirank_core::currents::{
    check_ac, generate_fibered_family, generate_full_rank_line, generate_plane_current, generate_union_current,
    DiscreteCurrent, DEFAULT_DELTA,
};
use plurirank_core::dimension::{correlation_dimension, DEFAULT_Q_HI, DEFAULT_Q_LO};
use plurirank_core::genericity::{
    adversarial_montecarlo, injectivity_montecarlo, lemma_ii_montecarlo, Shape, TrialReport,
};
use plurirank_core::positivity::{rank_via_contraction, rank_via_span};
use plurirank_core::projective::TOL_CENTER;
use serde_json::{json, Value};

use crate::dataset::{current_to_json, load_current, save_current};
use crate::error::{AppError, AppResult};
use crate::report::{digest, write_atomic, Report};
use crate::singularity::singularity_experiment;
use crate::verify::{project_with_resamples, verify_theorem, VerifyOptions, AC_TOL, DEFAULT_DIM_RESOLUTION};

#[derive(Parser, Debug)]
#[command(
    name = "plurirank",
    version,
    about = "Ranks, projections and dimension of discretized positive currents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic current.
    Gen(GenArgs),
    /// Push a current forward under a random projection to P^ℓ.
    Project(ProjectArgs),
    /// Per-atom rank statistics.
    Rank(RankArgs),
    /// Correlation dimension of the trace measure.
    Dim(DimArgs),
    /// Check p ≤ rank ≤ dim/2 on a current.
    Verify(VerifyArgs),
    /// Monte Carlo checks of the genericity lemma.
    Genericity(GenericityArgs),
    /// Projected dimension against 2ℓ over random projections.
    Singularity(SingularityArgs),
}

#[derive(Args, Debug)]
struct ReportOut {
    /// Also write the report to this file.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct Fit {
    #[arg(long, default_value_t = DEFAULT_Q_LO)]
    q_lo: f64,
    #[arg(long, default_value_t = DEFAULT_Q_HI)]
    q_hi: f64,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(subcommand)]
    kind: GenKind,
}

#[derive(Args, Debug)]
struct GenCommon {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    p: usize,
    #[arg(long)]
    seed: u64,
    #[arg(short = 'o', long = "out")]
    out: PathBuf,
    #[command(flatten)]
    report: ReportOut,
}

#[derive(Subcommand, Debug)]
enum GenKind {
    /// Haar points on a linear P^p with its tangent planes.
    Plane {
        #[command(flatten)]
        common: GenCommon,
        #[arg(long)]
        n: usize,
    },
    /// Union of m random linear P^p's.
    Union {
        #[command(flatten)]
        common: GenCommon,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
    },
    /// Atoms on exact fibers of a random projection to P^ℓ.
    Fibered {
        #[command(flatten)]
        common: GenCommon,
        #[arg(long)]
        ell: usize,
        #[arg(long)]
        n_fibers: usize,
        #[arg(long)]
        per_fiber: usize,
        /// Give all atoms of a fiber the same pushed vector.
        #[arg(long)]
        identical_push: bool,
    },
    /// Points on a line with rank-2p tangent vectors (not closed).
    FullRankLine {
        #[command(flatten)]
        common: GenCommon,
        #[arg(long)]
        n: usize,
    },
}

#[derive(Args, Debug)]
struct ProjectArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    ell: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    #[arg(long, default_value_t = TOL_CENTER)]
    tol_center: f64,
    #[arg(short = 'o', long = "out")]
    out: PathBuf,
    #[command(flatten)]
    report: ReportOut,
}

#[derive(Args, Debug)]
struct RankArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    report: ReportOut,
}

#[derive(Args, Debug)]
struct DimArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    fit: Fit,
    /// Write the (r, C(r)) curve as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    report: ReportOut,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    fit: Fit,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    #[arg(long, default_value_t = TOL_CENTER)]
    tol_center: f64,
    /// Added to the dimension estimate before halving; 0 gives floor(est/2).
    #[arg(long, default_value_t = DEFAULT_DIM_RESOLUTION)]
    dim_resolution: f64,
    /// Transversality trials on the high-rank restriction.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[command(flatten)]
    report: ReportOut,
}

#[derive(Args, Debug)]
struct GenericityArgs {
    /// dimV,p,ℓ,r
    #[arg(long, value_parser = parse_shape)]
    shape: Shape,
    #[arg(long)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    /// Adversarial kernels to certify.
    #[arg(long, default_value_t = 100)]
    adversarial: usize,
    #[command(flatten)]
    report: ReportOut,
}

#[derive(Args, Debug)]
struct SingularityArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    ell: usize,
    #[arg(long)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    fit: Fit,
    #[arg(long, default_value_t = TOL_CENTER)]
    tol_center: f64,
    /// A trial is singular when its estimate is below 2ℓ minus this margin.
    #[arg(long, default_value_t = DEFAULT_DIM_RESOLUTION)]
    dim_resolution: f64,
    #[command(flatten)]
    report: ReportOut,
}

fn parse_shape(s: &str) -> Result<Shape, String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [dim_v, p, ell, r] => Ok(Shape { dim_v, p, ell, r }),
        _ => Err(format!("expected dimV,p,ℓ,r, got {s:?}")),
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(report) => {
            print!("{}", report.to_json());
            if report.violations.is_empty() {
                0
            } else {
                for v in &report.violations {
                    eprintln!("violation: {v}");
                }
                AppError::Violation(String::new()).exit_code()
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> AppResult<Report> {
    let (report, path) = match command {
        Command::Gen(a) => gen(a)?,
        Command::Project(a) => project(a)?,
        Command::Rank(a) => rank(a)?,
        Command::Dim(a) => dim(a)?,
        Command::Verify(a) => verify(a)?,
        Command::Genericity(a) => genericity(a)?,
        Command::Singularity(a) => singularity(a)?,
    };
    if let Some(path) = path {
        write_atomic(&path, report.to_json().as_bytes())?;
    }
    Ok(report)
}

type Outcome = AppResult<(Report, Option<PathBuf>)>;

fn read_input(path: &Path) -> AppResult<(DiscreteCurrent, Vec<u8>)> {
    let bytes = std::fs::read(path).map_err(|e| AppError::io(path, e))?;
    Ok((load_current(path)?, bytes))
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("metrics serialization cannot fail")
}

fn trial_json(r: &TrialReport) -> Value {
    json!({
        "trials": r.trials,
        "failures": r.failures,
        "failure_indices": r.failure_indices,
        "seed": r.seed,
        "events": r.events,
        "unit_failures": r.unit_failures,
        "tolerances": r.tolerances.iter().map(|(n, v)| (n.clone(), json!(v))).collect::<serde_json::Map<_, _>>(),
    })
}

fn gen(a: GenArgs) -> Outcome {
    let (common, params, t) = match a.kind {
        GenKind::Plane { common, n } => {
            let t = generate_plane_current(common.k, common.p, n, common.seed)?;
            let params = format!("gen plane k={} p={} n={n}", common.k, common.p);
            (common, params, t)
        }
        GenKind::Union { common, m, n } => {
            let t = generate_union_current(common.k, common.p, m, n, common.seed)?;
            let params = format!("gen union k={} p={} m={m} n={n}", common.k, common.p);
            (common, params, t)
        }
        GenKind::Fibered {
            common,
            ell,
            n_fibers,
            per_fiber,
            identical_push,
        } => {
            let (t, _) = generate_fibered_family(
                common.k,
                common.p,
                ell,
                n_fibers,
                per_fiber,
                common.seed,
                identical_push,
            )?;
            let params = format!(
                "gen fibered k={} p={} ell={ell} n_fibers={n_fibers} per_fiber={per_fiber} identical_push={identical_push}",
                common.k, common.p
            );
            (common, params, t)
        }
        GenKind::FullRankLine { common, n } => {
            let t = generate_full_rank_line(common.k, common.p, n, common.seed)?;
            let params = format!("gen full-rank-line k={} p={} n={n}", common.k, common.p);
            (common, params, t)
        }
    };
    save_current(&t, &common.out)?;
    let dataset = current_to_json(&t);
    let metrics = json!({
        "atoms": t.len(),
        "mass": t.mass(),
        "dataset_digest": digest(&[dataset.as_bytes()]),
    });
    let seed_param = format!("seed={}", common.seed);
    let report = Report::new(
        "gen",
        digest(&[params.as_bytes(), seed_param.as_bytes()]),
        Some(common.seed),
        metrics,
    );
    Ok((report, common.report.report))
}

fn project(a: ProjectArgs) -> Outcome {
    let (t, bytes) = read_input(&a.input)?;
    let (pi, push, proj_seed, resamples) = project_with_resamples(&t, a.ell, a.seed, a.delta, a.tol_center)?;
    save_current(&push.current, &a.out)?;
    let trace_of_image = push.current.trace_measure();
    let image_of_trace = push.image_measure();
    let forward = check_ac(&trace_of_image, &image_of_trace, AC_TOL);
    let backward = check_ac(&image_of_trace, &trace_of_image, AC_TOL);
    let degenerate: Vec<usize> = push.degenerate_clusters().map(|(i, _)| i).collect();
    let metrics = json!({
        "k": t.k(),
        "ell": pi.ell(),
        "projection_seed": proj_seed,
        "resamples": resamples,
        "input_atoms": t.len(),
        "clusters": push.clusters.len(),
        "output_atoms": push.current.len(),
        "degenerate_clusters": degenerate,
        "max_cluster_diameter": push.clusters.iter().map(|c| c.diameter).fold(0.0, f64::max),
        "ac_checks": {
            "trace_of_image_ll_image_of_trace": forward.holds,
            "image_of_trace_ll_trace_of_image": backward.holds,
        },
        "tolerances": { "cluster_delta": a.delta, "tol_center": a.tol_center, "ac": AC_TOL },
    });
    let params = format!(
        "project ell={} delta={:e} tol_center={:e} seed={}",
        a.ell, a.delta, a.tol_center, a.seed
    );
    let mut report = Report::new("project", digest(&[&bytes, params.as_bytes()]), Some(a.seed), metrics);
    if !forward.holds {
        report.violations.push(format!(
            "trace measure of the pushforward charges {:?} outside the image measure",
            forward.witness
        ));
    }
    if !backward.holds {
        report.violations.push(format!(
            "image measure charges {:?} outside the pushforward's trace measure",
            backward.witness
        ));
    }
    Ok((report, a.report.report))
}

fn rank(a: RankArgs) -> Outcome {
    let (t, bytes) = read_input(&a.input)?;
    let mut histogram = std::collections::BTreeMap::new();
    let mut disagreements = Vec::new();
    for (i, atom) in t.atoms().iter().enumerate() {
        let r = rank_via_span(&atom.t);
        *histogram.entry(r).or_insert(0usize) += 1;
        if rank_via_contraction(&atom.t)? != r {
            disagreements.push(i);
        }
    }
    let metrics = json!({
        "k": t.k(),
        "p": t.p(),
        "atoms": t.len(),
        "rank_histogram": histogram,
        "route_disagreements": disagreements,
        "tolerances": { "rank": plurirank_core::linalg::RANK_TOL },
    });
    let mut report = Report::new("rank", digest(&[&bytes, b"rank"]), None, metrics);
    if !disagreements.is_empty() {
        report.violations.push(format!(
            "span and contraction ranks disagree on atoms {disagreements:?}"
        ));
    }
    Ok((report, a.report.report))
}

fn dim(a: DimArgs) -> Outcome {
    let (t, bytes) = read_input(&a.input)?;
    let est = correlation_dimension(&t.trace_measure(), a.fit.q_lo, a.fit.q_hi, a.seed)?;
    if let Some(path) = &a.csv {
        let mut csv = String::from("r,c\n");
        for (r, c) in &est.curve {
            let _ = writeln!(csv, "{r:e},{c:e}");
        }
        write_atomic(path, csv.as_bytes())?;
    }
    let metrics = json!({
        "value": est.value,
        "stderr": est.stderr,
        "fit_range": [est.fit_range.0, est.fit_range.1],
        "n_points": est.n_points,
        "n_pairs": est.n_pairs,
        "curve": est.curve,
        "tolerances": { "q_lo": a.fit.q_lo, "q_hi": a.fit.q_hi },
    });
    let params = format!("dim q_lo={:e} q_hi={:e} seed={}", a.fit.q_lo, a.fit.q_hi, a.seed);
    Ok((
        Report::new("dim", digest(&[&bytes, params.as_bytes()]), Some(a.seed), metrics),
        a.report.report,
    ))
}

fn verify(a: VerifyArgs) -> Outcome {
    let (t, bytes) = read_input(&a.input)?;
    let opts = VerifyOptions {
        q_lo: a.fit.q_lo,
        q_hi: a.fit.q_hi,
        delta: a.delta,
        tol_center: a.tol_center,
        dim_resolution: a.dim_resolution,
        transversality_trials: a.trials,
        ..VerifyOptions::default()
    };
    let v = verify_theorem(&t, a.seed, &opts)?;
    let params = format!(
        "verify q_lo={:e} q_hi={:e} delta={:e} tol_center={:e} dim_resolution={:e} trials={} seed={}",
        a.fit.q_lo, a.fit.q_hi, a.delta, a.tol_center, a.dim_resolution, a.trials, a.seed
    );
    let mut report = Report::new(
        "verify",
        digest(&[&bytes, params.as_bytes()]),
        Some(a.seed),
        to_value(&v),
    );
    report.violations = v.violations();
    Ok((report, a.report.report))
}

fn genericity(a: GenericityArgs) -> Outcome {
    let shape = a.shape;
    let lemma = lemma_ii_montecarlo(shape, a.trials, a.seed)?;
    let adversarial = adversarial_montecarlo(shape, a.adversarial, a.seed)?;
    let injectivity = injectivity_montecarlo(shape.dim_v, shape.p, shape.ell, a.trials, a.seed)?;
    let metrics = json!({
        "shape": { "dim_v": shape.dim_v, "p": shape.p, "ell": shape.ell, "r": shape.r },
        "lemma_ii": trial_json(&lemma),
        "adversarial": trial_json(&adversarial),
        "injectivity": trial_json(&injectivity),
    });
    let params = format!(
        "genericity shape={},{},{},{} trials={} adversarial={} seed={}",
        shape.dim_v, shape.p, shape.ell, shape.r, a.trials, a.adversarial, a.seed
    );
    let mut report = Report::new("genericity", digest(&[params.as_bytes()]), Some(a.seed), metrics);
    for (name, r) in [
        ("lemma ii", &lemma),
        ("adversarial certification", &adversarial),
        ("injectivity", &injectivity),
    ] {
        if r.failures > 0 {
            report
                .violations
                .push(format!("{name}: {} of {} trials failed", r.failures, r.trials));
        }
    }
    Ok((report, a.report.report))
}

fn singularity(a: SingularityArgs) -> Outcome {
    let (t, bytes) = read_input(&a.input)?;
    let opts = VerifyOptions {
        q_lo: a.fit.q_lo,
        q_hi: a.fit.q_hi,
        tol_center: a.tol_center,
        dim_resolution: a.dim_resolution,
        ..VerifyOptions::default()
    };
    let s = singularity_experiment(&t, a.ell, a.trials, a.seed, &opts)?;
    let params = format!(
        "singularity ell={} trials={} q_lo={:e} q_hi={:e} tol_center={:e} dim_resolution={:e} seed={}",
        a.ell, a.trials, a.fit.q_lo, a.fit.q_hi, a.tol_center, a.dim_resolution, a.seed
    );
    Ok((
        Report::new(
            "singularity",
            digest(&[&bytes, params.as_bytes()]),
            Some(a.seed),
            to_value(&s),
        ),
        a.report.report,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_parse() {
        assert_eq!(
            parse_shape("5,2,3,4").unwrap(),
            Shape {
                dim_v: 5,
                p: 2,
                ell: 3,
                r: 4
            }
        );
        assert!(parse_shape("5,2,3").is_err());
        assert!(parse_shape("5,x,3,4").is_err());
    }

    #[test]
    fn usage_errors_exit_1() {
        assert_eq!(run(["plurirank", "rank", "--bogus"]), 1);
        assert_eq!(run(["plurirank", "dim", "--in", "x.json"]), 1);
        assert_eq!(run(["plurirank", "--help"]), 0);
    }
}
