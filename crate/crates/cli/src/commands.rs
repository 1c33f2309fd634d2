//! The `classify`, `average`, `orbits` and `sweep` subcommands.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use averager_core::closed_form::{sign_region, ClosedFormError};
use averager_core::jerk_model::DEFAULT_TOL_EIG;
use averager_core::normal_form::unfold;
use averager_core::orbit::{locate_orbits, orbit_trace, OrbitFit};
use averager_core::{
    average_first, average_second, classify, classify_equilibrium, equilibria, f_closed, g_closed, jerk_standard_form,
    predicted_roots, sweep_epsilon, DegreeSign, EquilibriumClass, EquilibriumKind, OrbitCase, PeriodicOrbitRecord,
    PredictionCount, SystemParams, UnfoldingParams,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::{csv, eps_dir, json, trace_csv, write};
use crate::{CliError, Options};

/// Largest tolerated gap between numeric and closed-form averaged functions.
pub const ORACLE_TOL: f64 = 1e-8;
/// Samples per orbit trace, endpoints included.
pub const TRACE_SAMPLES: usize = 1024;
pub const GRID_SIZE: usize = 20;
pub const R_RANGE: (f64, f64) = (0.5, 8.0);
pub const W_RANGE: (f64, f64) = (-2.0, 2.0);
/// Converged orbits closer than this (max-norm on the section) count once.
const DISTINCT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Classify,
    Average,
    Orbits,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Average => "average",
            Command::Orbits => "orbits",
            Command::Sweep => "sweep",
        }
    }
}

/// What a command prints, plus the error that decides a nonzero exit
/// after all output has been produced.
#[derive(Debug)]
pub struct RunOutput {
    pub stdout: String,
    pub failure: Option<CliError>,
}

pub fn run(cmd: Command, cfg: &RunConfig, opts: &Options) -> Result<RunOutput, CliError> {
    cfg.validate()?;
    let out_dir = opts.out.clone().or_else(|| cfg.output_dir.clone());
    match cmd {
        Command::Classify => cmd_classify(cfg, out_dir.as_deref(), opts),
        Command::Average => cmd_average(cfg, out_dir.as_deref(), opts),
        Command::Orbits => cmd_orbits(cfg, &out_dir.unwrap_or_else(|| PathBuf::from("results")), opts),
        Command::Sweep => cmd_sweep(cfg, &out_dir.unwrap_or_else(|| PathBuf::from("results")), opts),
    }
}

fn finish<T: Serialize>(
    summary: &T,
    text: String,
    cfg: &RunConfig,
    dir: Option<&Path>,
    opts: &Options,
    failure: Option<CliError>,
) -> Result<RunOutput, CliError> {
    let doc = json(summary);
    if let Some(dir) = dir {
        write(&dir.join("summary.json"), &doc)?;
        write(&dir.join("config.toml"), &cfg.to_toml())?;
    }
    let stdout = if opts.json {
        doc
    } else if opts.quiet {
        String::new()
    } else {
        text
    };
    Ok(RunOutput { stdout, failure })
}

fn case_name(c: Option<OrbitCase>) -> String {
    c.map_or_else(|| "-".into(), |c| format!("{c:?}"))
}

#[derive(Debug, Serialize)]
struct RootRow {
    r: f64,
    w: f64,
    jac_det: f64,
    degree: DegreeSign,
}

#[derive(Debug, Serialize)]
struct Prediction {
    case: Option<OrbitCase>,
    sign_region: Option<OrbitCase>,
    degenerate: Option<String>,
    roots: Vec<RootRow>,
}

fn prediction(u: &UnfoldingParams) -> Prediction {
    let pred = predicted_roots(u.a2, u.b2, u.delta);
    let roots = pred
        .roots
        .iter()
        .zip(&pred.jac_dets)
        .map(|(z, &d)| RootRow { r: z[0], w: z[1], jac_det: d, degree: DegreeSign::from_det(d, 1e-12) })
        .collect();
    let degenerate = match pred.count {
        PredictionCount::Degenerate(reason) => Some(reason.to_string()),
        _ => None,
    };
    Prediction {
        case: classify(u.a2, u.b2, u.delta).ok(),
        sign_region: sign_region(u.a2, u.b2, u.delta).ok(),
        degenerate,
        roots,
    }
}

fn hypothesis(u: &UnfoldingParams) -> Result<OrbitCase, CliError> {
    classify(u.a2, u.b2, u.delta).map_err(|ClosedFormError::HypothesisViolated(r)| CliError::Hypothesis(r.to_string()))
}

fn write_prediction(text: &mut String, p: &Prediction) {
    match &p.degenerate {
        Some(reason) => writeln!(text, "degenerate parameters: {reason}").unwrap(),
        None => {
            writeln!(text, "orbit case: {} (sign region {})", case_name(p.case), case_name(p.sign_region)).unwrap();
            for (i, r) in p.roots.iter().enumerate() {
                writeln!(text, "  root {i}: r = {:.12}, w = {:+.12}, det = {:+.6e} ({:?})", r.r, r.w, r.jac_det, r.degree)
                    .unwrap();
            }
        }
    }
}

#[derive(Debug, Serialize)]
struct ClassifySummary<'a> {
    command: &'static str,
    config: &'a RunConfig,
    params: SystemParams,
    equilibria: Vec<EquilibriumClass>,
    zero_hopf: bool,
    verdict: String,
    prediction: Option<Prediction>,
}

fn cmd_classify(cfg: &RunConfig, dir: Option<&Path>, opts: &Options) -> Result<RunOutput, CliError> {
    let params = match (&cfg.unfolding, &cfg.params) {
        (Some(u), _) => unfold(u, 0.0),
        (None, Some(p)) => *p,
        (None, None) => unreachable!("validated"),
    };
    let eq: Vec<EquilibriumClass> = equilibria(&params)
        .iter()
        .map(|s| classify_equilibrium(&params, s, DEFAULT_TOL_EIG).expect("equilibria are zeros of the field"))
        .collect();
    let zero_hopf = eq.first().is_some_and(|e| e.kind == EquilibriumKind::ZeroHopf);
    let verdict = if zero_hopf {
        format!("zero-Hopf equilibrium at the origin, delta = {}", (-params.c).sqrt())
    } else {
        "no zero-Hopf equilibrium".to_string()
    };
    let pred = cfg.unfolding.as_ref().map(prediction);

    let mut text = String::new();
    writeln!(text, "params: a = {}, b = {}, c = {}", params.a, params.b, params.c).unwrap();
    for e in &eq {
        let eig: Vec<String> = e.eigenvalues.iter().map(|l| format!("{:+.6}{:+.6}i", l.re, l.im)).collect();
        writeln!(text, "equilibrium ({}, {}, {}): {:?}, eigenvalues [{}]", e.point.x, e.point.y, e.point.z, e.kind, eig.join(", "))
            .unwrap();
    }
    writeln!(text, "{verdict}").unwrap();
    if let Some(p) = &pred {
        write_prediction(&mut text, p);
    }
    let failure = cfg.unfolding.as_ref().and_then(|u| hypothesis(u).err());
    let summary = ClassifySummary { command: "classify", config: cfg, params, equilibria: eq, zero_hopf, verdict, prediction: pred };
    finish(&summary, text, cfg, dir, opts, failure)
}

#[derive(Debug, Serialize)]
struct AverageRow {
    r: f64,
    w: f64,
    f: [f64; 2],
    f_closed: [f64; 2],
    g: [f64; 2],
    /// Only defined when `a1 = b1 = 0`.
    g_closed: Option<[f64; 2]>,
    deviation: f64,
}

#[derive(Debug, Serialize)]
struct AverageSummary<'a> {
    command: &'static str,
    config: &'a RunConfig,
    grid_size: usize,
    r_range: (f64, f64),
    w_range: (f64, f64),
    f_identically_zero: bool,
    g_oracle: bool,
    max_deviation_f: f64,
    max_deviation_g: Option<f64>,
    max_deviation: f64,
    tolerance: f64,
    quadrature_warnings: usize,
    rows: Vec<AverageRow>,
}

fn grid_axis(range: (f64, f64), i: usize) -> f64 {
    range.0 + (range.1 - range.0) * i as f64 / (GRID_SIZE - 1) as f64
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn cmd_average(cfg: &RunConfig, dir: Option<&Path>, opts: &Options) -> Result<RunOutput, CliError> {
    let u = cfg.unfolding("average")?;
    let sf = jerk_standard_form(u).map_err(|e| CliError::Config(e.to_string()))?;
    let g_oracle = u.a1 == 0.0 && u.b1 == 0.0;
    let mut rows = Vec::with_capacity(GRID_SIZE * GRID_SIZE);
    let mut warnings = 0;
    for i in 0..GRID_SIZE {
        for j in 0..GRID_SIZE {
            let (r, w) = (grid_axis(R_RANGE, i), grid_axis(W_RANGE, j));
            let quad_fail = |e: averager_core::averaging::AveragingError| {
                CliError::Config(format!("averaging failed at r = {r}, w = {w}: {e}"))
            };
            let f = average_first(&sf, &[r, w], &cfg.quadrature).map_err(quad_fail)?;
            let g = average_second(&sf, &[r, w], &cfg.quadrature).map_err(quad_fail)?;
            warnings += usize::from(f.accuracy_warning) + usize::from(g.accuracy_warning);
            let fc = f_closed(r, w, u.a1, u.b1, u.delta);
            let gc = g_oracle.then(|| g_closed(r, w, u.a2, u.b2, u.delta));
            let dev_f = max_abs_diff(&f.value, &fc);
            let dev_g = gc.map_or(0.0, |gc| max_abs_diff(&g.value, &gc));
            rows.push(AverageRow {
                r,
                w,
                f: [f.value[0], f.value[1]],
                f_closed: fc,
                g: [g.value[0], g.value[1]],
                g_closed: gc,
                deviation: dev_f.max(dev_g),
            });
        }
    }
    let max_f = rows.iter().fold(0.0_f64, |m, row| m.max(max_abs_diff(&row.f, &row.f_closed)));
    let max_g = g_oracle.then(|| rows.iter().fold(0.0_f64, |m, row| m.max(max_abs_diff(&row.g, &row.g_closed.unwrap()))));
    let max_dev = max_f.max(max_g.unwrap_or(0.0));
    let f_zero = rows.iter().all(|row| row.f.iter().all(|v| v.abs() < 1e-12));

    let mut text = String::new();
    writeln!(text, "{:>8} {:>8} {:>14} {:>14} {:>14} {:>14} {:>10}", "r", "w", "f1", "f2", "g1", "g2", "deviation").unwrap();
    for row in &rows {
        writeln!(
            text,
            "{:>8.4} {:>8.4} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e} {:>10.2e}",
            row.r, row.w, row.f[0], row.f[1], row.g[0], row.g[1], row.deviation
        )
        .unwrap();
    }
    writeln!(text, "max deviation f: {max_f:.3e}").unwrap();
    match max_g {
        Some(g) => writeln!(text, "max deviation g: {g:.3e}").unwrap(),
        None => writeln!(text, "g has no closed form unless a1 = b1 = 0").unwrap(),
    }
    if f_zero {
        writeln!(text, "f vanishes on the grid").unwrap();
    }

    if let Some(dir) = dir {
        let table = csv(
            &["r", "w", "f1", "f2", "f1_closed", "f2_closed", "g1", "g2", "g1_closed", "g2_closed", "deviation"],
            rows.iter().map(|row| {
                let gc = row.g_closed.map_or([None, None], |g| [Some(g[0]), Some(g[1])]);
                vec![
                    Some(row.r),
                    Some(row.w),
                    Some(row.f[0]),
                    Some(row.f[1]),
                    Some(row.f_closed[0]),
                    Some(row.f_closed[1]),
                    Some(row.g[0]),
                    Some(row.g[1]),
                    gc[0],
                    gc[1],
                    Some(row.deviation),
                ]
            }),
        );
        write(&dir.join("average.csv"), &table)?;
    }
    let failure = (!(max_dev <= ORACLE_TOL)).then_some(CliError::OracleMismatch { deviation: max_dev, tolerance: ORACLE_TOL });
    let summary = AverageSummary {
        command: "average",
        config: cfg,
        grid_size: GRID_SIZE,
        r_range: R_RANGE,
        w_range: W_RANGE,
        f_identically_zero: f_zero,
        g_oracle,
        max_deviation_f: max_f,
        max_deviation_g: max_g,
        max_deviation: max_dev,
        tolerance: ORACLE_TOL,
        quadrature_warnings: warnings,
        rows,
    };
    finish(&summary, text, cfg, dir, opts, failure)
}

#[derive(Debug, Serialize)]
struct OrbitRow {
    index: usize,
    seed: [f64; 2],
    record: Option<PeriodicOrbitRecord>,
    error: Option<String>,
    trace: Option<String>,
}

#[derive(Debug, Serialize)]
struct EpsRun {
    eps: f64,
    params: SystemParams,
    expected: usize,
    found: usize,
    orbits: Vec<OrbitRow>,
}

#[derive(Debug, Serialize)]
struct OrbitsSummary<'a> {
    command: &'static str,
    config: &'a RunConfig,
    prediction: Prediction,
    runs: Vec<EpsRun>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fits: Option<Vec<OrbitFit>>,
}

fn distinct(records: &[&PeriodicOrbitRecord]) -> usize {
    averager_core::orbit::count_distinct(records, DISTINCT_TOL)
}

/// Writes traces for the converged orbits of one ε into `dir` and assembles its summary.
fn eps_run(
    cfg: &RunConfig,
    u: &UnfoldingParams,
    eps: f64,
    expected: usize,
    results: Vec<Result<PeriodicOrbitRecord, String>>,
    dir: &Path,
) -> Result<EpsRun, CliError> {
    let params = unfold(u, eps);
    let roots = predicted_roots(u.a2, u.b2, u.delta).roots;
    let mut orbits = Vec::with_capacity(results.len());
    for (index, (result, seed)) in results.into_iter().zip(roots).enumerate() {
        let row = match result {
            Ok(rec) => match orbit_trace(&params, &rec, TRACE_SAMPLES, &cfg.integrator) {
                Ok(samples) => {
                    let name = format!("orbit_{index}.csv");
                    write(&dir.join(&name), &trace_csv(&samples))?;
                    OrbitRow { index, seed, record: Some(rec), error: None, trace: Some(name) }
                }
                Err(e) => OrbitRow { index, seed, record: Some(rec), error: Some(format!("trace failed: {e}")), trace: None },
            },
            Err(e) => OrbitRow { index, seed, record: None, error: Some(e), trace: None },
        };
        orbits.push(row);
    }
    let ok: Vec<&PeriodicOrbitRecord> = orbits.iter().filter_map(|o| o.record.as_ref()).collect();
    Ok(EpsRun { eps, params, expected, found: distinct(&ok), orbits })
}

fn write_runs(text: &mut String, runs: &[EpsRun]) {
    for run in runs {
        writeln!(text, "eps = {}: {} of {} orbits", run.eps, run.found, run.expected).unwrap();
        for o in &run.orbits {
            match &o.record {
                Some(r) => writeln!(
                    text,
                    "  orbit {}: section ({:+.10e}, {:+.10e}), period {:.10}, residual {:.1e}, |multipliers| {:.6} {:.6}",
                    o.index,
                    r.section_point[0],
                    r.section_point[1],
                    r.period,
                    r.residual,
                    r.floquet[0].norm(),
                    r.floquet[1].norm()
                )
                .unwrap(),
                None => writeln!(text, "  orbit {}: failed ({})", o.index, o.error.as_deref().unwrap_or("")).unwrap(),
            }
        }
    }
}

fn shortfall(runs: &[EpsRun]) -> Option<CliError> {
    runs.iter()
        .find(|r| r.found < r.expected)
        .map(|r| CliError::Shortfall { eps: r.eps, found: r.found, expected: r.expected })
}

fn cmd_orbits(cfg: &RunConfig, dir: &Path, opts: &Options) -> Result<RunOutput, CliError> {
    let u = cfg.unfolding("orbits")?;
    let case = hypothesis(&u)?;
    let eps_values = cfg.eps_values("orbits")?;
    let per_eps_dirs = cfg.eps_list.is_some();
    let mut runs = Vec::with_capacity(eps_values.len());
    for &eps in &eps_values {
        let results = locate_orbits(&u, eps, &cfg.integrator, &cfg.shooting)
            .map_err(|e| CliError::Config(e.to_string()))?
            .into_iter()
            .map(|r| r.map_err(|e| e.to_string()))
            .collect();
        let sub = if per_eps_dirs { dir.join("sweep").join(eps_dir(eps)) } else { dir.to_path_buf() };
        let run = eps_run(cfg, &u, eps, case.count(), results, &sub)?;
        if per_eps_dirs {
            write(&sub.join("summary.json"), &json(&run))?;
        }
        runs.push(run);
    }
    let pred = prediction(&u);
    let mut text = String::new();
    write_prediction(&mut text, &pred);
    write_runs(&mut text, &runs);
    let failure = shortfall(&runs);
    let summary = OrbitsSummary { command: "orbits", config: cfg, prediction: pred, runs, fits: None };
    finish(&summary, text, cfg, Some(dir), opts, failure)
}

fn cmd_sweep(cfg: &RunConfig, dir: &Path, opts: &Options) -> Result<RunOutput, CliError> {
    let u = cfg.unfolding("sweep")?;
    let case = hypothesis(&u)?;
    let eps_values = cfg.eps_values("sweep")?;
    let report =
        sweep_epsilon(&u, &eps_values, &cfg.integrator, &cfg.shooting).map_err(|e| CliError::Config(e.to_string()))?;
    let mut runs = Vec::with_capacity(report.entries.len());
    for entry in report.entries {
        let sub = dir.join("sweep").join(eps_dir(entry.eps));
        let run = eps_run(cfg, &u, entry.eps, case.count(), entry.orbits, &sub)?;
        write(&sub.join("summary.json"), &json(&run))?;
        runs.push(run);
    }
    let pred = prediction(&u);
    let mut text = String::new();
    write_prediction(&mut text, &pred);
    write_runs(&mut text, &runs);
    for (i, f) in report.fits.iter().enumerate() {
        let show = |v: Option<f64>| v.map_or_else(|| "-".into(), |v| format!("{v:.4}"));
        writeln!(
            text,
            "  orbit {i}: amplitude slope {}, seed error slope {}, monotone {}",
            show(f.amplitude_slope),
            show(f.seed_error_slope),
            f.amplitude_monotone
        )
        .unwrap();
    }
    let failure = shortfall(&runs);
    let summary = OrbitsSummary { command: "sweep", config: cfg, prediction: pred, runs, fits: Some(report.fits) };
    finish(&summary, text, cfg, Some(dir), opts, failure)
}
