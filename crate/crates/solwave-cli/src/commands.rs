//! The six experiment commands. Each one validates its config, runs the
//! corresponding library routine, writes deterministic artifacts into the
//! output directory, and prints a one-line summary.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use solwave::cclab::{cantor_counterexample, decay_scan, DecayClass, DecaySeries};
use solwave::diagnostics::{
    homogeneity_checks, subadditivity_checks, CurvePoint, CurveReport, SweepParameter,
};
use solwave::evolution::{evolve, invariant_names, stability_experiment};
use solwave::models::classify_exponent;
use solwave::solver::{multiplier_positivity, residual_norm, solve};
use solwave::{EquationKind, ExponentStatus, ProblemKind, ProblemSpec, StabilityOptions};

use crate::config::{CommutatorRun, ExperimentConfig};
use crate::{CliError, Context};

fn run_error(e: solwave::Error) -> CliError {
    CliError::Run(e.to_string())
}

/// Create the output directory and refuse to clobber existing artifacts
/// unless --force.
fn claim_outputs(ctx: &Context, files: &[&str]) -> Result<(), CliError> {
    std::fs::create_dir_all(&ctx.out)
        .map_err(|e| CliError::Run(format!("cannot create {}: {e}", ctx.out.display())))?;
    if !ctx.force {
        for f in files {
            let p = ctx.out.join(f);
            if p.exists() {
                return Err(CliError::Run(format!(
                    "{} already exists; pass --force to overwrite",
                    p.display()
                )));
            }
        }
    }
    Ok(())
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Run(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display())))
}

fn write_csv(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<(), CliError> {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{v:.17e}").unwrap();
        }
        out.push('\n');
    }
    std::fs::write(path, out)
        .map_err(|e| CliError::Run(format!("cannot write {}: {e}", path.display())))
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SolveReport {
    converged: bool,
    stop: solwave::StopReason,
    iterations: usize,
    objective: f64,
    constraint: f64,
    multiplier: f64,
    multiplier_identity_gap: Option<f64>,
    residual: f64,
    traveling: Option<solwave::TravelingWave<f64>>,
    /// Pointwise profile-equation residual under the traveling
    /// interpretation, when there is one.
    traveling_residual: Option<f64>,
    multiplier_sign: Option<solwave::MultiplierSignReport<f64>>,
}

pub fn cmd_solve(ctx: &Context, config: &ExperimentConfig) -> Result<i32, CliError> {
    let spec = config.problem_spec()?;
    let opts = config.solver_options(&ctx.config_dir)?;
    claim_outputs(ctx, &["manifest.json", "field.txt", "report.json"])?;

    let res = solve(&spec, &opts).map_err(run_error)?;
    let traveling_residual = res.traveling.as_ref().map(|t| {
        residual_norm(&res.field, t.speed, t.equation, &spec.symbol, &spec.nonlinearity)
    });
    let multiplier_sign = match spec.kind {
        ProblemKind::EnergyAtFixedCharge { .. } => {
            Some(multiplier_positivity(&res).map_err(run_error)?)
        }
        _ => None,
    };
    let report = SolveReport {
        converged: res.converged,
        stop: res.stop,
        iterations: res.iterations,
        objective: res.objective,
        constraint: res.constraint,
        multiplier: res.multiplier,
        multiplier_identity_gap: res.multiplier_identity_gap,
        residual: res.residual,
        traveling: res.traveling,
        traveling_residual,
        multiplier_sign,
    };

    res.save(ctx.out.join("manifest.json"), "field.txt").map_err(run_error)?;
    write_json(&ctx.out.join("report.json"), &report)?;

    println!(
        "solve: {} after {} iterations, objective {:.12e}, multiplier {:.12e}, residual {:.3e}",
        if res.converged { "converged" } else { "NOT converged" },
        res.iterations,
        res.objective,
        res.multiplier,
        res.residual
    );
    if !res.converged && !ctx.allow_failure {
        eprintln!("warning: solver stopped with {:?}; failing (pass --allow-failure to keep going)", res.stop);
        return Ok(1);
    }
    Ok(0)
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct EvolveReport {
    equation: EquationKind,
    steps_taken: usize,
    cfl_max: f64,
    blow_up: Option<f64>,
    invariant_names: [&'static str; 2],
    invariant_drift: [f64; 2],
}

pub fn cmd_evolve(ctx: &Context, config: &ExperimentConfig) -> Result<i32, CliError> {
    let setup = config.evolve_setup(&ctx.config_dir)?;
    claim_outputs(ctx, &["invariants.csv", "final_field.txt", "trace.json"])?;

    let trace = evolve(&setup.initial, &setup.spec).map_err(run_error)?;
    let names = invariant_names(setup.spec.equation);
    let rows: Vec<Vec<f64>> = trace
        .times
        .iter()
        .zip(&trace.invariants)
        .map(|(&t, inv)| vec![t, inv[0], inv[1]])
        .collect();
    write_csv(
        &ctx.out.join("invariants.csv"),
        &format!("time,{},{}", names[0], names[1]),
        &rows,
    )?;
    trace.final_field().write_text(ctx.out.join("final_field.txt")).map_err(run_error)?;
    let report = EvolveReport {
        equation: setup.spec.equation,
        steps_taken: trace.steps_taken,
        cfl_max: trace.cfl_max,
        blow_up: trace.blow_up,
        invariant_names: names,
        invariant_drift: trace.invariant_drift(),
    };
    write_json(&ctx.out.join("trace.json"), &report)?;

    match trace.blow_up {
        Some(t) => {
            println!("evolve: blow-up at t = {t:.6}, after {} steps", trace.steps_taken);
            if ctx.allow_failure {
                Ok(0)
            } else {
                Ok(1)
            }
        }
        None => {
            println!(
                "evolve: {} steps, drift of ({}, {}) = ({:.3e}, {:.3e}), peak Courant {:.3}",
                trace.steps_taken,
                names[0],
                names[1],
                report.invariant_drift[0],
                report.invariant_drift[1],
                trace.cfl_max
            );
            Ok(0)
        }
    }
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct StabilityReportOut {
    deltas: Vec<f64>,
    max_distance: Vec<f64>,
    final_distance: Vec<f64>,
    monotone: bool,
    bound: f64,
    distance_index: f64,
}

pub fn cmd_stability(ctx: &Context, config: &ExperimentConfig) -> Result<i32, CliError> {
    let section = config
        .stability
        .as_ref()
        .ok_or_else(|| CliError::Config("stability: section is required".into()))?;
    let res = crate::load_manifest(&ctx.config_dir.join(&section.manifest))?;
    let traveling = res.traveling.as_ref().ok_or_else(|| {
        CliError::Run(
            "the manifest's minimizer has no traveling-wave interpretation to evolve under".into(),
        )
    })?;
    let seed = ctx
        .seed
        .or(config.seed)
        .unwrap_or_else(|| StabilityOptions::<f64>::default().seed);
    let opts = section.options(seed)?;
    claim_outputs(ctx, &["distances.csv", "report.json"])?;

    let sym = &res.problem.symbol;
    let report = stability_experiment(
        &res.field,
        traveling.equation,
        sym,
        &res.problem.nonlinearity,
        &opts,
    )
    .map_err(run_error)?;

    // One column of orbital distances per perturbation size, on the shared
    // snapshot times.
    let mut header = String::from("time");
    for d in &report.deltas {
        write!(header, ",delta_{d:e}").unwrap();
    }
    let rows: Vec<Vec<f64>> = report.series[0]
        .iter()
        .enumerate()
        .map(|(i, &(t, _))| {
            let mut row = vec![t];
            row.extend(report.series.iter().map(|s| s[i].1));
            row
        })
        .collect();
    write_csv(&ctx.out.join("distances.csv"), &header, &rows)?;
    let out = StabilityReportOut {
        deltas: report.deltas.clone(),
        max_distance: report.max_distance.clone(),
        final_distance: report.final_distance.clone(),
        monotone: report.monotone,
        bound: report.bound,
        distance_index: opts.distance_index.unwrap_or(sym.order * 0.5),
    };
    write_json(&ctx.out.join("report.json"), &out)?;

    println!(
        "stability: sizes {:?} -> max distances {:?}, monotone = {}, bound {:.3e}",
        report.deltas, report.max_distance, report.monotone, report.bound
    );
    if report.bound.is_finite() || ctx.allow_failure {
        Ok(0)
    } else {
        eprintln!("warning: a perturbed run blew up");
        Ok(1)
    }
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ScanReport {
    class: DecayClass,
    scale: f64,
    floor: f64,
    min_ratio: Option<f64>,
}

#[derive(Serialize)]
struct CounterExampleReportOut {
    jump_class: DecayClass,
    control_class: DecayClass,
    min_ratio: Option<f64>,
    separated: bool,
}

fn series_rows(series: &DecaySeries<f64>) -> Vec<Vec<f64>> {
    series.radii.iter().zip(&series.values).map(|(&r, &v)| vec![r, v]).collect()
}

pub fn cmd_commutator(ctx: &Context, config: &ExperimentConfig) -> Result<i32, CliError> {
    match config.commutator_run(&ctx.config_dir)? {
        CommutatorRun::Scan { u, sym, radii } => {
            claim_outputs(ctx, &["series.csv", "report.json"])?;
            let series = decay_scan(&u, &sym, &radii).map_err(run_error)?;
            write_csv(&ctx.out.join("series.csv"), "radius,value", &series_rows(&series))?;
            let report = ScanReport {
                class: series.class,
                scale: series.scale,
                floor: series.floor,
                min_ratio: series.min_ratio(),
            };
            write_json(&ctx.out.join("report.json"), &report)?;
            println!(
                "commutator: classified {:?} over {} radii (scale {:.3e})",
                series.class,
                series.radii.len(),
                series.scale
            );
        }
        CommutatorRun::CounterExample(spec) => {
            claim_outputs(
                ctx,
                &[
                    "jump_series.csv",
                    "control_series.csv",
                    "witness.txt",
                    "control_witness.txt",
                    "report.json",
                ],
            )?;
            let report = cantor_counterexample(&spec).map_err(run_error)?;
            write_csv(
                &ctx.out.join("jump_series.csv"),
                "radius,value",
                &series_rows(&report.jump_series),
            )?;
            write_csv(
                &ctx.out.join("control_series.csv"),
                "radius,value",
                &series_rows(&report.control_series),
            )?;
            report.witness.write_text(ctx.out.join("witness.txt")).map_err(run_error)?;
            report
                .control_witness
                .write_text(ctx.out.join("control_witness.txt"))
                .map_err(run_error)?;
            let out = CounterExampleReportOut {
                jump_class: report.jump_series.class,
                control_class: report.control_series.class,
                min_ratio: report.min_ratio,
                separated: report.separated,
            };
            write_json(&ctx.out.join("report.json"), &out)?;
            println!(
                "commutator counter-example: jump {:?}, control {:?}, separated = {}",
                report.jump_series.class, report.control_series.class, report.separated
            );
        }
    }
    Ok(0)
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SweepRow {
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    point: Option<CurvePoint<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct SweepReport {
    parameter: SweepParameter,
    rows: Vec<SweepRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scaling: Option<Vec<solwave::diagnostics::ScalingCheck<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    subadditivity: Option<Vec<solwave::diagnostics::SubadditivityCheck<f64>>>,
}

fn set_parameter(
    base: &ProblemSpec<f64>,
    parameter: SweepParameter,
    v: f64,
) -> Result<ProblemSpec<f64>, CliError> {
    let mut spec = base.clone();
    match parameter {
        SweepParameter::Level => match &mut spec.kind {
            ProblemKind::EnergyAtFixedCharge { charge } => *charge = v,
            ProblemKind::QuadraticAtFixedPotential { level, .. } => *level = v,
            ProblemKind::QuadraticAtFixedShiftedPotential { level } => *level = v,
        },
        SweepParameter::Kappa => match &mut spec.kind {
            ProblemKind::QuadraticAtFixedPotential { kappa, .. } => *kappa = v,
            _ => {
                return Err(CliError::Config(
                    "sweep.parameter: \"kappa\" needs a fixed_potential problem".into(),
                ))
            }
        },
        SweepParameter::Exponent => spec.nonlinearity.exponent = v,
    }
    spec.validate().map_err(|e| CliError::Config(format!("sweep.values: {v}: {e}")))?;
    Ok(spec)
}

pub fn cmd_sweep(ctx: &Context, config: &ExperimentConfig) -> Result<i32, CliError> {
    let section =
        config.sweep.as_ref().ok_or_else(|| CliError::Config("sweep: section is required".into()))?;
    if section.values.is_empty() {
        return Err(CliError::Config("sweep.values: need at least one value".into()));
    }
    let parameter = match section.parameter.as_str() {
        "level" => SweepParameter::Level,
        "kappa" => SweepParameter::Kappa,
        "exponent" => SweepParameter::Exponent,
        other => {
            return Err(CliError::Config(format!(
                "sweep.parameter: unknown parameter \"{other}\" (expected level, kappa, or \
                 exponent)"
            )))
        }
    };
    let base = config.problem_spec()?;
    let opts = config.solver_options(&ctx.config_dir)?;
    // Validate every point before starting the (expensive) runs.
    let specs: Vec<ProblemSpec<f64>> = section
        .values
        .iter()
        .map(|&v| set_parameter(&base, parameter, v))
        .collect::<Result<_, _>>()?;
    claim_outputs(ctx, &["curve.csv", "report.json"])?;

    let results: Vec<Result<solwave::SolveResult<f64>, solwave::Error>> = {
        use rayon::prelude::*;
        specs.par_iter().map(|spec| solve(spec, &opts)).collect()
    };

    let mut rows = Vec::new();
    let mut points = Vec::new();
    let mut failures = 0usize;
    for (&v, res) in section.values.iter().zip(&results) {
        match res {
            Ok(r) => {
                let point = CurvePoint {
                    value: v,
                    objective: r.objective,
                    multiplier: r.multiplier,
                    constraint: r.constraint,
                    residual: r.residual,
                    iterations: r.iterations,
                    converged: r.converged,
                };
                if !r.converged {
                    failures += 1;
                    eprintln!("warning: sweep point {v} stopped with {:?}", r.stop);
                }
                points.push(point);
                rows.push(SweepRow { value: v, point: Some(point), error: None });
            }
            Err(e) => {
                failures += 1;
                eprintln!("warning: sweep point {v} failed: {e}");
                rows.push(SweepRow { value: v, point: None, error: Some(e.to_string()) });
            }
        }
    }
    let curve = CurveReport { parameter, points };
    curve.write_csv(ctx.out.join("curve.csv")).map_err(run_error)?;

    let scaling = match section.scaling_reference {
        Some(level) => Some(
            homogeneity_checks(&curve, base.nonlinearity.exponent, level).map_err(run_error)?,
        ),
        None => None,
    };
    let subadditivity = match &section.subadditivity_pairs {
        Some(pairs) => {
            let pairs: Vec<(f64, f64)> = pairs.iter().map(|&[a, b]| (a, b)).collect();
            Some(subadditivity_checks(&curve, &pairs, 0.01).map_err(run_error)?)
        }
        None => None,
    };
    let report = SweepReport { parameter, rows, scaling, subadditivity };
    write_json(&ctx.out.join("report.json"), &report)?;

    println!(
        "sweep: {} points, {} failed{}",
        section.values.len(),
        failures,
        if failures > 0 && !ctx.strict { " (continuing without --strict)" } else { "" }
    );
    if failures > 0 && ctx.strict {
        Ok(1)
    } else {
        Ok(0)
    }
}

// ---------------------------------------------------------------------------

/// Render a range bound compactly: integers without a decimal point,
/// everything else to six figures.
fn fmt_bound(v: f64) -> String {
    let rounded = (v * 1e9).round() / 1e9;
    if rounded == rounded.trunc() {
        format!("{}", rounded.trunc() as i64)
    } else {
        format!("{rounded:.6}")
    }
}

pub fn cmd_validate(ctx: &Context, config: &ExperimentConfig) -> Result<i32, CliError> {
    let sym = config.symbol()?;
    let nl = config.nonlinearity()?;
    let grid = config.grid()?;

    println!(
        "symbol: order s = {}, comparability constants ({}, {})",
        fmt_bound(sym.order),
        fmt_bound(sym.lower),
        fmt_bound(sym.upper)
    );
    let cls = classify_exponent(sym.order, nl.exponent);
    match cls.existence_upper {
        Some(b) => {
            println!("existence range: 1 < p < {}", fmt_bound(b));
            println!("existence upper bound p={}", fmt_bound(b));
        }
        None => println!("existence range: all p > 1"),
    }
    println!("stability range: 1 < p < {}", fmt_bound(cls.stability_upper));
    let verdict = match cls.status {
        ExponentStatus::StableRange => "inside the orbital-stability range",
        ExponentStatus::ExistenceOnly => "existence only (outside the stability range)",
        ExponentStatus::OutOfRange => "outside the existence range",
    };
    println!("p = {}: {verdict}", fmt_bound(nl.exponent));

    let report = sym.validate(&grid.xis());
    println!(
        "symbol bounds on the grid: {} ({} low-band and {} tail samples, \
         tail ratio range [{:.6}, {:.6}])",
        if report.passes { "ok" } else { "VIOLATED" },
        report.low_band_points,
        report.high_band_points,
        report.ratio_min,
        report.ratio_max
    );
    if report.passes || ctx.allow_failure {
        Ok(0)
    } else {
        Ok(1)
    }
}
