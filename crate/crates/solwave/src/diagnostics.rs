//! Regularity probes and parameter sweeps over the variational solvers.

use crate::solver::{solve, ProblemKind, ProblemSpec, SolveResult, SolverOptions};
use crate::spectral::{forward, norm_l2, resample, Field};
use crate::{Error, Result, Scalar};
use rayon::prelude::*;
use serde::Serialize;
use std::path::Path;

/// Power-law fit `|C(xi)| ~ A xi^(-exponent)` to a spectral tail.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailFit<T> {
    pub exponent: T,
    /// Natural log of the fitted amplitude `A`.
    pub log_amplitude: T,
    /// Frequency band the fit used.
    pub band: (T, T),
    pub points: usize,
    /// Root-mean-square residual of the log-log fit.
    pub rms_residual: T,
    /// Coefficients at or below this magnitude were excluded as roundoff.
    pub floor: T,
}

/// Fit the decay rate of the upper spectrum of `u`.
///
/// The fit runs over positive frequencies in `[lo_frac, hi_frac]` times the
/// Nyquist frequency, skipping coefficients within a factor 1e-13 of the
/// largest one — those sit at roundoff and would drag the slope toward zero.
/// Smoother fields give larger exponents; for analytic profiles the value
/// keeps growing with resolution instead of settling.
pub fn spectral_tail_exponent<T: Scalar>(
    u: &Field<T>,
    lo_frac: T,
    hi_frac: T,
) -> Result<TailFit<T>> {
    if !(T::zero() < lo_frac && lo_frac < hi_frac && hi_frac <= T::one()) {
        return Err(Error::InvalidOptions(format!(
            "need 0 < lo < hi <= 1 as Nyquist fractions, got ({lo_frac}, {hi_frac})"
        )));
    }
    let spec = forward(u);
    let cmax = spec
        .coeffs()
        .iter()
        .fold(T::zero(), |a, c| a.max(c.norm_sqr()))
        .sqrt();
    if !(cmax > T::zero()) {
        return Err(Error::InvalidOptions("cannot fit the spectrum of the zero field".into()));
    }
    let floor = T::of(1e-13) * cmax;
    let nyq = u.grid().xi(u.grid().n() / 2).abs();
    let (lo, hi) = (lo_frac * nyq, hi_frac * nyq);
    let mut pts: Vec<(T, T)> = Vec::new();
    for (k, xi, c) in spec.iter() {
        if k <= 0 || xi < lo || xi > hi {
            continue;
        }
        let mag = c.norm_sqr().sqrt();
        if mag > floor {
            pts.push((xi.ln(), mag.ln()));
        }
    }
    if pts.len() < 8 {
        return Err(Error::Numerical(format!(
            "only {} usable coefficients in the band [{lo}, {hi}]; \
             the tail is below roundoff there",
            pts.len()
        )));
    }
    let n = T::of(pts.len() as f64);
    let sx: T = pts.iter().map(|p| p.0).sum();
    let sy: T = pts.iter().map(|p| p.1).sum();
    let sxx: T = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: T = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if !(denom > T::zero()) {
        return Err(Error::Numerical("degenerate band for the tail fit".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mut ss = T::zero();
    for &(x, y) in &pts {
        let r = y - (slope * x + intercept);
        ss = ss + r * r;
    }
    Ok(TailFit {
        exponent: -slope,
        log_amplitude: intercept,
        band: (lo, hi),
        points: pts.len(),
        rms_residual: (ss / n).sqrt(),
        floor,
    })
}

/// Self-convergence and tail-decay report for a solve.
#[derive(Debug, Clone)]
pub struct RegularityReport<T> {
    pub coarse: SolveResult<T>,
    pub fine: SolveResult<T>,
    pub coarse_tail: TailFit<T>,
    pub fine_tail: TailFit<T>,
    /// `L^2` distance between the fine solution and the spectrally
    /// interpolated coarse one.
    pub refinement_distance: T,
    pub relative_refinement_distance: T,
}

/// Solve on the given grid and on its twofold refinement, then compare.
///
/// The refined solve starts from the interpolated coarse minimizer, so it
/// converges in a handful of steps; the distance between the two solutions
/// measures how much of the profile the coarse grid missed.
pub fn regularity_profile<T: Scalar>(
    spec: &ProblemSpec<T>,
    opts: &SolverOptions<T>,
) -> Result<RegularityReport<T>> {
    let coarse = solve(spec, opts)?;
    let mut fine_spec = spec.clone();
    fine_spec.grid = crate::spectral::Grid::new(spec.grid.length(), spec.grid.n() * 2)?;
    let mut fine_opts = opts.clone();
    fine_opts.init =
        crate::solver::InitialGuess::Profile(resample(&coarse.field, fine_spec.grid.n())?);
    // Recentering already happened on the coarse run; keep the fine solve
    // aligned with its initial guess.
    let fine = solve(&fine_spec, &fine_opts)?;
    let coarse_on_fine = resample(&coarse.field, fine_spec.grid.n())?;
    let mut diff = fine.field.clone();
    diff.axpy(-T::one(), &coarse_on_fine);
    let dist = norm_l2(&diff);
    let rel = dist / norm_l2(&fine.field);
    let frac = (T::of(0.1), T::of(0.5));
    let coarse_tail = spectral_tail_exponent(&coarse.field, frac.0, frac.1)?;
    let fine_tail = spectral_tail_exponent(&fine.field, frac.0, frac.1)?;
    Ok(RegularityReport {
        coarse,
        fine,
        coarse_tail,
        fine_tail,
        refinement_distance: dist,
        relative_refinement_distance: rel,
    })
}

// ---------------------------------------------------------------------------
// Parameter sweeps.

/// Which knob a sweep turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepParameter {
    /// Constraint level (charge or potential level, whichever the problem
    /// fixes).
    Level,
    /// Weight of the quadratic form (fixed-potential problems only).
    Kappa,
    /// Nonlinearity exponent.
    Exponent,
}

/// Summary of one solve in a sweep.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurvePoint<T> {
    pub value: T,
    pub objective: T,
    pub multiplier: T,
    pub constraint: T,
    pub residual: T,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveReport<T> {
    pub parameter: SweepParameter,
    pub points: Vec<CurvePoint<T>>,
}

fn apply_parameter<T: Scalar>(
    base: &ProblemSpec<T>,
    parameter: SweepParameter,
    v: T,
) -> Result<ProblemSpec<T>> {
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
                return Err(Error::InvalidOptions(
                    "only fixed-potential problems carry a quadratic-form weight".into(),
                ))
            }
        },
        SweepParameter::Exponent => spec.nonlinearity.exponent = v,
    }
    Ok(spec)
}

/// Solve the base problem at each parameter value (in parallel) and collect
/// the value curve.
pub fn curve_study<T: Scalar>(
    base: &ProblemSpec<T>,
    parameter: SweepParameter,
    values: &[T],
    opts: &SolverOptions<T>,
) -> Result<CurveReport<T>> {
    if values.is_empty() {
        return Err(Error::InvalidOptions("sweep needs at least one parameter value".into()));
    }
    let specs: Vec<ProblemSpec<T>> = values
        .iter()
        .map(|&v| apply_parameter(base, parameter, v))
        .collect::<Result<_>>()?;
    let points: Vec<CurvePoint<T>> = specs
        .par_iter()
        .zip(values.par_iter())
        .map(|(spec, &v)| {
            let res = solve(spec, opts)?;
            Ok(CurvePoint {
                value: v,
                objective: res.objective,
                multiplier: res.multiplier,
                constraint: res.constraint,
                residual: res.residual,
                iterations: res.iterations,
                converged: res.converged,
            })
        })
        .collect::<Result<_>>()?;
    Ok(CurveReport { parameter, points })
}

impl<T: Scalar> CurveReport<T> {
    /// Point whose parameter value matches `v` to relative precision 1e-12.
    pub fn at(&self, v: T) -> Option<&CurvePoint<T>> {
        self.points
            .iter()
            .find(|p| (p.value - v).abs() <= T::of(1e-12) * v.abs().max(T::one()))
    }

    /// Deterministic CSV rendering of the curve.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("value,objective,multiplier,constraint,residual,iterations,converged\n");
        for p in &self.points {
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{},{}\n",
                p.value, p.objective, p.multiplier, p.constraint, p.residual, p.iterations,
                p.converged
            ));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// One strict-subadditivity comparison `I(a + b) < I(a) + I(b)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SubadditivityCheck<T> {
    pub a: T,
    pub b: T,
    /// `I(a) + I(b) - I(a + b)`; strict subadditivity means this is
    /// positive.
    pub margin: T,
    /// Margin relative to `|I(a + b)|`.
    pub relative_margin: T,
    pub strict: bool,
}

/// Check strict subadditivity of the value curve at the given level pairs.
/// Every level involved must be present in the sweep.
pub fn subadditivity_checks<T: Scalar>(
    report: &CurveReport<T>,
    pairs: &[(T, T)],
    relative_tolerance: T,
) -> Result<Vec<SubadditivityCheck<T>>> {
    let lookup = |v: T| {
        report.at(v).map(|p| p.objective).ok_or_else(|| {
            Error::InvalidOptions(format!("sweep has no point at parameter value {v}"))
        })
    };
    pairs
        .iter()
        .map(|&(a, b)| {
            let ia = lookup(a)?;
            let ib = lookup(b)?;
            let iab = lookup(a + b)?;
            let margin = ia + ib - iab;
            let relative_margin = margin / iab.abs().max(T::of(1e-30));
            Ok(SubadditivityCheck {
                a,
                b,
                margin,
                relative_margin,
                strict: relative_margin > relative_tolerance,
            })
        })
        .collect()
}

/// One homogeneity comparison of a fixed-potential value curve:
/// `Gamma(theta lambda) = theta^(2/(p+1)) Gamma(lambda)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScalingCheck<T> {
    pub level: T,
    pub theta: T,
    pub predicted: T,
    pub measured: T,
    pub relative_error: T,
}

/// Compare every sweep point against the power law through the point at
/// `reference_level`.
pub fn homogeneity_checks<T: Scalar>(
    report: &CurveReport<T>,
    exponent: T,
    reference_level: T,
) -> Result<Vec<ScalingCheck<T>>> {
    let base = report.at(reference_level).ok_or_else(|| {
        Error::InvalidOptions(format!("sweep has no point at the reference level {reference_level}"))
    })?;
    let pow = T::of(2.0) / (exponent + T::one());
    Ok(report
        .points
        .iter()
        .map(|p| {
            let theta = p.value / reference_level;
            let predicted = base.objective * theta.powf(pow);
            ScalingCheck {
                level: p.value,
                theta,
                predicted,
                measured: p.objective,
                relative_error: ((p.objective - predicted) / predicted).abs(),
            }
        })
        .collect())
}
