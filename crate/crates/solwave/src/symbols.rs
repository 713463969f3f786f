//! Fourier multiplier symbols `m(xi)` and their admissibility checks.
//!
//! A symbol of order `s` is admissible when `m` is even, nonnegative, bounded
//! on the unit band, and comparable to `|xi|^s` outside it:
//! `A1 (2 pi |xi|)^s <= m(xi) <= A2 (2 pi |xi|)^s` for `|xi| >= 1`.
//! The `2 pi` factors come from the transform convention used throughout the
//! crate (frequencies are cycles per unit length, not radians).

use crate::{Error, Result, Scalar};
use serde::{Deserialize, Serialize};

/// Finite union of disjoint closed intervals, kept sorted.
///
/// Used as the jump set of piecewise-defined symbols. Construction merges
/// overlapping or exactly touching intervals, so membership tests can binary
/// search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet<T> {
    intervals: Vec<(T, T)>,
}

impl<T: Scalar> IntervalSet<T> {
    /// Build from arbitrary closed intervals; sorts and merges touching ones.
    pub fn new(mut raw: Vec<(T, T)>) -> Result<Self> {
        for &(a, b) in &raw {
            if !a.is_finite() || !b.is_finite() || a > b {
                return Err(Error::Geometry(format!(
                    "interval [{a}, {b}] is not a finite ordered pair"
                )));
            }
        }
        raw.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite endpoints"));
        let mut merged: Vec<(T, T)> = Vec::with_capacity(raw.len());
        for (a, b) in raw {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        Ok(Self { intervals: merged })
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Number of disjoint intervals after merging.
    pub fn count(&self) -> usize {
        self.intervals.len()
    }

    /// Total length.
    pub fn measure(&self) -> T {
        self.intervals
            .iter()
            .map(|&(a, b)| b - a)
            .fold(T::zero(), |acc, w| acc + w)
    }

    /// Closed-interval membership: endpoints belong to the set.
    pub fn contains(&self, x: T) -> bool {
        let i = self.intervals.partition_point(|&(a, _)| a <= x);
        i > 0 && x <= self.intervals[i - 1].1
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.intervals.iter().copied()
    }

    /// Smallest interval containing the set, or `None` when empty.
    pub fn span(&self) -> Option<(T, T)> {
        match (self.intervals.first(), self.intervals.last()) {
            (Some(&(a, _)), Some(&(_, b))) => Some((a, b)),
            _ => None,
        }
    }
}

/// Positive-measure Cantor-type subset of `[0, tiles]`.
///
/// Starting from `[0, 1]`, step `n` removes the middle open interval of
/// length `alpha / 2^(2n - 1)` from each of the `2^(n-1)` pieces; after
/// `depth` steps the remaining set has measure `1 - alpha (1 - 2^-depth)`,
/// which stays positive for `alpha` in `(0, 1)`. The construction is then
/// repeated on `[j, j+1]` for `j < tiles` and touching pieces are merged.
pub fn build_cantor_set<T: Scalar>(alpha: T, depth: u32, tiles: u32) -> Result<IntervalSet<T>> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::Geometry(format!(
            "cantor removal fraction must lie in (0, 1), got {alpha}"
        )));
    }
    if tiles == 0 {
        return Err(Error::Geometry("cantor set needs at least one tile".into()));
    }
    let mut pieces = vec![(T::zero(), T::one())];
    let two = T::of(2.0);
    for step in 1..=depth {
        let r = alpha / two.powi(2 * step as i32 - 1);
        let mut next = Vec::with_capacity(2 * pieces.len());
        for &(a, b) in &pieces {
            if r >= b - a {
                return Err(Error::Geometry(format!(
                    "cantor step {step} removes more than the remaining interval"
                )));
            }
            let mid = (a + b) * T::of(0.5);
            let half = r * T::of(0.5);
            next.push((a, mid - half));
            next.push((mid + half, b));
        }
        pieces = next;
    }
    let mut tiled = Vec::with_capacity(pieces.len() * tiles as usize);
    for j in 0..tiles {
        let off = T::of(j as f64);
        tiled.extend(pieces.iter().map(|&(a, b)| (a + off, b + off)));
    }
    IntervalSet::new(tiled)
}

/// The symbol families the crate knows how to evaluate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum SymbolKind<T> {
    /// `(2 pi |xi|)^s`.
    Fractional,
    /// `(2 pi xi)^2`, the symbol of `-d^2/dx^2`.
    NegSecondDerivative,
    /// `sqrt((1 + tension (2 pi xi)^2) tanh(2 pi |xi|) / (2 pi |xi|))`:
    /// gravity-capillary water waves with unit depth, order 1/2.
    CapillaryWhitham { tension: T },
    /// `(2 pi |xi|)^s` scaled by `lower` on the jump set and `upper` off it.
    /// Discontinuous on the boundary of the set; membership is closed, so the
    /// lower branch wins there.
    FatCantor { jump_set: IntervalSet<T> },
    /// Piecewise-linear interpolation of `(xi_i, m_i)` samples on `xi >= 0`,
    /// extended evenly; beyond the last sample the symbol continues with the
    /// declared-order ratio `m_last (|xi| / xi_last)^s`.
    Tabulated { samples: Vec<(T, T)> },
    /// Pointwise square root of another symbol.
    SqrtOf(Box<SymbolSpec<T>>),
}

/// A symbol together with its declared order and comparability constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymbolSpec<T> {
    pub kind: SymbolKind<T>,
    /// Growth order `s`.
    pub order: T,
    /// Comparability constant `A1` (lower).
    pub lower: T,
    /// Comparability constant `A2` (upper).
    pub upper: T,
}

impl<T: Scalar> SymbolSpec<T> {
    pub fn fractional(order: T) -> Result<Self> {
        if !(order > T::zero()) {
            return Err(Error::InvalidSymbol(format!(
                "fractional order must be positive, got {order}"
            )));
        }
        Ok(Self { kind: SymbolKind::Fractional, order, lower: T::one(), upper: T::one() })
    }

    pub fn neg_second_derivative() -> Self {
        Self {
            kind: SymbolKind::NegSecondDerivative,
            order: T::of(2.0),
            lower: T::one(),
            upper: T::one(),
        }
    }

    /// Capillary-gravity Whitham symbol with surface tension `tension > 0`.
    ///
    /// On `|xi| >= 1` the squared ratio `m^2 / (2 pi |xi|)` decreases from
    /// `(tension + 1/(4 pi^2)) tanh(2 pi)` to `tension`, giving the slightly
    /// conservative constants used here.
    pub fn capillary_whitham(tension: T) -> Result<Self> {
        if !(tension > T::zero()) {
            return Err(Error::InvalidSymbol(format!(
                "surface tension must be positive, got {tension}"
            )));
        }
        let two_pi = T::of(2.0) * T::PI();
        let lower = (tension * two_pi.tanh()).sqrt();
        let upper = (tension + (two_pi * two_pi).recip()).sqrt();
        Ok(Self {
            kind: SymbolKind::CapillaryWhitham { tension },
            order: T::of(0.5),
            lower,
            upper,
        })
    }

    pub fn fat_cantor(order: T, lower: T, upper: T, jump_set: IntervalSet<T>) -> Result<Self> {
        if !(order > T::zero()) || !(lower > T::zero()) || !(upper >= lower) {
            return Err(Error::InvalidSymbol(format!(
                "fat-cantor symbol needs order > 0 and 0 < lower <= upper, \
                 got order {order}, lower {lower}, upper {upper}"
            )));
        }
        Ok(Self { kind: SymbolKind::FatCantor { jump_set }, order, lower, upper })
    }

    /// Tabulated symbol; samples must start at `xi = 0`, be strictly
    /// increasing in `xi`, and carry nonnegative values.
    pub fn tabulated(samples: Vec<(T, T)>, order: T, lower: T, upper: T) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidSymbol("tabulated symbol needs at least two samples".into()));
        }
        if samples[0].0 != T::zero() {
            return Err(Error::InvalidSymbol("tabulated samples must start at xi = 0".into()));
        }
        for w in samples.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidSymbol(
                    "tabulated sample frequencies must be strictly increasing".into(),
                ));
            }
        }
        if samples.iter().any(|&(_, m)| !(m >= T::zero()) || !m.is_finite()) {
            return Err(Error::InvalidSymbol("tabulated symbol values must be nonnegative".into()));
        }
        if !(order > T::zero()) || !(lower > T::zero()) || !(upper >= lower) {
            return Err(Error::InvalidSymbol(
                "tabulated symbol needs order > 0 and 0 < lower <= upper".into(),
            ));
        }
        Ok(Self { kind: SymbolKind::Tabulated { samples }, order, lower, upper })
    }

    /// Symbol of the operator square root: order halves, constants take
    /// square roots.
    pub fn sqrt_symbol(&self) -> Self {
        Self {
            kind: SymbolKind::SqrtOf(Box::new(self.clone())),
            order: self.order * T::of(0.5),
            lower: self.lower.sqrt(),
            upper: self.upper.sqrt(),
        }
    }

    /// Evaluate `m(xi)`. Even in `xi` by construction.
    pub fn eval(&self, xi: T) -> T {
        let two_pi = T::of(2.0) * T::PI();
        let axi = xi.abs();
        match &self.kind {
            SymbolKind::Fractional => (two_pi * axi).powf(self.order),
            SymbolKind::NegSecondDerivative => {
                let w = two_pi * xi;
                w * w
            }
            SymbolKind::CapillaryWhitham { tension } => {
                let a = two_pi * axi;
                let ratio = if a < T::of(1e-8) { T::one() } else { a.tanh() / a };
                ((T::one() + *tension * a * a) * ratio).sqrt()
            }
            SymbolKind::FatCantor { jump_set } => {
                let base = (two_pi * axi).powf(self.order);
                if jump_set.contains(axi) {
                    self.lower * base
                } else {
                    self.upper * base
                }
            }
            SymbolKind::Tabulated { samples } => {
                let (xi_last, m_last) = *samples.last().expect("validated nonempty");
                if axi >= xi_last {
                    return m_last * (axi / xi_last).powf(self.order);
                }
                let i = samples.partition_point(|&(x, _)| x <= axi);
                // axi < xi_last and samples start at 0, so 1 <= i < len.
                let (x0, m0) = samples[i - 1];
                let (x1, m1) = samples[i];
                let w = (axi - x0) / (x1 - x0);
                m0 + w * (m1 - m0)
            }
            SymbolKind::SqrtOf(inner) => inner.eval(xi).max(T::zero()).sqrt(),
        }
    }

    /// Comparability constants against `|xi|^s` (rather than `(2 pi |xi|)^s`):
    /// `(A1 (2 pi)^s, A2 (2 pi)^s)`.
    pub fn effective_bounds(&self) -> (T, T) {
        let f = (T::of(2.0) * T::PI()).powf(self.order);
        (self.lower * f, self.upper * f)
    }

    /// Check the declared order and constants against sampled frequencies.
    ///
    /// For `|xi| >= 1` the ratio `m / |xi|^s` must stay inside the effective
    /// bounds; for `|xi| <= 1` the symbol must stay in `[0, A2 (2 pi)^s]`.
    /// A relative slack of 1e-9 absorbs roundoff at points where a bound is
    /// attained exactly.
    pub fn validate(&self, frequencies: &[T]) -> ValidationReport<T> {
        let (eff_lower, eff_upper) = self.effective_bounds();
        let slack = T::of(1e-9);
        let one_plus = T::one() + slack;
        let mut report = ValidationReport {
            effective_lower: eff_lower,
            effective_upper: eff_upper,
            ratio_min: T::infinity(),
            ratio_max: T::neg_infinity(),
            low_band_max: T::zero(),
            high_band_points: 0,
            low_band_points: 0,
            passes: true,
        };
        for &xi in frequencies {
            let axi = xi.abs();
            let m = self.eval(xi);
            if !(m >= T::zero()) || !m.is_finite() {
                report.passes = false;
                continue;
            }
            if axi >= T::one() {
                report.high_band_points += 1;
                let ratio = m / axi.powf(self.order);
                report.ratio_min = report.ratio_min.min(ratio);
                report.ratio_max = report.ratio_max.max(ratio);
                if ratio < eff_lower / one_plus || ratio > eff_upper * one_plus {
                    report.passes = false;
                }
            } else {
                report.low_band_points += 1;
                report.low_band_max = report.low_band_max.max(m);
                if m > eff_upper * one_plus {
                    report.passes = false;
                }
            }
        }
        report
    }
}

/// Outcome of sampling-based symbol validation.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport<T> {
    /// `A1 (2 pi)^s`.
    pub effective_lower: T,
    /// `A2 (2 pi)^s`.
    pub effective_upper: T,
    /// Smallest observed `m / |xi|^s` over `|xi| >= 1`.
    pub ratio_min: T,
    /// Largest observed `m / |xi|^s` over `|xi| >= 1`.
    pub ratio_max: T,
    /// Largest observed `m` over `|xi| <= 1`.
    pub low_band_max: T,
    pub high_band_points: usize,
    pub low_band_points: usize,
    pub passes: bool,
}
