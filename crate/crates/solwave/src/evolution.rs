//! Pseudospectral time evolution and orbital-stability experiments.
//!
//! The dispersive equation is integrated with a fourth-order integrating
//! factor scheme: the stiff linear part `2 pi i xi m(xi)` is solved exactly
//! by the semigroup and the classical Runge-Kutta stages act on the
//! nonlinear term only. The regularized equations have a bounded linear
//! part (the multiplier `2 pi xi / (1 + m)` stays order one), so plain
//! Runge-Kutta applies. Products are dealiased with the 2/3 rule and the
//! Nyquist mode is pinned to zero throughout.

use crate::models::{EquationKind, Nonlinearity};
use crate::spectral::{inner, FftCache, Field, Grid};
use crate::symbols::SymbolSpec;
use crate::{Error, Result, Scalar};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

/// Time-integration setup for one of the three flows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolutionSpec<T> {
    pub equation: EquationKind,
    pub symbol: SymbolSpec<T>,
    pub nonlinearity: Nonlinearity<T>,
    pub dt: T,
    pub t_end: T,
    /// Record a snapshot every this many steps; 0 keeps endpoints only.
    pub snapshot_stride: usize,
    /// 2/3-rule dealiasing of the nonlinear term (on by default; switching
    /// it off is only useful for measuring what aliasing does).
    pub dealias: bool,
}

impl<T: Scalar> EvolutionSpec<T> {
    pub fn new(
        equation: EquationKind,
        symbol: SymbolSpec<T>,
        nonlinearity: Nonlinearity<T>,
        dt: T,
        t_end: T,
    ) -> Self {
        Self { equation, symbol, nonlinearity, dt, t_end, snapshot_stride: 0, dealias: true }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::InvalidOptions(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.t_end > T::zero()) || !self.t_end.is_finite() {
            return Err(Error::InvalidOptions(format!(
                "final time must be positive, got {}",
                self.t_end
            )));
        }
        Ok(())
    }
}

/// Evolution output: snapshots with their times and invariant values.
#[derive(Debug, Clone)]
pub struct EvolutionTrace<T> {
    pub times: Vec<T>,
    pub snapshots: Vec<Field<T>>,
    /// The two conserved functionals of the equation at each snapshot time
    /// (see [`invariant_names`]).
    pub invariants: Vec<[T; 2]>,
    pub steps_taken: usize,
    /// Time at which the sup norm passed the blow-up threshold, if it did;
    /// the trace stops there.
    pub blow_up: Option<T>,
    /// Largest advective Courant number `dt max|f'(u)| / dx` seen.
    pub cfl_max: T,
}

impl<T: Scalar> EvolutionTrace<T> {
    pub fn final_field(&self) -> &Field<T> {
        self.snapshots.last().expect("trace always holds the initial state")
    }

    /// Largest relative drift of each invariant against its initial value.
    pub fn invariant_drift(&self) -> [T; 2] {
        let first = self.invariants[0];
        let mut out = [T::zero(), T::zero()];
        for row in &self.invariants {
            for k in 0..2 {
                let denom = first[k].abs().max(T::of(1e-30));
                out[k] = out[k].max(((row[k] - first[k]) / denom).abs());
            }
        }
        out
    }
}

/// The two functionals conserved by each flow.
pub fn invariant_names(equation: EquationKind) -> [&'static str; 2] {
    match equation {
        EquationKind::Dispersive => ["energy", "charge"],
        EquationKind::Regularized => ["quadratic-form", "potential"],
        EquationKind::RegularizedShifted => ["quadratic-form", "shifted-potential"],
    }
}

/// Evaluate the conserved pair of `equation` on `u`.
pub fn invariants<T: Scalar>(
    u: &Field<T>,
    equation: EquationKind,
    sym: &SymbolSpec<T>,
    nl: &Nonlinearity<T>,
) -> [T; 2] {
    let lu = crate::spectral::apply_multiplier(sym, u);
    let half = T::of(0.5);
    let quad = inner(u, &lu);
    let l2 = inner(u, u);
    match equation {
        EquationKind::Dispersive => {
            let e = half * quad - u.map(|x| nl.primitive(x)).integral();
            [e, half * l2]
        }
        EquationKind::Regularized => {
            [half * (quad + l2), u.map(|x| nl.power_primitive(x)).integral()]
        }
        EquationKind::RegularizedShifted => [
            half * (quad + l2),
            half * l2 + u.map(|x| nl.power_primitive(x)).integral(),
        ],
    }
}

struct Stepper<T: Scalar> {
    grid: Grid<T>,
    cache: FftCache<T>,
    nl: Nonlinearity<T>,
    equation: EquationKind,
    /// `2 pi xi` times the dealias mask (0 on killed modes and at Nyquist).
    dxi_masked: Vec<T>,
    /// `1 / (1 + m)` for the regularized equations.
    inv_one_m: Vec<T>,
    /// Half- and full-step semigroup factors for the dispersive equation.
    e1: Vec<Complex<T>>,
    e2: Vec<Complex<T>>,
    dt: T,
    k1: Vec<Complex<T>>,
    k2: Vec<Complex<T>>,
    k3: Vec<Complex<T>>,
    k4: Vec<Complex<T>>,
    tmp: Vec<Complex<T>>,
    real: Vec<T>,
}

impl<T: Scalar> Stepper<T> {
    fn new(spec: &EvolutionSpec<T>, grid: Grid<T>) -> Self {
        let n = grid.n();
        let marr = crate::spectral::symbol_on_grid(&spec.symbol, &grid);
        let two_pi = T::of(2.0) * T::PI();
        let third = n as i64 / 3;
        let dxi_masked: Vec<T> = (0..n)
            .map(|i| {
                let k = grid.wavenumber(i);
                if (spec.dealias && k.abs() > third) || i == n / 2 {
                    T::zero()
                } else {
                    two_pi * grid.xi(i)
                }
            })
            .collect();
        let inv_one_m: Vec<T> = marr.iter().map(|&m| (T::one() + m).recip()).collect();
        let (mut e1, mut e2) = (Vec::new(), Vec::new());
        if spec.equation == EquationKind::Dispersive {
            // Semigroup of u_t = +2 pi i xi m u on each mode, Nyquist frozen.
            let half_dt = spec.dt * T::of(0.5);
            e1 = (0..n)
                .map(|i| {
                    if i == n / 2 {
                        Complex::new(T::one(), T::zero())
                    } else {
                        let th = two_pi * grid.xi(i) * marr[i] * half_dt;
                        Complex::new(th.cos(), th.sin())
                    }
                })
                .collect();
            e2 = e1.iter().map(|&z| z * z).collect();
        }
        let zeros = vec![Complex::new(T::zero(), T::zero()); n];
        Self {
            grid,
            cache: FftCache::new(),
            nl: spec.nonlinearity,
            equation: spec.equation,
            dxi_masked,
            inv_one_m,
            e1,
            e2,
            dt: spec.dt,
            k1: zeros.clone(),
            k2: zeros.clone(),
            k3: zeros.clone(),
            k4: zeros.clone(),
            tmp: zeros,
            real: vec![T::zero(); n],
        }
    }

    /// Nonlinear right-hand side in Fourier variables. Returns the sup norm
    /// and largest `|f'(u)|` of the physical-space stage field.
    fn rhs(&mut self, uhat: &[Complex<T>], out: &mut [Complex<T>]) -> (T, T) {
        let n = self.grid.n();
        let norm = T::of(n as f64).recip();
        out.copy_from_slice(uhat);
        self.cache.idft(out);
        let mut umax = T::zero();
        let mut jmax = T::zero();
        for (r, c) in self.real.iter_mut().zip(out.iter()) {
            let u = c.re * norm;
            umax = umax.max(u.abs());
            jmax = jmax.max(self.nl.derivative(u).abs());
            *r = match self.equation {
                // The shifted equation carries its identity part explicitly.
                EquationKind::RegularizedShifted => self.nl.power_term(u),
                _ => self.nl.eval(u),
            };
        }
        for (c, &r) in out.iter_mut().zip(&self.real) {
            *c = Complex::new(r, T::zero());
        }
        self.cache.dft(out);
        match self.equation {
            EquationKind::Dispersive => {
                for (i, c) in out.iter_mut().enumerate() {
                    // -2 pi i xi w
                    let t = self.dxi_masked[i];
                    *c = Complex::new(c.im * t, -c.re * t);
                }
            }
            EquationKind::Regularized => {
                for (i, c) in out.iter_mut().enumerate() {
                    let t = self.dxi_masked[i] * self.inv_one_m[i];
                    *c = Complex::new(c.im * t, -c.re * t);
                }
            }
            EquationKind::RegularizedShifted => {
                for (i, c) in out.iter_mut().enumerate() {
                    let t = self.dxi_masked[i] * self.inv_one_m[i];
                    let z = *c + uhat[i];
                    *c = Complex::new(z.im * t, -z.re * t);
                }
            }
        }
        (umax, jmax)
    }

    /// One full step; `uhat` is advanced in place. Returns the stage-one sup
    /// norm and Jacobian bound for blow-up and Courant monitoring.
    fn step(&mut self, uhat: &mut [Complex<T>]) -> (T, T) {
        let n = self.grid.n();
        let dt = self.dt;
        let half = T::of(0.5);
        let sixth = dt / T::of(6.0);
        let mut k1 = std::mem::take(&mut self.k1);
        let mut k2 = std::mem::take(&mut self.k2);
        let mut k3 = std::mem::take(&mut self.k3);
        let mut k4 = std::mem::take(&mut self.k4);
        let mut tmp = std::mem::take(&mut self.tmp);
        let monitor;
        if self.equation == EquationKind::Dispersive {
            monitor = self.rhs(uhat, &mut k1);
            for i in 0..n {
                tmp[i] = self.e1[i] * (uhat[i] + k1[i].scale(half * dt));
            }
            self.rhs(&tmp, &mut k2);
            for i in 0..n {
                tmp[i] = self.e1[i] * uhat[i] + k2[i].scale(half * dt);
            }
            self.rhs(&tmp, &mut k3);
            for i in 0..n {
                tmp[i] = self.e2[i] * uhat[i] + self.e1[i] * k3[i].scale(dt);
            }
            self.rhs(&tmp, &mut k4);
            for i in 0..n {
                let stage = self.e2[i] * k1[i]
                    + (self.e1[i] * (k2[i] + k3[i])).scale(T::of(2.0))
                    + k4[i];
                uhat[i] = self.e2[i] * uhat[i] + stage.scale(sixth);
            }
        } else {
            monitor = self.rhs(uhat, &mut k1);
            for i in 0..n {
                tmp[i] = uhat[i] + k1[i].scale(half * dt);
            }
            self.rhs(&tmp, &mut k2);
            for i in 0..n {
                tmp[i] = uhat[i] + k2[i].scale(half * dt);
            }
            self.rhs(&tmp, &mut k3);
            for i in 0..n {
                tmp[i] = uhat[i] + k3[i].scale(dt);
            }
            self.rhs(&tmp, &mut k4);
            for i in 0..n {
                let stage = k1[i] + (k2[i] + k3[i]).scale(T::of(2.0)) + k4[i];
                uhat[i] = uhat[i] + stage.scale(sixth);
            }
        }
        self.k1 = k1;
        self.k2 = k2;
        self.k3 = k3;
        self.k4 = k4;
        self.tmp = tmp;
        monitor
    }

    fn to_field(&mut self, uhat: &[Complex<T>]) -> Field<T> {
        let n = self.grid.n();
        let norm = T::of(n as f64).recip();
        let mut buf = uhat.to_vec();
        self.cache.idft(&mut buf);
        Field::from_values(self.grid, buf.iter().map(|c| c.re * norm).collect()).expect("size")
    }
}

/// Integrate `u0` under the flow described by `spec`.
pub fn evolve<T: Scalar>(u0: &Field<T>, spec: &EvolutionSpec<T>) -> Result<EvolutionTrace<T>> {
    spec.validate()?;
    let grid = *u0.grid();
    let steps = (spec.t_end / spec.dt - T::of(1e-9)).ceil().to_usize().ok_or_else(|| {
        Error::InvalidOptions(format!(
            "cannot take {} / {} steps",
            spec.t_end, spec.dt
        ))
    })?;
    let steps = steps.max(1);
    let mut st = Stepper::new(spec, grid);
    let mut uhat: Vec<Complex<T>> =
        u0.values().iter().map(|&v| Complex::new(v, T::zero())).collect();
    st.cache.dft(&mut uhat);
    uhat[grid.n() / 2] = Complex::new(T::zero(), T::zero());

    let u0_sup = u0.max_abs().max(T::of(1e-30));
    let bound = T::of(1e6) * u0_sup;
    let mut trace = EvolutionTrace {
        times: vec![T::zero()],
        snapshots: vec![u0.clone()],
        invariants: vec![invariants(u0, spec.equation, &spec.symbol, &spec.nonlinearity)],
        steps_taken: 0,
        blow_up: None,
        cfl_max: T::zero(),
    };

    for step in 1..=steps {
        let (umax, jmax) = st.step(&mut uhat);
        trace.steps_taken = step;
        trace.cfl_max = trace.cfl_max.max(spec.dt * jmax / grid.dx());
        let t = spec.dt * T::of(step as f64);
        if !umax.is_finite() || umax > bound {
            trace.blow_up = Some(t);
            let u = st.to_field(&uhat);
            trace.times.push(t);
            trace.invariants.push(invariants(&u, spec.equation, &spec.symbol, &spec.nonlinearity));
            trace.snapshots.push(u);
            return Ok(trace);
        }
        let record = step == steps
            || (spec.snapshot_stride > 0 && step % spec.snapshot_stride == 0);
        if record {
            let u = st.to_field(&uhat);
            trace.times.push(t);
            trace.invariants.push(invariants(&u, spec.equation, &spec.symbol, &spec.nonlinearity));
            trace.snapshots.push(u);
        }
    }
    Ok(trace)
}

// ---------------------------------------------------------------------------
// Orbital distance and stability experiments.

/// Distance from `u` to the translation orbit of `w` in the `H^r` metric:
/// `min_y || u(. + y) - w ||_(H^r)`, found by evaluating the correlation at
/// every grid shift and refining the best one parabolically. Returns the
/// distance and the minimizing shift. Nyquist modes are excluded (they do
/// not translate).
pub fn orbital_distance<T: Scalar>(u: &Field<T>, w: &Field<T>, r: T) -> (T, T) {
    assert!(u.grid().compatible(w.grid()), "orbital distance needs matching grids");
    let grid = *u.grid();
    let n = grid.n();
    let dx = grid.dx();
    let mut cache = FftCache::new();
    let mut uh: Vec<Complex<T>> = u.values().iter().map(|&v| Complex::new(v, T::zero())).collect();
    let mut wh: Vec<Complex<T>> = w.values().iter().map(|&v| Complex::new(v, T::zero())).collect();
    cache.dft(&mut uh);
    cache.dft(&mut wh);
    let zero = Complex::new(T::zero(), T::zero());
    uh[n / 2] = zero;
    wh[n / 2] = zero;
    // Coefficients carry dx; weights (1 + xi^2)^r.
    for c in uh.iter_mut().chain(wh.iter_mut()) {
        *c = c.scale(dx);
    }
    let weight: Vec<T> = (0..n)
        .map(|i| {
            let xi = grid.xi(i);
            (T::one() + xi * xi).powf(r)
        })
        .collect();
    let ell = grid.length();
    let mut base = T::zero();
    let mut corr: Vec<Complex<T>> = Vec::with_capacity(n);
    for i in 0..n {
        base = base + weight[i] * (uh[i].norm_sqr() + wh[i].norm_sqr());
        corr.push((wh[i].conj() * uh[i]).scale(weight[i]));
    }
    base = base / ell;
    cache.idft(&mut corr);
    // d^2 at shift y_j = j dx.
    let dist2 = |cross: T| (base - T::of(2.0) * cross / ell).max(T::zero());
    let (mut jbest, mut best) = (0usize, T::infinity());
    for (j, c) in corr.iter().enumerate() {
        let d2 = dist2(c.re);
        if d2 < best {
            best = d2;
            jbest = j;
        }
    }
    let dm = dist2(corr[(jbest + n - 1) % n].re);
    let dp = dist2(corr[(jbest + 1) % n].re);
    let denom = dm - T::of(2.0) * best + dp;
    let delta = if denom > T::zero() {
        (T::of(0.5) * (dm - dp) / denom).max(-T::of(0.5)).min(T::of(0.5))
    } else {
        T::zero()
    };
    let mut y = (T::of(jbest as f64) + delta) * dx;
    // Fold into [-l/2, l/2).
    if y >= ell * T::of(0.5) {
        y = y - ell;
    }
    // Exact distance at the refined shift.
    let two_pi = T::of(2.0) * T::PI();
    let mut acc = T::zero();
    for i in 0..n {
        let th = two_pi * grid.xi(i) * y;
        let phase = Complex::new(th.cos(), th.sin());
        acc = acc + weight[i] * (uh[i] * phase - wh[i]).norm_sqr();
    }
    ((acc / ell).sqrt(), y)
}

/// Band-limited random field with unit `H^r` norm: white noise restricted to
/// frequencies `|xi| <= band`. Deterministic in the seed.
pub fn noise_field<T: Scalar>(grid: Grid<T>, seed: u64, band: T, r: T) -> Result<Field<T>> {
    if !(band > T::zero()) {
        return Err(Error::InvalidOptions(format!("noise band must be positive, got {band}")));
    }
    let n = grid.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z: Vec<Complex<T>> = (0..n)
        .map(|_| {
            let v: f64 = StandardNormal.sample(&mut rng);
            Complex::new(T::of(v), T::zero())
        })
        .collect();
    let mut cache = FftCache::new();
    cache.dft(&mut z);
    for i in 0..n {
        if grid.xi(i).abs() > band || i == n / 2 {
            z[i] = Complex::new(T::zero(), T::zero());
        }
    }
    cache.idft(&mut z);
    let norm = T::of(n as f64).recip();
    let raw =
        Field::from_values(grid, z.iter().map(|c| c.re * norm).collect()).expect("size");
    let h = crate::spectral::sobolev_norm(&raw, r);
    if !(h > T::zero()) {
        return Err(Error::Numerical("noise field degenerated to zero".into()));
    }
    Ok(raw.scaled(h.recip()))
}

/// Setup for the perturbation-response experiment around a traveling wave.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityOptions<T> {
    /// Perturbation sizes, each applied to the same unit-norm noise draw.
    pub deltas: Vec<T>,
    pub seed: u64,
    pub dt: T,
    pub t_end: T,
    pub snapshot_stride: usize,
    /// Frequency band of the noise.
    pub noise_band: T,
    /// Noise is normalized in `H^1`.
    pub noise_index: T,
    /// Sobolev index of the orbital metric; `None` means half the symbol
    /// order (the energy space).
    pub distance_index: Option<T>,
}

impl<T: Scalar> Default for StabilityOptions<T> {
    fn default() -> Self {
        Self {
            deltas: vec![T::of(2.5e-4), T::of(5e-4), T::of(1e-3)],
            seed: 7,
            dt: T::of(2e-3),
            t_end: T::of(20.0),
            snapshot_stride: 250,
            noise_band: T::one(),
            noise_index: T::one(),
            distance_index: None,
        }
    }
}

/// Orbital response to perturbations of increasing size.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport<T> {
    /// Perturbation sizes sorted ascending.
    pub deltas: Vec<T>,
    /// `(time, orbital distance)` series per perturbation size.
    pub series: Vec<Vec<(T, T)>>,
    pub max_distance: Vec<T>,
    pub final_distance: Vec<T>,
    /// Whether the maximal excursion is nondecreasing in the perturbation
    /// size.
    pub monotone: bool,
    /// Largest excursion over all runs (infinite if a run blew up).
    pub bound: T,
}

/// Perturb `profile` with scaled noise and track the orbital distance under
/// the chosen flow.
pub fn stability_experiment<T: Scalar>(
    profile: &Field<T>,
    equation: EquationKind,
    sym: &SymbolSpec<T>,
    nl: &Nonlinearity<T>,
    opts: &StabilityOptions<T>,
) -> Result<StabilityReport<T>> {
    if opts.deltas.is_empty() {
        return Err(Error::InvalidOptions("need at least one perturbation size".into()));
    }
    let grid = *profile.grid();
    let noise = noise_field(grid, opts.seed, opts.noise_band, opts.noise_index)?;
    let r = opts.distance_index.unwrap_or(sym.order * T::of(0.5));
    let mut deltas = opts.deltas.clone();
    deltas.sort_by(|a, b| a.partial_cmp(b).expect("finite perturbation sizes"));

    let mut spec = EvolutionSpec::new(equation, sym.clone(), *nl, opts.dt, opts.t_end);
    spec.snapshot_stride = opts.snapshot_stride;

    let mut series = Vec::with_capacity(deltas.len());
    let mut max_distance = Vec::with_capacity(deltas.len());
    let mut final_distance = Vec::with_capacity(deltas.len());
    for &delta in &deltas {
        let mut u0 = profile.clone();
        u0.axpy(delta, &noise);
        let trace = evolve(&u0, &spec)?;
        let mut run = Vec::with_capacity(trace.snapshots.len());
        let mut worst = T::zero();
        for (t, snap) in trace.times.iter().zip(&trace.snapshots) {
            let (d, _) = orbital_distance(snap, profile, r);
            worst = worst.max(d);
            run.push((*t, d));
        }
        if trace.blow_up.is_some() {
            worst = T::infinity();
        }
        final_distance.push(run.last().expect("nonempty trace").1);
        max_distance.push(worst);
        series.push(run);
    }
    let monotone = max_distance.windows(2).all(|w| w[1] >= w[0]);
    let bound = max_distance.iter().fold(T::zero(), |a, &b| a.max(b));
    Ok(StabilityReport { deltas, series, max_distance, final_distance, monotone, bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{petviashvili, PetviashviliOptions};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn kdv_pieces() -> (SymbolSpec<f64>, Nonlinearity<f64>, Grid<f64>) {
        (
            SymbolSpec::neg_second_derivative(),
            Nonlinearity::absolute_power(2.0, 1.0).unwrap(),
            Grid::new(80.0, 512).unwrap(),
        )
    }

    #[test]
    fn soliton_translates_under_dispersive_flow() {
        let (sym, nl, grid) = kdv_pieces();
        let wave = petviashvili(
            &sym,
            &nl,
            grid,
            1.0,
            EquationKind::Dispersive,
            &PetviashviliOptions::default(),
        )
        .unwrap();
        assert!(wave.converged);
        let mut spec = EvolutionSpec::new(EquationKind::Dispersive, sym, nl, 2e-3, 2.0);
        spec.snapshot_stride = 0;
        let trace = evolve(&wave.field, &spec).unwrap();
        assert!(trace.blow_up.is_none());
        // u(x, t) = u0(x - c t) with c = 1.
        let expect = crate::spectral::shift(&wave.field, -2.0);
        let mut diff = trace.final_field().clone();
        diff.axpy(-1.0, &expect);
        assert!(diff.max_abs() < 1e-8, "translation error {:.3e}", diff.max_abs());
        let drift = trace.invariant_drift();
        assert!(drift[0] < 1e-9, "energy drift {:.3e}", drift[0]);
        assert!(drift[1] < 1e-11, "charge drift {:.3e}", drift[1]);
    }

    #[test]
    fn soliton_translates_under_shifted_regularized_flow() {
        let (sym, nl, grid) = kdv_pieces();
        let wave = petviashvili(
            &sym,
            &nl,
            grid,
            2.0,
            EquationKind::RegularizedShifted,
            &PetviashviliOptions::default(),
        )
        .unwrap();
        assert!(wave.converged);
        let mut spec =
            EvolutionSpec::new(EquationKind::RegularizedShifted, sym, nl, 1e-3, 1.0);
        spec.snapshot_stride = 0;
        let trace = evolve(&wave.field, &spec).unwrap();
        let expect = crate::spectral::shift(&wave.field, -2.0);
        let mut diff = trace.final_field().clone();
        diff.axpy(-1.0, &expect);
        assert!(diff.max_abs() < 1e-8, "translation error {:.3e}", diff.max_abs());
    }

    #[test]
    fn regularized_flow_conserves_potential_exactly() {
        let (sym, nl, grid) = kdv_pieces();
        let u0 = Field::from_fn(grid, |x| 0.7 * (-x * x / 8.0).exp());
        let mut spec = EvolutionSpec::new(EquationKind::Regularized, sym, nl, 1e-3, 1.0);
        spec.snapshot_stride = 100;
        let trace = evolve(&u0, &spec).unwrap();
        let drift = trace.invariant_drift();
        // The potential is conserved to roundoff by the semi-discrete flow;
        // the quadratic form only up to the integrator's order.
        assert!(drift[1] < 1e-12, "potential drift {:.3e}", drift[1]);
        assert!(drift[0] < 1e-9, "quadratic form drift {:.3e}", drift[0]);
    }

    #[test]
    fn orbital_distance_recovers_translation() {
        let grid = Grid::<f64>::new(60.0, 512).unwrap();
        let dx = grid.dx();
        let u = Field::from_fn(grid, |x| 1.3 / (x / 2.0).cosh().powi(2));
        // A whole-grid-point shift is found exactly.
        let on_grid = 64.0 * dx;
        let (d, y) = orbital_distance(&crate::spectral::shift(&u, on_grid), &u, 0.5);
        assert_abs_diff_eq!(d, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(y, -on_grid, epsilon = 1e-12);
        // Off-grid shifts are located by parabolic refinement; the residual
        // distance it leaves behind scales like dx^2 and sits well below the
        // perturbation sizes the stability experiments resolve.
        let (d, y) = orbital_distance(&crate::spectral::shift(&u, 7.3), &u, 0.5);
        assert!(d < 5e-5, "refinement floor {d:.3e}");
        assert_abs_diff_eq!(y, -7.3, epsilon = 5e-5);
        // Distance to a genuinely different profile is positive and
        // insensitive to translating the first argument.
        let w = Field::from_fn(grid, |x| 1.3 / (x / 1.5).cosh().powi(2));
        let (d1, _) = orbital_distance(&u, &w, 0.5);
        let (d2, _) = orbital_distance(&crate::spectral::shift(&u, 4.0), &w, 0.5);
        assert!(d1 > 0.1);
        assert_relative_eq!(d1, d2, max_relative = 1e-8);
    }

    #[test]
    fn noise_is_seeded_banded_and_normalized() {
        let grid = Grid::<f64>::new(60.0, 512).unwrap();
        let a = noise_field(grid, 7, 1.0, 1.0).unwrap();
        let b = noise_field(grid, 7, 1.0, 1.0).unwrap();
        assert_eq!(a, b);
        let c = noise_field(grid, 8, 1.0, 1.0).unwrap();
        assert!({
            let mut d = a.clone();
            d.axpy(-1.0, &c);
            d.max_abs() > 1e-3
        });
        assert_relative_eq!(crate::spectral::sobolev_norm(&a, 1.0), 1.0, max_relative = 1e-12);
        let spec = crate::spectral::forward(&a);
        for (_, xi, coeff) in spec.iter() {
            if xi.abs() > 1.0 {
                assert_abs_diff_eq!(coeff.norm_sqr(), 0.0, epsilon = 1e-25);
            }
        }
    }

    #[test]
    fn perturbed_soliton_stays_near_orbit() {
        let (sym, nl, grid) = kdv_pieces();
        let wave = petviashvili(
            &sym,
            &nl,
            grid,
            1.0,
            EquationKind::Dispersive,
            &PetviashviliOptions::default(),
        )
        .unwrap();
        let opts = StabilityOptions {
            deltas: vec![1e-3, 5e-4],
            t_end: 2.0,
            snapshot_stride: 200,
            ..StabilityOptions::default()
        };
        let report =
            stability_experiment(&wave.field, EquationKind::Dispersive, &sym, &nl, &opts).unwrap();
        assert!(report.monotone);
        assert!(report.bound < 1e-2, "excursion {:.3e}", report.bound);
        assert!(report.bound > 1e-5, "perturbation should register");
        assert_eq!(report.deltas, vec![5e-4, 1e-3]);
    }

    #[test]
    fn evolve_rejects_bad_steps() {
        let (sym, nl, grid) = kdv_pieces();
        let u0 = Field::zeros(grid);
        let spec = EvolutionSpec::new(EquationKind::Dispersive, sym.clone(), nl, 0.0, 1.0);
        assert!(evolve(&u0, &spec).is_err());
        let spec = EvolutionSpec::new(EquationKind::Dispersive, sym, nl, 1e-3, -1.0);
        assert!(evolve(&u0, &spec).is_err());
    }
}
