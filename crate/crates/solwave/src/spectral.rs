//! Periodic grids, discrete transforms, and multiplier application.
//!
//! Transform convention: on `[-l/2, l/2)` with `n` points, the forward
//! transform returns coefficients `C_k ~ integral of u(x) e^(-2 pi i x xi_k) dx`
//! at frequencies `xi_k = k / l`, `k = -n/2 .. n/2 - 1`, so that
//! `u(x) = sum_k C_k e^(2 pi i xi_k x) * (1/l)` and Parseval reads
//! `dx * sum u^2 = sum |C_k|^2 / l`. With this convention `-d^2/dx^2`
//! corresponds to multiplication by `(2 pi xi)^2`.
//!
//! Multiplier application always zeroes the asymmetric Nyquist mode
//! `k = -n/2`; the discrete operator is exactly self-adjoint and maps real
//! fields to real fields.

use crate::symbols::SymbolSpec;
use crate::{Error, Result, Scalar};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Read as _, Write as _};
use std::path::Path;

/// Uniform periodic grid on `[-length/2, length/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    n: usize,
    length: T,
}

impl<T: Scalar> Grid<T> {
    /// `n` must be a power of two (at least 8) for transform efficiency.
    pub fn new(length: T, n: usize) -> Result<Self> {
        if !(length > T::zero()) || !length.is_finite() {
            return Err(Error::InvalidGrid(format!("period must be positive, got {length}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "point count must be a power of two >= 8, got {n}"
            )));
        }
        Ok(Self { n, length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn dx(&self) -> T {
        self.length / T::of(self.n as f64)
    }

    /// Frequency spacing `1 / length`.
    pub fn dxi(&self) -> T {
        self.length.recip()
    }

    pub fn x(&self, j: usize) -> T {
        -self.length * T::of(0.5) + self.dx() * T::of(j as f64)
    }

    /// Signed wavenumber of storage index `i` (transform order:
    /// `0, 1, ..., n/2 - 1, -n/2, ..., -1`).
    pub fn wavenumber(&self, i: usize) -> i64 {
        debug_assert!(i < self.n);
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Frequency of storage index `i`.
    pub fn xi(&self, i: usize) -> T {
        T::of(self.wavenumber(i) as f64) / self.length
    }

    pub fn nyquist_index(&self) -> usize {
        self.n / 2
    }

    pub fn xs(&self) -> Vec<T> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// All frequencies in storage order.
    pub fn xis(&self) -> Vec<T> {
        (0..self.n).map(|i| self.xi(i)).collect()
    }

    pub fn compatible(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

/// Real-valued grid function.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    grid: Grid<T>,
    values: Vec<T>,
}

impl<T: Scalar> Field<T> {
    pub fn zeros(grid: Grid<T>) -> Self {
        Self { grid, values: vec![T::zero(); grid.n()] }
    }

    pub fn from_fn(grid: Grid<T>, f: impl Fn(T) -> T) -> Self {
        let values = (0..grid.n()).map(|j| f(grid.x(j))).collect();
        Self { grid, values }
    }

    pub fn from_values(grid: Grid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidGrid(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.n()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scaled(&self, a: T) -> Self {
        self.map(|v| a * v)
    }

    pub fn scale(&mut self, a: T) {
        for v in &mut self.values {
            *v = *v * a;
        }
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: T, other: &Self) {
        assert!(self.grid.compatible(&other.grid), "fields live on different grids");
        for (v, &w) in self.values.iter_mut().zip(&other.values) {
            *v = *v + a * w;
        }
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, &v| acc.max(v.abs()))
    }

    /// Index and value of the largest-magnitude sample.
    pub fn peak(&self) -> (usize, T) {
        let mut best = (0usize, T::zero());
        for (j, &v) in self.values.iter().enumerate() {
            if v.abs() > best.1.abs() {
                best = (j, v);
            }
        }
        best
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Trapezoid-free periodic quadrature `dx * sum`.
    pub fn integral(&self) -> T {
        self.grid.dx() * self.values.iter().copied().sum::<T>()
    }
}

/// `dx * sum(u v)`, the discrete `L^2` pairing.
pub fn inner<T: Scalar>(u: &Field<T>, v: &Field<T>) -> T {
    assert!(u.grid().compatible(v.grid()), "fields live on different grids");
    let s: T = u.values().iter().zip(v.values()).map(|(&a, &b)| a * b).sum();
    u.grid().dx() * s
}

pub fn norm_l2<T: Scalar>(u: &Field<T>) -> T {
    inner(u, u).sqrt()
}

/// Transform coefficients in storage order, physically normalized (see the
/// module docs).
#[derive(Debug, Clone)]
pub struct Spectrum<T> {
    grid: Grid<T>,
    coeffs: Vec<Complex<T>>,
}

impl<T: Scalar> Spectrum<T> {
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    /// Coefficient at signed wavenumber `k`, `-n/2 <= k < n/2`.
    pub fn coeff(&self, k: i64) -> Complex<T> {
        let n = self.grid.n() as i64;
        assert!(-n / 2 <= k && k < n / 2, "wavenumber {k} outside [-n/2, n/2)");
        let i = if k >= 0 { k as usize } else { (n + k) as usize };
        self.coeffs[i]
    }

    /// `(signed wavenumber, frequency, coefficient)` triples in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, T, Complex<T>)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| (self.grid.wavenumber(i), self.grid.xi(i), c))
    }
}

/// Reusable transform plans plus scratch storage.
///
/// The public `forward` / `inverse` / `apply_multiplier` functions are
/// one-shot conveniences; iteration-heavy code inside the crate keeps one of
/// these alive instead.
pub(crate) struct FftCache<T: Scalar> {
    planner: FftPlanner<T>,
    scratch: Vec<Complex<T>>,
}

impl<T: Scalar> FftCache<T> {
    pub(crate) fn new() -> Self {
        Self { planner: FftPlanner::new(), scratch: Vec::new() }
    }

    fn run(&mut self, data: &mut [Complex<T>], forward: bool) {
        let fft = if forward {
            self.planner.plan_fft_forward(data.len())
        } else {
            self.planner.plan_fft_inverse(data.len())
        };
        let need = fft.get_inplace_scratch_len();
        if self.scratch.len() < need {
            self.scratch.resize(need, Complex::new(T::zero(), T::zero()));
        }
        fft.process_with_scratch(data, &mut self.scratch[..need]);
    }

    /// Unnormalized DFT with kernel `e^(-2 pi i j k / n)`.
    pub(crate) fn dft(&mut self, data: &mut [Complex<T>]) {
        self.run(data, true);
    }

    /// Unnormalized inverse kernel `e^(+2 pi i j k / n)`.
    pub(crate) fn idft(&mut self, data: &mut [Complex<T>]) {
        self.run(data, false);
    }

    pub(crate) fn forward(&mut self, u: &Field<T>) -> Spectrum<T> {
        let grid = *u.grid();
        let mut buf: Vec<Complex<T>> =
            u.values().iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.dft(&mut buf);
        // dx * (-1)^i accounts for quadrature weight and the -length/2 origin.
        let dx = grid.dx();
        for (i, c) in buf.iter_mut().enumerate() {
            let w = if i % 2 == 0 { dx } else { -dx };
            *c = c.scale(w);
        }
        Spectrum { grid, coeffs: buf }
    }

    pub(crate) fn inverse(&mut self, spec: &Spectrum<T>) -> Field<T> {
        let grid = *spec.grid();
        let mut buf = spec.coeffs().to_vec();
        for (i, c) in buf.iter_mut().enumerate() {
            if i % 2 == 1 {
                *c = -*c;
            }
        }
        self.idft(&mut buf);
        let norm = (grid.dx() * T::of(grid.n() as f64)).recip();
        let values = buf.iter().map(|c| c.re * norm).collect();
        Field { grid, values }
    }

    /// Multiply the transform of `u` pointwise by the precomputed real array
    /// `multiplier` (storage order), zero the Nyquist mode, transform back.
    pub(crate) fn apply_tabulated(
        &mut self,
        u: &Field<T>,
        multiplier: &[T],
        out: &mut Field<T>,
    ) {
        debug_assert_eq!(multiplier.len(), u.grid().n());
        debug_assert!(u.grid().compatible(out.grid()));
        let n = u.grid().n();
        let mut buf: Vec<Complex<T>> =
            u.values().iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.dft(&mut buf);
        for (c, &m) in buf.iter_mut().zip(multiplier) {
            *c = c.scale(m);
        }
        buf[n / 2] = Complex::new(T::zero(), T::zero());
        self.idft(&mut buf);
        let norm = T::of(n as f64).recip();
        for (v, c) in out.values_mut().iter_mut().zip(&buf) {
            *v = c.re * norm;
        }
    }
}

/// Forward transform (one-shot convenience).
pub fn forward<T: Scalar>(u: &Field<T>) -> Spectrum<T> {
    FftCache::new().forward(u)
}

/// Inverse transform; imaginary parts produced by roundoff are discarded.
pub fn inverse<T: Scalar>(spec: &Spectrum<T>) -> Field<T> {
    FftCache::new().inverse(spec)
}

/// Sample a symbol at every grid frequency (storage order).
pub fn symbol_on_grid<T: Scalar>(sym: &SymbolSpec<T>, grid: &Grid<T>) -> Vec<T> {
    (0..grid.n()).map(|i| sym.eval(grid.xi(i))).collect()
}

/// Apply the Fourier multiplier operator with symbol `m` to `u`.
pub fn apply_multiplier<T: Scalar>(sym: &SymbolSpec<T>, u: &Field<T>) -> Field<T> {
    let marr = symbol_on_grid(sym, u.grid());
    let mut out = Field::zeros(*u.grid());
    FftCache::new().apply_tabulated(u, &marr, &mut out);
    out
}

/// `H^r` norm: `sqrt( sum_k (1 + xi_k^2)^r |C_k|^2 / l )` over all modes.
pub fn sobolev_norm<T: Scalar>(u: &Field<T>, r: T) -> T {
    let spec = forward(u);
    let mut acc = T::zero();
    for (_, xi, c) in spec.iter() {
        acc = acc + (T::one() + xi * xi).powf(r) * c.norm_sqr();
    }
    (acc * u.grid().dxi()).sqrt()
}

/// Energy-space norm `sqrt( sum (m(xi_k) + kappa) |C_k|^2 / l )` of the
/// discrete quadratic form `integral(u L u) + kappa integral(u^2)`.
///
/// The Nyquist mode enters with `m = 0` (matching the discrete operator),
/// so the two-sided comparison with the `H^(s/2)` norm from
/// [`equivalence_constants`] holds on Nyquist-free fields.
pub fn equivalent_norm<T: Scalar>(u: &Field<T>, sym: &SymbolSpec<T>, kappa: T) -> T {
    let spec = forward(u);
    let ny = u.grid().nyquist_index();
    let mut acc = T::zero();
    for (i, c) in spec.coeffs().iter().enumerate() {
        let m = if i == ny { T::zero() } else { sym.eval(u.grid().xi(i)) };
        acc = acc + (m + kappa) * c.norm_sqr();
    }
    (acc * u.grid().dxi()).sqrt()
}

/// Constants `(k1, k2)` with
/// `k1 ||u||^2_(H^(s/2)) <= ||u||^2_equiv <= k2 ||u||^2_(H^(s/2))`
/// for an admissible symbol of order `s` and `kappa > 0`:
/// `k1 = min(kappa, A1 (2 pi)^s) / 2^(s/2)`, `k2 = A2 (2 pi)^s + kappa`.
pub fn equivalence_constants<T: Scalar>(sym: &SymbolSpec<T>, kappa: T) -> (T, T) {
    let (lo, hi) = sym.effective_bounds();
    let k1 = kappa.min(lo) / T::of(2.0).powf(sym.order * T::of(0.5));
    let k2 = hi + kappa;
    (k1, k2)
}

/// Re-express `u` on a grid with `n_new` points over the same interval by
/// zero-padding or truncating its spectrum (the Nyquist mode is dropped
/// either way). With the physical coefficient normalization the surviving
/// coefficients carry over unchanged.
pub fn resample<T: Scalar>(u: &Field<T>, n_new: usize) -> Result<Field<T>> {
    let grid_new = Grid::new(u.grid().length(), n_new)?;
    let spec = forward(u);
    let n_old = u.grid().n() as i64;
    let keep = (n_old / 2).min(n_new as i64 / 2);
    let mut coeffs = vec![Complex::new(T::zero(), T::zero()); n_new];
    for k in (1 - keep)..keep {
        let i_new = if k >= 0 { k as usize } else { (n_new as i64 + k) as usize };
        coeffs[i_new] = spec.coeff(k);
    }
    Ok(inverse(&Spectrum { grid: grid_new, coeffs }))
}

/// Translate: returns `x -> u(x + y)` via phase multiplication. The Nyquist
/// mode has no well-defined translation and is zeroed.
pub fn shift<T: Scalar>(u: &Field<T>, y: T) -> Field<T> {
    let mut cache = FftCache::new();
    let n = u.grid().n();
    let mut buf: Vec<Complex<T>> =
        u.values().iter().map(|&v| Complex::new(v, T::zero())).collect();
    cache.dft(&mut buf);
    let two_pi = T::of(2.0) * T::PI();
    for (i, c) in buf.iter_mut().enumerate() {
        let theta = two_pi * u.grid().xi(i) * y;
        *c = *c * Complex::new(theta.cos(), theta.sin());
    }
    buf[n / 2] = Complex::new(T::zero(), T::zero());
    cache.idft(&mut buf);
    let norm = T::of(n as f64).recip();
    let values = buf.iter().map(|c| c.re * norm).collect();
    Field { grid: *u.grid(), values }
}

impl<T: Scalar> Field<T> {
    /// Translate so the largest-magnitude sample sits at `x = 0`, with
    /// sub-grid refinement of the peak by a local parabolic fit. Returns the
    /// recentered field and the peak position that was shifted away.
    pub fn centered_by_peak(&self) -> (Self, T) {
        let n = self.grid.n();
        let (j, _) = self.peak();
        let v = |idx: usize| self.values[idx].abs();
        let dm = v((j + n - 1) % n);
        let d0 = v(j);
        let dp = v((j + 1) % n);
        let denom = dm - d0 - d0 + dp;
        let delta = if denom.abs() > T::of(1e-300) {
            (T::of(0.5) * (dm - dp) / denom).max(T::of(-0.5)).min(T::of(0.5))
        } else {
            T::zero()
        };
        let peak_x = self.grid.x(j) + delta * self.grid.dx();
        (shift(self, peak_x), peak_x)
    }
}

// ---------------------------------------------------------------------------
// Snapshot formats: two-column text and a fixed-width binary layout.

const BINARY_MAGIC: &[u8; 16] = b"SOLWAVE-FIELD-v1";

impl<T: Scalar> Field<T> {
    /// Two-column `x value` text, one sample per line, full precision.
    pub fn write_text(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        for (j, &v) in self.values.iter().enumerate() {
            writeln!(
                w,
                "{:.17e} {:.17e}",
                self.grid.x(j).to_f64().unwrap_or(f64::NAN),
                v.to_f64().unwrap_or(f64::NAN)
            )?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read two-column text written by [`Field::write_text`]; blank lines and
    /// `#` comments are skipped. The grid is recovered from the sample count
    /// and spacing.
    pub fn read_text(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let r = BufReader::new(std::fs::File::open(path)?);
        let mut xs: Vec<f64> = Vec::new();
        let mut vs: Vec<T> = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let mut parts = t.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<f64> {
                tok.ok_or_else(|| {
                    Error::Format(format!("{}:{}: expected two columns", path.display(), lineno + 1))
                })?
                .parse::<f64>()
                .map_err(|e| {
                    Error::Format(format!("{}:{}: {e}", path.display(), lineno + 1))
                })
            };
            xs.push(parse(parts.next())?);
            let v = parse(parts.next())?;
            vs.push(T::of(v));
        }
        if xs.len() < 2 {
            return Err(Error::Format(format!(
                "{}: need at least two samples",
                path.display()
            )));
        }
        let dx = xs[1] - xs[0];
        let length = dx * xs.len() as f64;
        let grid = Grid::new(T::of(length), vs.len())?;
        Field::from_values(grid, vs)
    }

    /// Binary layout: 16-byte magic, point count (u64 LE), period (f64 LE),
    /// then the samples as f64 LE.
    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&(self.grid.n() as u64).to_le_bytes())?;
        w.write_all(&self.grid.length().to_f64().unwrap_or(f64::NAN).to_le_bytes())?;
        for &v in &self.values {
            w.write_all(&v.to_f64().unwrap_or(f64::NAN).to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut r = BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 16];
        r.read_exact(&mut magic)
            .map_err(|_| Error::Format(format!("{}: truncated header", path.display())))?;
        if &magic != BINARY_MAGIC {
            return Err(Error::Format(format!(
                "{}: not a field snapshot (bad magic)",
                path.display()
            )));
        }
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b8)?;
        let length = f64::from_le_bytes(b8);
        let grid = Grid::new(T::of(length), n)?;
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut b8).map_err(|_| {
                Error::Format(format!("{}: truncated sample data", path.display()))
            })?;
            values.push(T::of(f64::from_le_bytes(b8)));
        }
        Field::from_values(grid, values)
    }
}
