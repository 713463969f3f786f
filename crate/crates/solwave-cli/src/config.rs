//! TOML experiment configuration and its conversion into library types.
//!
//! Parsing is strict: unknown keys are rejected, and every semantic check
//! reports the offending field by its section path so a bad config fails
//! before any computation starts.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use solwave::evolution::EvolutionSpec;
use solwave::spectral::Field;
use solwave::symbols::build_cantor_set;
use solwave::{
    CounterExampleSpec, EquationKind, Grid64, InitialGuess, Nonlinearity64, ProblemKind,
    ProblemSpec, SolverOptions, StabilityOptions, SymbolSpec64,
};

use crate::CliError;

fn bad(field: &str, msg: impl Into<String>) -> CliError {
    CliError::Config(format!("{field}: {}", msg.into()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Seed for every stochastic choice; the --seed flag overrides it.
    pub seed: Option<u64>,
    pub grid: Option<GridSection>,
    pub symbol: Option<SymbolSection>,
    pub nonlinearity: Option<NonlinearitySection>,
    pub problem: Option<ProblemSection>,
    pub solver: Option<SolverSection>,
    pub evolve: Option<EvolveSection>,
    pub stability: Option<StabilitySection>,
    pub commutator: Option<CommutatorSection>,
    pub sweep: Option<SweepSection>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn grid(&self) -> Result<Grid64, CliError> {
        let g = self.grid.as_ref().ok_or_else(|| bad("grid", "section is required"))?;
        Grid64::new(g.length, g.n).map_err(|e| bad("grid", e.to_string()))
    }

    pub fn symbol(&self) -> Result<SymbolSpec64, CliError> {
        self.symbol
            .as_ref()
            .ok_or_else(|| bad("symbol", "section is required"))?
            .build()
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity64, CliError> {
        self.nonlinearity
            .as_ref()
            .ok_or_else(|| bad("nonlinearity", "section is required"))?
            .build()
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec<f64>, CliError> {
        let p = self.problem.as_ref().ok_or_else(|| bad("problem", "section is required"))?;
        let spec = ProblemSpec {
            symbol: self.symbol()?,
            nonlinearity: self.nonlinearity()?,
            grid: self.grid()?,
            kind: p.build()?,
        };
        spec.validate().map_err(|e| bad("problem", e.to_string()))?;
        Ok(spec)
    }

    pub fn solver_options(&self, config_dir: &Path) -> Result<SolverOptions<f64>, CliError> {
        match &self.solver {
            None => Ok(SolverOptions::default()),
            Some(s) => s.build(config_dir),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub length: f64,
    pub n: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolSection {
    pub kind: String,
    /// Order `s` (fractional, fat_cantor, tabulated).
    pub order: Option<f64>,
    /// Surface tension (capillary_whitham).
    pub tension: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    /// Cantor parameters (fat_cantor).
    pub alpha: Option<f64>,
    pub depth: Option<u32>,
    pub tiles: Option<u32>,
    /// `[[xi, m], ...]` samples (tabulated).
    pub samples: Option<Vec<[f64; 2]>>,
    /// Replace the symbol by its operator square root.
    #[serde(default)]
    pub sqrt: bool,
}

impl SymbolSection {
    fn require(&self, v: Option<f64>, field: &str) -> Result<f64, CliError> {
        v.ok_or_else(|| bad(&format!("symbol.{field}"), format!("required for kind = \"{}\"", self.kind)))
    }

    pub fn build(&self) -> Result<SymbolSpec64, CliError> {
        let sym = match self.kind.as_str() {
            "neg_second_derivative" => SymbolSpec64::neg_second_derivative(),
            "fractional" => SymbolSpec64::fractional(self.require(self.order, "order")?)
                .map_err(|e| bad("symbol.order", e.to_string()))?,
            "capillary_whitham" => {
                SymbolSpec64::capillary_whitham(self.require(self.tension, "tension")?)
                    .map_err(|e| bad("symbol.tension", e.to_string()))?
            }
            "fat_cantor" => {
                let alpha = self
                    .alpha
                    .ok_or_else(|| bad("symbol.alpha", "required for kind = \"fat_cantor\""))?;
                let depth = self
                    .depth
                    .ok_or_else(|| bad("symbol.depth", "required for kind = \"fat_cantor\""))?;
                let tiles = self.tiles.unwrap_or(1);
                let set = build_cantor_set(alpha, depth, tiles)
                    .map_err(|e| bad("symbol", e.to_string()))?;
                SymbolSpec64::fat_cantor(
                    self.require(self.order, "order")?,
                    self.require(self.lower, "lower")?,
                    self.require(self.upper, "upper")?,
                    set,
                )
                .map_err(|e| bad("symbol", e.to_string()))?
            }
            "tabulated" => {
                let samples = self
                    .samples
                    .as_ref()
                    .ok_or_else(|| bad("symbol.samples", "required for kind = \"tabulated\""))?
                    .iter()
                    .map(|&[a, b]| (a, b))
                    .collect();
                SymbolSpec64::tabulated(
                    samples,
                    self.require(self.order, "order")?,
                    self.require(self.lower, "lower")?,
                    self.require(self.upper, "upper")?,
                )
                .map_err(|e| bad("symbol", e.to_string()))?
            }
            other => {
                return Err(bad(
                    "symbol.kind",
                    format!(
                        "unknown kind \"{other}\" (expected neg_second_derivative, fractional, \
                         capillary_whitham, fat_cantor, or tabulated)"
                    ),
                ))
            }
        };
        Ok(if self.sqrt { sym.sqrt_symbol() } else { sym })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySection {
    pub exponent: f64,
    #[serde(default = "one")]
    pub coefficient: f64,
    /// "absolute" for `c |u|^p`, "signed" for `c u |u|^(p-1)`.
    #[serde(default = "absolute")]
    pub form: String,
    #[serde(default)]
    pub linear_shift: bool,
}

fn one() -> f64 {
    1.0
}

fn absolute() -> String {
    "absolute".into()
}

impl NonlinearitySection {
    pub fn build(&self) -> Result<Nonlinearity64, CliError> {
        let nl = match self.form.as_str() {
            "absolute" => Nonlinearity64::absolute_power(self.exponent, self.coefficient),
            "signed" => Nonlinearity64::signed_power(self.exponent, self.coefficient),
            other => {
                return Err(bad(
                    "nonlinearity.form",
                    format!("unknown form \"{other}\" (expected absolute or signed)"),
                ))
            }
        }
        .map_err(|e| bad("nonlinearity.exponent", e.to_string()))?;
        Ok(if self.linear_shift { nl.with_linear_shift() } else { nl })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub kind: String,
    pub charge: Option<f64>,
    pub level: Option<f64>,
    pub kappa: Option<f64>,
}

impl ProblemSection {
    pub fn build(&self) -> Result<ProblemKind<f64>, CliError> {
        let need = |v: Option<f64>, field: &str| {
            v.ok_or_else(|| {
                bad(&format!("problem.{field}"), format!("required for kind = \"{}\"", self.kind))
            })
        };
        let positive = |v: f64, field: &str| {
            if v > 0.0 {
                Ok(v)
            } else {
                Err(bad(&format!("problem.{field}"), format!("must be positive, got {v}")))
            }
        };
        match self.kind.as_str() {
            "fixed_charge" => Ok(ProblemKind::EnergyAtFixedCharge {
                charge: positive(need(self.charge, "charge")?, "charge")?,
            }),
            "fixed_potential" => Ok(ProblemKind::QuadraticAtFixedPotential {
                level: positive(need(self.level, "level")?, "level")?,
                kappa: positive(self.kappa.unwrap_or(1.0), "kappa")?,
            }),
            "fixed_shifted_potential" => Ok(ProblemKind::QuadraticAtFixedShiftedPotential {
                level: positive(need(self.level, "level")?, "level")?,
            }),
            other => Err(bad(
                "problem.kind",
                format!(
                    "unknown kind \"{other}\" (expected fixed_charge, fixed_potential, or \
                     fixed_shifted_potential)"
                ),
            )),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub recenter: Option<bool>,
    pub init: Option<InitSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSection {
    pub kind: String,
    pub amplitude: Option<f64>,
    pub width: Option<f64>,
    pub path: Option<PathBuf>,
}

impl InitSection {
    pub fn build(&self, field: &str, config_dir: &Path) -> Result<InitialGuess<f64>, CliError> {
        match self.kind.as_str() {
            "gaussian" => Ok(InitialGuess::Gaussian {
                amplitude: self
                    .amplitude
                    .ok_or_else(|| bad(&format!("{field}.amplitude"), "required"))?,
                width: self.width.ok_or_else(|| bad(&format!("{field}.width"), "required"))?,
            }),
            "file" => {
                let path = self
                    .path
                    .as_ref()
                    .ok_or_else(|| bad(&format!("{field}.path"), "required"))?;
                Ok(InitialGuess::Profile(read_field(&config_dir.join(path))?))
            }
            other => Err(bad(
                &format!("{field}.kind"),
                format!("unknown kind \"{other}\" (expected gaussian or file)"),
            )),
        }
    }
}

/// Read a stored field, binary or two-column text by extension.
pub fn read_field(path: &Path) -> Result<Field<f64>, CliError> {
    let r = if path.extension().is_some_and(|e| e == "bin") {
        Field::read_binary(path)
    } else {
        Field::read_text(path)
    };
    r.map_err(|e| CliError::Config(format!("cannot read field {}: {e}", path.display())))
}

impl SolverSection {
    pub fn build(&self, config_dir: &Path) -> Result<SolverOptions<f64>, CliError> {
        let mut opts = SolverOptions::default();
        if let Some(m) = self.max_iter {
            opts.max_iter = m;
        }
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return Err(bad("solver.tol", format!("must be positive, got {t}")));
            }
            opts.tol = t;
        }
        if let Some(r) = self.recenter {
            opts.recenter = r;
        }
        if let Some(init) = &self.init {
            opts.init = init.build("solver.init", config_dir)?;
        }
        Ok(opts)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSection {
    /// "dispersive", "regularized", or "regularized_shifted"; defaults to the
    /// manifest's traveling equation when the initial state is a manifest.
    pub equation: Option<String>,
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_stride: Option<usize>,
    pub dealias: Option<bool>,
    pub initial: InitialStateSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialStateSection {
    pub kind: String,
    pub path: Option<PathBuf>,
    pub amplitude: Option<f64>,
    pub width: Option<f64>,
}

pub fn parse_equation(s: &str, field: &str) -> Result<EquationKind, CliError> {
    match s {
        "dispersive" => Ok(EquationKind::Dispersive),
        "regularized" => Ok(EquationKind::Regularized),
        "regularized_shifted" => Ok(EquationKind::RegularizedShifted),
        other => Err(bad(
            field,
            format!(
                "unknown equation \"{other}\" (expected dispersive, regularized, or \
                 regularized_shifted)"
            ),
        )),
    }
}

/// Everything `cmd_evolve` needs, assembled from the config (and a manifest,
/// when the initial state points at one).
pub struct EvolveSetup {
    pub initial: Field<f64>,
    pub spec: EvolutionSpec<f64>,
}

impl ExperimentConfig {
    pub fn evolve_setup(&self, config_dir: &Path) -> Result<EvolveSetup, CliError> {
        let e = self.evolve.as_ref().ok_or_else(|| bad("evolve", "section is required"))?;
        let (initial, manifest_equation, manifest_problem) = match e.initial.kind.as_str() {
            "manifest" => {
                let path = e
                    .initial
                    .path
                    .as_ref()
                    .ok_or_else(|| bad("evolve.initial.path", "required"))?;
                let res = crate::load_manifest(&config_dir.join(path))?;
                let eq = res.traveling.as_ref().map(|t| t.equation);
                (res.field.clone(), eq, Some(res.problem))
            }
            "file" => {
                let path = e
                    .initial
                    .path
                    .as_ref()
                    .ok_or_else(|| bad("evolve.initial.path", "required"))?;
                (read_field(&config_dir.join(path))?, None, None)
            }
            "gaussian" => {
                let a = e
                    .initial
                    .amplitude
                    .ok_or_else(|| bad("evolve.initial.amplitude", "required"))?;
                let w = e
                    .initial
                    .width
                    .ok_or_else(|| bad("evolve.initial.width", "required"))?;
                if !(w > 0.0) {
                    return Err(bad("evolve.initial.width", format!("must be positive, got {w}")));
                }
                let grid = self.grid()?;
                (Field::from_fn(grid, |x| a * (-x * x / (2.0 * w * w)).exp()), None, None)
            }
            other => {
                return Err(bad(
                    "evolve.initial.kind",
                    format!("unknown kind \"{other}\" (expected manifest, file, or gaussian)"),
                ))
            }
        };

        let equation = match (&e.equation, manifest_equation) {
            (Some(s), _) => parse_equation(s, "evolve.equation")?,
            (None, Some(eq)) => eq,
            (None, None) => {
                return Err(bad(
                    "evolve.equation",
                    "required unless the initial state is a manifest with a traveling \
                     interpretation",
                ))
            }
        };
        let (symbol, nonlinearity) = match (&self.symbol, &self.nonlinearity, manifest_problem) {
            (Some(s), Some(n), _) => (s.build()?, n.build()?),
            (None, None, Some(p)) => (p.symbol, p.nonlinearity),
            (_, _, Some(p)) => (
                self.symbol.as_ref().map_or(Ok(p.symbol), |s| s.build())?,
                self.nonlinearity.as_ref().map_or(Ok(p.nonlinearity), |n| n.build())?,
            ),
            _ => return Err(bad("symbol", "section is required (no manifest to take it from)")),
        };

        let mut spec = EvolutionSpec::new(equation, symbol, nonlinearity, e.dt, e.t_end);
        if let Some(s) = e.snapshot_stride {
            spec.snapshot_stride = s;
        }
        if let Some(d) = e.dealias {
            spec.dealias = d;
        }
        Ok(EvolveSetup { initial, spec })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySection {
    /// Solve manifest holding the wave under test.
    pub manifest: PathBuf,
    pub deltas: Option<Vec<f64>>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub snapshot_stride: Option<usize>,
    pub noise_band: Option<f64>,
    pub distance_index: Option<f64>,
}

impl StabilitySection {
    pub fn options(&self, seed: u64) -> Result<StabilityOptions<f64>, CliError> {
        let mut opts = StabilityOptions::default();
        opts.seed = seed;
        if let Some(d) = &self.deltas {
            if d.iter().any(|&x| !(x > 0.0)) {
                return Err(bad("stability.deltas", "perturbation sizes must be positive"));
            }
            opts.deltas = d.clone();
        }
        if let Some(dt) = self.dt {
            opts.dt = dt;
        }
        if let Some(t) = self.t_end {
            opts.t_end = t;
        }
        if let Some(s) = self.snapshot_stride {
            opts.snapshot_stride = s;
        }
        if let Some(b) = self.noise_band {
            opts.noise_band = b;
        }
        opts.distance_index = self.distance_index.or(opts.distance_index);
        Ok(opts)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommutatorSection {
    pub radii: Vec<f64>,
    /// Profile to scan (omit when running the counter-example).
    pub profile: Option<InitialStateSection>,
    pub counter_example: Option<CounterExampleSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterExampleSection {
    pub alpha: f64,
    pub depth: u32,
    #[serde(default = "one_u32")]
    pub tiles: u32,
    pub order: f64,
    pub lower: f64,
    pub upper: f64,
    pub epsilon: f64,
}

fn one_u32() -> u32 {
    1
}

pub enum CommutatorRun {
    Scan { u: Field<f64>, sym: SymbolSpec64, radii: Vec<f64> },
    CounterExample(CounterExampleSpec<f64>),
}

impl ExperimentConfig {
    pub fn commutator_run(&self, config_dir: &Path) -> Result<CommutatorRun, CliError> {
        let c = self
            .commutator
            .as_ref()
            .ok_or_else(|| bad("commutator", "section is required"))?;
        if c.radii.is_empty() {
            return Err(bad("commutator.radii", "need at least one radius"));
        }
        match (&c.profile, &c.counter_example) {
            (Some(_), Some(_)) => Err(bad(
                "commutator",
                "give either a profile or a counter_example table, not both",
            )),
            (None, None) => Err(bad(
                "commutator",
                "need a profile to scan or a counter_example table",
            )),
            (Some(p), None) => {
                let grid = self.grid()?;
                let u = match p.kind.as_str() {
                    "gaussian" => {
                        let a =
                            p.amplitude.ok_or_else(|| bad("commutator.profile.amplitude", "required"))?;
                        let w = p.width.ok_or_else(|| bad("commutator.profile.width", "required"))?;
                        Field::from_fn(grid, move |x| a * (-x * x / (2.0 * w * w)).exp())
                    }
                    "file" => {
                        let path =
                            p.path.as_ref().ok_or_else(|| bad("commutator.profile.path", "required"))?;
                        read_field(&config_dir.join(path))?
                    }
                    other => {
                        return Err(bad(
                            "commutator.profile.kind",
                            format!("unknown kind \"{other}\" (expected gaussian or file)"),
                        ))
                    }
                };
                Ok(CommutatorRun::Scan { u, sym: self.symbol()?, radii: c.radii.clone() })
            }
            (None, Some(ce)) => Ok(CommutatorRun::CounterExample(CounterExampleSpec {
                alpha: ce.alpha,
                depth: ce.depth,
                tiles: ce.tiles,
                order: ce.order,
                lower: ce.lower,
                upper: ce.upper,
                grid: self.grid()?,
                radii: c.radii.clone(),
                epsilon: ce.epsilon,
            })),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// "level", "kappa", or "exponent".
    pub parameter: String,
    pub values: Vec<f64>,
    /// Check the fixed-potential homogeneity law against this reference
    /// level.
    pub scaling_reference: Option<f64>,
    /// `[[q1, q2], ...]` pairs for strict-subadditivity checks.
    pub subadditivity_pairs: Option<Vec<[f64; 2]>>,
}
