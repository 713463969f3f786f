//! Closed-form oracles: every value asserted here has an exact analytic
//! derivation for the quadratic symbol `m(xi) = (2 pi xi)^2` with a quadratic
//! nonlinearity, where the profile equations reduce to classical sech^2
//! solitons.

use approx::assert_relative_eq;
use solwave::evolution::invariants;
use solwave::models::{eval_functional, FunctionalKind};
use solwave::solver::{petviashvili, solve, PetviashviliOptions};
use solwave::spectral::Field;
use solwave::{
    EquationKind, Grid64, InitialGuess, Nonlinearity64, ProblemKind, ProblemSpec, SolverOptions,
    SymbolSpec64,
};

fn grid() -> Grid64 {
    Grid64::new(80.0, 1024).unwrap()
}

fn quadratic_nl() -> Nonlinearity64 {
    Nonlinearity64::absolute_power(2.0, 1.0).unwrap()
}

/// `u(x) = (3c/2) sech^2(sqrt(c) x / 2)` solves `-u'' + c u = u^2`.
fn dispersive_soliton(grid: Grid64, c: f64) -> Field<f64> {
    Field::from_fn(grid, |x| 1.5 * c / (0.5 * c.sqrt() * x).cosh().powi(2))
}

/// Minimum of the energy at charge `q`: `-(9/5) (q/3)^(5/3)`.
const ENERGY_AT_CHARGE: [(f64, f64); 3] = [
    (0.5, -0.090856029641606967),
    (1.0, -0.28844991406148163),
    (2.0, -0.91577139404266528),
];

#[test]
fn energy_minimum_matches_closed_form_curve() {
    for &(q, expected) in &ENERGY_AT_CHARGE {
        let spec = ProblemSpec {
            symbol: SymbolSpec64::neg_second_derivative(),
            nonlinearity: quadratic_nl(),
            grid: grid(),
            kind: ProblemKind::EnergyAtFixedCharge { charge: q },
        };
        let res = solve(&spec, &SolverOptions::default()).unwrap();
        assert!(res.converged);
        assert_relative_eq!(res.objective, expected, max_relative = 1e-7);
        // The multiplier is the wave speed c(q) = (q/3)^(2/3).
        assert_relative_eq!(res.multiplier, (q / 3.0_f64).powf(2.0 / 3.0), max_relative = 1e-6);
    }
}

#[test]
fn charge_three_travels_at_unit_speed() {
    // q(c) = 3 c^(3/2), so q = 3 pins c = 1.
    let spec = ProblemSpec {
        symbol: SymbolSpec64::neg_second_derivative(),
        nonlinearity: quadratic_nl(),
        grid: grid(),
        kind: ProblemKind::EnergyAtFixedCharge { charge: 3.0 },
    };
    let res = solve(&spec, &SolverOptions::default()).unwrap();
    assert!(res.converged);
    let tw = res.traveling.unwrap();
    assert_eq!(tw.equation, EquationKind::Dispersive);
    assert_relative_eq!(tw.speed, 1.0, max_relative = 1e-6);
    let exact = dispersive_soliton(grid(), tw.speed);
    let mut diff = res.field.clone();
    diff.axpy(-1.0, &exact);
    assert!(diff.max_abs() < 1e-7, "profile error {:.3e}", diff.max_abs());
}

#[test]
fn fixed_potential_value_and_multiplier() {
    // Gamma(lambda) = 1.5 (2.4 lambda^2)^(1/3), gamma = (2.4 / lambda)^(1/3)
    // for kappa = 1.
    let spec = ProblemSpec {
        symbol: SymbolSpec64::neg_second_derivative(),
        nonlinearity: quadratic_nl(),
        grid: grid(),
        kind: ProblemKind::QuadraticAtFixedPotential { level: 1.0, kappa: 1.0 },
    };
    let res = solve(&spec, &SolverOptions::default()).unwrap();
    assert!(res.converged);
    assert_relative_eq!(res.objective, 2.0082988502465087, max_relative = 1e-8);
    assert_relative_eq!(res.multiplier, 1.338865900164339, max_relative = 1e-6);
}

#[test]
fn shifted_potential_at_the_half_multiplier_level() {
    // At level 5.4 sqrt(2) the minimizer is 1.5 sech^2(x / (2 sqrt 2)) with
    // multiplier 1/2, objective 3.3 sqrt(2), and wave speed 2.
    let spec = ProblemSpec {
        symbol: SymbolSpec64::neg_second_derivative(),
        nonlinearity: quadratic_nl(),
        grid: grid(),
        kind: ProblemKind::QuadraticAtFixedShiftedPotential { level: 7.6367532368147142 },
    };
    let res = solve(&spec, &SolverOptions::default()).unwrap();
    assert!(res.converged);
    assert_relative_eq!(res.objective, 4.6669047558312133, max_relative = 1e-8);
    assert_relative_eq!(res.multiplier, 0.5, max_relative = 1e-6);
    let tw = res.traveling.unwrap();
    assert_eq!(tw.equation, EquationKind::RegularizedShifted);
    assert_relative_eq!(tw.speed, 2.0, max_relative = 1e-6);
    let exact = Field::from_fn(grid(), |x| 1.5 / (x / 2.8284271247461903).cosh().powi(2));
    let mut diff = res.field.clone();
    diff.axpy(-1.0, &exact);
    assert!(diff.max_abs() < 1e-7, "profile error {:.3e}", diff.max_abs());
}

#[test]
fn fixed_point_iteration_reproduces_both_soliton_families() {
    let opts = PetviashviliOptions::default();
    let nl = quadratic_nl();
    let sym = SymbolSpec64::neg_second_derivative();

    // Dispersive family at c = 1.
    let disp =
        petviashvili(&sym, &nl, grid(), 1.0, EquationKind::Dispersive, &opts).unwrap();
    assert!(disp.converged);
    let mut diff = disp.field.clone();
    diff.axpy(-1.0, &dispersive_soliton(grid(), 1.0));
    assert!(diff.max_abs() < 1e-9, "profile error {:.3e}", diff.max_abs());

    // Plain regularized family at c = 2: c(-u'' + u) = u^2 gives
    // 3 sech^2(x/2).
    let reg =
        petviashvili(&sym, &nl, grid(), 2.0, EquationKind::Regularized, &opts).unwrap();
    assert!(reg.converged);
    let exact = Field::from_fn(grid(), |x| 3.0 / (0.5 * x).cosh().powi(2));
    let mut diff = reg.field.clone();
    diff.axpy(-1.0, &exact);
    assert!(diff.max_abs() < 1e-9, "profile error {:.3e}", diff.max_abs());
}

#[test]
fn invariants_of_the_unit_speed_soliton() {
    // Q = 3 c^(3/2) and E = -(9/5) c^(5/2) on the exact profile.
    let u = dispersive_soliton(grid(), 1.0);
    let sym = SymbolSpec64::neg_second_derivative();
    let nl = quadratic_nl();
    let [e, q] = invariants(&u, EquationKind::Dispersive, &sym, &nl);
    assert_relative_eq!(q, 3.0, max_relative = 1e-12);
    assert_relative_eq!(e, -1.8, max_relative = 1e-12);
    let e2 = eval_functional(FunctionalKind::Energy, &u, &sym, &nl);
    assert_relative_eq!(e, e2, max_relative = 1e-13);
}

#[test]
fn guess_quality_does_not_move_the_minimum() {
    // Two very different starting shapes land on the same branch.
    let spec = ProblemSpec {
        symbol: SymbolSpec64::neg_second_derivative(),
        nonlinearity: quadratic_nl(),
        grid: grid(),
        kind: ProblemKind::EnergyAtFixedCharge { charge: 1.0 },
    };
    let mut narrow = SolverOptions::default();
    narrow.init = InitialGuess::Gaussian { amplitude: 2.0, width: 0.8 };
    let mut wide = SolverOptions::default();
    wide.init = InitialGuess::Gaussian { amplitude: 0.3, width: 6.0 };
    let a = solve(&spec, &narrow).unwrap();
    let b = solve(&spec, &wide).unwrap();
    assert!(a.converged && b.converged);
    assert_relative_eq!(a.objective, b.objective, max_relative = 1e-9);
}
