//! Nonlinearities, conserved functionals, and admissible-exponent ranges.

use crate::spectral::{apply_multiplier, inner, Field};
use crate::symbols::SymbolSpec;
use crate::{Error, Result, Scalar};
use serde::{Deserialize, Serialize};

/// The three evolution equations sharing a dispersive operator `L` and a
/// nonlinearity `f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquationKind {
    /// `u_t + d/dx (f(u) - L u) = 0`; traveling profiles solve
    /// `L u + c u - f(u) = 0`.
    Dispersive,
    /// `u_t + L u_t + d/dx f(u) = 0`; traveling profiles solve
    /// `c (L u + u) - f(u) = 0`.
    Regularized,
    /// `u_t + L u_t + d/dx (u + f_hom(u)) = 0` with the identity part built
    /// in (the nonlinearity's own shift flag is ignored); traveling profiles
    /// solve `c L u + (c - 1) u - f_hom(u) = 0`.
    RegularizedShifted,
}

/// Shape of the power nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PowerForm {
    /// Odd in `u`: `f(u) = c u |u|^(p-1)`.
    Signed,
    /// Even in `u`: `f(u) = c |u|^p`.
    Absolute,
}

/// Power-type nonlinearity `f`, optionally with an added identity term
/// (`g(u) = u + f(u)`), as appears in equations where the time derivative is
/// regularized by the dispersive operator.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Nonlinearity<T> {
    pub form: PowerForm,
    /// Homogeneity exponent `p > 1`.
    pub exponent: T,
    /// Leading coefficient.
    pub coefficient: T,
    /// When set, [`Nonlinearity::eval`] and [`Nonlinearity::primitive`]
    /// include the identity part `u` (resp. `u^2/2`) on top of the power
    /// term.
    pub linear_shift: bool,
}

impl<T: Scalar> Nonlinearity<T> {
    pub fn signed_power(exponent: T, coefficient: T) -> Result<Self> {
        if !(exponent > T::one()) {
            return Err(Error::InvalidProblem(format!(
                "nonlinearity exponent must exceed 1, got {exponent}"
            )));
        }
        if !(coefficient > T::zero()) {
            return Err(Error::InvalidProblem(format!(
                "signed power form needs a positive coefficient, got {coefficient}"
            )));
        }
        Ok(Self { form: PowerForm::Signed, exponent, coefficient, linear_shift: false })
    }

    pub fn absolute_power(exponent: T, coefficient: T) -> Result<Self> {
        if !(exponent > T::one()) {
            return Err(Error::InvalidProblem(format!(
                "nonlinearity exponent must exceed 1, got {exponent}"
            )));
        }
        if coefficient == T::zero() || !coefficient.is_finite() {
            return Err(Error::InvalidProblem("absolute power form needs a nonzero coefficient".into()));
        }
        Ok(Self { form: PowerForm::Absolute, exponent, coefficient, linear_shift: false })
    }

    pub fn with_linear_shift(mut self) -> Self {
        self.linear_shift = true;
        self
    }

    /// The homogeneous power term alone.
    pub fn power_term(&self, x: T) -> T {
        let p = self.exponent;
        match self.form {
            PowerForm::Signed => self.coefficient * x * x.abs().powf(p - T::one()),
            PowerForm::Absolute => self.coefficient * x.abs().powf(p),
        }
    }

    /// Antiderivative of [`Nonlinearity::power_term`] vanishing at 0. The
    /// pointwise identity `x * power_term(x) = (p + 1) * power_primitive(x)`
    /// holds exactly in floating point for both forms.
    pub fn power_primitive(&self, x: T) -> T {
        let p = self.exponent;
        match self.form {
            PowerForm::Signed => self.coefficient * x.abs().powf(p + T::one()) / (p + T::one()),
            PowerForm::Absolute => self.coefficient * x * x.abs().powf(p) / (p + T::one()),
        }
    }

    /// Full nonlinearity: power term plus the identity part when
    /// `linear_shift` is set.
    pub fn eval(&self, x: T) -> T {
        let f = self.power_term(x);
        if self.linear_shift {
            x + f
        } else {
            f
        }
    }

    /// Antiderivative of [`Nonlinearity::eval`] vanishing at 0.
    pub fn primitive(&self, x: T) -> T {
        let f = self.power_primitive(x);
        if self.linear_shift {
            x * x * T::of(0.5) + f
        } else {
            f
        }
    }

    /// Derivative of [`Nonlinearity::eval`]; used for advective step-size
    /// bounds.
    pub fn derivative(&self, x: T) -> T {
        let p = self.exponent;
        let d = match self.form {
            PowerForm::Signed => self.coefficient * p * x.abs().powf(p - T::one()),
            PowerForm::Absolute => {
                self.coefficient * p * x.abs().powf(p - T::one()) * x.signum()
            }
        };
        if self.linear_shift {
            T::one() + d
        } else {
            d
        }
    }

    pub fn apply(&self, u: &Field<T>) -> Field<T> {
        u.map(|x| self.eval(x))
    }

    pub fn apply_power(&self, u: &Field<T>) -> Field<T> {
        u.map(|x| self.power_term(x))
    }
}

/// The invariant functionals attached to the model equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FunctionalKind<T> {
    /// `E = 1/2 integral(u L u) - integral(primitive(u))`, with the full
    /// primitive (identity part included when the nonlinearity carries one).
    Energy,
    /// `Q = 1/2 integral(u^2)`.
    Charge,
    /// `J = 1/2 integral(u L u + kappa u^2)`.
    Quadratic { kappa: T },
    /// `U = integral(power_primitive(u))`, homogeneous part only.
    Potential,
    /// `1/2 integral(u^2) + U`.
    ShiftedPotential,
}

pub fn eval_functional<T: Scalar>(
    kind: FunctionalKind<T>,
    u: &Field<T>,
    sym: &SymbolSpec<T>,
    nl: &Nonlinearity<T>,
) -> T {
    match kind {
        FunctionalKind::Energy => {
            let lu = apply_multiplier(sym, u);
            let half = T::of(0.5);
            half * inner(u, &lu) - u.map(|x| nl.primitive(x)).integral()
        }
        FunctionalKind::Charge => T::of(0.5) * inner(u, u),
        FunctionalKind::Quadratic { kappa } => {
            let lu = apply_multiplier(sym, u);
            T::of(0.5) * (inner(u, &lu) + kappa * inner(u, u))
        }
        FunctionalKind::Potential => u.map(|x| nl.power_primitive(x)).integral(),
        FunctionalKind::ShiftedPotential => {
            T::of(0.5) * inner(u, u) + u.map(|x| nl.power_primitive(x)).integral()
        }
    }
}

/// `L^2` gradient of the functional at `u`.
pub fn grad_functional<T: Scalar>(
    kind: FunctionalKind<T>,
    u: &Field<T>,
    sym: &SymbolSpec<T>,
    nl: &Nonlinearity<T>,
) -> Field<T> {
    match kind {
        FunctionalKind::Energy => {
            let mut g = apply_multiplier(sym, u);
            let f = nl.apply(u);
            g.axpy(-T::one(), &f);
            g
        }
        FunctionalKind::Charge => u.clone(),
        FunctionalKind::Quadratic { kappa } => {
            let mut g = apply_multiplier(sym, u);
            g.axpy(kappa, u);
            g
        }
        FunctionalKind::Potential => nl.apply_power(u),
        FunctionalKind::ShiftedPotential => {
            let mut g = nl.apply_power(u);
            g.axpy(T::one(), u);
            g
        }
    }
}

/// Where an exponent sits relative to the admissible ranges for a symbol of
/// order `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExponentStatus {
    /// Inside the orbital-stability range `1 < p < 2s + 1`.
    StableRange,
    /// Solitary waves exist but sit outside the stability range.
    ExistenceOnly,
    /// Outside the existence range (or `p <= 1`).
    OutOfRange,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExponentClassification<T> {
    /// Supremum of admissible exponents for existence: `(1 + s)/(1 - s)` for
    /// `s < 1`, unbounded otherwise.
    pub existence_upper: Option<T>,
    /// Supremum of the stability range, `2s + 1`.
    pub stability_upper: T,
    pub status: ExponentStatus,
}

/// Classify an exponent `p` against the existence range
/// `1 < p < (1 + s)/(1 - s)` (for `s < 1`; all of `p > 1` otherwise) and the
/// stability range `1 < p < 2s + 1`. Bounds are strict: hitting one exactly
/// falls into the weaker class.
pub fn classify_exponent<T: Scalar>(order: T, p: T) -> ExponentClassification<T> {
    let one = T::one();
    let existence_upper =
        if order < one { Some((one + order) / (one - order)) } else { None };
    let stability_upper = T::of(2.0) * order + one;
    let in_existence = p > one
        && match existence_upper {
            Some(ub) => p < ub,
            None => true,
        };
    let status = if !in_existence {
        ExponentStatus::OutOfRange
    } else if p < stability_upper {
        ExponentStatus::StableRange
    } else {
        ExponentStatus::ExistenceOnly
    };
    ExponentClassification { existence_upper, stability_upper, status }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn power_identity_is_exact() {
        let samples = [-2.7, -1.0, -0.3, 0.0, 0.41, 1.0, 3.9];
        for nl in [
            Nonlinearity::signed_power(1.8, 0.7).unwrap(),
            Nonlinearity::absolute_power(2.0, -1.3).unwrap(),
            Nonlinearity::absolute_power(2.4, 2.0).unwrap(),
        ] {
            let p = nl.exponent;
            for &x in &samples {
                let lhs: f64 = x * nl.power_term(x);
                let rhs = (p + 1.0) * nl.power_primitive(x);
                assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-14 * (1.0 + lhs.abs()));
            }
        }
    }

    #[test]
    fn shifted_form_adds_identity() {
        let nl = Nonlinearity::signed_power(2.0, 1.0).unwrap().with_linear_shift();
        assert_relative_eq!(nl.eval(3.0), 12.0);
        assert_relative_eq!(nl.primitive(2.0), 2.0 + 8.0 / 3.0);
        // Homogeneous accessors ignore the shift.
        assert_relative_eq!(nl.power_term(3.0), 9.0);
    }

    #[test]
    fn primitive_differentiates_to_eval() {
        let h = 1e-6;
        for nl in [
            Nonlinearity::signed_power(1.8, 1.0).unwrap(),
            Nonlinearity::absolute_power(2.0, 1.0).unwrap().with_linear_shift(),
        ] {
            for &x in &[-1.9, -0.35, 0.6, 2.2] {
                let fd = (nl.primitive(x + h) - nl.primitive(x - h)) / (2.0 * h);
                assert_relative_eq!(fd, nl.eval(x), max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let h = 1e-6;
        for nl in [
            Nonlinearity::signed_power(2.5, 0.8).unwrap(),
            Nonlinearity::absolute_power(1.7, 1.2).unwrap().with_linear_shift(),
        ] {
            for &x in &[-1.4, -0.5, 0.7, 1.9] {
                let fd = (nl.eval(x + h) - nl.eval(x - h)) / (2.0 * h);
                assert_relative_eq!(fd, nl.derivative(x), max_relative = 1e-7);
            }
        }
    }

    #[test]
    fn functional_gradients_match_directional_derivatives() {
        let g = Grid::<f64>::new(30.0, 128).unwrap();
        let u = Field::from_fn(g, |x| 0.9 * (-x * x / 6.0).exp() + 0.05 * (x * 0.4).sin());
        let v = Field::from_fn(g, |x| (-(x - 2.0) * (x - 2.0) / 4.0).exp());
        let sym = SymbolSpec::fractional(1.0).unwrap();
        let nl = Nonlinearity::signed_power(2.3, 1.1).unwrap().with_linear_shift();
        let h = 1e-6;
        for kind in [
            FunctionalKind::Energy,
            FunctionalKind::Charge,
            FunctionalKind::Quadratic { kappa: 0.8 },
            FunctionalKind::Potential,
            FunctionalKind::ShiftedPotential,
        ] {
            let mut up = u.clone();
            up.axpy(h, &v);
            let mut um = u.clone();
            um.axpy(-h, &v);
            let fd = (eval_functional(kind, &up, &sym, &nl)
                - eval_functional(kind, &um, &sym, &nl))
                / (2.0 * h);
            let grad = grad_functional(kind, &u, &sym, &nl);
            assert_relative_eq!(fd, inner(&grad, &v), max_relative = 1e-6);
        }
    }

    #[test]
    fn exponent_ranges() {
        // Order 1/3: existence up to p = 2, stability up to p = 5/3.
        let c = classify_exponent(1.0 / 3.0, 1.5);
        assert_relative_eq!(c.existence_upper.unwrap(), 2.0, max_relative = 1e-14);
        assert_relative_eq!(c.stability_upper, 5.0 / 3.0, max_relative = 1e-14);
        assert_eq!(c.status, ExponentStatus::StableRange);
        assert_eq!(classify_exponent(1.0 / 3.0, 1.8).status, ExponentStatus::ExistenceOnly);
        assert_eq!(classify_exponent(1.0 / 3.0, 2.0).status, ExponentStatus::OutOfRange);
        assert_eq!(classify_exponent(1.0 / 3.0, 0.9).status, ExponentStatus::OutOfRange);
        // Order >= 1: no existence ceiling.
        let c1 = classify_exponent(1.5, 10.0);
        assert!(c1.existence_upper.is_none());
        assert_eq!(c1.status, ExponentStatus::ExistenceOnly);
        assert_eq!(classify_exponent(2.0, 2.0).status, ExponentStatus::StableRange);
        // Stability bound is strict.
        assert_eq!(classify_exponent(0.5, 2.0).status, ExponentStatus::ExistenceOnly);
    }
}
