//! Randomized identities: discrete transform algebra, nonlinearity homogeneity,
//! cutoff partitions, and Cantor-set measure, each checked over generated
//! inputs rather than hand-picked ones.

use proptest::prelude::*;
use solwave::cclab::smoothstep;
use solwave::spectral::{
    apply_multiplier, equivalence_constants, equivalent_norm, forward, inner, inverse, resample,
    shift, sobolev_norm, Field, Grid,
};
use solwave::symbols::build_cantor_set;
use solwave::{Nonlinearity64, SymbolSpec64};

const N: usize = 128;

fn field_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, N)
}

fn arbitrary_field(values: Vec<f64>) -> Field<f64> {
    Field::from_values(Grid::new(40.0, N).unwrap(), values).unwrap()
}

/// Low-mode trigonometric polynomial; exactly representable on every grid
/// used here, with no Nyquist content.
fn band_limited(modes: &[(f64, f64)]) -> Field<f64> {
    let l = 40.0;
    Field::from_fn(Grid::new(l, N).unwrap(), |x| {
        modes
            .iter()
            .enumerate()
            .map(|(k, &(a, phase))| a * (2.0 * std::f64::consts::PI * (k + 1) as f64 * x / l + phase).cos())
            .sum()
    })
}

fn mode_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-2.0..2.0f64, -3.0..3.0f64), 1..8)
}

proptest! {
    #[test]
    fn parseval_holds_for_arbitrary_fields(values in field_values()) {
        let u = arbitrary_field(values);
        let phys: f64 = inner(&u, &u);
        let spec = forward(&u);
        let freq: f64 = spec.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>()
            / u.grid().length();
        prop_assert!((phys - freq).abs() <= 1e-12 * phys.max(1e-12));
    }

    #[test]
    fn round_trip_transform_is_identity(values in field_values()) {
        let u = arbitrary_field(values);
        let back = inverse(&forward(&u));
        let mut diff = back;
        diff.axpy(-1.0, &u);
        prop_assert!(diff.max_abs() <= 1e-12 * u.max_abs().max(1.0));
    }

    #[test]
    fn multiplier_operators_are_self_adjoint(
        a in field_values(),
        b in field_values(),
        tension in 0.2..3.0f64,
    ) {
        let u = arbitrary_field(a);
        let w = arbitrary_field(b);
        for sym in [
            SymbolSpec64::neg_second_derivative(),
            SymbolSpec64::capillary_whitham(tension).unwrap(),
        ] {
            let lu = apply_multiplier(&sym, &u);
            let lw = apply_multiplier(&sym, &w);
            let left: f64 = inner(&lu, &w);
            let right: f64 = inner(&u, &lw);
            let scale = left.abs().max(right.abs()).max(1e-12);
            prop_assert!((left - right).abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn power_terms_satisfy_euler_homogeneity(
        x in -5.0..5.0f64,
        p in 1.05..4.0f64,
        c in 0.2..3.0f64,
    ) {
        // x f(x) = (p+1) F(x) for the homogeneous part, both sign forms.
        for nl in [
            Nonlinearity64::absolute_power(p, c).unwrap(),
            Nonlinearity64::signed_power(p, c).unwrap(),
        ] {
            let lhs = x * nl.power_term(x);
            let rhs = (p + 1.0) * nl.power_primitive(x);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1e-12));
        }
    }

    #[test]
    fn primitive_differentiates_back_to_the_nonlinearity(
        x in -3.0..3.0f64,
        p in 1.2..3.5f64,
    ) {
        let nl = Nonlinearity64::absolute_power(p, 1.0).unwrap().with_linear_shift();
        let h = 1e-6;
        let fd = (nl.primitive(x + h) - nl.primitive(x - h)) / (2.0 * h);
        prop_assert!((fd - nl.eval(x)).abs() <= 1e-7 * nl.eval(x).abs().max(1.0));
    }

    #[test]
    fn shifts_compose_additively(modes in mode_strategy(), a in -15.0..15.0f64, b in -15.0..15.0f64) {
        let u = band_limited(&modes);
        let two_step = shift(&shift(&u, a), b);
        let one_step = shift(&u, a + b);
        let mut diff = two_step;
        diff.axpy(-1.0, &one_step);
        prop_assert!(diff.max_abs() <= 1e-10 * u.max_abs().max(1.0));
    }

    #[test]
    fn resampling_up_and_back_is_lossless(modes in mode_strategy()) {
        let u = band_limited(&modes);
        let up = resample(&u, 4 * N).unwrap();
        let back = resample(&up, N).unwrap();
        let mut diff = back;
        diff.axpy(-1.0, &u);
        prop_assert!(diff.max_abs() <= 1e-12 * u.max_abs().max(1.0));
    }

    #[test]
    fn energy_norm_is_sandwiched_by_sobolev_norms(
        modes in mode_strategy(),
        s in 0.3..1.9f64,
        kappa in 0.1..4.0f64,
    ) {
        let u = band_limited(&modes);
        let sym = SymbolSpec64::fractional(s).unwrap();
        let (k1, k2) = equivalence_constants(&sym, kappa);
        let equiv = equivalent_norm(&u, &sym, kappa).powi(2);
        let sob = sobolev_norm(&u, s / 2.0).powi(2);
        prop_assert!(equiv >= k1 * sob * (1.0 - 1e-12));
        prop_assert!(equiv <= k2 * sob * (1.0 + 1e-12));
    }

    #[test]
    fn smoothstep_partitions_and_orders(t in 0.0..1.0f64, dt in 0.0..0.5f64) {
        let sum = smoothstep(t) + smoothstep(1.0 - t);
        prop_assert!((sum - 1.0).abs() <= 1e-15);
        prop_assert!(smoothstep(t + dt) >= smoothstep(t));
    }

    #[test]
    fn cantor_measure_matches_the_removal_formula(
        alpha in 0.05..0.95f64,
        depth in 1u32..9,
        tiles in 1u32..4,
    ) {
        let set = build_cantor_set(alpha, depth, tiles).unwrap();
        let expected = tiles as f64 * (1.0 - alpha * (1.0 - 0.5f64.powi(depth as i32)));
        prop_assert!((set.measure() - expected).abs() <= 1e-12 * expected);
        // Closed sets keep their endpoints.
        if let Some((lo, hi)) = set.span() {
            prop_assert!(set.contains(lo) && set.contains(hi));
        }
    }
}
