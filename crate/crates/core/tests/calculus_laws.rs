use std::sync::Arc;

use fracbvp_core::calculus::{
    frac_derivative, frac_integral, frac_integral_on_grid, semigroup_defect, GridFunction, QuadratureGrid,
    DEFAULT_GRID_SIZE,
};
use fracbvp_core::special::{gamma, PhiMap};
use fracbvp_oracles as oracle;
use proptest::prelude::*;

fn grid(phi: PhiMap, n: usize) -> Arc<QuadratureGrid> {
    QuadratureGrid::graded(phi, n).unwrap()
}

type Smooth = (&'static str, fn(f64) -> f64);

fn smooth_functions() -> Vec<Smooth> {
    vec![
        ("1", |_| 1.0),
        ("s", |s| s),
        ("s^2", |s| s * s),
        ("s^3 - s", |s| s * s * s - s),
        ("cos s", f64::cos),
        ("sin s", f64::sin),
        ("exp s", f64::exp),
        ("exp(-2s)", |s| (-2.0 * s).exp()),
        ("1/(1+s^2)", |s| 1.0 / (1.0 + s * s)),
        ("sin 3s", |s| (3.0 * s).sin()),
        ("cos 5s", |s| (5.0 * s).cos()),
        ("ln(1+s)", f64::ln_1p),
        ("sqrt(1+s)", |s| (1.0 + s).sqrt()),
        ("s exp s", |s| s * s.exp()),
        ("cosh s", f64::cosh),
        ("tanh 2s", |s| (2.0 * s).tanh()),
        ("2 - s^4", |s| 2.0 - s.powi(4)),
        ("atan s", f64::atan),
        ("sin^2 (pi s)", |s| (std::f64::consts::PI * s).sin().powi(2)),
        ("1/(2+s)", |s| 1.0 / (2.0 + s)),
    ]
}

#[test]
fn matches_trapezoid_oracle_on_twenty_functions() {
    let g = grid(PhiMap::identity(), 4 * DEFAULT_GRID_SIZE);
    let alphas = [0.5, 1.0, 1.5, 2.5, 3.0];
    let mut worst = 0.0_f64;
    for (i, (name, f)) in smooth_functions().into_iter().enumerate() {
        let u = GridFunction::from_fn(g.clone(), f).unwrap();
        let alpha = alphas[i % alphas.len()];
        for t in [0.25, 0.6, 1.0] {
            let ours = frac_integral(alpha, &u, t).unwrap();
            let reference = oracle::frac_integral(alpha, f, t);
            let err = (ours - reference).abs();
            assert!(err < 1e-7, "{name}, alpha {alpha}, t {t}: {ours} vs {reference}");
            worst = worst.max(err);
        }
    }
    println!("worst deviation from oracle: {worst:.2e}");
}

#[test]
fn closed_forms_for_constants_and_powers() {
    let g = grid(PhiMap::identity(), DEFAULT_GRID_SIZE);
    let one = GridFunction::constant(g.clone(), 1.0).unwrap();
    let expected = 1.0 / oracle::gamma(3.5);
    assert!((frac_integral(2.5, &one, 1.0).unwrap() - expected).abs() < 1e-10);

    let s2 = GridFunction::from_fn(g, |s| s * s).unwrap();
    for alpha in [0.3, 1.7, 2.9] {
        let want = oracle::frac_integral_power(alpha, 2.0, 0.8);
        assert!((frac_integral(alpha, &s2, 0.8).unwrap() - want).abs() < 1e-6);
    }
}

#[test]
fn zero_in_zero_out() {
    for phi in [PhiMap::identity(), PhiMap::sin_quarter_pi(), PhiMap::sqrt_half()] {
        let z = GridFunction::zeros(grid(phi, 256));
        assert_eq!(frac_integral(1.3, &z, 0.7).unwrap(), 0.0);
        assert_eq!(frac_derivative(2.4, &z, 0.5).unwrap(), 0.0);
        assert_eq!(semigroup_defect(0.4, 0.9, &z).unwrap(), 0.0);
    }
}

#[test]
fn weights_integrate_constants() {
    for phi in [PhiMap::identity(), PhiMap::sin_quarter_pi(), PhiMap::sqrt_half()] {
        let g = grid(phi.clone(), DEFAULT_GRID_SIZE);
        assert!(g.weights().iter().all(|&w| w >= 0.0));
        let total: f64 = g.weights().iter().sum();
        assert!((total - phi.shifted(1.0)).abs() < 1e-10, "{phi:?}");
    }
}

#[test]
fn semigroup_defect_is_small_and_converges() {
    let cases: [(f64, f64, fn(f64) -> f64); 4] =
        [(1.2, 0.8, |s| s), (0.5, 0.7, f64::cos), (1.5, 1.2, f64::exp), (0.3, 2.2, |s| 1.0 + s * s)];
    for phi in [PhiMap::sin_quarter_pi(), PhiMap::sqrt_half()] {
        for (alpha, beta, f) in cases {
            let coarse = GridFunction::from_fn(grid(phi.clone(), DEFAULT_GRID_SIZE / 2), f).unwrap();
            let fine = GridFunction::from_fn(grid(phi.clone(), DEFAULT_GRID_SIZE), f).unwrap();
            let d_coarse = semigroup_defect(alpha, beta, &coarse).unwrap();
            let d_fine = semigroup_defect(alpha, beta, &fine).unwrap();
            assert!(d_fine <= 1e-6, "{phi:?} ({alpha},{beta}): {d_fine:e}");
            assert!(d_coarse >= 2.0 * d_fine, "{phi:?} ({alpha},{beta}): {d_coarse:e} -> {d_fine:e}");
        }
    }
}

#[test]
fn derivative_inverts_integral_away_from_ends() {
    for phi in [PhiMap::identity(), PhiMap::sin_quarter_pi(), PhiMap::sqrt_half()] {
        let g = grid(phi.clone(), DEFAULT_GRID_SIZE);
        let u = GridFunction::from_fn(g, f64::cos).unwrap();
        for alpha in [0.5, 1.5, 2.2, 2.5, 2.9] {
            let iu = frac_integral_on_grid(alpha, &u).unwrap();
            for k in 0..=16 {
                let t = 0.1 + 0.05 * k as f64;
                let back = frac_derivative(alpha, &iu, t).unwrap();
                assert!((back - t.cos()).abs() < 1e-4, "{phi:?} alpha {alpha} t {t}: {back}");
            }
        }
    }
}

#[test]
fn half_derivative_of_identity() {
    let g = grid(PhiMap::identity(), DEFAULT_GRID_SIZE);
    let u = GridFunction::from_fn(g, |s| s).unwrap();
    let want = oracle::gamma(2.0) / oracle::gamma(1.5) * 0.5_f64.sqrt();
    assert!((frac_derivative(0.5, &u, 0.5).unwrap() - want).abs() < 1e-4);
}

#[test]
fn gamma_agrees_with_integral_definition() {
    // Γ(5/2) = 3√π/4
    assert!((gamma(2.5).unwrap() - 1.329_340_388_179_137).abs() < 1e-14);
    for k in 1..40 {
        let x = 0.25 * k as f64;
        let rel = gamma(x).unwrap() / oracle::gamma(x) - 1.0;
        assert!(rel.abs() < 1e-12, "x = {x}: {rel:e}");
    }
}

#[test]
fn catalog_derivatives_match_finite_differences() {
    for phi in [PhiMap::identity(), PhiMap::sin_quarter_pi(), PhiMap::sqrt_half()] {
        for k in 1..100 {
            let t = k as f64 / 100.0;
            let h = 1e-5;
            let fd = (phi.eval(t + h) - phi.eval(t - h)) / (2.0 * h);
            assert!((fd - phi.deriv(t)).abs() < 1e-6, "{phi:?} at {t}");
            assert!((phi.inverse(phi.eval(t)) - t).abs() < 1e-12);
        }
    }
}

fn node_values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0_f64, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn integral_is_linear(
        u in node_values(128),
        v in node_values(128),
        a in -5.0..5.0_f64,
        b in -5.0..5.0_f64,
        alpha in 0.1..3.0_f64,
        t in 0.0..=1.0_f64,
    ) {
        let g = grid(PhiMap::sin_quarter_pi(), 128);
        let u = GridFunction::new(g.clone(), u).unwrap();
        let v = GridFunction::new(g, v).unwrap();
        let combined = frac_integral(alpha, &u.combine(a, &v, b).unwrap(), t).unwrap();
        let (iu, iv) = (frac_integral(alpha, &u, t).unwrap(), frac_integral(alpha, &v, t).unwrap());
        let scale = 1.0 + (a * iu).abs() + (b * iv).abs();
        prop_assert!((combined - (a * iu + b * iv)).abs() <= 1e-12 * scale);
    }

    #[test]
    fn integral_is_monotone(
        u in prop::collection::vec(0.0..10.0_f64, 128),
        alpha in 0.1..3.0_f64,
        t in 0.0..=1.0_f64,
    ) {
        let g = grid(PhiMap::sqrt_half(), 128);
        let u = GridFunction::new(g, u).unwrap();
        prop_assert!(frac_integral(alpha, &u, t).unwrap() >= 0.0);
    }
}
