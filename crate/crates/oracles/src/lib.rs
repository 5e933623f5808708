//! Deliberately slow reference evaluations for testing `fracbvp-core`.
//!
//! Nothing here shares code with the library under test: Γ comes from the
//! defining integral, fractional integrals from closed forms or a composite
//! trapezoid rule after a change of variables, and maxima from brute force.

/// Resolution multiplier relative to the library grid used by dense oracles.
pub const RESOLUTION_MULTIPLIER: usize = 10;

/// Γ(x) from `∫_{-∞}^{∞} exp(x·v − e^v) dv` (the substitution `t = e^v`),
/// trapezoid rule with step 1/256. The integrand decays doubly
/// exponentially to the right and like `e^{xv}` to the left, so the window
/// reaches `45/x` below the peak; accuracy is ~1e-14 relative for
/// `x ∈ [0.1, 12]`.
pub fn gamma(x: f64) -> f64 {
    assert!(x > 0.0, "oracle gamma needs x > 0");
    // Shift the window so the peak v = ln x sits well inside it.
    let centre = x.ln();
    let (lo, hi) = (centre - 45.0 / x.min(1.0), centre + 6.0);
    let h = 1.0 / 256.0;
    let n = ((hi - lo) / h).ceil() as usize;
    let mut acc = 0.0;
    for k in 0..=n {
        let v = lo + k as f64 * h;
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        acc += w * (x * v - v.exp()).exp();
    }
    acc * h
}

/// Classical Riemann–Liouville integral `1/Γ(α) ∫₀ᵗ (t−s)^{α−1} u(s) ds`.
///
/// Substituting `w = (t − s)^α` turns it into `1/(αΓ(α)) ∫₀^{t^α} u(t − w^{1/α}) dw`,
/// which has a bounded integrand; the composite trapezoid rule with
/// 100 000 panels is applied to that.
pub fn frac_integral(alpha: f64, u: impl Fn(f64) -> f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let n = 100_000;
    let top = t.powf(alpha);
    let h = top / n as f64;
    let mut acc = 0.5 * (u(t) + u(0.0));
    for k in 1..n {
        let w = k as f64 * h;
        acc += u(t - w.powf(1.0 / alpha));
    }
    acc * h / (alpha * gamma(alpha))
}

/// `I^α [s^k](t) = Γ(k+1)/Γ(k+1+α) t^{k+α}`.
pub fn frac_integral_power(alpha: f64, k: f64, t: f64) -> f64 {
    gamma(k + 1.0) / gamma(k + 1.0 + alpha) * t.powf(k + alpha)
}

/// Green's function for φ(t) = t, β = 0, α = 3:
/// `G(t, s) = [t²(1 − s) − (t − s)² 1_{s ≤ t}] / 2`.
pub fn classical_green(t: f64, s: f64) -> f64 {
    let diag = if s <= t { (t - s) * (t - s) } else { 0.0 };
    (t * t * (1.0 - s) - diag) / 2.0
}

/// `∫₀¹ G(t, s) ds` for the classical kernel, by the trapezoid rule on
/// `n` uniform panels with `t` inserted as a break point.
pub fn classical_green_integral(t: f64, n: usize) -> f64 {
    let trap = |a: f64, b: f64, m: usize| {
        if b <= a {
            return 0.0;
        }
        let h = (b - a) / m as f64;
        let mut acc = 0.5 * (classical_green(t, a) + classical_green(t, b));
        for k in 1..m {
            acc += classical_green(t, a + k as f64 * h);
        }
        acc * h
    };
    let left = ((t * n as f64).round() as usize).max(1);
    let right = (n - left.min(n - 1)).max(1);
    trap(0.0, t, left) + trap(t, 1.0, right)
}

/// Brute-force maximum of `f` over `gridsize` uniform points of `[0, 1]`.
pub fn grid_max(f: impl Fn(f64) -> f64, gridsize: usize) -> f64 {
    assert!(gridsize >= 2, "grid_max needs at least two points");
    (0..gridsize).map(|k| f(k as f64 / (gridsize - 1) as f64)).fold(f64::NEG_INFINITY, f64::max)
}
