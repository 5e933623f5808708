//! The b-metric `d(x, y) = sup_t (x(t) − y(t))²` and the fixed-point
//! certificates built on it.
//!
//! `d` satisfies the relaxed triangle inequality `d(x,z) ≤ r[d(x,y) + d(y,z)]`
//! with `r = 2`. Two certificates are provided:
//!
//! - a contraction `d(Ax, Ay) ≤ λ d(x, y)` with `0 < λ < 1/r` gives a unique
//!   fixed point reached by Picard iteration from any start;
//! - a generalized γ-ψ-Geraghty map,
//!   `γ(x,y) ψ(r³ d(Ax,Ay)) ≤ θ(ψ(d(x,y))) ψ(d(x,y))`, that is γ-admissible
//!   and has a starting point with `γ(x₀, Ax₀) ≥ 1`, has a fixed point.
//!
//! γ is never materialised: `γ(u, v) = 1` exactly when `τ(u(t), v(t)) ≥ 0`
//! at every node, and 0 otherwise.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::calculus::GridFunction;
use crate::error::Result;

/// Relaxation constant of the solution space.
pub const SOLVER_R: f64 = 2.0;

/// A b-metric space of grid functions with the squared sup distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BMetricSpace {
    pub r: f64,
}

impl Default for BMetricSpace {
    fn default() -> Self {
        BMetricSpace { r: SOLVER_R }
    }
}

impl BMetricSpace {
    pub fn distance(&self, x: &GridFunction, y: &GridFunction) -> Result<f64> {
        distance(x, y)
    }
}

/// `max_i (x_i − y_i)²`.
pub fn distance(x: &GridFunction, y: &GridFunction) -> Result<f64> {
    x.ensure_same_grid(y)?;
    Ok(x.values().iter().zip(y.values()).fold(0.0_f64, |m, (a, b)| m.max((a - b) * (a - b))))
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A gauge ψ ∈ Ψ: increasing, continuous, ψ(0) = 0, ψ(τx) ≤ τψ(x) ≤ τx for τ > 1.
#[derive(Clone)]
pub struct PsiFunction {
    name: String,
    f: ScalarFn,
}

/// A shrink function θ ∈ Θ: nondecreasing with values in `[0, 1/r²)`.
#[derive(Clone)]
pub struct ThetaFunction {
    name: String,
    f: ScalarFn,
}

/// The sign relation τ that generates γ.
#[derive(Clone)]
pub struct TauRelation {
    name: String,
    builtin_product: bool,
    f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

macro_rules! debug_by_name {
    ($($ty:ident),*) => {$(
        impl fmt::Debug for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({})", stringify!($ty), self.name)
            }
        }
    )*};
}
debug_by_name!(PsiFunction, ThetaFunction, TauRelation);

impl PsiFunction {
    pub fn new(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        PsiFunction { name: name.into(), f: Arc::new(f) }
    }

    /// ψ(t) = t.
    pub fn identity() -> Self {
        Self::new("t", |t| t)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }
}

impl ThetaFunction {
    pub fn new(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ThetaFunction { name: name.into(), f: Arc::new(f) }
    }

    /// θ(t) = (1 + t²)/(6 + 4t²), with range `[1/6, 1/4)`.
    pub fn rational() -> Self {
        Self::new("(1+t^2)/(6+4t^2)", |t| (1.0 + t * t) / (6.0 + 4.0 * t * t))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }
}

impl TauRelation {
    pub fn new(name: impl Into<String>, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        TauRelation { name: name.into(), builtin_product: false, f: Arc::new(f) }
    }

    /// τ(x, y) = xy.
    pub fn product() -> Self {
        TauRelation { name: "xy".into(), builtin_product: true, f: Arc::new(|x, y| x * y) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// True only for [`TauRelation::product`].
    pub fn is_builtin_product(&self) -> bool {
        self.builtin_product
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (self.f)(x, y)
    }

    /// γ(u, v) ≥ 1, i.e. τ(u(t), v(t)) ≥ 0 at every node.
    pub fn relates(&self, u: &GridFunction, v: &GridFunction) -> Result<bool> {
        u.ensure_same_grid(v)?;
        Ok(u.values().iter().zip(v.values()).all(|(&a, &b)| self.eval(a, b) >= 0.0))
    }
}

/// Sample points for family checks: 0 and 200 log-spaced points in `[1e-6, 1e3]`.
pub fn family_sample_points() -> Vec<f64> {
    let mut pts = vec![0.0];
    pts.extend((0..200).map(|k| 10f64.powf(-6.0 + 9.0 * k as f64 / 199.0)));
    pts
}

/// Multipliers τ used to probe ψ(τx) ≤ τψ(x) ≤ τx.
pub const FAMILY_TAUS: [f64; 3] = [1.5, 2.0, 10.0];

#[derive(Debug, Clone, Serialize)]
pub struct FamilyCheck {
    pub passed: bool,
    pub samples: usize,
    /// First violated condition, if any.
    pub failure: Option<String>,
    /// Largest sampled value (used for the θ range bound).
    pub max_value: f64,
}

/// Sampled membership test ψ ∈ Ψ.
pub fn check_psi(psi: &PsiFunction, points: &[f64]) -> FamilyCheck {
    let mut failure = None;
    let mut max_value = f64::NEG_INFINITY;
    let fail = |msg: String, failure: &mut Option<String>| {
        if failure.is_none() {
            *failure = Some(msg);
        }
    };
    if psi.eval(0.0) != 0.0 {
        fail(format!("psi(0) = {} != 0", psi.eval(0.0)), &mut failure);
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(f64::total_cmp);
    for w in sorted.windows(2) {
        if w[1] > w[0] && psi.eval(w[1]) < psi.eval(w[0]) {
            fail(format!("psi decreases between {} and {}", w[0], w[1]), &mut failure);
        }
    }
    for &x in &sorted {
        let v = psi.eval(x);
        max_value = max_value.max(v);
        if !(v.is_finite() && v >= 0.0) {
            fail(format!("psi({x}) = {v} is not a finite nonnegative number"), &mut failure);
        }
        for tau in FAMILY_TAUS {
            let scaled = psi.eval(tau * x);
            let slack = 1e-12 * (tau * x).max(1.0);
            if scaled > tau * v + slack || tau * v > tau * x + slack {
                fail(format!("psi({tau}*{x}) <= {tau}*psi({x}) <= {tau}*{x} violated"), &mut failure);
            }
        }
    }
    FamilyCheck { passed: failure.is_none(), samples: sorted.len(), failure, max_value }
}

/// Sampled membership test θ ∈ Θ for relaxation constant `r`.
pub fn check_theta(theta: &ThetaFunction, r: f64, points: &[f64]) -> FamilyCheck {
    let cap = 1.0 / (r * r);
    let mut failure: Option<String> = None;
    let mut sorted = points.to_vec();
    sorted.sort_by(f64::total_cmp);
    let values: Vec<f64> = sorted.iter().map(|&x| theta.eval(x)).collect();
    for (x, v) in sorted.iter().zip(&values) {
        if failure.is_none() && !(*v >= 0.0 && *v < cap) {
            failure = Some(format!("theta({x}) = {v} outside [0, {cap})"));
        }
    }
    for (w, vals) in sorted.windows(2).zip(values.windows(2)) {
        if failure.is_none() && vals[1] < vals[0] {
            failure = Some(format!("theta decreases between {} and {}", w[0], w[1]));
        }
    }
    let max_value = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    FamilyCheck { passed: failure.is_none(), samples: sorted.len(), failure, max_value }
}

/// Verdict of the b-metric contraction principle.
#[derive(Debug, Clone, Serialize)]
pub struct ContractionVerdict {
    pub lambda: f64,
    pub inverse_r: f64,
    /// `1/r − λ`; positive when the certificate passes.
    pub margin: f64,
    pub passed: bool,
}

/// Passes iff `0 < λ < 1/r`.
pub fn contraction_certificate(lambda: f64, r: f64) -> ContractionVerdict {
    let inverse_r = 1.0 / r;
    ContractionVerdict { lambda, inverse_r, margin: inverse_r - lambda, passed: lambda > 0.0 && lambda < inverse_r }
}

/// Verdict of the sampled Geraghty inequality.
#[derive(Debug, Clone, Serialize)]
pub struct GeraghtyVerdict {
    pub pairs: usize,
    /// Pairs with γ = 1 (the only ones the inequality constrains).
    pub related_pairs: usize,
    pub holds: bool,
    /// Minimum of `θ(ψ(d))ψ(d) − ψ(r³ d(Au,Av))` over related pairs.
    pub worst_margin: f64,
    pub worst_pair: Option<usize>,
}

/// Checks `ψ(r³ d(Au, Av)) ≤ θ(ψ(d(u, v))) ψ(d(u, v))` on every sampled pair
/// with `γ(u, v) = 1`. Only structural problems are errors.
pub fn geraghty_inequality_check<A>(
    op: A,
    psi: &PsiFunction,
    theta: &ThetaFunction,
    tau: &TauRelation,
    samples: &[(GridFunction, GridFunction)],
    r: f64,
) -> Result<GeraghtyVerdict>
where
    A: Fn(&GridFunction) -> Result<GridFunction>,
{
    let mut related = 0;
    let mut worst = (f64::INFINITY, None);
    for (i, (u, v)) in samples.iter().enumerate() {
        if !tau.relates(u, v)? {
            continue;
        }
        related += 1;
        let d = distance(u, v)?;
        let d_image = distance(&op(u)?, &op(v)?)?;
        let lhs = psi.eval(r.powi(3) * d_image);
        let pd = psi.eval(d);
        let rhs = theta.eval(pd) * pd;
        let margin = rhs - lhs;
        if margin < worst.0 {
            worst = (margin, Some(i));
        }
    }
    Ok(GeraghtyVerdict {
        pairs: samples.len(),
        related_pairs: related,
        holds: worst.0 >= 0.0,
        worst_margin: if related == 0 { 0.0 } else { worst.0 },
        worst_pair: worst.1,
    })
}

/// Verdict of the sampled γ-admissibility check.
#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityVerdict {
    pub pairs: usize,
    pub related_pairs: usize,
    pub holds: bool,
    /// First related pair whose image is not related.
    pub violating_pair: Option<usize>,
}

/// Checks that `τ(u(t), v(t)) ≥ 0` for all `t` implies the same for `(Au, Av)`.
pub fn admissibility_check<A>(
    op: A,
    tau: &TauRelation,
    samples: &[(GridFunction, GridFunction)],
) -> Result<AdmissibilityVerdict>
where
    A: Fn(&GridFunction) -> Result<GridFunction>,
{
    let mut related = 0;
    let mut violating = None;
    for (i, (u, v)) in samples.iter().enumerate() {
        if !tau.relates(u, v)? {
            continue;
        }
        related += 1;
        if !tau.relates(&op(u)?, &op(v)?)? && violating.is_none() {
            violating = Some(i);
        }
    }
    Ok(AdmissibilityVerdict {
        pairs: samples.len(),
        related_pairs: related,
        holds: violating.is_none(),
        violating_pair: violating,
    })
}
