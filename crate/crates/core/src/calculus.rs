//! φ-Riemann–Liouville fractional integral and derivative on a quadrature grid.
//!
//! Everything is computed in the transformed variable `y = φ(s)`, where
//!
//! ```text
//! I^{α,φ} u(t) = 1/Γ(α) ∫_{φ(0)}^{φ(t)} (φ(t) − y)^{α−1} u(φ⁻¹(y)) dy.
//! ```
//!
//! The `y`-interval is split into panels graded quadratically toward both
//! ends, with two Gauss–Legendre points per panel. The Gauss points are the
//! grid nodes and carry the weights of the integral operator. Fractional
//! integrals of a grid function use product integration instead: the
//! function is interpolated piecewise linearly between nodes (constant
//! beyond the outermost ones) and the weakly singular kernel is integrated
//! exactly against the interpolant, so all product weights are nonnegative.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::special::{gamma, PhiMap};

/// Nodes of the default grid (1024 panels).
pub const DEFAULT_GRID_SIZE: usize = 2048;

/// Step of the outer finite-difference operator in [`frac_derivative`],
/// relative to `Φ(1)`.
pub const DERIVATIVE_STEP: f64 = 0.02;

/// Gauss points of a graded panel mesh in `y = φ(s)`.
#[derive(Debug)]
pub struct QuadratureGrid {
    phi: PhiMap,
    nodes: Vec<f64>,
    y_nodes: Vec<f64>,
    weights: Vec<f64>,
    y_lo: f64,
    y_hi: f64,
}

impl QuadratureGrid {
    /// Builds a grid with `size` nodes (`size / 2` panels).
    pub fn graded(phi: PhiMap, size: usize) -> Result<Arc<Self>> {
        if size < 4 || !size.is_multiple_of(2) {
            return Err(Error::Config(format!("grid size must be an even number >= 4, got {size}")));
        }
        let panels = size / 2;
        let y_lo = phi.eval(0.0);
        let y_hi = phi.eval(1.0);
        let span = y_hi - y_lo;
        let breaks: Vec<f64> = (0..=panels)
            .map(|k| match k {
                0 => y_lo,
                k if k == panels => y_hi,
                k => y_lo + span * grade(k as f64 / panels as f64),
            })
            .collect();

        let offset = 0.5 / 3f64.sqrt();
        let mut y_nodes = Vec::with_capacity(size);
        let mut weights = Vec::with_capacity(size);
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            let mid = 0.5 * (a + b);
            let len = b - a;
            y_nodes.push(mid - offset * len);
            y_nodes.push(mid + offset * len);
            weights.push(0.5 * len);
            weights.push(0.5 * len);
        }
        let nodes = y_nodes.iter().map(|&y| phi.inverse(y)).collect();
        Ok(Arc::new(QuadratureGrid { phi, nodes, y_nodes, weights, y_lo, y_hi }))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn phi(&self) -> &PhiMap {
        &self.phi
    }

    /// Nodes in the original variable `s ∈ [0, 1]`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Nodes in the transformed variable `y = φ(s)`.
    pub fn y_nodes(&self) -> &[f64] {
        &self.y_nodes
    }

    /// Weights for `∫ ⋯ φ'(s) ds = ∫ ⋯ dy`; they sum to `Φ(1)`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn y_range(&self) -> (f64, f64) {
        (self.y_lo, self.y_hi)
    }

    pub fn describe(&self) -> String {
        format!(
            "graded two-point Gauss rule in y = phi(s): {} panels, {} nodes, grading exponent 2, phi = {}",
            self.len() / 2,
            self.len(),
            self.phi.kind()
        )
    }

    fn same_as(&self, other: &QuadratureGrid) -> bool {
        std::ptr::eq(self, other)
            || (self.phi.kind() == other.phi.kind() && self.nodes == other.nodes && self.weights == other.weights)
    }
}

// Symmetric quadratic grading of [0,1] toward both ends.
fn grade(x: f64) -> f64 {
    if x <= 0.5 {
        2.0 * x * x
    } else {
        1.0 - 2.0 * (1.0 - x) * (1.0 - x)
    }
}

/// A function sampled at the nodes of a [`QuadratureGrid`].
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<QuadratureGrid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<QuadratureGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for a grid of {} nodes", values.len(), grid.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite value {} at node {i} (s = {})",
                values[i],
                grid.nodes()[i]
            )));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn from_fn(grid: Arc<QuadratureGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&s| f(s)).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Arc<QuadratureGrid>, c: f64) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![c; n])
    }

    pub fn zeros(grid: Arc<QuadratureGrid>) -> Self {
        let n = grid.len();
        GridFunction { grid, values: vec![0.0; n] }
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        self.grid.same_as(&other.grid)
    }

    pub fn is_on(&self, grid: &QuadratureGrid) -> bool {
        self.grid.same_as(grid)
    }

    pub fn ensure_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "grid functions on different grids ({} vs {} nodes)",
                self.grid.len(),
                other.grid.len()
            )))
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &GridFunction, b: f64) -> Result<GridFunction> {
        self.ensure_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        GridFunction::new(self.grid.clone(), values)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Value of the piecewise-linear interpolant (in `y`) at `t`.
    pub fn interpolate(&self, t: f64) -> f64 {
        let y = self.grid.phi.eval(t);
        let ys = self.grid.y_nodes();
        let k = ys.partition_point(|&v| v <= y);
        if k == 0 {
            self.values[0]
        } else if k == ys.len() {
            self.values[ys.len() - 1]
        } else {
            let w = (y - ys[k - 1]) / (ys[k] - ys[k - 1]);
            self.values[k - 1] + w * (self.values[k] - self.values[k - 1])
        }
    }
}

fn check_order(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("fractional order must be positive and finite, got {alpha}")))
    }
}

fn check_closed_unit(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::Domain(format!("t must lie in [0, 1], got {t}")))
    }
}

/// `∫_{y_lo}^{top} (top − y)^{order−1} ũ(y) dy` for the piecewise-linear
/// interpolant ũ of `u`, integrated exactly segment by segment.
fn product_integral(order: f64, u: &GridFunction, top: f64) -> f64 {
    let grid = &u.grid;
    let ys = grid.y_nodes();
    let vs = &u.values;
    let n = ys.len();
    let (y_lo, y_hi) = (grid.y_lo, grid.y_hi);
    if top <= y_lo {
        return 0.0;
    }

    let knot = |k: usize| -> (f64, f64) {
        match k {
            0 => (y_lo, vs[0]),
            k if k <= n => (ys[k - 1], vs[k - 1]),
            _ => (y_hi, vs[n - 1]),
        }
    };

    let mut acc = 0.0;
    let (mut a, mut ua) = knot(0);
    let mut p = top - a;
    let mut p_pow = p.powf(order);
    for k in 1..=n + 1 {
        let (b, ub) = knot(k);
        if b <= a {
            continue;
        }
        let c = b.min(top);
        let q = top - c;
        let q_pow = if q > 0.0 { q.powf(order) } else { 0.0 };
        let m0 = (p_pow - q_pow) / order;
        let m1 = (p_pow * p - q_pow * q) / (order + 1.0);
        // ∫_a^c (top − y)^{order−1} (y − a) dy
        let lin = p * m0 - m1;
        acc += ua * m0 + (ub - ua) / (b - a) * lin;
        if b >= top {
            break;
        }
        a = b;
        ua = ub;
        p = q;
        p_pow = q_pow;
    }
    acc
}

const GAUSS_LEGENDRE_8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

/// Like [`product_integral`] but with the local cubic through the four
/// nearest nodes on every segment (extrapolated on the two end pieces).
///
/// Weights of this rule can be negative, so it is only used under the
/// finite differences of [`frac_derivative`], where the kinks of the linear
/// interpolant would otherwise be amplified by `h^{-n}`.
fn product_integral_cubic(order: f64, u: &GridFunction, top: f64) -> f64 {
    let grid = &u.grid;
    let ys = grid.y_nodes();
    let vs = &u.values;
    let n = ys.len();
    let (y_lo, y_hi) = (grid.y_lo, grid.y_hi);
    if top <= y_lo {
        return 0.0;
    }
    let knot = |k: usize| match k {
        0 => y_lo,
        k if k <= n => ys[k - 1],
        _ => y_hi,
    };

    let mut acc = 0.0;
    for k in 0..=n {
        let (a, b) = (knot(k), knot(k + 1));
        if b <= a {
            continue;
        }
        let width = b - a;
        let j0 = k.saturating_sub(2).min(n - 4);
        let coef =
            monomial_cubic(std::array::from_fn(|m| (ys[j0 + m] - a) / width), std::array::from_fn(|m| vs[j0 + m]));
        let q = top - b;
        let moments = if q >= 2.0 * width {
            // Kernel is smooth on the segment: Gauss–Legendre is accurate to
            // round-off and avoids the cancellation of the exact moments.
            let mut m = [0.0; 4];
            for (x, w) in GAUSS_LEGENDRE_8 {
                let x = 0.5 * (1.0 + x);
                let kw = 0.5 * w * width * (top - a - x * width).powf(order - 1.0);
                m[0] += kw;
                m[1] += kw * x;
                m[2] += kw * x * x;
                m[3] += kw * x * x * x;
            }
            m
        } else {
            // ∫_a^c (top − y)^{order−1} ((y − a)/width)^j dy through
            // w = top − y and y − a = p − w; here p/width < 3.
            let p = top - a;
            let q = q.max(0.0);
            let mut raw = [0.0; 4];
            for (i, r) in raw.iter_mut().enumerate() {
                let e = order + i as f64;
                *r = (p.powf(e) - if q > 0.0 { q.powf(e) } else { 0.0 }) / e;
            }
            let sc = p / width;
            let iw = 1.0 / width;
            [
                raw[0],
                sc * raw[0] - iw * raw[1],
                sc * sc * raw[0] - 2.0 * sc * iw * raw[1] + iw * iw * raw[2],
                sc.powi(3) * raw[0] - 3.0 * sc * sc * iw * raw[1] + 3.0 * sc * iw * iw * raw[2] - iw.powi(3) * raw[3],
            ]
        };
        acc += coef.iter().zip(&moments).map(|(c, m)| c * m).sum::<f64>();
        if b >= top {
            break;
        }
    }
    acc
}

/// Monomial coefficients of the cubic through `(xs[i], fs[i])`.
fn monomial_cubic(xs: [f64; 4], fs: [f64; 4]) -> [f64; 4] {
    // Newton divided differences, then expansion of the nested form.
    let mut d = fs;
    for level in 1..4 {
        for i in (level..4).rev() {
            d[i] = (d[i] - d[i - 1]) / (xs[i] - xs[i - level]);
        }
    }
    let mut c = [d[3], 0.0, 0.0, 0.0];
    for i in (0..3).rev() {
        // c(x) ← c(x)·(x − xs[i]) + d[i]
        for j in (1..4).rev() {
            c[j] = c[j - 1] - xs[i] * c[j];
        }
        c[0] = d[i] - xs[i] * c[0];
    }
    c
}

/// `I^{α,φ} u(t)`, with φ taken from the grid of `u`.
pub fn frac_integral(alpha: f64, u: &GridFunction, t: f64) -> Result<f64> {
    check_order(alpha)?;
    check_closed_unit(t)?;
    let top = u.grid.phi.eval(t);
    Ok(product_integral(alpha, u, top) / gamma(alpha)?)
}

/// `I^{α,φ} u` evaluated at every node of the grid of `u`.
pub fn frac_integral_on_grid(alpha: f64, u: &GridFunction) -> Result<GridFunction> {
    check_order(alpha)?;
    let g = gamma(alpha)?;
    let values = u.grid.y_nodes().par_iter().map(|&y| product_integral(alpha, u, y) / g).collect();
    GridFunction::new(u.grid.clone(), values)
}

/// `D^{α,φ} u(t) = (d/dy)ⁿ I^{n−α,φ} u` at `y = φ(t)`, `n = ⌊α⌋ + 1 ≤ 3`.
///
/// The outer derivative is a fourth-order central difference in `y` with step
/// `DERIVATIVE_STEP·Φ(1)`, shrunk near the ends so the stencil stays inside
/// `[φ(0), φ(1)]`; accuracy therefore degrades close to `t = 0` and `t = 1`.
/// The inner integral interpolates `u` by local cubics rather than the
/// piecewise-linear rule of [`frac_integral`].
pub fn frac_derivative(alpha: f64, u: &GridFunction, t: f64) -> Result<f64> {
    check_order(alpha)?;
    let n = alpha.floor() as usize + 1;
    if n > 3 {
        return Err(Error::Domain(format!("derivative order {alpha} exceeds 3")));
    }
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!("frac_derivative needs an interior point 0 < t < 1, got {t}")));
    }
    let inner_order = n as f64 - alpha;
    let g = gamma(inner_order)?;
    let grid = &u.grid;
    let y = grid.phi.eval(t);
    let reach = if n == 3 { 3.0 } else { 2.0 };
    let room = (y - grid.y_lo).min(grid.y_hi - y) / reach;
    let h = (DERIVATIVE_STEP * (grid.y_hi - grid.y_lo)).min(room);
    let f = |k: f64| product_integral_cubic(inner_order, u, y + k * h) / g;

    let d = match n {
        1 => (-f(2.0) + 8.0 * f(1.0) - 8.0 * f(-1.0) + f(-2.0)) / (12.0 * h),
        2 => (-f(2.0) + 16.0 * f(1.0) - 30.0 * f(0.0) + 16.0 * f(-1.0) - f(-2.0)) / (12.0 * h * h),
        _ => (-f(3.0) + 8.0 * f(2.0) - 13.0 * f(1.0) + 13.0 * f(-1.0) - 8.0 * f(-2.0) + f(-3.0)) / (8.0 * h * h * h),
    };
    Ok(d)
}

/// Sample points used by [`semigroup_defect`]: `t = k/20`, `k = 1..=20`.
pub fn semigroup_test_points() -> Vec<f64> {
    (1..=20).map(|k| k as f64 / 20.0).collect()
}

/// `max_t |I^{α}(I^{β} u)(t) − I^{α+β} u(t)|` over [`semigroup_test_points`].
pub fn semigroup_defect(alpha: f64, beta: f64, u: &GridFunction) -> Result<f64> {
    check_order(alpha)?;
    check_order(beta)?;
    let inner = frac_integral_on_grid(beta, u)?;
    semigroup_test_points().into_iter().try_fold(0.0_f64, |worst, t| {
        let lhs = frac_integral(alpha, &inner, t)?;
        let rhs = frac_integral(alpha + beta, u, t)?;
        Ok(worst.max((lhs - rhs).abs()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(phi: PhiMap, n: usize) -> Arc<QuadratureGrid> {
        QuadratureGrid::graded(phi, n).unwrap()
    }

    #[test]
    fn grid_invariants() {
        for phi in [PhiMap::identity(), PhiMap::sin_quarter_pi(), PhiMap::sqrt_half()] {
            let g = grid(phi.clone(), 256);
            assert_eq!(g.len(), 256);
            assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
            assert!(g.nodes().iter().all(|&s| (0.0..=1.0).contains(&s)));
            assert!(g.weights().iter().all(|&w| w >= 0.0));
            let total: f64 = g.weights().iter().sum();
            assert!((total - phi.shifted(1.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(QuadratureGrid::graded(PhiMap::identity(), 7).is_err());
        assert!(QuadratureGrid::graded(PhiMap::identity(), 2).is_err());
    }

    #[test]
    fn grid_function_validation() {
        let g = grid(PhiMap::identity(), 8);
        assert!(matches!(GridFunction::new(g.clone(), vec![0.0; 7]), Err(Error::GridMismatch(_))));
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(matches!(GridFunction::new(g.clone(), v), Err(Error::Numeric(_))));
        let other = grid(PhiMap::identity(), 8);
        let a = GridFunction::zeros(g);
        let b = GridFunction::zeros(other);
        assert!(a.same_grid(&b));
        let c = GridFunction::zeros(grid(PhiMap::sqrt_half(), 8));
        assert!(a.ensure_same_grid(&c).is_err());
    }

    #[test]
    fn integral_of_zero_is_zero() {
        let u = GridFunction::zeros(grid(PhiMap::sqrt_half(), 64));
        for t in [0.0, 0.3, 1.0] {
            assert_eq!(frac_integral(1.7, &u, t).unwrap(), 0.0);
        }
    }

    #[test]
    fn integral_domain_errors() {
        let u = GridFunction::zeros(grid(PhiMap::identity(), 16));
        assert!(matches!(frac_integral(1.0, &u, 1.5), Err(Error::Domain(_))));
        assert!(matches!(frac_integral(0.0, &u, 0.5), Err(Error::Domain(_))));
        assert!(matches!(frac_derivative(0.5, &u, 0.0), Err(Error::Domain(_))));
        assert!(matches!(frac_derivative(0.5, &u, 1.0), Err(Error::Domain(_))));
        assert!(matches!(frac_derivative(3.2, &u, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn ordinary_integral_of_identity() {
        let g = grid(PhiMap::identity(), DEFAULT_GRID_SIZE);
        let u = GridFunction::from_fn(g, |s| s).unwrap();
        // Exact between nodes; the constant end piece below the first node
        // costs O(s_0²).
        assert_relative_eq!(frac_integral(1.0, &u, 0.5).unwrap(), 0.125, epsilon = 1e-12);
    }

    #[test]
    fn constant_integrand_closed_form() {
        let g = grid(PhiMap::identity(), DEFAULT_GRID_SIZE);
        let u = GridFunction::constant(g, 1.0).unwrap();
        let expected = 1.0 / gamma(3.5).unwrap();
        assert_relative_eq!(frac_integral(2.5, &u, 1.0).unwrap(), expected, epsilon = 1e-13);
    }

    #[test]
    fn derivative_of_zero_is_zero() {
        let u = GridFunction::zeros(grid(PhiMap::sin_quarter_pi(), 64));
        assert_eq!(frac_derivative(2.5, &u, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn half_derivative_of_identity() {
        let g = grid(PhiMap::identity(), DEFAULT_GRID_SIZE);
        let u = GridFunction::from_fn(g, |s| s).unwrap();
        let expected = gamma(2.0).unwrap() / gamma(1.5).unwrap() * 0.5f64.sqrt();
        let got = frac_derivative(0.5, &u, 0.5).unwrap();
        assert!((got - expected).abs() < 1e-6, "{got} vs {expected}");
    }

    #[test]
    fn semigroup_of_constant() {
        let g = grid(PhiMap::identity(), DEFAULT_GRID_SIZE);
        let zero = GridFunction::zeros(g.clone());
        assert_eq!(semigroup_defect(1.0, 1.0, &zero).unwrap(), 0.0);
        let one = GridFunction::constant(g, 1.0).unwrap();
        assert!(semigroup_defect(1.0, 1.0, &one).unwrap() < 1e-6);
    }

    #[test]
    fn interpolation_is_piecewise_linear() {
        let g = grid(PhiMap::sqrt_half(), 32);
        let phi = PhiMap::sqrt_half();
        let u = GridFunction::from_fn(g.clone(), |s| 3.0 * phi.eval(s) - 1.0).unwrap();
        let s = g.nodes()[5] * 0.3 + g.nodes()[6] * 0.7;
        assert_relative_eq!(u.interpolate(s), 3.0 * phi.eval(s) - 1.0, epsilon = 1e-13);
    }

    #[test]
    fn cubic_rule_is_sharper_than_linear() {
        // ∫_0^0.87 (0.87 − y)^{-1/2} cos y dy, evaluated to 15 digits offline.
        let exact = 1.50666442480327;
        let g = grid(PhiMap::identity(), 1024);
        let u = GridFunction::from_fn(g, f64::cos).unwrap();
        let cubic = product_integral_cubic(0.5, &u, 0.87);
        let linear = product_integral(0.5, &u, 0.87);
        assert!((cubic - exact).abs() < 1e-9, "cubic {cubic}");
        assert!((cubic - exact).abs() < 0.01 * (linear - exact).abs());
    }

    #[test]
    fn cubic_rule_is_smooth_in_the_upper_limit() {
        // Data with a square-root onset, as produced by I^{1/2}.
        let g = grid(PhiMap::identity(), 1024);
        let u = GridFunction::from_fn(g, |s| s.sqrt()).unwrap();
        let f = |y: f64| product_integral_cubic(0.5, &u, y);
        let h = 5e-4;
        let second: f64 =
            (0..40).map(|k| 0.86 + h * k as f64).map(|y| (f(y + h) - 2.0 * f(y) + f(y - h)).abs()).fold(0.0, f64::max);
        assert!(second < 1e-8, "second difference {second}");
    }
}
