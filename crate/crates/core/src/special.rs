//! Γ(x) and the coordinate maps φ.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;

// Lanczos coefficients for g = 7, n = 9 (as tabulated in the GNU Scientific Library).
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(x) for real `x > 0`.
///
/// Lanczos approximation with reflection below 1/2; relative accuracy is
/// about 1e-15 on `[0.5, 10]`.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("gamma requires a finite x > 0, got {x}")));
    }
    Ok(gamma_positive(x))
}

fn gamma_positive(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma_positive(1.0 - x));
    }
    // Small integers are returned exactly.
    if x <= 20.0 && x.fract() == 0.0 {
        return (1..x as u64).map(|k| k as f64).product();
    }
    let z = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (k, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * acc
}

/// Catalogue tag of a coordinate map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiKind {
    /// φ(t) = t
    Identity,
    /// φ(t) = sin(πt/4)
    SinQuarterPi,
    /// φ(t) = √(1+t)/2
    SqrtHalf,
    /// Shape-preserving cubic through user samples.
    Table,
}

impl PhiKind {
    pub fn name(self) -> &'static str {
        match self {
            PhiKind::Identity => "identity",
            PhiKind::SinQuarterPi => "sin_quarter_pi",
            PhiKind::SqrtHalf => "sqrt_half",
            PhiKind::Table => "table",
        }
    }
}

impl fmt::Display for PhiKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A strictly increasing map φ: [0,1] → ℝ with nonvanishing derivative.
#[derive(Clone)]
pub struct PhiMap {
    repr: Repr,
}

#[derive(Clone)]
enum Repr {
    Identity,
    SinQuarterPi,
    SqrtHalf,
    Table(Arc<MonotoneCubic>),
}

impl fmt::Debug for PhiMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.repr {
            Repr::Table(tab) => write!(f, "PhiMap(table, {} points)", tab.ts.len()),
            _ => write!(f, "PhiMap({})", self.kind()),
        }
    }
}

impl PhiMap {
    pub fn identity() -> Self {
        PhiMap { repr: Repr::Identity }
    }

    pub fn sin_quarter_pi() -> Self {
        PhiMap { repr: Repr::SinQuarterPi }
    }

    pub fn sqrt_half() -> Self {
        PhiMap { repr: Repr::SqrtHalf }
    }

    /// Monotone piecewise-cubic interpolant through `(ts[i], ys[i])`.
    ///
    /// The abscissae must start at 0, end at 1 and be strictly increasing;
    /// the ordinates must be strictly increasing. At least four points are
    /// required.
    pub fn from_table(ts: &[f64], ys: &[f64]) -> Result<Self> {
        let cubic = MonotoneCubic::new(ts, ys)?;
        let phi = PhiMap { repr: Repr::Table(Arc::new(cubic)) };
        // Slopes from the Fritsch-Carlson limiter keep the derivative positive
        // at the knots, but a flat segment in between would still be a defect.
        for k in 0..=1000 {
            let t = k as f64 / 1000.0;
            if !(phi.deriv(t) > 0.0) {
                return Err(Error::Config(format!("tabulated phi has a non-positive derivative near t = {t}")));
            }
        }
        Ok(phi)
    }

    /// Looks up a catalogue map by its tag; `table` needs explicit samples.
    pub fn catalog(kind: PhiKind, table: Option<(&[f64], &[f64])>) -> Result<Self> {
        match (kind, table) {
            (PhiKind::Identity, _) => Ok(Self::identity()),
            (PhiKind::SinQuarterPi, _) => Ok(Self::sin_quarter_pi()),
            (PhiKind::SqrtHalf, _) => Ok(Self::sqrt_half()),
            (PhiKind::Table, Some((ts, ys))) => Self::from_table(ts, ys),
            (PhiKind::Table, None) => Err(Error::Config("phi kind `table` requires sample points".into())),
        }
    }

    pub fn kind(&self) -> PhiKind {
        match self.repr {
            Repr::Identity => PhiKind::Identity,
            Repr::SinQuarterPi => PhiKind::SinQuarterPi,
            Repr::SqrtHalf => PhiKind::SqrtHalf,
            Repr::Table(_) => PhiKind::Table,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.repr {
            Repr::Identity => t,
            Repr::SinQuarterPi => (0.25 * PI * t).sin(),
            Repr::SqrtHalf => 0.5 * (1.0 + t).sqrt(),
            Repr::Table(tab) => tab.eval(t),
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        match &self.repr {
            Repr::Identity => 1.0,
            Repr::SinQuarterPi => 0.25 * PI * (0.25 * PI * t).cos(),
            Repr::SqrtHalf => 0.25 / (1.0 + t).sqrt(),
            Repr::Table(tab) => tab.deriv(t),
        }
    }

    /// Φ(t) = φ(t) − φ(0).
    pub fn shifted(&self, t: f64) -> f64 {
        self.eval(t) - self.eval(0.0)
    }

    /// Inverse map on `[φ(0), φ(1)]`; arguments outside are clamped.
    pub fn inverse(&self, y: f64) -> f64 {
        let (lo, hi) = (self.eval(0.0), self.eval(1.0));
        let y = y.clamp(lo, hi);
        match &self.repr {
            Repr::Identity => y,
            Repr::SinQuarterPi => {
                // φ(1) = √2/2; clamp guards asin against round-off above it.
                (4.0 / PI) * y.min(FRAC_1_SQRT_2).asin()
            }
            Repr::SqrtHalf => (4.0 * y * y - 1.0).clamp(0.0, 1.0),
            Repr::Table(tab) => match tab.line {
                Some((a, b)) => ((y - a) / b).clamp(0.0, 1.0),
                None => self.inverse_by_bracketing(y),
            },
        }
    }

    // Safeguarded Newton: a Newton step is accepted only while it stays
    // inside the current bracket, otherwise the bracket is bisected.
    fn inverse_by_bracketing(&self, y: f64) -> f64 {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let mut t = 0.5;
        for _ in 0..200 {
            let r = self.eval(t) - y;
            if r == 0.0 {
                return t;
            }
            if r < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let d = self.deriv(t);
            let newton = t - r / d;
            let next = if d > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if (next - t).abs() <= 1e-15 || hi - lo <= 1e-15 {
                return next;
            }
            t = next;
        }
        t
    }
}

/// Fritsch–Carlson monotone cubic Hermite interpolant.
struct MonotoneCubic {
    ts: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
    /// `(a, b)` when all samples lie on `y = a + b t`; the interpolant is
    /// then exactly that line and is evaluated (and inverted) as such.
    line: Option<(f64, f64)>,
}

impl MonotoneCubic {
    fn new(ts: &[f64], ys: &[f64]) -> Result<Self> {
        if ts.len() != ys.len() {
            return Err(Error::Config("phi table columns differ in length".into()));
        }
        let n = ts.len();
        if n < 4 {
            return Err(Error::Config(format!("phi table needs at least 4 points, got {n}")));
        }
        if ts.iter().chain(ys).any(|v| !v.is_finite()) {
            return Err(Error::Config("phi table contains non-finite values".into()));
        }
        if ts[0] != 0.0 || ts[n - 1] != 1.0 {
            return Err(Error::Config("phi table must span t = 0 to t = 1".into()));
        }
        if ts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("phi table abscissae must be strictly increasing".into()));
        }
        if ys.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("phi table values must be strictly increasing".into()));
        }

        let h: Vec<f64> = ts.windows(2).map(|w| w[1] - w[0]).collect();
        let d: Vec<f64> = ys.windows(2).zip(&h).map(|(w, h)| (w[1] - w[0]) / h).collect();
        let mut slopes = vec![0.0; n];
        for k in 1..n - 1 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            slopes[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
        }
        slopes[0] = end_slope(h[0], h[1], d[0], d[1]);
        slopes[n - 1] = end_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
        let line = d.iter().all(|&dk| dk == d[0]).then(|| (ys[0], d[0]));
        Ok(MonotoneCubic { ts: ts.to_vec(), ys: ys.to_vec(), slopes, line })
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.ts.len();
        self.ts.partition_point(|&x| x <= t).clamp(1, n - 1) - 1
    }

    fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        if let Some((a, b)) = self.line {
            return a + b * t;
        }
        let k = self.segment(t);
        let h = self.ts[k + 1] - self.ts[k];
        let x = (t - self.ts[k]) / h;
        let x2 = x * x;
        let x3 = x2 * x;
        let h00 = 2.0 * x3 - 3.0 * x2 + 1.0;
        let h10 = x3 - 2.0 * x2 + x;
        let h01 = -2.0 * x3 + 3.0 * x2;
        let h11 = x3 - x2;
        h00 * self.ys[k] + h10 * h * self.slopes[k] + h01 * self.ys[k + 1] + h11 * h * self.slopes[k + 1]
    }

    fn deriv(&self, t: f64) -> f64 {
        if let Some((_, b)) = self.line {
            return b;
        }
        let t = t.clamp(0.0, 1.0);
        let k = self.segment(t);
        let h = self.ts[k + 1] - self.ts[k];
        let x = (t - self.ts[k]) / h;
        let x2 = x * x;
        let d00 = (6.0 * x2 - 6.0 * x) / h;
        let d10 = 3.0 * x2 - 4.0 * x + 1.0;
        let d01 = (-6.0 * x2 + 6.0 * x) / h;
        let d11 = 3.0 * x2 - 2.0 * x;
        d00 * self.ys[k] + d10 * self.slopes[k] + d01 * self.ys[k + 1] + d11 * self.slopes[k + 1]
    }
}

// Three-point end slope, limited to [d0/2, 3 d0] so the derivative at the
// end stays strictly positive and the end segment stays monotone.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    m.clamp(0.5 * d0, 3.0 * d0)
}
