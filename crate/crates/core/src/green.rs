//! Green's function of the three-point problem and its properties.
//!
//! With `Φ(t) = φ(t) − φ(0)` and
//!
//! ```text
//! μ = (α−1) φ'(1) Φ(1)^{α−2} − β Φ(η)^{α−1},
//! ```
//!
//! `μΓ(α)·G(t, s)` is one of four expressions depending on where `s` falls
//! relative to `t` and `η`; see [`Branch`].

use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::{gamma, PhiMap};

/// Problem data `(α, β, η, φ)`.
#[derive(Debug, Clone)]
pub struct BvpParams {
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    pub phi: PhiMap,
}

impl BvpParams {
    pub fn new(alpha: f64, beta: f64, eta: f64, phi: PhiMap) -> Result<Self> {
        let p = BvpParams { alpha, beta, eta, phi };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 2.0 && self.alpha <= 3.0) {
            return Err(Error::Config(format!("alpha must satisfy 2 < alpha <= 3, got {}", self.alpha)));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("beta must be finite and >= 0, got {}", self.beta)));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::Config(format!("eta must satisfy 0 < eta <= 1, got {}", self.eta)));
        }
        Ok(())
    }
}

// Powers of nonnegative bases; a zero (or round-off negative) base gives 0.
fn pow0(base: f64, exp: f64) -> f64 {
    if base > 0.0 {
        base.powf(exp)
    } else {
        0.0
    }
}

/// The two terms of μ: `(α−1)φ'(1)Φ(1)^{α−2}` and `βΦ(η)^{α−1}`.
fn mu_terms(alpha: f64, beta: f64, eta: f64, phi: &PhiMap) -> (f64, f64) {
    let lead = (alpha - 1.0) * phi.deriv(1.0) * pow0(phi.shifted(1.0), alpha - 2.0);
    let tail = beta * pow0(phi.shifted(eta), alpha - 1.0);
    (lead, tail)
}

/// μ = (α−1)φ'(1)Φ(1)^{α−2} − βΦ(η)^{α−1}.
pub fn mu(params: &BvpParams) -> f64 {
    let (lead, tail) = mu_terms(params.alpha, params.beta, params.eta, &params.phi);
    lead - tail
}

/// Supremum of the β for which `G > 0` is guaranteed:
/// `(α−1)φ'(1)Φ(1)^{α−2} / Φ(η)^{α−1}`.
pub fn beta_bound(alpha: f64, eta: f64, phi: &PhiMap) -> f64 {
    let (lead, _) = mu_terms(alpha, 0.0, eta, phi);
    lead / pow0(phi.shifted(eta), alpha - 1.0)
}

/// Which of the four formulas applies at `(t, s)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// `s ≤ min{η, t}`
    BelowBoth,
    /// `t ≤ s ≤ η`
    BetweenTAndEta,
    /// `η ≤ s ≤ t`
    BetweenEtaAndT,
    /// `max{η, t} ≤ s`
    AboveBoth,
}

impl Branch {
    /// Ties go to the first matching branch in declaration order.
    pub fn select(t: f64, s: f64, eta: f64) -> Branch {
        if s <= eta.min(t) {
            Branch::BelowBoth
        } else if t <= s && s <= eta {
            Branch::BetweenTAndEta
        } else if eta <= s && s <= t {
            Branch::BetweenEtaAndT
        } else {
            Branch::AboveBoth
        }
    }
}

/// Precomputed constants of the Green's function for one parameter set.
#[derive(Debug, Clone)]
pub struct GreenKernel {
    params: BvpParams,
    mu: f64,
    phi_one: f64,
    phi_eta: f64,
    phi_at_one: f64,
    phi_at_eta: f64,
    phi_at_zero: f64,
    lead_coef: f64,
    gamma_alpha: f64,
}

impl GreenKernel {
    /// Fails when μ vanishes (to within round-off of its two terms).
    pub fn new(params: BvpParams) -> Result<Self> {
        params.validate()?;
        let (lead, tail) = mu_terms(params.alpha, params.beta, params.eta, &params.phi);
        let mu = lead - tail;
        if mu.abs() <= 1e-14 * lead.abs().max(tail.abs()) {
            return Err(Error::Config(format!("mu = {mu:e}: μ≠0 required for the Green's function")));
        }
        let phi = &params.phi;
        let kernel = GreenKernel {
            mu,
            phi_one: phi.shifted(1.0),
            phi_eta: phi.shifted(params.eta),
            phi_at_one: phi.eval(1.0),
            phi_at_eta: phi.eval(params.eta),
            phi_at_zero: phi.eval(0.0),
            lead_coef: (params.alpha - 1.0) * phi.deriv(1.0),
            gamma_alpha: gamma(params.alpha)?,
            params,
        };
        Ok(kernel)
    }

    pub fn params(&self) -> &BvpParams {
        &self.params
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Φ(1).
    pub fn phi_one(&self) -> f64 {
        self.phi_one
    }

    /// Φ(η).
    pub fn phi_eta(&self) -> f64 {
        self.phi_eta
    }

    pub fn gamma_alpha(&self) -> f64 {
        self.gamma_alpha
    }

    pub fn beta_bound(&self) -> f64 {
        beta_bound(self.params.alpha, self.params.eta, &self.params.phi)
    }

    /// `0 ≤ β < beta_bound`, equivalently μ > 0.
    pub fn positivity_hypothesis(&self) -> bool {
        self.params.beta >= 0.0 && self.params.beta < self.beta_bound() && self.mu > 0.0
    }

    /// G(t, s).
    pub fn green(&self, t: f64, s: f64) -> f64 {
        let phi = &self.params.phi;
        self.green_phi(t, phi.eval(t), s, phi.eval(s))
    }

    /// G(t, s) when `φ(t)` and `φ(s)` are already known.
    pub fn green_phi(&self, t: f64, phi_t: f64, s: f64, phi_s: f64) -> f64 {
        let branch = Branch::select(t, s, self.params.eta);
        self.branch_value(branch, phi_t, phi_s)
    }

    /// Evaluates one branch formula regardless of where `(t, s)` lies.
    pub fn green_branch(&self, branch: Branch, t: f64, s: f64) -> f64 {
        let phi = &self.params.phi;
        self.branch_value(branch, phi.eval(t), phi.eval(s))
    }

    fn branch_value(&self, branch: Branch, phi_t: f64, phi_s: f64) -> f64 {
        let a = self.params.alpha;
        let big_phi_t = pow0(phi_t - self.phi_at_zero, a - 1.0);
        let end = self.lead_coef * pow0(self.phi_at_one - phi_s, a - 2.0);
        let eta_term = || self.params.beta * pow0(self.phi_at_eta - phi_s, a - 1.0);
        let diag = || self.mu * pow0(phi_t - phi_s, a - 1.0);
        let scaled = match branch {
            Branch::BelowBoth => big_phi_t * (end - eta_term()) - diag(),
            Branch::BetweenTAndEta => big_phi_t * (end - eta_term()),
            Branch::BetweenEtaAndT => big_phi_t * end - diag(),
            Branch::AboveBoth => big_phi_t * end,
        };
        scaled / (self.mu * self.gamma_alpha)
    }

    /// `(α−1)φ'(1)(φ(1) − φ(s))^{α−2} / (μΓ(α))`, an upper bound for
    /// `max_t G(t, s)` under the positivity hypothesis.
    pub fn green_max_bound(&self, s: f64) -> f64 {
        let a = self.params.alpha;
        let phi_s = self.params.phi.eval(s);
        self.lead_coef * pow0(self.phi_at_one - phi_s, a - 2.0) / (self.mu * self.gamma_alpha)
    }
}

/// Outcome of one sampled property.
#[derive(Debug, Clone, Serialize)]
pub struct PropertyCheck {
    pub passed: bool,
    /// Worst sampled value of the checked quantity (minimum of `G` for
    /// positivity, maximum relative jump for continuity, maximum excess
    /// `G − bound` for dominance).
    pub worst: f64,
    /// `(t, s)` where `worst` was attained.
    pub at: (f64, f64),
}

/// Sampled verification of the Green's-function properties.
#[derive(Debug, Clone, Serialize)]
pub struct KernelPropertyReport {
    pub gridsize: usize,
    pub beta: f64,
    pub beta_bound: f64,
    /// `β < beta_bound`; when false the remaining checks carry no guarantee.
    pub hypothesis_holds: bool,
    pub positivity: PropertyCheck,
    pub seam_continuity: PropertyCheck,
    pub dominance: PropertyCheck,
}

impl KernelPropertyReport {
    /// All properties hold and the hypothesis that guarantees them is met.
    pub fn passed(&self) -> bool {
        self.hypothesis_holds && self.positivity.passed && self.seam_continuity.passed && self.dominance.passed
    }
}

/// Relative tolerance for branch seam jumps.
pub const SEAM_TOLERANCE: f64 = 1e-10;
/// Absolute slack in `G ≤ green_max_bound`.
pub const DOMINANCE_SLACK: f64 = 1e-12;

/// Checks positivity, seam continuity and the max bound on the interior
/// grid `{k/(n+1)}²`, `k = 1..=n`.
pub fn check_kernel_properties(kernel: &GreenKernel, gridsize: usize) -> KernelPropertyReport {
    let n = gridsize.max(1);
    let pts: Vec<f64> = (1..=n).map(|k| k as f64 / (n + 1) as f64).collect();
    let eta = kernel.params.eta;

    let mut min_g = (f64::INFINITY, (0.0, 0.0));
    let mut max_excess = (f64::NEG_INFINITY, (0.0, 0.0));
    let mut scale = 0.0_f64;
    for &s in &pts {
        let bound = kernel.green_max_bound(s);
        for &t in &pts {
            let g = kernel.green(t, s);
            scale = scale.max(g.abs());
            if g < min_g.0 {
                min_g = (g, (t, s));
            }
            if g - bound > max_excess.0 {
                max_excess = (g - bound, (t, s));
            }
        }
    }

    // Seams s = t and s = η, compared branch against branch.
    let mut max_jump = (0.0_f64, (0.0, 0.0));
    let mut record = |jump: f64, at: (f64, f64)| {
        if jump > max_jump.0 {
            max_jump = (jump, at);
        }
    };
    for &t in &pts {
        let (left, right) = if t <= eta {
            (Branch::BelowBoth, Branch::BetweenTAndEta)
        } else {
            (Branch::BetweenEtaAndT, Branch::AboveBoth)
        };
        record((kernel.green_branch(left, t, t) - kernel.green_branch(right, t, t)).abs(), (t, t));
        let (left, right) = if t >= eta {
            (Branch::BelowBoth, Branch::BetweenEtaAndT)
        } else {
            (Branch::BetweenTAndEta, Branch::AboveBoth)
        };
        record((kernel.green_branch(left, t, eta) - kernel.green_branch(right, t, eta)).abs(), (t, eta));
    }
    let rel_jump = if scale > 0.0 { max_jump.0 / scale } else { max_jump.0 };

    KernelPropertyReport {
        gridsize: n,
        beta: kernel.params.beta,
        beta_bound: kernel.beta_bound(),
        hypothesis_holds: kernel.positivity_hypothesis(),
        positivity: PropertyCheck { passed: min_g.0 > 0.0, worst: min_g.0, at: min_g.1 },
        seam_continuity: PropertyCheck { passed: rel_jump <= SEAM_TOLERANCE, worst: rel_jump, at: max_jump.1 },
        dominance: PropertyCheck { passed: max_excess.0 <= DOMINANCE_SLACK, worst: max_excess.0, at: max_excess.1 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn example41(beta: f64) -> BvpParams {
        BvpParams::new(2.5, beta, 0.5, PhiMap::sin_quarter_pi()).unwrap()
    }

    fn example42() -> BvpParams {
        BvpParams::new(2.5, 4.0, 1.0 / 3.0, PhiMap::sqrt_half()).unwrap()
    }

    fn classical() -> GreenKernel {
        GreenKernel::new(BvpParams::new(3.0, 0.0, 0.5, PhiMap::identity()).unwrap()).unwrap()
    }

    #[test]
    fn params_validation() {
        let phi = PhiMap::identity();
        assert!(BvpParams::new(2.0, 1.0, 0.5, phi.clone()).is_err());
        assert!(BvpParams::new(3.01, 1.0, 0.5, phi.clone()).is_err());
        assert!(BvpParams::new(3.0, -0.1, 0.5, phi.clone()).is_err());
        assert!(BvpParams::new(2.5, 1.0, 0.0, phi.clone()).is_err());
        assert!(BvpParams::new(2.5, 1.0, 1.1, phi.clone()).is_err());
        assert!(BvpParams::new(3.0, 0.0, 1.0, phi).is_ok());
    }

    #[test]
    fn paper_constants() {
        assert!((mu(&example41(2.0)) - 0.22703).abs() < 1e-5);
        assert!((mu(&example42()) - 0.0346236).abs() < 1e-7);
        assert!((beta_bound(2.5, 0.5, &PhiMap::sin_quarter_pi()) - 2.95903).abs() < 1e-5);
        assert!((beta_bound(2.5, 1.0 / 3.0, &PhiMap::sqrt_half()) - 5.60946).abs() < 1e-5);
    }

    #[test]
    fn identity_reductions() {
        for eta in [0.2, 0.7, 1.0] {
            let p = BvpParams::new(2.4, 0.0, eta, PhiMap::identity()).unwrap();
            assert_relative_eq!(mu(&p), 1.4, epsilon = 1e-15);
        }
        assert_relative_eq!(beta_bound(2.7, 1.0, &PhiMap::identity()), 1.7, epsilon = 1e-15);
    }

    #[test]
    fn zero_mu_is_rejected() {
        let p = BvpParams::new(3.0, 2.0, 1.0, PhiMap::identity()).unwrap();
        assert_eq!(mu(&p), 0.0);
        assert!(matches!(GreenKernel::new(p), Err(Error::Config(_))));
    }

    #[test]
    fn negative_mu_is_evaluable() {
        let k = GreenKernel::new(example41(3.5)).unwrap();
        assert!(k.mu() < 0.0);
        assert!(!k.positivity_hypothesis());
        assert!(k.green(0.5, 0.5).is_finite());
    }

    #[test]
    fn vanishing_rows_and_columns() {
        for k in [GreenKernel::new(example41(2.0)).unwrap(), GreenKernel::new(example42()).unwrap()] {
            for s in [0.1, 0.4, 0.9] {
                assert_eq!(k.green(0.0, s), 0.0);
            }
            for t in [0.0, 0.3, 1.0] {
                assert_eq!(k.green(t, 1.0), 0.0);
            }
            assert_eq!(k.green_max_bound(1.0), 0.0);
        }
    }

    #[test]
    fn classical_spot_values() {
        let k = classical();
        assert_relative_eq!(k.mu(), 2.0, epsilon = 1e-15);
        assert_relative_eq!(k.green(0.5, 0.25), 0.0625, epsilon = 1e-15);
        assert_relative_eq!(k.green_max_bound(0.5), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn branch_selection_order() {
        assert_eq!(Branch::select(0.5, 0.5, 0.5), Branch::BelowBoth);
        assert_eq!(Branch::select(0.3, 0.3, 0.5), Branch::BelowBoth);
        assert_eq!(Branch::select(0.3, 0.5, 0.5), Branch::BetweenTAndEta);
        assert_eq!(Branch::select(0.8, 0.5, 0.5), Branch::BelowBoth);
        assert_eq!(Branch::select(0.8, 0.6, 0.5), Branch::BetweenEtaAndT);
        assert_eq!(Branch::select(0.8, 0.9, 0.5), Branch::AboveBoth);
        assert_eq!(Branch::select(0.2, 0.9, 0.5), Branch::AboveBoth);
    }

    #[test]
    fn properties_hold_for_examples() {
        for p in [example41(2.0), example42()] {
            let report = check_kernel_properties(&GreenKernel::new(p).unwrap(), 200);
            assert!(report.passed(), "{report:?}");
        }
    }

    #[test]
    fn properties_flag_large_beta() {
        let report = check_kernel_properties(&GreenKernel::new(example41(3.5)).unwrap(), 200);
        assert!(!report.hypothesis_holds);
        assert!(!report.positivity.passed);
        assert!(!report.passed());
    }
}
