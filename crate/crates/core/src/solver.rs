//! The integral operator `A u(t) = ∫₀¹ G(t,s) φ'(s) f(s, u(s)) ds`, existence
//! and uniqueness certificates, and Picard iteration.
//!
//! Fixed points of `A` are exactly the solutions of the boundary value
//! problem. The operator is discretised by the Gauss rule of the grid
//! (Nyström), so `A u` can be evaluated at any `t`, not only at grid nodes.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bmetric::{
    admissibility_check, check_psi, check_theta, contraction_certificate, distance, family_sample_points,
    geraghty_inequality_check, AdmissibilityVerdict, ContractionVerdict, FamilyCheck, GeraghtyVerdict, PsiFunction,
    TauRelation, ThetaFunction, SOLVER_R,
};
use crate::calculus::{GridFunction, QuadratureGrid};
use crate::error::{Error, Result};
use crate::green::{BvpParams, GreenKernel};

/// Default stopping tolerance on the squared sup distance (1e-8 in sup norm).
pub const DEFAULT_TOL: f64 = 1e-16;
pub const DEFAULT_MAX_ITER: usize = 500;
/// Seed of the random sample suite when none is given.
pub const DEFAULT_SEED: u64 = 20_240_917;
/// Spacing of the one-sided stencils used for boundary derivatives.
pub const BOUNDARY_STEP: f64 = 1e-3;

/// The right-hand side `f(t, u)`.
#[derive(Clone)]
pub struct Nonlinearity {
    name: String,
    f: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

impl Nonlinearity {
    pub fn new(name: impl Into<String>, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Nonlinearity { name: name.into(), f: Arc::new(f) }
    }

    pub fn zero() -> Self {
        Self::new("0", |_, _| 0.0)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, t: f64, u: f64) -> f64 {
        (self.f)(t, u)
    }
}

/// A Lipschitz envelope `g` with `|f(t,u) − f(t,v)| ≤ g(t)|u − v|`.
#[derive(Clone)]
pub struct Envelope {
    name: String,
    g: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl Envelope {
    pub fn new(name: impl Into<String>, g: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Envelope { name: name.into(), g: Arc::new(g) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.g)(t)
    }
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Nonlinearity({})", self.name)
    }
}

impl fmt::Debug for Envelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Envelope({})", self.name)
    }
}

/// Domain of the second argument of `f`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FDomain {
    Real,
    Nonnegative,
}

/// Coefficient of the linear right-hand side used with θ(t) = (1+t²)/(6+4t²):
/// `μΓ(α) / (16√2 φ'(1) Φ(1)^{α−1})`.
pub fn linear_example_coefficient(kernel: &GreenKernel) -> f64 {
    let p = kernel.params();
    kernel.mu() * kernel.gamma_alpha() / (16.0 * SQRT_2 * p.phi.deriv(1.0) * kernel.phi_one().powf(p.alpha - 1.0))
}

/// `f(t,u) = tan(πt/3) cos²(u)/10 − e^{t/2} |u| / (3(1 + |u|))`.
pub fn example42_nonlinearity() -> Nonlinearity {
    Nonlinearity::new("tan(pi t/3) cos^2(u)/10 - exp(t/2)|u|/(3(1+|u|))", |t, u| {
        0.1 * (PI * t / 3.0).tan() * u.cos().powi(2) - (t / 2.0).exp() * u.abs() / (3.0 * (1.0 + u.abs()))
    })
}

/// `g(t) = tan(πt/3)/5 + e^{t/2}/3`.
pub fn example42_envelope() -> Envelope {
    Envelope::new("tan(pi t/3)/5 + exp(t/2)/3", |t| 0.2 * (PI * t / 3.0).tan() + (t / 2.0).exp() / 3.0)
}

/// Full problem statement.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub params: BvpParams,
    pub f: Nonlinearity,
    pub g: Option<Envelope>,
    pub f_domain: FDomain,
}

/// Result of sampling the hypotheses on `f` and `g`.
#[derive(Debug, Clone, Serialize)]
pub struct SpecValidation {
    pub samples: usize,
    /// `|f(t,u) − f(t,v)| ≤ g(t)|u − v|` on all samples; `None` without `g`.
    pub lipschitz: Option<bool>,
    /// `f ≥ 0` on `[0,1] × [0, ∞)` samples.
    pub f_nonnegative: bool,
}

const VALIDATION_U: [f64; 13] = [-10.0, -3.0, -1.0, -0.3, -0.1, -1e-3, 0.0, 1e-3, 0.1, 0.3, 1.0, 3.0, 10.0];

impl ProblemSpec {
    /// α = 5/2, φ(t) = sin(πt/4), β = 2, η = 1/2, f linear in `u`.
    pub fn example41() -> Result<Self> {
        let params = BvpParams::new(2.5, 2.0, 0.5, crate::special::PhiMap::sin_quarter_pi())?;
        let c = linear_example_coefficient(&GreenKernel::new(params.clone())?);
        Ok(ProblemSpec {
            params,
            f: Nonlinearity::new(format!("{c:e} * u"), move |_, u| c * u),
            g: Some(Envelope::new(format!("{c:e}"), move |_| c)),
            f_domain: FDomain::Nonnegative,
        })
    }

    /// α = 5/2, φ(t) = √(1+t)/2, β = 4, η = 1/3.
    pub fn example42() -> Result<Self> {
        let params = BvpParams::new(2.5, 4.0, 1.0 / 3.0, crate::special::PhiMap::sqrt_half())?;
        Ok(ProblemSpec { params, f: example42_nonlinearity(), g: Some(example42_envelope()), f_domain: FDomain::Real })
    }

    /// Samples `f` (and `g`) on `t = k/20` and a fixed set of `u` values.
    /// Non-finite values of `f` are a numeric error.
    pub fn validate(&self) -> Result<SpecValidation> {
        let ts: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
        let us: Vec<f64> = match self.f_domain {
            FDomain::Real => VALIDATION_U.to_vec(),
            FDomain::Nonnegative => VALIDATION_U.iter().copied().filter(|&u| u >= 0.0).collect(),
        };
        let mut lipschitz = self.g.as_ref().map(|_| true);
        let mut f_nonnegative = true;
        for &t in &ts {
            let gt = self.g.as_ref().map(|g| g.eval(t));
            if let Some(gt) = gt {
                if !gt.is_finite() || gt < 0.0 {
                    return Err(Error::Config(format!("g({t}) = {gt} must be finite and >= 0")));
                }
            }
            for &u in &us {
                let fu = self.f.eval(t, u);
                if !fu.is_finite() {
                    return Err(Error::Numeric(format!("f({t}, {u}) = {fu}")));
                }
                if u >= 0.0 && fu < 0.0 {
                    f_nonnegative = false;
                }
                if let Some(gt) = gt {
                    for &v in &us {
                        let lhs = (fu - self.f.eval(t, v)).abs();
                        let rhs = gt * (u - v).abs();
                        if lhs > rhs * (1.0 + 1e-12) + 1e-15 {
                            lipschitz = Some(false);
                        }
                    }
                }
            }
        }
        Ok(SpecValidation { samples: ts.len() * us.len(), lipschitz, f_nonnegative })
    }
}

/// Nyström discretisation of `A` on a fixed grid.
pub struct IntegralOperator {
    spec: ProblemSpec,
    kernel: GreenKernel,
    grid: Arc<QuadratureGrid>,
    // Row-major `w_j G(s_i, s_j)`.
    matrix: Vec<f64>,
}

impl fmt::Debug for IntegralOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IntegralOperator").field("spec", &self.spec).field("nodes", &self.grid.len()).finish()
    }
}

impl IntegralOperator {
    pub fn new(spec: ProblemSpec, grid: Arc<QuadratureGrid>) -> Result<Self> {
        let kernel = GreenKernel::new(spec.params.clone())?;
        Self::with_kernel(spec, kernel, grid)
    }

    pub fn with_kernel(spec: ProblemSpec, kernel: GreenKernel, grid: Arc<QuadratureGrid>) -> Result<Self> {
        if grid.phi().kind() != spec.params.phi.kind() {
            return Err(Error::Config(format!(
                "grid built for phi = {} but the problem uses phi = {}",
                grid.phi().kind(),
                spec.params.phi.kind()
            )));
        }
        let n = grid.len();
        let mut matrix = vec![0.0; n * n];
        let (nodes, ys, ws) = (grid.nodes(), grid.y_nodes(), grid.weights());
        matrix.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for j in 0..n {
                row[j] = ws[j] * kernel.green_phi(nodes[i], ys[i], nodes[j], ys[j]);
            }
        });
        Ok(IntegralOperator { spec, kernel, grid, matrix })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn kernel(&self) -> &GreenKernel {
        &self.kernel
    }

    pub fn grid(&self) -> &Arc<QuadratureGrid> {
        &self.grid
    }

    /// `f(s_j, u_j)` at every node.
    fn source(&self, u: &GridFunction) -> Result<Vec<f64>> {
        if !u.is_on(&self.grid) {
            return Err(Error::GridMismatch("grid function is not on the operator grid".into()));
        }
        self.grid
            .nodes()
            .iter()
            .zip(u.values())
            .map(|(&s, &v)| {
                let h = self.spec.f.eval(s, v);
                if h.is_finite() {
                    Ok(h)
                } else {
                    Err(Error::Numeric(format!("f({s}, {v}) = {h}")))
                }
            })
            .collect()
    }

    /// `A u` at every grid node.
    pub fn apply(&self, u: &GridFunction) -> Result<GridFunction> {
        let h = self.source(u)?;
        let n = self.grid.len();
        let values = self.matrix.par_chunks(n).map(|row| row.iter().zip(&h).map(|(k, x)| k * x).sum()).collect();
        GridFunction::new(self.grid.clone(), values)
    }

    /// `A u (t)` for arbitrary `t ∈ [0, 1]`.
    pub fn eval_at(&self, u: &GridFunction, t: f64) -> Result<f64> {
        Ok(self.eval_many(u, &[t])?[0])
    }

    pub fn eval_many(&self, u: &GridFunction, ts: &[f64]) -> Result<Vec<f64>> {
        if let Some(&t) = ts.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::Domain(format!("t must lie in [0, 1], got {t}")));
        }
        let h = self.source(u)?;
        let phi = &self.spec.params.phi;
        let (nodes, ys, ws) = (self.grid.nodes(), self.grid.y_nodes(), self.grid.weights());
        Ok(ts
            .par_iter()
            .map(|&t| {
                let phi_t = phi.eval(t);
                (0..nodes.len()).map(|j| ws[j] * self.kernel.green_phi(t, phi_t, nodes[j], ys[j]) * h[j]).sum()
            })
            .collect())
    }
}

/// `A u` on the grid of `u`, building the discretisation on the fly.
pub fn apply_operator(spec: &ProblemSpec, kernel: &GreenKernel, u: &GridFunction) -> Result<GridFunction> {
    IntegralOperator::with_kernel(spec.clone(), kernel.clone(), u.grid().clone())?.apply(u)
}

/// Which theorem the certificate targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateMode {
    Uniqueness,
    PositiveExistence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    UniqueSolution,
    ExistsPositive,
    NoCertificate,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::UniqueSolution => "unique-solution",
            Verdict::ExistsPositive => "exists-positive",
            Verdict::NoCertificate => "no-certificate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HypothesisStatus {
    /// Verified by exact arithmetic on the computed constants.
    Holds,
    /// Verified on a finite sample only.
    SampledHolds,
    /// Follows from the construction (not checked numerically).
    Assumed,
    /// Not checkable and not implied by the construction.
    Unchecked,
    Fails,
}

impl HypothesisStatus {
    fn ok(self) -> bool {
        !matches!(self, HypothesisStatus::Fails)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub status: HypothesisStatus,
    pub detail: String,
}

/// ψ, θ and τ for the Geraghty certificate.
#[derive(Debug, Clone)]
pub struct GeraghtyFamilies {
    pub psi: PsiFunction,
    pub theta: ThetaFunction,
    pub tau: TauRelation,
}

impl Default for GeraghtyFamilies {
    fn default() -> Self {
        GeraghtyFamilies { psi: PsiFunction::identity(), theta: ThetaFunction::rational(), tau: TauRelation::product() }
    }
}

/// Machine-checked record of which hypotheses hold for one problem.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub mode: CertificateMode,
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    pub mu: f64,
    pub beta_bound: f64,
    pub gamma_alpha: f64,
    pub phi_one: f64,
    pub dphi_one: f64,
    /// `‖g‖∞` over grid nodes and both end points.
    pub g_sup: Option<f64>,
    /// `μΓ(α) / (√2 Φ(1)^{α−1} φ'(1))`.
    pub uniqueness_threshold: f64,
    /// `(‖g‖∞ φ'(1) Φ(1)^{α−1} / (μΓ(α)))²`.
    pub lambda: Option<f64>,
    pub contraction: Option<ContractionVerdict>,
    pub psi_family: Option<FamilyCheck>,
    pub theta_family: Option<FamilyCheck>,
    pub geraghty: Option<GeraghtyVerdict>,
    pub admissibility: Option<AdmissibilityVerdict>,
    pub hypotheses: Vec<Hypothesis>,
    pub verdict: Verdict,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.verdict != Verdict::NoCertificate
    }

    pub fn hypothesis(&self, name: &str) -> Option<&Hypothesis> {
        self.hypotheses.iter().find(|h| h.name == name)
    }
}

/// Names used in [`Certificate::hypotheses`].
pub mod hyp {
    pub const POSITIVITY: &str = "beta < beta_bound";
    pub const LIPSCHITZ: &str = "lipschitz envelope";
    pub const THRESHOLD: &str = "g_sup < threshold";
    pub const CONTRACTION: &str = "0 < lambda < 1/r";
    pub const NONNEGATIVE_F: &str = "f >= 0 on nonnegative range";
    pub const FAMILIES: &str = "psi and theta families";
    pub const GERAGHTY: &str = "geraghty inequality (sampled)";
    pub const ADMISSIBLE: &str = "gamma-admissible (sampled)";
    pub const WITNESS: &str = "tau(u0, A u0) >= 0 at u0 = 0";
    pub const CLOSURE: &str = "sequential closure of tau";
}

fn hypothesis(name: &str, status: HypothesisStatus, detail: impl Into<String>) -> Hypothesis {
    Hypothesis { name: name.into(), status, detail: detail.into() }
}

fn holds_if(ok: bool) -> HypothesisStatus {
    if ok {
        HypothesisStatus::Holds
    } else {
        HypothesisStatus::Fails
    }
}

fn sampled_if(ok: bool) -> HypothesisStatus {
    if ok {
        HypothesisStatus::SampledHolds
    } else {
        HypothesisStatus::Fails
    }
}

/// `max g` over the grid nodes and `t ∈ {0, 1}`.
pub fn envelope_sup(g: &Envelope, grid: &QuadratureGrid) -> f64 {
    grid.nodes().iter().copied().chain([0.0, 1.0]).map(|t| g.eval(t)).fold(f64::NEG_INFINITY, f64::max)
}

/// Evaluates the hypotheses of the requested theorem.
///
/// Uniqueness mode needs an envelope `g`; positive-existence mode needs
/// `families`, `samples` and `f_domain = Nonnegative`. Missing pieces are
/// configuration errors; failed hypotheses are recorded in the certificate.
pub fn build_certificate(
    op: &IntegralOperator,
    mode: CertificateMode,
    families: Option<&GeraghtyFamilies>,
    samples: Option<&[(GridFunction, GridFunction)]>,
) -> Result<Certificate> {
    let spec = op.spec();
    let kernel = op.kernel();
    let p = &spec.params;
    let validation = spec.validate()?;

    let gamma_alpha = kernel.gamma_alpha();
    let dphi_one = p.phi.deriv(1.0);
    let phi_pow = kernel.phi_one().powf(p.alpha - 1.0);
    let threshold = kernel.mu() * gamma_alpha / (SQRT_2 * phi_pow * dphi_one);

    let mut cert = Certificate {
        mode,
        alpha: p.alpha,
        beta: p.beta,
        eta: p.eta,
        mu: kernel.mu(),
        beta_bound: kernel.beta_bound(),
        gamma_alpha,
        phi_one: kernel.phi_one(),
        dphi_one,
        g_sup: None,
        uniqueness_threshold: threshold,
        lambda: None,
        contraction: None,
        psi_family: None,
        theta_family: None,
        geraghty: None,
        admissibility: None,
        hypotheses: Vec::new(),
        verdict: Verdict::NoCertificate,
    };
    cert.hypotheses.push(hypothesis(
        hyp::POSITIVITY,
        holds_if(kernel.positivity_hypothesis()),
        format!("beta = {}, beta_bound = {}, mu = {}", p.beta, cert.beta_bound, cert.mu),
    ));

    if let Some(g) = &spec.g {
        let g_sup = envelope_sup(g, op.grid());
        let lambda = (g_sup * dphi_one * phi_pow / (kernel.mu() * gamma_alpha)).powi(2);
        cert.g_sup = Some(g_sup);
        cert.lambda = Some(lambda);
        cert.contraction = Some(contraction_certificate(lambda, SOLVER_R));
    }

    match mode {
        CertificateMode::Uniqueness => {
            let (Some(g_sup), Some(contraction)) = (cert.g_sup, cert.contraction.clone()) else {
                return Err(Error::Config("uniqueness mode requires a Lipschitz envelope g".into()));
            };
            let lipschitz = validation.lipschitz.unwrap_or(false);
            cert.hypotheses.push(hypothesis(
                hyp::LIPSCHITZ,
                sampled_if(lipschitz),
                format!("|f(t,u)-f(t,v)| <= g(t)|u-v| on {} samples", validation.samples),
            ));
            let below = g_sup < threshold;
            cert.hypotheses.push(hypothesis(
                hyp::THRESHOLD,
                holds_if(below),
                format!("g_sup = {g_sup}, threshold = {threshold}"),
            ));
            cert.hypotheses.push(hypothesis(
                hyp::CONTRACTION,
                holds_if(contraction.passed),
                format!("lambda = {}, 1/r = {}", contraction.lambda, contraction.inverse_r),
            ));
            // The threshold inequality is λ < 1/2 rewritten; they can only
            // disagree through round-off at the boundary.
            debug_assert!(
                below == (contraction.lambda < 0.5) || (contraction.lambda - 0.5).abs() < 1e-12 || cert.mu <= 0.0
            );
        }
        CertificateMode::PositiveExistence => {
            let (Some(families), Some(samples)) = (families, samples) else {
                return Err(Error::Config(
                    "positive-existence mode requires psi/theta/tau families and a sample suite".into(),
                ));
            };
            if spec.f_domain != FDomain::Nonnegative {
                return Err(Error::Config(
                    "positive-existence mode requires f defined on the nonnegative range".into(),
                ));
            }
            cert.hypotheses.push(hypothesis(
                hyp::NONNEGATIVE_F,
                sampled_if(validation.f_nonnegative),
                format!("{} samples", validation.samples),
            ));

            let pts = family_sample_points();
            let psi_check = check_psi(&families.psi, &pts);
            let theta_check = check_theta(&families.theta, SOLVER_R, &pts);
            cert.hypotheses.push(hypothesis(
                hyp::FAMILIES,
                sampled_if(psi_check.passed && theta_check.passed),
                format!(
                    "psi = {}, theta = {}, max theta sample = {}",
                    families.psi.name(),
                    families.theta.name(),
                    theta_check.max_value
                ),
            ));
            cert.psi_family = Some(psi_check);
            cert.theta_family = Some(theta_check);

            let apply = |u: &GridFunction| op.apply(u);
            let geraghty =
                geraghty_inequality_check(apply, &families.psi, &families.theta, &families.tau, samples, SOLVER_R)?;
            cert.hypotheses.push(hypothesis(
                hyp::GERAGHTY,
                sampled_if(geraghty.holds && geraghty.related_pairs > 0),
                format!(
                    "{} of {} pairs related, worst margin {}",
                    geraghty.related_pairs, geraghty.pairs, geraghty.worst_margin
                ),
            ));
            cert.geraghty = Some(geraghty);

            let admissibility = admissibility_check(apply, &families.tau, samples)?;
            cert.hypotheses.push(hypothesis(
                hyp::ADMISSIBLE,
                sampled_if(admissibility.holds),
                format!("{} of {} pairs related", admissibility.related_pairs, admissibility.pairs),
            ));
            cert.admissibility = Some(admissibility);

            let u0 = GridFunction::zeros(op.grid().clone());
            let witness = families.tau.relates(&u0, &op.apply(&u0)?)?;
            cert.hypotheses.push(hypothesis(hyp::WITNESS, holds_if(witness), "checked at every node"));

            let closure = if families.tau.is_builtin_product() {
                hypothesis(hyp::CLOSURE, HypothesisStatus::Assumed, "tau = xy with nonnegative iterates")
            } else {
                hypothesis(hyp::CLOSURE, HypothesisStatus::Unchecked, "user-supplied tau")
            };
            cert.hypotheses.push(closure);
        }
    }

    if cert.hypotheses.iter().all(|h| h.status.ok()) {
        cert.verdict = match mode {
            CertificateMode::Uniqueness => Verdict::UniqueSolution,
            CertificateMode::PositiveExistence => Verdict::ExistsPositive,
        };
    }
    Ok(cert)
}

/// Deterministic suite of nonnegative, smooth sample pairs.
///
/// Each function is `a·(c₀ + c₁t + c₂t² + c₃ sin²(kπt))` with `cᵢ ∈ [0, 1)`,
/// `k ∈ {1, 2, 3}` and amplitude `a` log-uniform in `[1e-2, 1e1]`.
pub fn sample_pairs(grid: &Arc<QuadratureGrid>, count: usize, seed: u64) -> Vec<(GridFunction, GridFunction)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        let amp = 10f64.powf(rng.gen_range(-2.0..1.0));
        let c: [f64; 4] = [rng.gen(), rng.gen(), rng.gen(), rng.gen()];
        let k = rng.gen_range(1..=3) as f64;
        GridFunction::from_fn(grid.clone(), |t| {
            amp * (c[0] + c[1] * t + c[2] * t * t + c[3] * (k * PI * t).sin().powi(2))
        })
        .expect("sample functions are finite")
    };
    (0..count).map(|_| (draw(&mut rng), draw(&mut rng))).collect()
}

/// Boundary-condition defects of a candidate solution.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundaryResiduals {
    /// `|u(0)|`
    pub u0: f64,
    /// `|u'(0)|`
    pub du0: f64,
    /// `|u'(1) − βu(η)|`
    pub three_point: f64,
}

impl BoundaryResiduals {
    pub fn max(&self) -> f64 {
        self.u0.max(self.du0).max(self.three_point)
    }
}

/// `sup |Au − u|` and the boundary residuals.
///
/// `u(0)` is read from the grid interpolant of `u`. Derivatives use
/// one-sided five-point stencils (fourth order) with spacing
/// [`BOUNDARY_STEP`], and `u(η)` is evaluated the same way, all on values of
/// `A u` at off-grid points rather than on interpolated values of `u`.
pub fn residual_report(op: &IntegralOperator, u: &GridFunction) -> Result<(f64, BoundaryResiduals)> {
    let au = op.apply(u)?;
    let fixed_point = au.values().iter().zip(u.values()).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));

    let h = BOUNDARY_STEP;
    let eta = op.spec().params.eta;
    let mut ts: Vec<f64> = (0..5).map(|k| k as f64 * h).collect();
    ts.extend((0..5).map(|k| 1.0 - k as f64 * h));
    ts.push(eta);
    let v = op.eval_many(u, &ts)?;
    let du0 = (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * h);
    let du1 = (25.0 * v[5] - 48.0 * v[6] + 36.0 * v[7] - 16.0 * v[8] + 3.0 * v[9]) / (12.0 * h);
    let boundary = BoundaryResiduals {
        u0: u.interpolate(0.0).abs(),
        du0: du0.abs(),
        three_point: (du1 - op.spec().params.beta * v[10]).abs(),
    };
    Ok((fixed_point, boundary))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunLabel {
    Certified,
    BestEffort,
}

/// Outcome of a Picard run.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub solution: GridFunction,
    pub converged: bool,
    /// Index of the first iterate whose successor lies within `tol`
    /// (`max_iter` when the run did not converge).
    pub iterations: usize,
    pub label: RunLabel,
    pub tol: f64,
    /// `d(u_{n+1}, u_n)` of the last step.
    pub final_step_distance: f64,
    pub fixed_point_residual: f64,
    pub boundary: BoundaryResiduals,
    pub step_distances: Vec<f64>,
    /// `d(u_{n+1}, u_n) / d(u_n, u_{n−1})`.
    pub observed_ratios: Vec<f64>,
}

/// Iterates `u_{n+1} = A u_n` until `d(u_{n+1}, u_n) < tol` or `max_iter`
/// applications. `tol` is on the squared scale of the b-metric. The returned
/// solution is the last computed iterate.
pub fn picard_solve(
    op: &IntegralOperator,
    u0: &GridFunction,
    tol: f64,
    max_iter: usize,
    certificate: Option<&Certificate>,
) -> Result<SolveReport> {
    if !(tol > 0.0) {
        return Err(Error::Config(format!("tol must be positive, got {tol}")));
    }
    let mut current = u0.clone();
    let mut steps = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter {
        let next = op.apply(&current)?;
        let d = distance(&next, &current)?;
        steps.push(d);
        current = next;
        if d < tol {
            converged = true;
            break;
        }
    }
    let ratios = steps.windows(2).filter(|w| w[0] > 0.0).map(|w| w[1] / w[0]).collect();
    let (fixed_point_residual, boundary) = residual_report(op, &current)?;
    Ok(SolveReport {
        converged,
        iterations: if converged { steps.len() - 1 } else { max_iter },
        label: match certificate {
            Some(c) if c.passed() => RunLabel::Certified,
            _ => RunLabel::BestEffort,
        },
        tol,
        final_step_distance: steps.last().copied().unwrap_or(0.0),
        fixed_point_residual,
        boundary,
        step_distances: steps,
        observed_ratios: ratios,
        solution: current,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::PhiMap;

    fn op(spec: ProblemSpec, n: usize) -> IntegralOperator {
        let grid = QuadratureGrid::graded(spec.params.phi.clone(), n).unwrap();
        IntegralOperator::new(spec, grid).unwrap()
    }

    fn zero_spec() -> ProblemSpec {
        ProblemSpec { f: Nonlinearity::zero(), g: None, ..ProblemSpec::example42().unwrap() }
    }

    #[test]
    fn zero_rhs_gives_zero_image() {
        let a = op(zero_spec(), 64);
        let u = GridFunction::constant(a.grid().clone(), 1.0).unwrap();
        assert_eq!(a.apply(&u).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn zero_rhs_converges_in_one_step() {
        let a = op(zero_spec(), 64);
        let u = GridFunction::constant(a.grid().clone(), 1.0).unwrap();
        let report = picard_solve(&a, &u, 1e-16, 10, None).unwrap();
        assert!(report.converged);
        assert_eq!(report.iterations, 1);
        assert_eq!(report.solution.sup_norm(), 0.0);
        assert_eq!(report.label, RunLabel::BestEffort);
        assert_eq!(report.fixed_point_residual, 0.0);
        assert_eq!(report.boundary.max(), 0.0);
    }

    #[test]
    fn zero_is_fixed_for_linear_example() {
        let a = op(ProblemSpec::example41().unwrap(), 64);
        let zero = GridFunction::zeros(a.grid().clone());
        assert_eq!(a.apply(&zero).unwrap().sup_norm(), 0.0);
    }

    #[test]
    fn nonfinite_rhs_is_numeric_error() {
        let spec = ProblemSpec { f: Nonlinearity::new("1/u", |_, u| 1.0 / u), ..zero_spec() };
        let a = op(spec, 16);
        let zero = GridFunction::zeros(a.grid().clone());
        assert!(matches!(a.apply(&zero), Err(Error::Numeric(_))));
        assert!(matches!(picard_solve(&a, &zero, 1e-16, 5, None), Err(Error::Numeric(_))));
    }

    #[test]
    fn grid_phi_must_match() {
        let grid = QuadratureGrid::graded(PhiMap::identity(), 16).unwrap();
        assert!(IntegralOperator::new(ProblemSpec::example42().unwrap(), grid).is_err());
    }

    #[test]
    fn mode_preconditions() {
        let a = op(zero_spec(), 16);
        assert!(matches!(build_certificate(&a, CertificateMode::Uniqueness, None, None), Err(Error::Config(_))));
        let fam = GeraghtyFamilies::default();
        let samples = sample_pairs(a.grid(), 2, 1);
        assert!(matches!(
            build_certificate(&a, CertificateMode::PositiveExistence, Some(&fam), Some(&samples)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn example42_certificate() {
        let a = op(ProblemSpec::example42().unwrap(), 256);
        let cert = build_certificate(&a, CertificateMode::Uniqueness, None, None).unwrap();
        assert_eq!(cert.verdict, Verdict::UniqueSolution);
        assert!((cert.g_sup.unwrap() - 0.895984).abs() < 1e-6);
        assert!((cert.uniqueness_threshold - 1.95333).abs() < 1e-5);
        assert!((cert.lambda.unwrap() - 0.1052).abs() < 1e-4);
    }

    #[test]
    fn scaled_envelope_loses_certificate() {
        let base = example42_envelope();
        let spec = ProblemSpec {
            g: Some(Envelope::new("10 g", move |t| 10.0 * base.eval(t))),
            ..ProblemSpec::example42().unwrap()
        };
        let cert = build_certificate(&op(spec, 64), CertificateMode::Uniqueness, None, None).unwrap();
        assert_eq!(cert.verdict, Verdict::NoCertificate);
        assert_eq!(cert.hypothesis(hyp::THRESHOLD).unwrap().status, HypothesisStatus::Fails);
    }

    #[test]
    fn wrong_envelope_is_caught() {
        let spec = ProblemSpec { g: Some(Envelope::new("0.01", |_| 0.01)), ..ProblemSpec::example42().unwrap() };
        let cert = build_certificate(&op(spec, 64), CertificateMode::Uniqueness, None, None).unwrap();
        assert_eq!(cert.hypothesis(hyp::LIPSCHITZ).unwrap().status, HypothesisStatus::Fails);
        assert_eq!(cert.verdict, Verdict::NoCertificate);
    }

    #[test]
    fn sample_pairs_are_deterministic_and_nonnegative() {
        let grid = QuadratureGrid::graded(PhiMap::identity(), 32).unwrap();
        let a = sample_pairs(&grid, 5, 7);
        let b = sample_pairs(&grid, 5, 7);
        for ((u1, v1), (u2, v2)) in a.iter().zip(&b) {
            assert_eq!(u1.values(), u2.values());
            assert_eq!(v1.values(), v2.values());
            assert!(u1.values().iter().chain(v1.values()).all(|&x| x >= 0.0));
        }
        let c = sample_pairs(&grid, 5, 8);
        assert_ne!(a[0].0.values(), c[0].0.values());
    }
}
