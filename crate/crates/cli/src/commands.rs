//! The four commands. Each returns its exit code and writes human-readable
//! output to `out`; hard failures are returned as [`CliError`] (exit 1).

use std::io::Write;
use std::path::Path;

use fracbvp_core::calculus::GridFunction;
use fracbvp_core::green::{check_kernel_properties, GreenKernel};
use fracbvp_core::solver::{
    build_certificate, envelope_sup, picard_solve, sample_pairs, Certificate, CertificateMode, FDomain,
    GeraghtyFamilies, IntegralOperator, DEFAULT_SEED,
};
use serde::Serialize;

use crate::config::{Config, Mode};
use crate::output::{sidecar_path, write_atomic, CsvBuilder};
use crate::report::{certificate_table, kernel_table, solve_summary, tag, Provenance, ReportBundle, VERSION};
use crate::{exit, CliError};

/// Number of sampled pairs for the Geraghty and admissibility checks.
pub const SAMPLE_PAIRS: usize = 50;
/// Interior grid used for the kernel property checks in `check`.
pub const KERNEL_CHECK_GRID: usize = 200;
/// Agreement required by `verify-paper`.
pub const VERIFY_TOLERANCE: f64 = 1e-4;
pub const SEED_VAR: &str = "FRACBVP_SEED";

pub const EXAMPLE41_CFG: &str = include_str!("../configs/example41.cfg");
pub const EXAMPLE42_CFG: &str = include_str!("../configs/example42.cfg");

/// Command-line overrides of the `[solver]` section.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
}

/// Reads the sample-suite seed from `FRACBVP_SEED`, defaulting to a fixed constant.
pub fn seed_from_env() -> Result<u64, CliError> {
    match std::env::var(SEED_VAR) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{SEED_VAR}: expected an unsigned integer, got `{s}`"))),
        Err(std::env::VarError::NotPresent) => Ok(DEFAULT_SEED),
        Err(e) => Err(CliError::Config(format!("{SEED_VAR}: {e}"))),
    }
}

pub fn load(path: &Path, overrides: Overrides) -> Result<Config, CliError> {
    let mut config = Config::from_file(path)?;
    config.override_with(overrides.grid, overrides.tol, overrides.max_iter)?;
    Ok(config)
}

/// The certificate evaluated for a configuration. `solve-only` runs the
/// strongest certificate the inputs allow, for information only.
fn certificate_mode(config: &Config, spec_has_g: bool) -> Option<CertificateMode> {
    match config.mode {
        Mode::Uniqueness => Some(CertificateMode::Uniqueness),
        Mode::PositiveExistence => Some(CertificateMode::PositiveExistence),
        Mode::SolveOnly if spec_has_g => Some(CertificateMode::Uniqueness),
        Mode::SolveOnly if config.f.domain == FDomain::Nonnegative => Some(CertificateMode::PositiveExistence),
        Mode::SolveOnly => None,
    }
}

struct Prepared {
    op: IntegralOperator,
    certificate: Option<Certificate>,
    provenance: Provenance,
}

fn prepare(config: Config, command: &str) -> Result<Prepared, CliError> {
    let seed = seed_from_env()?;
    let spec = config.problem_spec()?;
    let op = IntegralOperator::new(spec, config.grid()?)?;
    let mode = certificate_mode(&config, op.spec().g.is_some());
    let mut sample_count = 0;
    let certificate = match mode {
        Some(CertificateMode::Uniqueness) => Some(build_certificate(&op, CertificateMode::Uniqueness, None, None)?),
        Some(CertificateMode::PositiveExistence) => {
            let samples = sample_pairs(op.grid(), SAMPLE_PAIRS, seed);
            sample_count = samples.len();
            let families = GeraghtyFamilies::default();
            Some(build_certificate(&op, CertificateMode::PositiveExistence, Some(&families), Some(&samples))?)
        }
        None => None,
    };
    let provenance = Provenance {
        tool: "fracbvp",
        version: VERSION,
        command: command.to_string(),
        grid: op.grid().describe(),
        config,
        seed,
        sample_pairs: sample_count,
    };
    Ok(Prepared { op, certificate, provenance })
}

fn certificate_exit(config: &Config, cert: Option<&Certificate>) -> u8 {
    match (config.mode, cert) {
        (Mode::SolveOnly, _) => exit::SUCCESS,
        (_, Some(c)) if c.passed() => exit::SUCCESS,
        _ => exit::CERTIFICATE,
    }
}

fn io(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|source| CliError::Io { path: "<stdout>".into(), source })
}

/// `check <cfg>`: certificate table and kernel property checks.
pub fn check(path: &Path, overrides: Overrides, json: bool, out: &mut dyn Write) -> Result<u8, CliError> {
    let config = load(path, overrides)?;
    let prepared = prepare(config, "check")?;
    let kernel_checks = check_kernel_properties(prepared.op.kernel(), KERNEL_CHECK_GRID);
    let code = certificate_exit(&prepared.provenance.config, prepared.certificate.as_ref());
    let bundle = ReportBundle {
        certificate: prepared.certificate,
        solve: None,
        kernel_checks: Some(kernel_checks),
        provenance: prepared.provenance,
    };
    if json {
        io(out, &bundle.to_json())?;
    } else {
        let mut text =
            format!("config: {}\nrequested mode: {}\n\n", path.display(), bundle.provenance.config.mode.name());
        match &bundle.certificate {
            Some(c) => text.push_str(&certificate_table(c)),
            None => text.push_str("no certificate applies (no envelope g and f is not restricted to u >= 0)\n"),
        }
        text.push('\n');
        text.push_str(&kernel_table(bundle.kernel_checks.as_ref().unwrap()));
        io(out, &text)?;
    }
    Ok(code)
}

/// `solve <cfg> -o <csv>`: Picard iteration from `u0 = 0`. The CSV and its
/// sidecar report are written even when the run fails to converge.
pub fn solve(
    path: &Path,
    output: &Path,
    overrides: Overrides,
    json: bool,
    out: &mut dyn Write,
) -> Result<u8, CliError> {
    let config = load(path, overrides)?;
    let prepared = prepare(config, "solve")?;
    let config = &prepared.provenance.config;
    let op = &prepared.op;
    let u0 = GridFunction::zeros(op.grid().clone());
    let report = picard_solve(op, &u0, config.tol, config.max_iter, prepared.certificate.as_ref())?;

    let mut csv = CsvBuilder::new();
    csv.comment(format!("fracbvp {VERSION} solve"));
    csv.comment(format!("config: {}", serde_json::to_string(config).expect("config serializes")));
    csv.comment(format!("grid: {}", prepared.provenance.grid));
    csv.comment(format!("f: {}", op.spec().f.name()));
    csv.comment(format!("mu: {}", op.kernel().mu()));
    csv.comment(format!("beta_bound: {}", op.kernel().beta_bound()));
    if let Some(c) = &prepared.certificate {
        csv.comment(format!("certificate: {} ({})", c.verdict, tag(&c.mode)));
    }
    csv.comment(format!(
        "converged: {}, iterations: {}, label: {}",
        report.converged,
        report.iterations,
        tag(&report.label)
    ));
    csv.header(&["t", "u"]);
    for (t, u) in op.grid().nodes().iter().zip(report.solution.values()) {
        csv.row(&[*t, *u]);
    }
    write_atomic(output, csv.finish().as_bytes())?;

    let code =
        if !report.converged { exit::NOT_CONVERGED } else { certificate_exit(config, prepared.certificate.as_ref()) };
    let summary = solve_summary(&report);
    let bundle = ReportBundle {
        certificate: prepared.certificate,
        solve: Some(report),
        kernel_checks: None,
        provenance: prepared.provenance,
    };
    let json_text = bundle.to_json();
    write_atomic(&sidecar_path(output), json_text.as_bytes())?;
    if json {
        io(out, &json_text)?;
    } else {
        let mut text = summary;
        if let Some(c) = &bundle.certificate {
            text.push_str(&format!("certificate          {}\n", c.verdict));
        }
        text.push_str(&format!("wrote {} and {}\n", output.display(), sidecar_path(output).display()));
        io(out, &text)?;
    }
    Ok(code)
}

/// `green <cfg> -o <csv> --resolution N`: `G` on the uniform grid
/// `t_i = i/(N−1)`, `s_j = j/(N−1)`.
pub fn green(path: &Path, output: &Path, resolution: usize, out: &mut dyn Write) -> Result<u8, CliError> {
    if resolution < 2 {
        return Err(CliError::Config(format!("--resolution: must be at least 2, got {resolution}")));
    }
    let config = Config::from_file(path)?;
    let kernel = GreenKernel::new(config.params()?)?;
    let mut csv = CsvBuilder::new();
    csv.comment(format!("fracbvp {VERSION} green"));
    csv.comment(format!(
        "alpha: {}, beta: {}, eta: {}, phi: {}",
        config.alpha, config.beta, config.eta, config.phi.kind
    ));
    csv.comment(format!("mu: {}", kernel.mu()));
    csv.comment(format!("beta_bound: {}", kernel.beta_bound()));
    csv.comment(format!("resolution: {resolution}"));
    csv.header(&["t", "s", "G"]);
    let step = |i: usize| i as f64 / (resolution - 1) as f64;
    for i in 0..resolution {
        for j in 0..resolution {
            let (t, s) = (step(i), step(j));
            csv.row(&[t, s, kernel.green(t, s)]);
        }
    }
    write_atomic(output, csv.finish().as_bytes())?;
    io(out, &format!("wrote {} ({} rows)\n", output.display(), resolution * resolution))?;
    Ok(exit::SUCCESS)
}

/// One recomputed published constant.
#[derive(Debug, Clone, Serialize)]
pub struct Constant {
    pub example: &'static str,
    pub name: &'static str,
    pub computed: f64,
    pub reference: f64,
    pub abs_diff: f64,
    pub within_tolerance: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verification {
    pub tolerance: f64,
    pub constants: Vec<Constant>,
    pub passed: bool,
}

/// Recomputes the six constants of the two bundled examples.
pub fn verification() -> Result<Verification, CliError> {
    let ex41 = Config::from_str(EXAMPLE41_CFG, None)?;
    let k41 = GreenKernel::new(ex41.params()?)?;
    let ex42 = Config::from_str(EXAMPLE42_CFG, None)?;
    let op42 = IntegralOperator::new(ex42.problem_spec()?, ex42.grid()?)?;
    let cert42 = build_certificate(&op42, CertificateMode::Uniqueness, None, None)?;
    let g = op42.spec().g.as_ref().expect("example42 has an envelope");

    let entry = |example, name, computed: f64, reference: f64| {
        let abs_diff = (computed - reference).abs();
        Constant { example, name, computed, reference, abs_diff, within_tolerance: abs_diff <= VERIFY_TOLERANCE }
    };
    let constants = vec![
        entry("example41", "beta_bound", k41.beta_bound(), 2.95903),
        entry("example41", "mu", k41.mu(), 0.22703),
        entry("example42", "beta_bound", op42.kernel().beta_bound(), 5.60946),
        entry("example42", "mu", op42.kernel().mu(), 0.0346236),
        entry("example42", "g_sup", envelope_sup(g, op42.grid()), 0.895984),
        entry("example42", "threshold", cert42.uniqueness_threshold, 1.95333),
    ];
    let passed = constants.iter().all(|c| c.within_tolerance);
    Ok(Verification { tolerance: VERIFY_TOLERANCE, constants, passed })
}

/// `verify-paper [--json]`: exit 0 iff every constant is within tolerance.
pub fn verify_paper(json: bool, out: &mut dyn Write) -> Result<u8, CliError> {
    let v = verification()?;
    let text = if json {
        let mut s = serde_json::to_string_pretty(&v).expect("verification serializes");
        s.push('\n');
        s
    } else {
        let mut s = format!(
            "{:<10} {:<11} {:>22} {:>11} {:>10}  ok\n",
            "example", "constant", "computed", "reference", "|diff|"
        );
        for c in &v.constants {
            s.push_str(&format!(
                "{:<10} {:<11} {:>22} {:>11} {:>10.3e}  {}\n",
                c.example,
                c.name,
                c.computed,
                c.reference,
                c.abs_diff,
                if c.within_tolerance { "yes" } else { "NO" }
            ));
        }
        s.push_str(&format!(
            "{} of {} within {:e}\n",
            v.constants.iter().filter(|c| c.within_tolerance).count(),
            v.constants.len(),
            v.tolerance
        ));
        s
    };
    io(out, &text)?;
    Ok(if v.passed { exit::SUCCESS } else { exit::CERTIFICATE })
}
