//! Problem configuration files.
//!
//! A configuration is a TOML document with the sections `[problem]`,
//! `[phi]`, `[f]`, an optional `[g]` and an optional `[solver]`:
//!
//! ```toml
//! [problem]
//! alpha = 2.5
//! beta = 4
//! eta = "1/3"            # numbers may also be constant expressions
//!
//! [phi]
//! kind = "sqrt_half"     # identity | sin_quarter_pi | sqrt_half | table
//! # table = "phi.csv"    # two columns t, phi(t); relative to this file
//!
//! [f]
//! kind = "example42"     # example41 | example42 | zero | custom
//! # expr = "..."         # custom: expression in t and u
//! # scale = 1
//! # domain = "real"      # real | nonnegative
//!
//! [g]                    # optional Lipschitz envelope, same shape (expr in t)
//! kind = "example42"
//!
//! [solver]
//! grid_size = 1024
//! tol = 1e-16
//! max_iter = 500
//! mode = "uniqueness"    # uniqueness | positive-existence | solve-only
//! ```
//!
//! Every diagnostic names the offending key as `section.key`.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use fracbvp_core::calculus::{QuadratureGrid, DEFAULT_GRID_SIZE};
use fracbvp_core::green::{BvpParams, GreenKernel};
use fracbvp_core::solver::{
    example42_envelope, example42_nonlinearity, linear_example_coefficient, Envelope, FDomain, Nonlinearity,
    ProblemSpec, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use fracbvp_core::special::{PhiKind, PhiMap};
use serde::Serialize;
use toml::{Table, Value};

use crate::expr::Expr;
use crate::CliError;

/// Smallest accepted `solver.grid_size`.
pub const MIN_GRID_SIZE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Uniqueness,
    PositiveExistence,
    SolveOnly,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Uniqueness => "uniqueness",
            Mode::PositiveExistence => "positive-existence",
            Mode::SolveOnly => "solve-only",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Example41,
    Example42,
    Zero,
    Custom,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhiConfig {
    pub kind: PhiKind,
    pub table: Option<PathBuf>,
    #[serde(skip)]
    samples: Option<(Vec<f64>, Vec<f64>)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SourceConfig {
    pub kind: SourceKind,
    pub expr: Option<String>,
    pub scale: f64,
    #[serde(serialize_with = "serialize_domain")]
    pub domain: FDomain,
    #[serde(skip)]
    parsed: Option<Expr>,
}

fn serialize_domain<S: serde::Serializer>(d: &FDomain, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(match d {
        FDomain::Real => "real",
        FDomain::Nonnegative => "nonnegative",
    })
}

/// A validated configuration.
#[derive(Debug, Clone, Serialize)]
pub struct Config {
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    pub phi: PhiConfig,
    pub f: SourceConfig,
    pub g: Option<SourceConfig>,
    pub grid_size: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub mode: Mode,
}

fn key_error(key: &str, message: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {message}"))
}

fn check_keys(section: &str, table: &Table, allowed: &[&str]) -> Result<(), CliError> {
    match table.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => {
            Err(key_error(&format!("{section}.{k}"), format!("unknown key (expected one of: {})", allowed.join(", "))))
        }
        None => Ok(()),
    }
}

fn section<'a>(root: &'a Table, name: &str, required: bool) -> Result<Option<&'a Table>, CliError> {
    match root.get(name) {
        Some(Value::Table(t)) => Ok(Some(t)),
        Some(_) => Err(key_error(name, "must be a section")),
        None if required => Err(key_error(name, "missing section")),
        None => Ok(None),
    }
}

fn number(table: &Table, section: &str, key: &str) -> Result<Option<f64>, CliError> {
    let full = format!("{section}.{key}");
    let x = match table.get(key) {
        None => return Ok(None),
        Some(Value::Float(x)) => *x,
        Some(Value::Integer(i)) => *i as f64,
        Some(Value::String(s)) => {
            let e = Expr::parse(s).map_err(|e| key_error(&full, e))?;
            if e.uses_u() || e.eval(f64::NAN, f64::NAN).is_nan() {
                return Err(key_error(&full, format!("`{s}` is not a constant expression")));
            }
            e.eval(0.0, 0.0)
        }
        Some(other) => return Err(key_error(&full, format!("expected a number, found {}", other.type_str()))),
    };
    if !x.is_finite() {
        return Err(key_error(&full, format!("must be finite, got {x}")));
    }
    Ok(Some(x))
}

fn required_number(table: &Table, section: &str, key: &str) -> Result<f64, CliError> {
    number(table, section, key)?.ok_or_else(|| key_error(&format!("{section}.{key}"), "missing key"))
}

fn string<'a>(table: &'a Table, section: &str, key: &str) -> Result<Option<&'a str>, CliError> {
    match table.get(key) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(other) => {
            Err(key_error(&format!("{section}.{key}"), format!("expected a string, found {}", other.type_str())))
        }
    }
}

fn count(table: &Table, section: &str, key: &str) -> Result<Option<usize>, CliError> {
    match table.get(key) {
        None => Ok(None),
        Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as usize)),
        Some(other) => {
            Err(key_error(&format!("{section}.{key}"), format!("expected a non-negative integer, found {other}")))
        }
    }
}

fn parse_source(table: &Table, section: &str, envelope: bool) -> Result<SourceConfig, CliError> {
    check_keys(
        section,
        table,
        if envelope { &["kind", "expr", "scale"] } else { &["kind", "expr", "scale", "domain"] },
    )?;
    let kind_key = format!("{section}.kind");
    let kind = match string(table, section, "kind")? {
        Some("example41") => SourceKind::Example41,
        Some("example42") => SourceKind::Example42,
        Some("zero") => SourceKind::Zero,
        Some("custom") => SourceKind::Custom,
        Some(other) => {
            return Err(key_error(
                &kind_key,
                format!("unknown kind `{other}` (expected example41, example42, zero or custom)"),
            ))
        }
        None => return Err(key_error(&kind_key, "missing key")),
    };
    let expr_key = format!("{section}.expr");
    let expr = string(table, section, "expr")?.map(str::to_string);
    let parsed = match (&expr, kind) {
        (Some(src), SourceKind::Custom) => {
            let e = Expr::parse(src).map_err(|e| key_error(&expr_key, e))?;
            if envelope && e.uses_u() {
                return Err(key_error(&expr_key, "the envelope may depend on t only"));
            }
            Some(e)
        }
        (None, SourceKind::Custom) => return Err(key_error(&expr_key, "required when kind = \"custom\"")),
        (Some(_), _) => return Err(key_error(&expr_key, "only allowed when kind = \"custom\"")),
        (None, _) => None,
    };
    let scale = number(table, section, "scale")?.unwrap_or(1.0);
    let domain = match string(table, section, "domain")? {
        Some("real") => FDomain::Real,
        Some("nonnegative") => FDomain::Nonnegative,
        Some(other) => {
            return Err(key_error(
                &format!("{section}.domain"),
                format!("unknown domain `{other}` (expected real or nonnegative)"),
            ))
        }
        None if kind == SourceKind::Example41 => FDomain::Nonnegative,
        None => FDomain::Real,
    };
    Ok(SourceConfig { kind, expr, scale, domain, parsed })
}

/// Reads `t, phi(t)` pairs: one pair per line, separated by a comma or
/// whitespace; `#` starts a comment and a non-numeric first line is a header.
pub fn read_phi_table(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let (mut ts, mut ys) = (Vec::new(), Vec::new());
    let mut seen_data = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        let parsed: Option<Vec<f64>> = fields.iter().map(|s| s.parse().ok()).collect();
        match parsed {
            Some(v) if v.len() == 2 => {
                ts.push(v[0]);
                ys.push(v[1]);
                seen_data = true;
            }
            None if !seen_data => continue,
            _ => {
                return Err(key_error(
                    "phi.table",
                    format!("{}:{}: expected two numbers, found `{line}`", path.display(), lineno + 1),
                ))
            }
        }
    }
    Ok((ts, ys))
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Config, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        Config::from_str(&text, path.parent())
    }

    /// Parses a configuration; relative table paths resolve against `base`.
    pub fn from_str(text: &str, base: Option<&Path>) -> Result<Config, CliError> {
        let root: Table =
            text.parse().map_err(|e: toml::de::Error| CliError::Config(format!("malformed configuration: {e}")))?;
        check_keys("config", &root, &["problem", "phi", "f", "g", "solver"]).map_err(|_| {
            let k = root.keys().find(|k| !["problem", "phi", "f", "g", "solver"].contains(&k.as_str())).unwrap();
            key_error(k, "unknown section (expected problem, phi, f, g, solver)")
        })?;

        let problem = section(&root, "problem", true)?.unwrap();
        check_keys("problem", problem, &["alpha", "beta", "eta"])?;
        let alpha = required_number(problem, "problem", "alpha")?;
        let beta = required_number(problem, "problem", "beta")?;
        let eta = required_number(problem, "problem", "eta")?;
        if !(alpha > 2.0 && alpha <= 3.0) {
            return Err(key_error("problem.alpha", format!("must satisfy 2 < alpha <= 3, got {alpha}")));
        }
        if beta < 0.0 {
            return Err(key_error("problem.beta", format!("must be >= 0, got {beta}")));
        }
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(key_error("problem.eta", format!("must satisfy 0 < eta <= 1, got {eta}")));
        }

        let phi_sec = section(&root, "phi", true)?.unwrap();
        check_keys("phi", phi_sec, &["kind", "table"])?;
        let kind = match string(phi_sec, "phi", "kind")? {
            Some("identity") => PhiKind::Identity,
            Some("sin_quarter_pi") => PhiKind::SinQuarterPi,
            Some("sqrt_half") => PhiKind::SqrtHalf,
            Some("table") => PhiKind::Table,
            Some(other) => {
                return Err(key_error(
                    "phi.kind",
                    format!("unknown kind `{other}` (expected identity, sin_quarter_pi, sqrt_half or table)"),
                ))
            }
            None => return Err(key_error("phi.kind", "missing key")),
        };
        let table = string(phi_sec, "phi", "table")?.map(PathBuf::from);
        let samples = match (kind, &table) {
            (PhiKind::Table, Some(p)) => {
                let resolved = match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.clone(),
                };
                Some(read_phi_table(&resolved)?)
            }
            (PhiKind::Table, None) => return Err(key_error("phi.table", "required when kind = \"table\"")),
            (_, Some(_)) => return Err(key_error("phi.table", "only allowed when kind = \"table\"")),
            (_, None) => None,
        };
        let phi = PhiConfig { kind, table, samples };
        phi.map()?;

        let f = parse_source(section(&root, "f", true)?.unwrap(), "f", false)?;
        let g = section(&root, "g", false)?.map(|t| parse_source(t, "g", true)).transpose()?;

        let (mut grid_size, mut tol, mut max_iter, mut mode) = (DEFAULT_GRID_SIZE, DEFAULT_TOL, DEFAULT_MAX_ITER, None);
        if let Some(s) = section(&root, "solver", false)? {
            check_keys("solver", s, &["grid_size", "tol", "max_iter", "mode"])?;
            grid_size = count(s, "solver", "grid_size")?.unwrap_or(grid_size);
            tol = number(s, "solver", "tol")?.unwrap_or(tol);
            max_iter = count(s, "solver", "max_iter")?.unwrap_or(max_iter);
            mode = match string(s, "solver", "mode")? {
                Some("uniqueness") => Some(Mode::Uniqueness),
                Some("positive-existence") => Some(Mode::PositiveExistence),
                Some("solve-only") => Some(Mode::SolveOnly),
                Some(other) => {
                    return Err(key_error(
                        "solver.mode",
                        format!("unknown mode `{other}` (expected uniqueness, positive-existence or solve-only)"),
                    ))
                }
                None => None,
            };
        }
        let mode = mode.unwrap_or(Mode::SolveOnly);
        let config = Config { alpha, beta, eta, phi, f, g, grid_size, tol, max_iter, mode };
        config.check_solver("solver.grid_size", "solver.tol", "solver.max_iter")?;
        config.check_mode()?;
        Ok(config)
    }

    /// Applies command-line overrides; diagnostics name the flag.
    pub fn override_with(
        &mut self,
        grid: Option<usize>,
        tol: Option<f64>,
        max_iter: Option<usize>,
    ) -> Result<(), CliError> {
        self.grid_size = grid.unwrap_or(self.grid_size);
        self.tol = tol.unwrap_or(self.tol);
        self.max_iter = max_iter.unwrap_or(self.max_iter);
        self.check_solver("--grid", "--tol", "--max-iter")
    }

    fn check_solver(&self, grid_key: &str, tol_key: &str, iter_key: &str) -> Result<(), CliError> {
        if self.grid_size < MIN_GRID_SIZE || !self.grid_size.is_multiple_of(2) {
            return Err(key_error(
                grid_key,
                format!("must be an even count >= {MIN_GRID_SIZE}, got {}", self.grid_size),
            ));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(key_error(tol_key, format!("must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(key_error(iter_key, "must be at least 1"));
        }
        Ok(())
    }

    fn check_mode(&self) -> Result<(), CliError> {
        match self.mode {
            Mode::Uniqueness if self.envelope_source().is_none() => {
                Err(key_error("solver.mode", "uniqueness needs a Lipschitz envelope: add a [g] section"))
            }
            Mode::PositiveExistence if self.f.domain != FDomain::Nonnegative => {
                Err(key_error("f.domain", "must be \"nonnegative\" when solver.mode = \"positive-existence\""))
            }
            _ => Ok(()),
        }
    }

    // The envelope: `[g]` when present, otherwise the built-in envelope of
    // an example right-hand side.
    fn envelope_source(&self) -> Option<SourceConfig> {
        if let Some(g) = &self.g {
            return Some(g.clone());
        }
        match self.f.kind {
            SourceKind::Example41 | SourceKind::Example42 => {
                Some(SourceConfig { scale: self.f.scale.abs(), expr: None, parsed: None, ..self.f.clone() })
            }
            _ => None,
        }
    }

    pub fn phi_map(&self) -> Result<PhiMap, CliError> {
        self.phi.map()
    }

    pub fn params(&self) -> Result<BvpParams, CliError> {
        Ok(BvpParams::new(self.alpha, self.beta, self.eta, self.phi_map()?)?)
    }

    /// The problem as understood by the solver library.
    pub fn problem_spec(&self) -> Result<ProblemSpec, CliError> {
        let params = self.params()?;
        // The example-4.1 coefficient depends on μ, so the kernel is needed
        // (and μ = 0 is reported) before f can be built.
        let kernel = GreenKernel::new(params.clone())?;
        let linear = linear_example_coefficient(&kernel);

        let fs = &self.f;
        let scale = fs.scale;
        let f = match fs.kind {
            SourceKind::Example41 => {
                Nonlinearity::new(format!("{} * u", scale * linear), move |_, u| scale * linear * u)
            }
            SourceKind::Example42 => {
                let base = example42_nonlinearity();
                Nonlinearity::new(format!("{scale} * ({})", base.name()), move |t, u| scale * base.eval(t, u))
            }
            SourceKind::Zero => Nonlinearity::zero(),
            SourceKind::Custom => {
                let e = fs.parsed.clone().expect("custom sources are parsed");
                Nonlinearity::new(format!("{scale} * ({e})"), move |t, u| scale * e.eval(t, u))
            }
        };
        let g = self.envelope_source().map(|gs| {
            let scale = gs.scale;
            match gs.kind {
                SourceKind::Example41 => Envelope::new(format!("{}", scale * linear), move |_| scale * linear),
                SourceKind::Example42 => {
                    let base = example42_envelope();
                    Envelope::new(format!("{scale} * ({})", base.name()), move |t| scale * base.eval(t))
                }
                SourceKind::Zero => Envelope::new("0", |_| 0.0),
                SourceKind::Custom => {
                    let e = gs.parsed.clone().expect("custom sources are parsed");
                    Envelope::new(format!("{scale} * ({e})"), move |t| scale * e.eval(t, 0.0))
                }
            }
        });
        Ok(ProblemSpec { params, f, g, f_domain: fs.domain })
    }

    pub fn grid(&self) -> Result<Arc<QuadratureGrid>, CliError> {
        Ok(QuadratureGrid::graded(self.phi_map()?, self.grid_size)?)
    }
}

impl PhiConfig {
    fn map(&self) -> Result<PhiMap, CliError> {
        let table = self.samples.as_ref().map(|(t, y)| (t.as_slice(), y.as_slice()));
        PhiMap::catalog(self.kind, table).map_err(|e| match self.kind {
            PhiKind::Table => key_error("phi.table", e),
            _ => key_error("phi.kind", e),
        })
    }
}
