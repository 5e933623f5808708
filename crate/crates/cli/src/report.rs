//! Structured reports and their plain-text rendering.

use std::fmt::Write;

use fracbvp_core::green::KernelPropertyReport;
use fracbvp_core::solver::{Certificate, SolveReport};
use serde::Serialize;

use crate::config::Config;
use crate::output::fmt_f64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Everything needed to re-run a command bit-identically.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: Config,
    pub grid: String,
    /// Seed and size of the sampled pair suite (positive-existence mode).
    pub seed: u64,
    pub sample_pairs: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportBundle {
    pub certificate: Option<Certificate>,
    pub solve: Option<SolveReport>,
    pub kernel_checks: Option<KernelPropertyReport>,
    pub provenance: Provenance,
}

impl ReportBundle {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

/// The serde name of a unit enum variant, e.g. `positive-existence`.
pub fn tag<T: Serialize>(x: &T) -> String {
    serde_json::to_value(x).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), fmt_f64)
}

/// Key/value table of the certificate followed by the hypothesis list.
pub fn certificate_table(cert: &Certificate) -> String {
    let mut out = String::new();
    let rows = [
        ("mode", tag(&cert.mode)),
        ("alpha", fmt_f64(cert.alpha)),
        ("beta", fmt_f64(cert.beta)),
        ("eta", fmt_f64(cert.eta)),
        ("mu", fmt_f64(cert.mu)),
        ("beta_bound", fmt_f64(cert.beta_bound)),
        ("gamma(alpha)", fmt_f64(cert.gamma_alpha)),
        ("Phi(1)", fmt_f64(cert.phi_one)),
        ("phi'(1)", fmt_f64(cert.dphi_one)),
        ("g_sup", opt(cert.g_sup)),
        ("threshold", fmt_f64(cert.uniqueness_threshold)),
        ("lambda", opt(cert.lambda)),
    ];
    for (k, v) in rows {
        let _ = writeln!(out, "{k:<14} {v}");
    }
    let _ = writeln!(out, "\nhypotheses:");
    for h in &cert.hypotheses {
        let _ = writeln!(out, "  [{:<13}] {:<30} {}", tag(&h.status), h.name, h.detail);
    }
    let _ = writeln!(out, "\nverdict: {}", cert.verdict);
    out
}

pub fn kernel_table(k: &KernelPropertyReport) -> String {
    let mark = |b: bool| if b { "ok" } else { "FAIL" };
    let mut out = String::new();
    let _ = writeln!(out, "kernel checks on the {0}x{0} interior grid:", k.gridsize);
    let _ = writeln!(out, "  beta < beta_bound   {}", mark(k.hypothesis_holds));
    let _ =
        writeln!(out, "  positivity          {:<4} min G = {}", mark(k.positivity.passed), fmt_f64(k.positivity.worst));
    let _ = writeln!(
        out,
        "  seam continuity     {:<4} max relative jump = {}",
        mark(k.seam_continuity.passed),
        fmt_f64(k.seam_continuity.worst)
    );
    let _ = writeln!(
        out,
        "  max bound           {:<4} max excess = {}",
        mark(k.dominance.passed),
        fmt_f64(k.dominance.worst)
    );
    out
}

pub fn solve_summary(r: &SolveReport) -> String {
    let mut out = String::new();
    let label = tag(&r.label);
    let _ = writeln!(out, "converged            {}", r.converged);
    let _ = writeln!(out, "label                {label}");
    let _ = writeln!(out, "iterations           {}", r.iterations);
    let _ = writeln!(out, "final step distance  {}", fmt_f64(r.final_step_distance));
    let _ = writeln!(out, "fixed-point residual {}", fmt_f64(r.fixed_point_residual));
    let _ = writeln!(out, "|u(0)|               {}", fmt_f64(r.boundary.u0));
    let _ = writeln!(out, "|u'(0)|              {}", fmt_f64(r.boundary.du0));
    let _ = writeln!(out, "|u'(1) - beta u(eta)| {}", fmt_f64(r.boundary.three_point));
    if let Some(last) = r.observed_ratios.last() {
        let _ = writeln!(out, "last step ratio      {}", fmt_f64(*last));
    }
    out
}
