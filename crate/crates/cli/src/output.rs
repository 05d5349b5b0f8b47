use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use isa_core::{SolveResult, TraceRecord};
use serde::Serialize;

use crate::error::{CliError, Result};

pub const CSV_HEADER: &str =
    "k,f_k,alpha_k,eps_requested,eps_certified,h_norm,inner_iters,feas_inf,dist_opt,exact_fallback";

/// One row per record; floats use the shortest round-trip form (exponent
/// notation for very small or large magnitudes), `inf` for
/// unbounded accuracies, and an empty field for a missing distance.
pub fn trace_csv(trace: &[TraceRecord]) -> String {
    let mut out = String::with_capacity(64 * (trace.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in trace {
        let _ = write!(
            out,
            "{},{:?},{:?},{:?},{:?},{:?},{},{:?},",
            r.k,
            r.f_k,
            r.alpha_k,
            r.eps_requested,
            r.eps_certified,
            r.h_norm,
            r.inner_iterations,
            r.feasibility_inf
        );
        if let Some(d) = r.dist_opt {
            let _ = write!(out, "{d:?}");
        }
        let _ = writeln!(out, ",{}", u8::from(r.exact_fallback));
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub status: String,
    pub iterations: usize,
    /// Only filled when timing is requested, so repeated runs stay
    /// byte-identical.
    pub wall_seconds: Option<f64>,
    pub final_f: Option<f64>,
    pub final_feas_inf: Option<f64>,
    pub best_feasible_f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub config: BTreeMap<String, String>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl Summary {
    pub fn new(result: &SolveResult, wall_seconds: Option<f64>, config: BTreeMap<String, String>) -> Self {
        Summary {
            status: result.status.to_string(),
            iterations: result.iterations,
            wall_seconds,
            final_f: finite(result.final_f),
            final_feas_inf: finite(result.final_feas_inf),
            best_feasible_f: result.best_feasible_f,
            message: result.message.clone(),
            config,
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("summary types serialize");
    s.push('\n');
    s
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}
