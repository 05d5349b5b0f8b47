use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use isa_core::instances::{DESK_M, DESK_SUPPORT};
use isa_core::linalg::distance;
use isa_core::{
    default_start, generate_instance, harmonic_pair_schedule, solve_dynamic, solve_predetermined,
    AccuracyMode, AffineCgProjector, AffineExactProjector, BasisPursuitBound, BpInstance, DistanceBoundProvider,
    DynamicConfig, EpsSubgradientOracle, GammaSchedule, InexactProjector, KnownOptimum, L1Norm,
    PredeterminedSchedule, Sequence, SolveResult, SolveStatus, StoppingConfig,
};
use serde::Serialize;

use crate::config::{DistanceBoundChoice, Problem, ProjectorKind, RunConfig, Variant};
use crate::error::{CliError, Result};
use crate::output::{to_json, trace_csv, write_file, Summary};

pub const SMALL_M: usize = 16;
pub const SMALL_SUPPORT: usize = 2;

pub fn cmd_generate(m: usize, support: usize, seed: u64, out: &Path) -> Result<BpInstance> {
    let inst = generate_instance(m, support, seed)?;
    write_file(out, &inst.to_text())?;
    Ok(inst)
}

pub fn load_instance(path: &Path) -> Result<BpInstance> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(BpInstance::from_text(&text)?)
}

pub fn load_problem(problem: &Problem, seed: u64) -> Result<BpInstance> {
    match problem {
        Problem::Desk => Ok(generate_instance(DESK_M, DESK_SUPPORT, seed)?),
        Problem::Small => Ok(generate_instance(SMALL_M, SMALL_SUPPORT, seed)?),
        Problem::File(p) => load_instance(p),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub m: usize,
    pub n: usize,
    pub sigma_min: f64,
    pub erc_value: Option<f64>,
    pub certified: bool,
    pub planted_feas_inf: Option<f64>,
    pub max_column_norm_error: f64,
}

pub fn cmd_check(path: &Path) -> Result<CheckReport> {
    let inst = load_instance(path)?;
    let a = inst.matrix();
    let max_column_norm_error = (0..a.cols())
        .map(|j| (a.column_norm(j) - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(CheckReport {
        m: inst.m(),
        n: inst.n(),
        sigma_min: inst.sigma_min(),
        erc_value: inst.erc_value,
        certified: inst.certified(),
        planted_feas_inf: inst.x_star.as_ref().map(|x| inst.set.feasibility_violation(x)),
        max_column_norm_error,
    })
}

fn projector(inst: &BpInstance, kind: ProjectorKind) -> Arc<dyn InexactProjector> {
    match kind {
        ProjectorKind::Cg => Arc::new(AffineCgProjector::new(inst.set.clone())),
        ProjectorKind::Exact => Arc::new(AffineExactProjector::new(inst.set.clone())),
    }
}

fn distance_provider(inst: &BpInstance, choice: DistanceBoundChoice, phi: f64) -> Option<Arc<dyn DistanceBoundProvider>> {
    match choice {
        DistanceBoundChoice::None => None,
        DistanceBoundChoice::Exact => inst
            .x_star
            .clone()
            .map(|x| Arc::new(KnownOptimum::new(x)) as Arc<dyn DistanceBoundProvider>),
        DistanceBoundChoice::BasisPursuit => Some(Arc::new(BasisPursuitBound {
            set: inst.set.clone(),
            phi,
        })),
    }
}

/// Solves the configured problem, returning the result and elapsed seconds.
pub fn execute(cfg: &RunConfig, inst: &BpInstance) -> Result<(SolveResult, f64)> {
    let proj = projector(inst, cfg.projector);
    let x0 = default_start(inst.matrix(), inst.rhs())?;
    let default_choice = if inst.x_star.is_some() {
        DistanceBoundChoice::Exact
    } else {
        DistanceBoundChoice::BasisPursuit
    };
    let choice = cfg.distance_bound.unwrap_or(default_choice);
    let phi = cfg.dynamic.phi;
    let monitor = distance_provider(inst, choice, phi.min(inst.f_star().unwrap_or(phi)));
    let monitor_ref = monitor.as_deref();

    let start = Instant::now();
    let result = match cfg.variant {
        Variant::Predetermined => {
            let p = &cfg.predetermined;
            let sched: Arc<dyn PredeterminedSchedule> =
                Arc::new(harmonic_pair_schedule(p.step_scale, p.accuracy_scale)?);
            if p.eps_subgradient {
                let gamma = GammaSchedule::ProportionalToAccuracy {
                    mu: p.gamma_mu,
                    schedule: sched.clone(),
                };
                let oracle = EpsSubgradientOracle::new(L1Norm, gamma, cfg.seed)?;
                solve_predetermined(&oracle, proj.as_ref(), sched.as_ref(), &x0, &cfg.stopping, monitor_ref)?
            } else {
                solve_predetermined(&L1Norm, proj.as_ref(), sched.as_ref(), &x0, &cfg.stopping, monitor_ref)?
            }
        }
        Variant::Dynamic => {
            let d = &cfg.dynamic;
            let mut dc = DynamicConfig::new(phi, d.lambda.sup(), d.accuracy);
            dc.lambda = d.lambda;
            dc.beta = d.beta.unwrap_or(d.lambda.sup());
            dc.nu = d.nu;
            if matches!(d.accuracy, AccuracyMode::TheoremOver | AccuracyMode::TheoremUnder { .. }) {
                let theorem_choice = match cfg.distance_bound {
                    Some(DistanceBoundChoice::None) | None => default_choice,
                    Some(c) => c,
                };
                dc.distance_bound = distance_provider(inst, theorem_choice, phi);
            }
            solve_dynamic(&L1Norm, proj.as_ref(), &dc, &x0, &cfg.stopping, monitor_ref)?
        }
    };
    Ok((result, start.elapsed().as_secs_f64()))
}

pub struct RunOutcome {
    pub result: SolveResult,
    pub summary: Summary,
    pub trace_path: PathBuf,
    pub summary_path: PathBuf,
}

/// Runs a configuration and writes its trace and summary. With `out_dir`
/// the files go to `out_dir/trace.csv` and `out_dir/summary.json`.
pub fn cmd_run(cfg: &RunConfig, out_dir: Option<&Path>) -> Result<RunOutcome> {
    let inst = load_problem(&cfg.problem, cfg.seed)?;
    let (result, secs) = execute(cfg, &inst)?;
    let (trace_path, summary_path) = match out_dir {
        Some(d) => (d.join("trace.csv"), d.join("summary.json")),
        None => (cfg.trace_path.clone(), cfg.summary_path.clone()),
    };
    let summary = Summary::new(&result, cfg.timing.then_some(secs), cfg.echo.clone());
    write_file(&trace_path, &trace_csv(&result.trace))?;
    write_file(&summary_path, &to_json(&summary))?;
    if result.status == SolveStatus::NumericalBreakdown {
        return Err(CliError::Breakdown(
            result.message.clone().unwrap_or_else(|| "non-finite values".into()),
        ));
    }
    Ok(RunOutcome {
        result,
        summary,
        trace_path,
        summary_path,
    })
}

pub const FIGURE2_INEXACT: AccuracyMode = AccuracyMode::FixedIterations(2);
pub const FIGURE2_ACCURATE: AccuracyMode = AccuracyMode::FixedTolerance(1e-12);

#[derive(Clone, Debug)]
pub struct Figure2Params {
    pub lambda: Sequence,
    pub max_iterations: usize,
    pub timing: bool,
    pub concurrent: bool,
}

impl Default for Figure2Params {
    fn default() -> Self {
        Figure2Params {
            lambda: Sequence::Constant(1.0),
            max_iterations: 20_000,
            timing: false,
            concurrent: true,
        }
    }
}

pub struct Figure2Run {
    pub accuracy: AccuracyMode,
    pub result: SolveResult,
    pub seconds: f64,
}

pub struct Figure2Outcome {
    pub f_star: f64,
    pub inexact: Figure2Run,
    pub accurate: Figure2Run,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunStats {
    pub accuracy: String,
    pub status: String,
    pub iterations: usize,
    pub wall_seconds: Option<f64>,
    pub initial_feas_inf: f64,
    /// Largest violation over the projected iterates, `k ≥ 1`.
    pub peak_feas_inf: f64,
    pub final_feas_inf: f64,
    pub min_dist_opt: Option<f64>,
    pub final_dist_opt: Option<f64>,
    pub min_f: f64,
    pub undershoots_optimum: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    pub f_star: f64,
    pub phi: f64,
    pub lambda: String,
    pub max_iterations: usize,
    pub inexact: RunStats,
    pub accurate: RunStats,
    pub peak_feas_ratio: f64,
}

impl Figure2Run {
    pub fn stats(&self, f_star: f64, timing: bool) -> RunStats {
        let trace = &self.result.trace;
        let dists = trace.iter().filter_map(|r| r.dist_opt);
        let min_f = self.result.min_f();
        RunStats {
            accuracy: self.accuracy.to_string(),
            status: self.result.status.to_string(),
            iterations: self.result.iterations,
            wall_seconds: timing.then_some(self.seconds),
            initial_feas_inf: trace.first().map_or(f64::NAN, |r| r.feasibility_inf),
            peak_feas_inf: self.result.peak_feasibility(1),
            final_feas_inf: self.result.final_feas_inf,
            min_dist_opt: dists.clone().reduce(f64::min),
            final_dist_opt: trace.last().and_then(|r| r.dist_opt),
            min_f,
            undershoots_optimum: min_f < f_star,
        }
    }
}

impl Figure2Outcome {
    pub fn comparison(&self, params: &Figure2Params) -> Comparison {
        let inexact = self.inexact.stats(self.f_star, params.timing);
        let accurate = self.accurate.stats(self.f_star, params.timing);
        Comparison {
            f_star: self.f_star,
            phi: 0.0,
            lambda: params.lambda.to_string(),
            max_iterations: params.max_iterations,
            peak_feas_ratio: inexact.peak_feas_inf / accurate.peak_feas_inf,
            inexact,
            accurate,
        }
    }
}

/// One dynamic run with `φ = 0` on a planted instance, tracking the exact
/// distance to `x*`.
pub fn figure2_run(inst: &BpInstance, accuracy: AccuracyMode, params: &Figure2Params) -> Result<Figure2Run> {
    let x_star = inst
        .x_star
        .clone()
        .ok_or_else(|| CliError::Usage("figure2 needs an instance with a planted solution".into()))?;
    let proj = AffineCgProjector::new(inst.set.clone());
    let x0 = default_start(inst.matrix(), inst.rhs())?;
    let mut cfg = DynamicConfig::new(0.0, params.lambda.sup(), accuracy);
    cfg.lambda = params.lambda;
    let stop = StoppingConfig {
        max_iterations: params.max_iterations,
        ..Default::default()
    };
    let monitor = KnownOptimum::new(x_star);
    let start = Instant::now();
    let result = solve_dynamic(&L1Norm, &proj, &cfg, &x0, &stop, Some(&monitor))?;
    Ok(Figure2Run {
        accuracy,
        result,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Runs the two-iteration CG variant against the high-accuracy variant with
/// otherwise identical parameters.
pub fn figure2(inst: &BpInstance, params: &Figure2Params) -> Result<Figure2Outcome> {
    let f_star = inst
        .f_star()
        .ok_or_else(|| CliError::Usage("figure2 needs an instance with a planted solution".into()))?;
    let (inexact, accurate) = if params.concurrent {
        std::thread::scope(|s| {
            let a = s.spawn(|| figure2_run(inst, FIGURE2_INEXACT, params));
            let b = s.spawn(|| figure2_run(inst, FIGURE2_ACCURATE, params));
            (
                a.join().expect("inexact run panicked"),
                b.join().expect("accurate run panicked"),
            )
        })
    } else {
        (
            figure2_run(inst, FIGURE2_INEXACT, params),
            figure2_run(inst, FIGURE2_ACCURATE, params),
        )
    };
    Ok(Figure2Outcome {
        f_star,
        inexact: inexact?,
        accurate: accurate?,
    })
}

pub fn cmd_figure2(inst: &BpInstance, params: &Figure2Params, out_dir: &Path) -> Result<Figure2Outcome> {
    let outcome = figure2(inst, params)?;
    write_file(&out_dir.join("inexact.csv"), &trace_csv(&outcome.inexact.result.trace))?;
    write_file(&out_dir.join("accurate.csv"), &trace_csv(&outcome.accurate.result.trace))?;
    write_file(&out_dir.join("comparison.json"), &to_json(&outcome.comparison(params)))?;
    for run in [&outcome.inexact, &outcome.accurate] {
        if run.result.status == SolveStatus::NumericalBreakdown {
            return Err(CliError::Breakdown(run.result.message.clone().unwrap_or_default()));
        }
    }
    Ok(outcome)
}

/// Distance from the final iterate to the planted solution.
pub fn final_distance(inst: &BpInstance, result: &SolveResult) -> Option<f64> {
    inst.x_star.as_ref().map(|x| distance(x, &result.final_x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure2_concurrent_matches_sequential() {
        let inst = generate_instance(16, 2, 4).unwrap();
        let mut params = Figure2Params {
            max_iterations: 300,
            ..Default::default()
        };
        let par = figure2(&inst, &params).unwrap();
        params.concurrent = false;
        let seq = figure2(&inst, &params).unwrap();
        assert_eq!(trace_csv(&par.inexact.result.trace), trace_csv(&seq.inexact.result.trace));
        assert_eq!(trace_csv(&par.accurate.result.trace), trace_csv(&seq.accurate.result.trace));
        assert_eq!(to_json(&par.comparison(&params)), to_json(&seq.comparison(&params)));
    }

    #[test]
    fn figure2_needs_planted_solution() {
        let inst = generate_instance(8, 1, 2).unwrap();
        let bare = BpInstance::new(inst.matrix().clone(), inst.rhs().to_vec(), None).unwrap();
        let err = figure2(&bare, &Figure2Params::default()).err().unwrap();
        assert_eq!(err.exit_code(), crate::error::EXIT_USAGE);
    }

    #[test]
    fn exact_accuracy_run_echoes_zero_eps() {
        let cfg = RunConfig::parse("problem = small\nvariant = dynamic\naccuracy = fixed_eps:0\nmax_iterations = 50").unwrap();
        let inst = load_problem(&cfg.problem, cfg.seed).unwrap();
        let (res, _) = execute(&cfg, &inst).unwrap();
        assert!(res.trace.iter().all(|r| r.eps_requested == 0.0));
    }

    #[test]
    fn predetermined_small_run() {
        let cfg = RunConfig::parse(
            "problem = small\nvariant = predetermined\nmax_iterations = 5000\neps_subgradient = true",
        )
        .unwrap();
        let inst = load_problem(&cfg.problem, cfg.seed).unwrap();
        let (res, _) = execute(&cfg, &inst).unwrap();
        let f_star = inst.f_star().unwrap();
        assert!((res.final_f - f_star).abs() / f_star < 0.05);
    }
}
