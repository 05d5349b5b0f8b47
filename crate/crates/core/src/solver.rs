//! The infeasible-point subgradient iterations.
//!
//! Trace record `k` describes the iterate `x^k` (objective, subgradient norm,
//! feasibility, distance to the optimum) together with the step and the
//! projection that produce `x^{k+1}`. The last record of a run describes the
//! final iterate; its step and accuracy fields are zero.

use std::fmt;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{all_finite, norm2};
use crate::oracles::SubgradientOracle;
use crate::projections::{Accuracy, InexactProjector, Projection};
use crate::schedules::{
    dynamic_step, eps_bar, eps_tilde, AccuracyMode, DistanceBoundProvider, DynamicConfig,
    PredeterminedSchedule,
};

/// Subgradients with `‖h‖₂` at or below this are treated as zero.
pub const ZERO_SUBGRADIENT: f64 = 1e-14;

/// Consecutive exact projections after zero subgradients at infeasible points
/// before the run is aborted.
pub const ZERO_SUBGRADIENT_REPEATS: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct StoppingConfig {
    pub max_iterations: usize,
    pub min_step: f64,
    pub feas_tolerance: f64,
    /// Stop after this many iterations without progress in either the best
    /// feasible objective or the smallest feasibility violation.
    pub stall_window: Option<usize>,
    /// Record every `trace_stride`-th iteration; the final one is always kept.
    pub trace_stride: usize,
}

impl Default for StoppingConfig {
    fn default() -> Self {
        StoppingConfig {
            max_iterations: 100_000,
            min_step: f64::EPSILON,
            feas_tolerance: 1e-9,
            stall_window: None,
            trace_stride: 1,
        }
    }
}

impl StoppingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_step >= 0.0) {
            return Err(Error::invalid(format!("min_step must be >= 0, got {}", self.min_step)));
        }
        if !(self.feas_tolerance >= 0.0) {
            return Err(Error::invalid(format!(
                "feas_tolerance must be >= 0, got {}",
                self.feas_tolerance
            )));
        }
        if self.trace_stride == 0 {
            return Err(Error::invalid("trace_stride must be >= 1"));
        }
        if self.stall_window == Some(0) {
            return Err(Error::invalid("stall_window must be >= 1 when set"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub k: usize,
    pub f_k: f64,
    pub alpha_k: f64,
    /// `+∞` for fixed-iteration projections.
    pub eps_requested: f64,
    pub eps_certified: f64,
    pub h_norm: f64,
    pub inner_iterations: usize,
    pub feasibility_inf: f64,
    pub dist_opt: Option<f64>,
    pub exact_fallback: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    MaxIterations,
    StepBelowThreshold,
    OptimalFeasibleZeroSubgrad,
    TargetReachedFeasible,
    /// No progress within the stall window.
    Stalled,
    /// Zero subgradients at infeasible points kept recurring after exact
    /// projections.
    ZeroSubgradientLoop,
    NumericalBreakdown,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::MaxIterations => "MaxIterations",
            SolveStatus::StepBelowThreshold => "StepBelowThreshold",
            SolveStatus::OptimalFeasibleZeroSubgrad => "OptimalFeasibleZeroSubgrad",
            SolveStatus::TargetReachedFeasible => "TargetReachedFeasible",
            SolveStatus::Stalled => "Stalled",
            SolveStatus::ZeroSubgradientLoop => "ZeroSubgradientLoop",
            SolveStatus::NumericalBreakdown => "NumericalBreakdown",
        }
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Last finite iterate.
    pub final_x: Vec<f64>,
    pub final_f: f64,
    pub final_feas_inf: f64,
    /// Number of steps taken.
    pub iterations: usize,
    pub trace: Vec<TraceRecord>,
    /// Smallest objective over iterates within the feasibility tolerance.
    pub best_feasible_f: Option<f64>,
    pub message: Option<String>,
}

impl SolveResult {
    pub fn min_f(&self) -> f64 {
        self.trace.iter().map(|r| r.f_k).fold(f64::INFINITY, f64::min)
    }

    pub fn peak_feasibility(&self, from_k: usize) -> f64 {
        self.trace
            .iter()
            .filter(|r| r.k >= from_k)
            .map(|r| r.feasibility_inf)
            .fold(0.0, f64::max)
    }
}

struct Progress {
    best_feasible_f: Option<f64>,
    best_feas: f64,
    since_progress: usize,
}

impl Progress {
    fn new() -> Self {
        Progress {
            best_feasible_f: None,
            best_feas: f64::INFINITY,
            since_progress: 0,
        }
    }

    fn update(&mut self, f: f64, feas: f64, tol: f64) {
        let mut improved = false;
        if feas <= tol {
            match self.best_feasible_f {
                Some(b) if f >= b - 1e-12 * b.abs().max(1.0) => {}
                _ => improved = true,
            }
            if self.best_feasible_f.is_none_or(|b| f < b) {
                self.best_feasible_f = Some(f);
            }
        }
        if feas < self.best_feas * (1.0 - 1e-12) {
            improved = true;
        }
        self.best_feas = self.best_feas.min(feas);
        if improved {
            self.since_progress = 0;
        } else {
            self.since_progress += 1;
        }
    }

    fn stalled(&self, window: Option<usize>) -> bool {
        window.is_some_and(|w| self.since_progress >= w)
    }
}

/// State shared by both loops: trace bookkeeping and result assembly.
struct Run<'a> {
    stop: &'a StoppingConfig,
    monitor: Option<&'a dyn DistanceBoundProvider>,
    trace: Vec<TraceRecord>,
    progress: Progress,
}

struct Point {
    f: f64,
    h: Vec<f64>,
    h_norm: f64,
    feas: f64,
}

impl<'a> Run<'a> {
    fn new(stop: &'a StoppingConfig, monitor: Option<&'a dyn DistanceBoundProvider>) -> Self {
        Run {
            stop,
            monitor,
            trace: Vec::new(),
            progress: Progress::new(),
        }
    }

    fn evaluate<O, P>(&mut self, oracle: &O, projector: &P, x: &[f64], k: usize) -> Option<Point>
    where
        O: SubgradientOracle + ?Sized,
        P: InexactProjector + ?Sized,
    {
        let f = oracle.value(x);
        let h = oracle.subgradient(x, k);
        if !f.is_finite() || !all_finite(&h) || h.len() != x.len() {
            return None;
        }
        let feas = projector.feasibility_violation(x);
        self.progress.update(f, feas, self.stop.feas_tolerance);
        let h_norm = norm2(&h);
        Some(Point { f, h, h_norm, feas })
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &mut self,
        k: usize,
        x: &[f64],
        pt: &Point,
        alpha: f64,
        eps_requested: f64,
        proj: Option<&Projection>,
        exact_fallback: bool,
        force: bool,
    ) {
        if !force && k % self.stop.trace_stride != 0 {
            return;
        }
        let dist_opt = self.monitor.map(|m| m.bound(x, pt.f, pt.h_norm));
        let (eps_certified, inner, fallback) = match proj {
            Some(p) => (
                p.certificate.certified_error_bound,
                p.certificate.inner_iterations,
                p.certificate.exact_fallback,
            ),
            None => (0.0, 0, false),
        };
        self.trace.push(TraceRecord {
            k,
            f_k: pt.f,
            alpha_k: alpha,
            eps_requested,
            eps_certified: if exact_fallback { 0.0 } else { eps_certified },
            h_norm: pt.h_norm,
            inner_iterations: inner,
            feasibility_inf: pt.feas,
            dist_opt,
            exact_fallback: exact_fallback || fallback,
        });
    }

    fn terminal(&mut self, k: usize, x: &[f64], pt: &Point) {
        self.record(k, x, pt, 0.0, 0.0, None, false, true);
    }

    fn finish(self, status: SolveStatus, x: Vec<f64>, pt: Option<&Point>, k: usize, message: Option<String>) -> SolveResult {
        let (final_f, final_feas_inf) = match pt {
            Some(p) => (p.f, p.feas),
            None => self
                .trace
                .last()
                .map(|r| (r.f_k, r.feasibility_inf))
                .unwrap_or((f64::NAN, f64::NAN)),
        };
        SolveResult {
            status,
            final_x: x,
            final_f,
            final_feas_inf,
            iterations: k,
            trace: self.trace,
            best_feasible_f: self.progress.best_feasible_f,
            message,
        }
    }
}

fn check_start<P: InexactProjector + ?Sized>(projector: &P, x0: &[f64], stop: &StoppingConfig) -> Result<()> {
    stop.validate()?;
    check_dim("starting point", projector.dim(), x0.len())?;
    if !all_finite(x0) {
        return Err(Error::invalid("starting point has non-finite entries"));
    }
    Ok(())
}

fn step_point(x: &[f64], alpha: f64, h: &[f64]) -> Vec<f64> {
    x.iter().zip(h).map(|(xi, hi)| xi - alpha * hi).collect()
}

enum ProjectOutcome {
    Done(Projection),
    Breakdown(String),
}

fn project<P: InexactProjector + ?Sized>(projector: &P, y: &[f64], accuracy: Accuracy) -> Result<ProjectOutcome> {
    match projector.project(y, accuracy) {
        Ok(p) if all_finite(&p.point) => Ok(ProjectOutcome::Done(p)),
        Ok(_) => Ok(ProjectOutcome::Breakdown("projection returned non-finite entries".into())),
        Err(Error::Breakdown { message, .. }) => Ok(ProjectOutcome::Breakdown(message)),
        Err(e) => Err(e),
    }
}

/// Predetermined step sizes and accuracies:
/// `x^{k+1} = P^{ε_k}(x^k − α_k h^k)`.
///
/// A zero subgradient is not taken as optimality; the zero step is still
/// followed by the inexact projection.
pub fn solve_predetermined<O, P, S>(
    oracle: &O,
    projector: &P,
    schedule: &S,
    x0: &[f64],
    stop: &StoppingConfig,
    monitor: Option<&dyn DistanceBoundProvider>,
) -> Result<SolveResult>
where
    O: SubgradientOracle + ?Sized,
    P: InexactProjector + ?Sized,
    S: PredeterminedSchedule + ?Sized,
{
    check_start(projector, x0, stop)?;
    let mut run = Run::new(stop, monitor);
    let mut x = x0.to_vec();
    for k in 0..=stop.max_iterations {
        let Some(pt) = run.evaluate(oracle, projector, &x, k) else {
            return Ok(run.finish(
                SolveStatus::NumericalBreakdown,
                x,
                None,
                k,
                Some(format!("non-finite objective or subgradient at iteration {k}")),
            ));
        };
        if k == stop.max_iterations {
            run.terminal(k, &x, &pt);
            return Ok(run.finish(SolveStatus::MaxIterations, x, Some(&pt), k, None));
        }
        if run.progress.stalled(stop.stall_window) {
            run.terminal(k, &x, &pt);
            return Ok(run.finish(SolveStatus::Stalled, x, Some(&pt), k, None));
        }
        let alpha = schedule.step(k);
        let eps = schedule.accuracy(k);
        if alpha < stop.min_step {
            run.terminal(k, &x, &pt);
            return Ok(run.finish(SolveStatus::StepBelowThreshold, x, Some(&pt), k, None));
        }
        let y = step_point(&x, alpha, &pt.h);
        match project(projector, &y, Accuracy::Tolerance(eps))? {
            ProjectOutcome::Done(p) => {
                run.record(k, &x, &pt, alpha, eps, Some(&p), false, false);
                x = p.point;
            }
            ProjectOutcome::Breakdown(msg) => {
                run.record(k, &x, &pt, alpha, eps, None, false, true);
                return Ok(run.finish(SolveStatus::NumericalBreakdown, x, Some(&pt), k, Some(msg)));
            }
        }
    }
    unreachable!("the loop returns at k = max_iterations")
}

/// Dynamic Polyak-type steps `α_k = λ_k (f(x^k) − φ)/‖h^k‖²` with a target
/// value `φ`.
///
/// Zero subgradients stop the run at feasible points and trigger an exact
/// projection otherwise. When an inexact projection lands at or below the
/// target, the same pre-image is projected exactly; if the target is still
/// reached the run stops at that feasible point.
pub fn solve_dynamic<O, P>(
    oracle: &O,
    projector: &P,
    config: &DynamicConfig,
    x0: &[f64],
    stop: &StoppingConfig,
    monitor: Option<&dyn DistanceBoundProvider>,
) -> Result<SolveResult>
where
    O: SubgradientOracle + ?Sized,
    P: InexactProjector + ?Sized,
{
    check_start(projector, x0, stop)?;
    config.validate()?;
    if !projector.supports_exact() {
        return Err(Error::invalid("the dynamic method needs a projector that supports exact projections"));
    }
    let phi = config.phi;
    let f0 = oracle.value(x0);
    if f0 < phi {
        return Err(Error::invalid(format!(
            "starting point has f(x0) = {f0} < phi = {phi}; the method needs f(x0) >= phi, so phi is too large and should be adjusted"
        )));
    }

    let mut run = Run::new(stop, monitor);
    let mut x = x0.to_vec();
    let mut zero_repeats = 0usize;
    for k in 0..=stop.max_iterations {
        let Some(pt) = run.evaluate(oracle, projector, &x, k) else {
            return Ok(run.finish(
                SolveStatus::NumericalBreakdown,
                x,
                None,
                k,
                Some(format!("non-finite objective or subgradient at iteration {k}")),
            ));
        };
        if k == stop.max_iterations {
            run.terminal(k, &x, &pt);
            return Ok(run.finish(SolveStatus::MaxIterations, x, Some(&pt), k, None));
        }
        if run.progress.stalled(stop.stall_window) {
            run.terminal(k, &x, &pt);
            return Ok(run.finish(SolveStatus::Stalled, x, Some(&pt), k, None));
        }

        if pt.h_norm <= ZERO_SUBGRADIENT {
            if pt.feas <= stop.feas_tolerance {
                run.terminal(k, &x, &pt);
                return Ok(run.finish(SolveStatus::OptimalFeasibleZeroSubgrad, x, Some(&pt), k, None));
            }
            zero_repeats += 1;
            if zero_repeats > ZERO_SUBGRADIENT_REPEATS {
                run.terminal(k, &x, &pt);
                return Ok(run.finish(
                    SolveStatus::ZeroSubgradientLoop,
                    x,
                    Some(&pt),
                    k,
                    Some(format!(
                        "{ZERO_SUBGRADIENT_REPEATS} consecutive exact projections did not remove the zero subgradient"
                    )),
                ));
            }
            match project(projector, &x, Accuracy::Tolerance(0.0))? {
                ProjectOutcome::Done(p) => {
                    run.record(k, &x, &pt, 0.0, 0.0, Some(&p), true, false);
                    x = p.point;
                }
                ProjectOutcome::Breakdown(msg) => {
                    run.record(k, &x, &pt, 0.0, 0.0, None, true, true);
                    return Ok(run.finish(SolveStatus::NumericalBreakdown, x, Some(&pt), k, Some(msg)));
                }
            }
            continue;
        }
        zero_repeats = 0;

        let lambda = config.lambda.at(k);
        let alpha = dynamic_step(pt.f, phi, lambda, pt.h_norm * pt.h_norm)?;
        if alpha < stop.min_step {
            run.terminal(k, &x, &pt);
            return Ok(run.finish(SolveStatus::StepBelowThreshold, x, Some(&pt), k, None));
        }
        debug_assert!(pt.f > phi);

        let accuracy = accuracy_for(config, k, &x, &pt, lambda)?;
        let eps_requested = match accuracy {
            Accuracy::Tolerance(e) => e,
            Accuracy::Iterations(_) => f64::INFINITY,
        };
        let y = step_point(&x, alpha, &pt.h);
        let mut proj = match project(projector, &y, accuracy)? {
            ProjectOutcome::Done(p) => p,
            ProjectOutcome::Breakdown(msg) => {
                run.record(k, &x, &pt, alpha, eps_requested, None, false, true);
                return Ok(run.finish(SolveStatus::NumericalBreakdown, x, Some(&pt), k, Some(msg)));
            }
        };
        let mut f_next = oracle.value(&proj.point);
        let mut redone = false;
        if f_next <= phi && !accuracy.is_exact() {
            proj = match project(projector, &y, Accuracy::Tolerance(0.0))? {
                ProjectOutcome::Done(p) => p,
                ProjectOutcome::Breakdown(msg) => {
                    run.record(k, &x, &pt, alpha, eps_requested, None, true, true);
                    return Ok(run.finish(SolveStatus::NumericalBreakdown, x, Some(&pt), k, Some(msg)));
                }
            };
            f_next = oracle.value(&proj.point);
            redone = true;
        }
        run.record(k, &x, &pt, alpha, eps_requested, Some(&proj), redone, f_next <= phi);
        x = proj.point;
        if f_next <= phi {
            let Some(pt) = run.evaluate(oracle, projector, &x, k + 1) else {
                return Ok(run.finish(
                    SolveStatus::NumericalBreakdown,
                    x,
                    None,
                    k + 1,
                    Some("non-finite objective at the terminal point".into()),
                ));
            };
            run.terminal(k + 1, &x, &pt);
            return Ok(run.finish(SolveStatus::TargetReachedFeasible, x, Some(&pt), k + 1, None));
        }
    }
    unreachable!("the loop returns at k = max_iterations")
}

fn accuracy_for(config: &DynamicConfig, k: usize, x: &[f64], pt: &Point, lambda: f64) -> Result<Accuracy> {
    let bound = |provider: &Option<std::sync::Arc<dyn DistanceBoundProvider>>| -> Result<f64> {
        let p = provider
            .as_ref()
            .ok_or_else(|| Error::invalid("theorem-driven accuracy needs a distance bound provider"))?;
        Ok(p.bound(x, pt.f, pt.h_norm))
    };
    Ok(match config.accuracy {
        AccuracyMode::FixedIterations(j) => Accuracy::Iterations(j),
        AccuracyMode::FixedTolerance(e) => Accuracy::Tolerance(e),
        AccuracyMode::TheoremOver => {
            let d = bound(&config.distance_bound)?;
            let e = if d.is_finite() {
                eps_bar(pt.f, config.phi, lambda, pt.h_norm, d)?
            } else {
                0.0
            };
            Accuracy::Tolerance(e.min(config.nu.at(k)))
        }
        AccuracyMode::TheoremUnder { f_star_hint } => {
            let d = bound(&config.distance_bound)?;
            let e = if d.is_finite() {
                let t = eps_tilde(pt.f, config.phi, f_star_hint, lambda, config.beta, pt.h_norm, d)?;
                if t.negative_discriminant {
                    0.0
                } else {
                    t.value
                }
            } else {
                0.0
            };
            Accuracy::Tolerance(e.min(config.nu.at(k)))
        }
    })
}

/// Lowers the target after a run stopped at a feasible point with
/// `f ≤ φ`: `φ′ = f − shrink·(f − φ)`, restarting from the final iterate.
pub fn restart_with_lower_phi(
    result: &SolveResult,
    config: &DynamicConfig,
    shrink: f64,
) -> Result<(DynamicConfig, Vec<f64>)> {
    if result.status != SolveStatus::TargetReachedFeasible {
        return Err(Error::invalid(format!(
            "restart needs a run that reached its target, got status {}",
            result.status
        )));
    }
    if !(shrink > 0.0 && shrink <= 1.0) {
        return Err(Error::invalid(format!("shrink must lie in (0, 1], got {shrink}")));
    }
    let f = result.final_f;
    let mut next = config.clone();
    next.phi = f - shrink * (f - config.phi);
    Ok((next, result.final_x.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::oracles::L1Norm;
    use crate::projections::{AffineExactProjector, AffineSet, BoxProjector};
    use crate::schedules::{harmonic_pair_schedule, KnownOptimum};
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn point_set() -> AffineExactProjector {
        AffineExactProjector::new(Arc::new(AffineSet::new(DenseMatrix::identity(1), vec![0.0]).unwrap()))
    }

    #[test]
    fn one_dimensional_predetermined_run_converges() {
        let proj = point_set();
        let sched = harmonic_pair_schedule(1.0, 1.0).unwrap();
        let stop = StoppingConfig {
            max_iterations: 10_000,
            ..Default::default()
        };
        let res = solve_predetermined(&L1Norm, &proj, &sched, &[5.0], &stop, None).unwrap();
        assert_eq!(res.status, SolveStatus::MaxIterations);
        assert!(res.final_x[0].abs() <= 0.01);
        assert_eq!(res.trace.len(), 10_001);
    }

    #[test]
    fn exact_projection_onto_a_point_lands_immediately() {
        let proj = point_set();
        let sched = harmonic_pair_schedule(1.0, 0.0).unwrap();
        let stop = StoppingConfig {
            max_iterations: 5,
            ..Default::default()
        };
        let res = solve_predetermined(&L1Norm, &proj, &sched, &[5.0], &stop, None).unwrap();
        assert!(res.trace[1..].iter().all(|r| r.f_k == 0.0));
        assert_eq!(res.final_x, vec![0.0]);
    }

    #[test]
    fn fixed_point_stays_put() {
        let bx = BoxProjector::new(vec![-1.0; 3], vec![1.0; 3]).unwrap();
        let sched = harmonic_pair_schedule(1.0, 0.0).unwrap();
        let stop = StoppingConfig {
            max_iterations: 20,
            ..Default::default()
        };
        let res = solve_predetermined(&L1Norm, &bx, &sched, &[0.0; 3], &stop, None).unwrap();
        assert!(res.trace.iter().all(|r| r.f_k == 0.0));
        assert_eq!(res.final_x, vec![0.0; 3]);
    }

    #[test]
    fn dynamic_zero_subgradient_at_feasible_point_stops() {
        let bx = BoxProjector::new(vec![-1.0; 2], vec![1.0; 2]).unwrap();
        let cfg = DynamicConfig::new(0.0, 1.0, AccuracyMode::FixedTolerance(0.0));
        let res = solve_dynamic(&L1Norm, &bx, &cfg, &[0.0, 0.0], &StoppingConfig::default(), None).unwrap();
        assert_eq!(res.status, SolveStatus::OptimalFeasibleZeroSubgrad);
        assert_eq!(res.iterations, 0);
    }

    #[test]
    fn dynamic_rejects_overestimated_target() {
        let bx = BoxProjector::new(vec![-1.0], vec![1.0]).unwrap();
        let cfg = DynamicConfig::new(2.0, 1.0, AccuracyMode::FixedTolerance(0.0));
        let err = solve_dynamic(&L1Norm, &bx, &cfg, &[1.0], &StoppingConfig::default(), None).unwrap_err();
        assert!(err.is_usage());
        assert!(err.to_string().contains("phi is too large"));
    }

    #[test]
    fn polyak_with_exact_target_reaches_it() {
        // min |x| over [1, 3]: f* = 1.
        let bx = BoxProjector::new(vec![1.0], vec![3.0]).unwrap();
        let cfg = DynamicConfig::new(1.0, 1.0, AccuracyMode::FixedTolerance(0.0));
        let res = solve_dynamic(&L1Norm, &bx, &cfg, &[3.0], &StoppingConfig::default(), None).unwrap();
        assert_eq!(res.status, SolveStatus::TargetReachedFeasible);
        assert_abs_diff_eq!(res.final_f, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dynamic_records_exact_distances() {
        let set = Arc::new(AffineSet::new(DenseMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap(), vec![2.0]).unwrap());
        let proj = AffineExactProjector::new(set);
        let cfg = DynamicConfig::new(0.5, 1.0, AccuracyMode::FixedTolerance(0.0));
        let known = KnownOptimum::new(vec![0.0, 1.0]);
        let stop = StoppingConfig {
            max_iterations: 200,
            ..Default::default()
        };
        let res = solve_dynamic(&L1Norm, &proj, &cfg, &[2.0, 0.0], &stop, Some(&known)).unwrap();
        assert!(res.trace.iter().all(|r| r.dist_opt.is_some()));
        assert!(res.trace.windows(2).all(|w| w[0].k < w[1].k));
        assert!(res.trace.iter().all(|r| r.eps_requested == 0.0));
    }

    #[test]
    fn restart_examples() {
        let mut res = SolveResult {
            status: SolveStatus::TargetReachedFeasible,
            final_x: vec![0.8],
            final_f: 0.8,
            final_feas_inf: 0.0,
            iterations: 3,
            trace: vec![],
            best_feasible_f: Some(0.8),
            message: None,
        };
        let cfg = DynamicConfig::new(1.0, 1.0, AccuracyMode::FixedTolerance(0.0));
        let (next, x0) = restart_with_lower_phi(&res, &cfg, 0.5).unwrap();
        assert_abs_diff_eq!(next.phi, 0.9, epsilon = 1e-15);
        assert_eq!(x0, vec![0.8]);
        assert_eq!(restart_with_lower_phi(&res, &cfg, 1.0).unwrap().0.phi, 1.0);
        let tiny = restart_with_lower_phi(&res, &cfg, 1e-12).unwrap().0.phi;
        assert_abs_diff_eq!(tiny, 0.8, epsilon = 1e-12);
        res.status = SolveStatus::MaxIterations;
        assert!(restart_with_lower_phi(&res, &cfg, 0.5).unwrap_err().is_usage());
    }
}
