//! Step sizes, projection accuracies, relaxation and safeguard sequences,
//! and upper bounds on the distance to the optimal set.
//!
//! The accuracy bounds `ε̄_k` (target value above `f*`) and `ε̃_k` (target
//! value below `f*`) keep the distance to the optimal set nonincreasing. Both
//! are nonincreasing in the distance argument, so any upper bound on
//! `d_{X*}(x^k)` may be substituted for the unknown true distance.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{distance, norm2};
use crate::oracles::SubgradientOracle;
use crate::projections::{AffineSet, InexactProjector};

/// Predetermined step sizes `α_k` and projection accuracies `ε_k`.
pub trait PredeterminedSchedule: Send + Sync {
    fn step(&self, k: usize) -> f64;
    fn accuracy(&self, k: usize) -> f64;
    /// Upper bound on `Σ_{j≥k} ε_j`.
    fn accuracy_tail_bound(&self, k: usize) -> f64;
}

/// `α_k = a/(k+1)`, `ε_k = e/(k+2)²` with `e ≤ a`.
///
/// `Σ_{j≥k} 1/(j+2)² ≤ ∫_{k+1}^∞ dx/x² = 1/(k+1)`, so the tail of the
/// accuracies never exceeds the current step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarmonicPair {
    scale_a: f64,
    scale_e: f64,
}

impl HarmonicPair {
    pub fn new(scale_a: f64, scale_e: f64) -> Result<Self> {
        if !(scale_a > 0.0) || !scale_a.is_finite() {
            return Err(Error::invalid(format!("step scale must be > 0, got {scale_a}")));
        }
        if !(scale_e >= 0.0) {
            return Err(Error::invalid(format!("accuracy scale must be >= 0, got {scale_e}")));
        }
        if scale_e > scale_a {
            return Err(Error::invalid(format!(
                "accuracy scale {scale_e} exceeds step scale {scale_a}; the accuracy tail would outgrow the steps"
            )));
        }
        Ok(HarmonicPair { scale_a, scale_e })
    }

    pub fn scale_a(&self) -> f64 {
        self.scale_a
    }

    pub fn scale_e(&self) -> f64 {
        self.scale_e
    }
}

pub fn harmonic_pair_schedule(scale_a: f64, scale_e: f64) -> Result<HarmonicPair> {
    HarmonicPair::new(scale_a, scale_e)
}

impl PredeterminedSchedule for HarmonicPair {
    fn step(&self, k: usize) -> f64 {
        self.scale_a / (k as f64 + 1.0)
    }

    fn accuracy(&self, k: usize) -> f64 {
        let d = k as f64 + 2.0;
        self.scale_e / (d * d)
    }

    fn accuracy_tail_bound(&self, k: usize) -> f64 {
        self.scale_e / (k as f64 + 1.0)
    }
}

/// Named scalar sequence families used for `λ_k`, `ν_k` and fixed schedules.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Sequence {
    /// `c`
    Constant(f64),
    /// `c/(k+1)`
    Harmonic(f64),
    /// `c/(k+1)²`
    InverseSquare(f64),
    /// `c/(1 + ln(1+k))`: tends to zero but is not summable, since it
    /// dominates `c/(k+1)` for every `k`.
    LogDecay(f64),
}

/// Analytic facts about a family, established per variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeriesCertificate {
    pub summable: bool,
    pub square_summable: bool,
    pub vanishing: bool,
    pub nonincreasing: bool,
}

impl Sequence {
    pub fn at(&self, k: usize) -> f64 {
        let k = k as f64;
        match *self {
            Sequence::Constant(c) => c,
            Sequence::Harmonic(c) => c / (k + 1.0),
            Sequence::InverseSquare(c) => c / ((k + 1.0) * (k + 1.0)),
            Sequence::LogDecay(c) => c / (1.0 + (1.0 + k).ln()),
        }
    }

    pub fn coefficient(&self) -> f64 {
        match *self {
            Sequence::Constant(c)
            | Sequence::Harmonic(c)
            | Sequence::InverseSquare(c)
            | Sequence::LogDecay(c) => c,
        }
    }

    /// Largest term; every family is nonincreasing for `c ≥ 0`.
    pub fn sup(&self) -> f64 {
        self.at(0)
    }

    pub fn certificate(&self) -> SeriesCertificate {
        let zero = self.coefficient() == 0.0;
        match self {
            Sequence::Constant(_) => SeriesCertificate {
                summable: zero,
                square_summable: zero,
                vanishing: zero,
                nonincreasing: true,
            },
            Sequence::Harmonic(_) | Sequence::LogDecay(_) => SeriesCertificate {
                summable: zero,
                square_summable: zero || matches!(self, Sequence::Harmonic(_)),
                vanishing: true,
                nonincreasing: true,
            },
            Sequence::InverseSquare(_) => SeriesCertificate {
                summable: true,
                square_summable: true,
                vanishing: true,
                nonincreasing: true,
            },
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Sequence::Constant(_) => "constant",
            Sequence::Harmonic(_) => "harmonic",
            Sequence::InverseSquare(_) => "inverse_square",
            Sequence::LogDecay(_) => "log_decay",
        }
    }
}

impl fmt::Display for Sequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.tag(), self.coefficient())
    }
}

impl FromStr for Sequence {
    type Err = Error;

    /// Parses `tag:coefficient`, e.g. `constant:1` or `log_decay:0.5`.
    fn from_str(s: &str) -> Result<Self> {
        let (tag, coef) = s
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("sequence `{s}` is not of the form tag:value")))?;
        let c: f64 = coef
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("bad coefficient in sequence `{s}`")))?;
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::invalid(format!("sequence coefficient must be finite and >= 0 in `{s}`")));
        }
        match tag.trim() {
            "constant" => Ok(Sequence::Constant(c)),
            "harmonic" => Ok(Sequence::Harmonic(c)),
            "inverse_square" | "quadratic" => Ok(Sequence::InverseSquare(c)),
            "log_decay" | "vanishing" => Ok(Sequence::LogDecay(c)),
            other => Err(Error::invalid(format!("unknown sequence family `{other}`"))),
        }
    }
}

/// Default safeguard `ν_k = ν₀/(k+1)²`.
pub fn nu_default(nu0: f64) -> Result<Sequence> {
    if !(nu0 > 0.0) {
        return Err(Error::invalid(format!("nu0 must be > 0, got {nu0}")));
    }
    Ok(Sequence::InverseSquare(nu0))
}

/// Vanishing, non-summable relaxation `λ_k = λ₀/(1 + ln(1+k))`.
pub fn lambda_vanishing(lambda0: f64) -> Result<Sequence> {
    if !(lambda0 > 0.0 && lambda0 < 2.0) {
        return Err(Error::invalid(format!("lambda0 must lie in (0, 2), got {lambda0}")));
    }
    Ok(Sequence::LogDecay(lambda0))
}

/// Polyak-type step `λ_k (f_k − φ)/‖h^k‖²`.
pub fn dynamic_step(f_k: f64, phi: f64, lambda_k: f64, h_norm_sq: f64) -> Result<f64> {
    if !(h_norm_sq > 0.0) {
        return Err(Error::invalid(
            "dynamic step needs a nonzero subgradient; zero subgradients take the projection branch",
        ));
    }
    Ok(lambda_k * (f_k - phi) / h_norm_sq)
}

/// Positive root of `ε² + 2(s + d)ε − λ(2−λ)(f_k−φ)²/‖h‖² = 0` with
/// `s = λ(f_k − φ)/‖h‖`, evaluated without cancellation.
pub fn eps_bar(f_k: f64, phi: f64, lambda_k: f64, h_norm: f64, dist_bound: f64) -> Result<f64> {
    if !(f_k > phi) {
        return Err(Error::invalid(format!("eps_bar needs f_k > phi (f_k = {f_k}, phi = {phi})")));
    }
    if !(lambda_k > 0.0 && lambda_k < 2.0) {
        return Err(Error::invalid(format!("eps_bar needs 0 < lambda < 2, got {lambda_k}")));
    }
    if !(h_norm > 0.0) {
        return Err(Error::invalid("eps_bar needs a nonzero subgradient norm"));
    }
    if !(dist_bound >= 0.0) {
        return Err(Error::invalid(format!("distance bound must be >= 0, got {dist_bound}")));
    }
    let gap = f_k - phi;
    let p = lambda_k * gap / h_norm + dist_bound;
    let c = lambda_k * (2.0 - lambda_k) * gap * gap / (h_norm * h_norm);
    // −p + sqrt(p² + c) = c / (p + sqrt(p² + c))
    Ok(c / (p + (p * p + c).sqrt()))
}

/// Left side of the quadratic whose positive root is `ε̄_k`.
pub fn eps_bar_quadratic(eps: f64, f_k: f64, phi: f64, lambda_k: f64, h_norm: f64, dist: f64) -> f64 {
    let gap = f_k - phi;
    let p = lambda_k * gap / h_norm + dist;
    eps * eps + 2.0 * p * eps + lambda_k * (lambda_k - 2.0) * gap * gap / (h_norm * h_norm)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsTilde {
    /// `|ε̃_k|`, or zero when the discriminant is negative.
    pub value: f64,
    /// `L_k`
    pub l_k: f64,
    /// `(s + d)² < L_k`: no real root, so the iteration must project exactly.
    pub negative_discriminant: bool,
}

/// `L_k = λ(2−β)(f_k−φ)/‖h‖² · (f* − f_k + β/(2−β)(f* − φ))`
pub fn l_k(f_k: f64, phi: f64, f_star: f64, lambda_k: f64, beta: f64, h_norm: f64) -> f64 {
    lambda_k * (2.0 - beta) * (f_k - phi) / (h_norm * h_norm)
        * (f_star - f_k + beta / (2.0 - beta) * (f_star - phi))
}

/// `|ε̃_k|` for a target value below the optimal value.
#[allow(clippy::too_many_arguments)]
pub fn eps_tilde(
    f_k: f64,
    phi: f64,
    f_star_hint: f64,
    lambda_k: f64,
    beta: f64,
    h_norm: f64,
    dist_bound: f64,
) -> Result<EpsTilde> {
    if !(phi < f_star_hint) {
        return Err(Error::invalid(format!(
            "eps_tilde needs phi < f* (phi = {phi}, f* = {f_star_hint})"
        )));
    }
    if !(f_k > phi) {
        return Err(Error::invalid(format!("eps_tilde needs f_k > phi (f_k = {f_k}, phi = {phi})")));
    }
    if !(lambda_k > 0.0 && lambda_k <= beta && beta < 2.0) {
        return Err(Error::invalid(format!(
            "eps_tilde needs 0 < lambda <= beta < 2 (lambda = {lambda_k}, beta = {beta})"
        )));
    }
    if !(h_norm > 0.0) {
        return Err(Error::invalid("eps_tilde needs a nonzero subgradient norm"));
    }
    if !(dist_bound >= 0.0) {
        return Err(Error::invalid(format!("distance bound must be >= 0, got {dist_bound}")));
    }
    let l = l_k(f_k, phi, f_star_hint, lambda_k, beta, h_norm);
    let p = lambda_k * (f_k - phi) / h_norm + dist_bound;
    let disc = p * p - l;
    if disc < 0.0 {
        return Ok(EpsTilde {
            value: 0.0,
            l_k: l,
            negative_discriminant: true,
        });
    }
    // |−p + sqrt(p² − L)| = |L| / (p + sqrt(p² − L))
    Ok(EpsTilde {
        value: l.abs() / (p + disc.sqrt()),
        l_k: l,
        negative_discriminant: false,
    })
}

pub fn distance_bound_strongly_convex(c: f64, f_x: f64, f_star: f64, min_subgrad_norm: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::invalid(format!("strong convexity constant must be > 0, got {c}")));
    }
    if f_x < f_star {
        return Err(Error::invalid(format!("f(x) = {f_x} is below f* = {f_star}")));
    }
    Ok(((f_x - f_star) / c).sqrt().min(min_subgrad_norm / (2.0 * c)))
}

/// `d_{X*}(x) ≤ (f(x) − φ)/μ` on `X`; off `X`, add a bound on `d_X(x)` and
/// pass `f` at the projected point.
pub fn distance_bound_weak_sharp(mu: f64, f_x: f64, phi: f64, d_x_bound: f64, at_feasible: bool) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::invalid(format!("sharpness constant must be > 0, got {mu}")));
    }
    let sharp = (f_x - phi) / mu;
    Ok(if at_feasible { sharp } else { d_x_bound + sharp })
}

pub fn distance_bound_norm_growth(c: f64, d: f64, x_norm: f64, f_star: f64) -> Result<f64> {
    if !(c > 0.0 && d > 0.0) {
        return Err(Error::invalid("norm growth constants must be > 0"));
    }
    Ok(x_norm + (f_star + d) / c)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceBoundKind {
    StronglyConvex,
    NormGrowth,
    WeakSharp,
    BasisPursuit,
    ExactKnown,
}

/// Upper bound on `d_{X*}(x)` when the kind's hypothesis holds.
pub trait DistanceBoundProvider: Send + Sync {
    fn kind(&self) -> DistanceBoundKind;
    fn bound(&self, x: &[f64], f_x: f64, subgradient_norm: f64) -> f64;
}

/// Exact distance to a known singleton optimal set.
#[derive(Clone, Debug)]
pub struct KnownOptimum {
    x_star: Vec<f64>,
}

impl KnownOptimum {
    pub fn new(x_star: Vec<f64>) -> Self {
        KnownOptimum { x_star }
    }
}

impl DistanceBoundProvider for KnownOptimum {
    fn kind(&self) -> DistanceBoundKind {
        DistanceBoundKind::ExactKnown
    }

    fn bound(&self, x: &[f64], _f_x: f64, _h: f64) -> f64 {
        distance(x, &self.x_star)
    }
}

/// Strong convexity with modulus `C`. The norm of the oracle's subgradient
/// stands in for `min_{h∈∂f(x)} ‖h‖`, which only loosens the bound.
#[derive(Clone, Copy, Debug)]
pub struct StronglyConvexBound {
    pub c: f64,
    pub f_star: f64,
}

impl DistanceBoundProvider for StronglyConvexBound {
    fn kind(&self) -> DistanceBoundKind {
        DistanceBoundKind::StronglyConvex
    }

    fn bound(&self, _x: &[f64], f_x: f64, h: f64) -> f64 {
        distance_bound_strongly_convex(self.c, f_x.max(self.f_star), self.f_star, h).unwrap_or(f64::INFINITY)
    }
}

/// `f(x) ≥ C‖x‖ − D` gives `d_{X*}(x) ≤ ‖x‖ + (f* + D)/C`; `f_star` may be
/// any upper estimate of the optimal value.
#[derive(Clone, Copy, Debug)]
pub struct NormGrowthBound {
    pub c: f64,
    pub d: f64,
    pub f_star: f64,
}

impl DistanceBoundProvider for NormGrowthBound {
    fn kind(&self) -> DistanceBoundKind {
        DistanceBoundKind::NormGrowth
    }

    fn bound(&self, x: &[f64], _f_x: f64, _h: f64) -> f64 {
        distance_bound_norm_growth(self.c, self.d, norm2(x), self.f_star).unwrap_or(f64::INFINITY)
    }
}

/// Weak sharp minima with constant `μ` and a lower bound `φ ≤ f*`, chained
/// through the exact projection onto `X`.
pub struct WeakSharpBound {
    pub mu: f64,
    pub phi: f64,
    pub objective: Arc<dyn SubgradientOracle>,
    pub feasible_set: Arc<dyn InexactProjector>,
}

impl DistanceBoundProvider for WeakSharpBound {
    fn kind(&self) -> DistanceBoundKind {
        DistanceBoundKind::WeakSharp
    }

    fn bound(&self, x: &[f64], f_x: f64, _h: f64) -> f64 {
        let Ok(p) = self.feasible_set.project_exact(x) else {
            return f64::INFINITY;
        };
        let d_x = distance(x, &p);
        let (f, feasible) = if d_x == 0.0 {
            (f_x, true)
        } else {
            (self.objective.value(&p), false)
        };
        distance_bound_weak_sharp(self.mu, f, self.phi, d_x, feasible).unwrap_or(f64::INFINITY)
    }
}

/// `2‖Ax − b‖₂/σ_min(A) + (f(x) − φ)/√n` for Basis Pursuit.
#[derive(Clone, Debug)]
pub struct BasisPursuitBound {
    pub set: Arc<AffineSet>,
    pub phi: f64,
}

impl DistanceBoundProvider for BasisPursuitBound {
    fn kind(&self) -> DistanceBoundKind {
        DistanceBoundKind::BasisPursuit
    }

    fn bound(&self, x: &[f64], f_x: f64, _h: f64) -> f64 {
        self.set.bp_distance_bound(x, f_x, self.phi)
    }
}

/// How the dynamic method picks its projection accuracy `ε_k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AccuracyMode {
    /// `min(ε̄_k, ν_k)`, for `φ ≥ f*`.
    TheoremOver,
    /// `min(|ε̃_k|, ν_k)`, for `φ < f*`. A wrong hint voids the guarantee,
    /// but `ν_k` still drives the accuracy to zero.
    TheoremUnder { f_star_hint: f64 },
    /// A fixed number of CG iterations with no accuracy guarantee.
    FixedIterations(usize),
    FixedTolerance(f64),
}

impl fmt::Display for AccuracyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AccuracyMode::TheoremOver => write!(f, "theorem_over"),
            AccuracyMode::TheoremUnder { f_star_hint } => write!(f, "theorem_under:{f_star_hint}"),
            AccuracyMode::FixedIterations(j) => write!(f, "fixed_cg:{j}"),
            AccuracyMode::FixedTolerance(e) => write!(f, "fixed_eps:{e}"),
        }
    }
}

impl FromStr for AccuracyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (tag, arg) = match s.split_once(':') {
            Some((t, a)) => (t.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let num = |what: &str| -> Result<f64> {
            arg.ok_or_else(|| Error::invalid(format!("accuracy mode `{tag}` needs a {what}")))?
                .parse()
                .map_err(|_| Error::invalid(format!("bad {what} in accuracy mode `{s}`")))
        };
        match tag {
            "theorem_over" => Ok(AccuracyMode::TheoremOver),
            "theorem_under" => Ok(AccuracyMode::TheoremUnder {
                f_star_hint: num("f* hint")?,
            }),
            "fixed_cg" => {
                let j: usize = arg
                    .ok_or_else(|| Error::invalid("fixed_cg needs an iteration count"))?
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad iteration count in `{s}`")))?;
                if j == 0 {
                    return Err(Error::invalid("fixed_cg needs at least one iteration"));
                }
                Ok(AccuracyMode::FixedIterations(j))
            }
            "fixed_eps" => {
                let e = num("tolerance")?;
                if !(e >= 0.0) {
                    return Err(Error::invalid("fixed_eps tolerance must be >= 0"));
                }
                Ok(AccuracyMode::FixedTolerance(e))
            }
            other => Err(Error::invalid(format!("unknown accuracy mode `{other}`"))),
        }
    }
}

/// Parameters of the dynamic step size method.
#[derive(Clone)]
pub struct DynamicConfig {
    /// Target value `φ`.
    pub phi: f64,
    pub lambda: Sequence,
    /// Upper bound `β ∈ (0, 2)` on every `λ_k`.
    pub beta: f64,
    pub nu: Sequence,
    pub accuracy: AccuracyMode,
    pub distance_bound: Option<Arc<dyn DistanceBoundProvider>>,
}

impl fmt::Debug for DynamicConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DynamicConfig")
            .field("phi", &self.phi)
            .field("lambda", &self.lambda)
            .field("beta", &self.beta)
            .field("nu", &self.nu)
            .field("accuracy", &self.accuracy)
            .field("distance_bound", &self.distance_bound.as_ref().map(|d| d.kind()))
            .finish()
    }
}

impl DynamicConfig {
    /// Constant `λ_k ≡ λ` with `β = λ`, `ν_k = 1/(k+1)²`.
    pub fn new(phi: f64, lambda: f64, accuracy: AccuracyMode) -> Self {
        DynamicConfig {
            phi,
            lambda: Sequence::Constant(lambda),
            beta: lambda,
            nu: Sequence::InverseSquare(1.0),
            accuracy,
            distance_bound: None,
        }
    }

    pub fn with_distance_bound(mut self, provider: Arc<dyn DistanceBoundProvider>) -> Self {
        self.distance_bound = Some(provider);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.phi.is_finite() {
            return Err(Error::invalid("target value must be finite"));
        }
        if !(self.beta > 0.0 && self.beta < 2.0) {
            return Err(Error::invalid(format!("beta must lie in (0, 2), got {}", self.beta)));
        }
        let cert = self.lambda.certificate();
        if !cert.nonincreasing || !(self.lambda.at(0) > 0.0) || self.lambda.sup() > self.beta {
            return Err(Error::invalid(format!(
                "relaxation {} must satisfy 0 < lambda_k <= beta = {}",
                self.lambda, self.beta
            )));
        }
        if cert.summable {
            return Err(Error::invalid(format!("relaxation {} must not be summable", self.lambda)));
        }
        match self.accuracy {
            AccuracyMode::TheoremOver | AccuracyMode::TheoremUnder { .. } => {
                if !self.nu.certificate().summable {
                    return Err(Error::invalid(format!("safeguard {} must be summable", self.nu)));
                }
                if self.distance_bound.is_none() {
                    return Err(Error::invalid(
                        "theorem-driven accuracy needs a distance bound provider",
                    ));
                }
                if let AccuracyMode::TheoremUnder { f_star_hint } = self.accuracy {
                    if !(self.phi < f_star_hint) {
                        return Err(Error::invalid(format!(
                            "theorem_under needs phi < f* hint (phi = {}, hint = {f_star_hint})",
                            self.phi
                        )));
                    }
                }
            }
            AccuracyMode::FixedIterations(0) => {
                return Err(Error::invalid("fixed_cg needs at least one iteration"))
            }
            AccuracyMode::FixedTolerance(e) if !(e >= 0.0) => {
                return Err(Error::invalid("fixed_eps tolerance must be >= 0"))
            }
            _ => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn harmonic_pair_examples() {
        let s = harmonic_pair_schedule(1.0, 1.0).unwrap();
        assert_eq!(s.step(0), 1.0);
        assert_eq!(s.accuracy(0), 0.25);
        assert_eq!(s.accuracy_tail_bound(0), 1.0);
        assert_abs_diff_eq!(s.step(9), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(s.accuracy(9), 1.0 / 121.0, epsilon = 1e-15);

        let exact = harmonic_pair_schedule(1.0, 0.0).unwrap();
        assert!((0..100).all(|k| exact.accuracy(k) == 0.0));
        assert!(harmonic_pair_schedule(1.0, 2.0).unwrap_err().is_usage());
        assert!(harmonic_pair_schedule(0.0, 0.0).is_err());
    }

    #[test]
    fn dynamic_step_examples() {
        assert_eq!(dynamic_step(2.0, 0.0, 1.0, 4.0).unwrap(), 0.5);
        assert_eq!(dynamic_step(3.0, 3.0, 1.0, 4.0).unwrap(), 0.0);
        assert!(dynamic_step(2.0, 0.0, 1.0, 0.0).is_err());
        let mut cfg = DynamicConfig::new(0.0, 2.0, AccuracyMode::FixedIterations(2));
        cfg.beta = 2.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn eps_bar_examples() {
        let e = eps_bar(1.0, 0.0, 1.0, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(e, 2f64.sqrt() - 1.0, epsilon = 1e-15);
        assert!(eps_bar_quadratic(e, 1.0, 0.0, 1.0, 1.0, 0.0).abs() <= 1e-15);
        let near = eps_bar(1e-9, 0.0, 1.0, 1.0, 1.0).unwrap();
        assert!(near < 1e-9);
        let far = eps_bar(1.0, 0.0, 1.0, 1.0, 1e12).unwrap();
        assert!(far < 1e-11);
        assert!(eps_bar(0.0, 0.0, 1.0, 1.0, 0.0).is_err());
        assert!(eps_bar(1.0, 0.0, 2.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn eps_tilde_examples() {
        let f_star = 5.0;
        let l = l_k(f_star + 2.0, f_star - 1.0, f_star, 1.0, 1.0, 1.0);
        assert_abs_diff_eq!(l, -3.0, epsilon = 1e-14);
        let e = eps_tilde(f_star + 2.0, f_star - 1.0, f_star, 1.0, 1.0, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(e.value, 2.0 * 3f64.sqrt() - 3.0, epsilon = 1e-14);
        assert!(!e.negative_discriminant);

        // f_k = f* + β/(2−β)(f* − φ) puts L_k at zero.
        let e = eps_tilde(f_star + 1.0, f_star - 1.0, f_star, 1.0, 1.0, 1.0, 0.5).unwrap();
        assert_abs_diff_eq!(e.l_k, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.value, 0.0, epsilon = 1e-14);
        assert!(eps_tilde(1.0, 2.0, 1.5, 1.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn eps_tilde_negative_discriminant_is_flagged() {
        // f_k barely above φ deep below f*: L_k > (s + d)².
        let e = eps_tilde(0.5, 0.0, 10.0, 1.0, 1.0, 0.1, 0.0).unwrap();
        assert!(e.l_k > 0.0);
        assert!(e.negative_discriminant);
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn strongly_convex_bound_examples() {
        assert_eq!(distance_bound_strongly_convex(1.0, 3.0, 3.0, 5.0).unwrap(), 0.0);
        assert_eq!(distance_bound_strongly_convex(1.0, 4.0, 0.0, 1.0).unwrap(), 0.5);
        assert_eq!(distance_bound_strongly_convex(0.25, 1.0, 0.0, 10.0).unwrap(), 2.0);
        assert!(distance_bound_strongly_convex(1.0, -1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn weak_sharp_bound_examples() {
        assert_eq!(distance_bound_weak_sharp(1.0, 2.0, 2.0, 0.0, true).unwrap(), 0.0);
        assert_eq!(distance_bound_weak_sharp(2.0, 6.0, 0.0, 0.0, true).unwrap(), 3.0);
        assert_eq!(distance_bound_weak_sharp(2.0, 6.0, 0.0, 0.5, false).unwrap(), 3.5);
        for x in [-3.0f64, -0.5, 0.0, 1.25, 7.0] {
            assert_eq!(distance_bound_weak_sharp(1.0, x.abs(), 0.0, 0.0, true).unwrap(), x.abs());
        }
        assert!(distance_bound_weak_sharp(0.0, 1.0, 0.0, 0.0, true).is_err());
    }

    #[test]
    fn bp_bound_example() {
        let set = AffineSet::new(crate::linalg::DenseMatrix::identity(2), vec![0.0, 0.0]).unwrap();
        let b = set.bp_distance_bound(&[3.0, 4.0], 7.0, 0.0);
        assert_abs_diff_eq!(b, 10.0 + 7.0 / 2f64.sqrt(), epsilon = 1e-12);
        let at_opt = AffineSet::new(crate::linalg::DenseMatrix::identity(2), vec![1.0, 0.0]).unwrap();
        assert_eq!(at_opt.bp_distance_bound(&[1.0, 0.0], 1.0, 1.0), 0.0);
    }

    #[test]
    fn nu_and_lambda_families() {
        let nu = nu_default(1.0).unwrap();
        assert_eq!(nu.at(0), 1.0);
        assert_abs_diff_eq!(nu.at(9), 0.01, epsilon = 1e-16);
        assert!(nu.certificate().summable);
        assert!(nu_default(0.0).is_err());

        let lam = lambda_vanishing(1.5).unwrap();
        assert_eq!(lam.at(0), 1.5);
        assert_abs_diff_eq!(lam.at(2), 1.5 / (1.0 + 3f64.ln()), epsilon = 1e-15);
        assert!(!lam.certificate().summable && lam.certificate().vanishing);
        assert!(lambda_vanishing(2.0).is_err());
    }

    #[test]
    fn sequence_tags_round_trip() {
        for s in [
            Sequence::Constant(1.0),
            Sequence::Harmonic(0.5),
            Sequence::InverseSquare(2.0),
            Sequence::LogDecay(1.25),
        ] {
            assert_eq!(s.to_string().parse::<Sequence>().unwrap(), s);
        }
        assert!("bogus:1".parse::<Sequence>().is_err());
        assert!("constant".parse::<Sequence>().is_err());
    }

    #[test]
    fn accuracy_mode_parsing() {
        assert_eq!("fixed_cg:2".parse::<AccuracyMode>().unwrap(), AccuracyMode::FixedIterations(2));
        assert_eq!("fixed_eps:1e-6".parse::<AccuracyMode>().unwrap(), AccuracyMode::FixedTolerance(1e-6));
        assert_eq!("theorem_over".parse::<AccuracyMode>().unwrap(), AccuracyMode::TheoremOver);
        assert_eq!(
            "theorem_under:3.5".parse::<AccuracyMode>().unwrap(),
            AccuracyMode::TheoremUnder { f_star_hint: 3.5 }
        );
        assert!("fixed_cg:0".parse::<AccuracyMode>().is_err());
    }

    #[test]
    fn config_validation() {
        let ok = DynamicConfig::new(0.0, 1.0, AccuracyMode::FixedIterations(2));
        assert!(ok.validate().is_ok());
        let no_bound = DynamicConfig::new(0.0, 1.0, AccuracyMode::TheoremOver);
        assert!(no_bound.validate().is_err());
        let mut summable = ok.clone();
        summable.lambda = Sequence::InverseSquare(1.0);
        assert!(summable.validate().is_err());
        let mut too_big = ok.clone();
        too_big.lambda = Sequence::Constant(1.5);
        assert!(too_big.validate().is_err());
    }
}
