//! Objective oracles returning values and (approximate) subgradients.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, norm2};
use crate::schedules::PredeterminedSchedule;

/// Value and subgradient oracle for a convex function on `ℝⁿ`.
pub trait SubgradientOracle: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;

    /// Some element of `∂f(x)`, or of a `γ_k`-subdifferential for oracles
    /// that depend on the iteration index.
    fn subgradient(&self, x: &[f64], iteration: usize) -> Vec<f64>;

    /// An element of the `γ`-subdifferential
    /// `{h | f(y) ≥ f(x) + hᵀ(y − x) − γ ∀y}`.
    ///
    /// The default perturbs an exact subgradient by a random vector of norm
    /// `γ/(2R)` and keeps it only if the inequality holds on random probes in
    /// the ball of radius `R = PROBE_RADIUS` around `x`.
    fn eps_subgradient(&self, x: &[f64], gamma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let h = self.subgradient(x, 0);
        if gamma == 0.0 {
            return h;
        }
        let fx = self.value(x);
        let mut scale = gamma / (2.0 * PROBE_RADIUS);
        for _ in 0..8 {
            let p = random_unit(x.len(), rng);
            let candidate: Vec<f64> = h.iter().zip(&p).map(|(hi, pi)| hi + scale * pi).collect();
            if passes_probe_test(self, x, fx, &candidate, gamma, PROBE_COUNT, PROBE_RADIUS, rng) {
                return candidate;
            }
            scale *= 0.5;
        }
        h
    }
}

pub const PROBE_RADIUS: f64 = 10.0;
pub const PROBE_COUNT: usize = 100;

fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let nv = norm2(&v);
        if nv > 0.0 {
            return v.into_iter().map(|e| e / nv).collect();
        }
    }
}

/// Checks `f(y) ≥ f(x) + hᵀ(y − x) − γ` at `probes` random points `y` drawn
/// uniformly from the ball of the given radius around `x`.
#[allow(clippy::too_many_arguments)]
pub fn passes_probe_test<O: SubgradientOracle + ?Sized>(
    oracle: &O,
    x: &[f64],
    fx: f64,
    h: &[f64],
    gamma: f64,
    probes: usize,
    radius: f64,
    rng: &mut ChaCha8Rng,
) -> bool {
    let n = x.len();
    (0..probes).all(|_| {
        let dir = random_unit(n, rng);
        let r = radius * rng.random::<f64>().powf(1.0 / n.max(1) as f64);
        let y: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + r * di).collect();
        let step: Vec<f64> = dir.iter().map(|d| r * d).collect();
        oracle.value(&y) >= fx + dot(h, &step) - gamma
    })
}

/// `‖x‖₁`
pub fn l1_value(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

/// `sign(x)` with `sign(0) = 0`, the minimum-norm element of `∂‖x‖₁`.
pub fn l1_subgradient(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            if v > 0.0 {
                1.0
            } else if v < 0.0 {
                -1.0
            } else {
                0.0
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default)]
pub struct L1Norm;

impl SubgradientOracle for L1Norm {
    fn value(&self, x: &[f64]) -> f64 {
        l1_value(x)
    }

    fn subgradient(&self, x: &[f64], _iteration: usize) -> Vec<f64> {
        l1_subgradient(x)
    }

    /// `h ∈ ∂_γ‖x‖₁` iff `‖h‖∞ ≤ 1` and `‖x‖₁ − hᵀx ≤ γ`. Each nonzero
    /// coordinate is shrunk to `sign(x_i)(1 − t_i)` with
    /// `0 ≤ t_i ≤ min(1, γ/‖x‖₁)`, so both conditions hold exactly.
    fn eps_subgradient(&self, x: &[f64], gamma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut h = l1_subgradient(x);
        let total = l1_value(x);
        if gamma == 0.0 || total == 0.0 {
            return h;
        }
        let cap = (gamma / total).min(1.0);
        for hi in h.iter_mut().filter(|v| **v != 0.0) {
            *hi *= 1.0 - cap * rng.random::<f64>();
        }
        h
    }
}

/// `f(x) = max_i (a_iᵀx + b_i)`.
#[derive(Clone, Debug)]
pub struct PolyhedralObjective {
    pieces: Vec<(Vec<f64>, f64)>,
    sharpness_mu: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolyhedralEval {
    pub value: f64,
    pub subgradient: Vec<f64>,
    pub active_index: usize,
}

impl PolyhedralObjective {
    pub fn new(pieces: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        let n = match pieces.first() {
            Some((a, _)) => a.len(),
            None => return Err(Error::invalid("polyhedral objective needs at least one piece")),
        };
        let mut mu = f64::INFINITY;
        for (a, _) in &pieces {
            check_dim("PolyhedralObjective::new", n, a.len())?;
            let na = norm2(a);
            if na == 0.0 {
                return Err(Error::invalid("polyhedral pieces need nonzero slopes"));
            }
            mu = mu.min(na);
        }
        Ok(PolyhedralObjective {
            pieces,
            sharpness_mu: mu,
        })
    }

    pub fn pieces(&self) -> &[(Vec<f64>, f64)] {
        &self.pieces
    }

    /// `min_i ‖a_i‖₂`. This is a valid weak-sharpness constant for
    /// one-dimensional problems; in higher dimensions callers should supply
    /// their own constant (for `‖x‖∞` it overestimates by `√n`).
    pub fn sharpness_mu(&self) -> f64 {
        self.sharpness_mu
    }

    /// Ties go to the lowest index.
    pub fn evaluate(&self, x: &[f64]) -> PolyhedralEval {
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for (i, (a, b)) in self.pieces.iter().enumerate() {
            let v = dot(a, x) + b;
            if v > best_val {
                best_val = v;
                best = i;
            }
        }
        PolyhedralEval {
            value: best_val,
            subgradient: self.pieces[best].0.clone(),
            active_index: best,
        }
    }
}

pub fn polyhedral_eval(obj: &PolyhedralObjective, x: &[f64]) -> PolyhedralEval {
    obj.evaluate(x)
}

impl SubgradientOracle for PolyhedralObjective {
    fn value(&self, x: &[f64]) -> f64 {
        self.evaluate(x).value
    }

    fn subgradient(&self, x: &[f64], _iteration: usize) -> Vec<f64> {
        self.evaluate(x).subgradient
    }
}

/// An oracle assembled from closures.
pub struct FnOracle<V, G> {
    value: V,
    subgradient: G,
}

impl<V, G> FnOracle<V, G>
where
    V: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    pub fn new(value: V, subgradient: G) -> Self {
        FnOracle { value, subgradient }
    }
}

impl<V, G> SubgradientOracle for FnOracle<V, G>
where
    V: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    fn subgradient(&self, x: &[f64], _iteration: usize) -> Vec<f64> {
        (self.subgradient)(x)
    }
}

/// Slack sequence `γ_k` for approximate subgradients.
#[derive(Clone)]
pub enum GammaSchedule {
    /// Listed values; zero past the end.
    Explicit(Vec<f64>),
    /// `γ_k = μ·ε_k` for the accuracy sequence of a predetermined schedule.
    ProportionalToAccuracy {
        mu: f64,
        schedule: Arc<dyn PredeterminedSchedule>,
    },
}

impl GammaSchedule {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            GammaSchedule::Explicit(v) => v.get(k).copied().unwrap_or(0.0),
            GammaSchedule::ProportionalToAccuracy { mu, schedule } => mu * schedule.accuracy(k),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            GammaSchedule::Explicit(v) => match v.iter().find(|g| !(**g >= 0.0)) {
                Some(g) => Err(Error::invalid(format!("gamma values must be >= 0, got {g}"))),
                None => Ok(()),
            },
            GammaSchedule::ProportionalToAccuracy { mu, .. } if !(*mu >= 0.0) => {
                Err(Error::invalid(format!("gamma scale must be >= 0, got {mu}")))
            }
            GammaSchedule::ProportionalToAccuracy { .. } => Ok(()),
        }
    }
}

/// Wraps an oracle so that iteration `k` returns an element of
/// `∂_{γ_k} f(x)`. The perturbation at iteration `k` is seeded by
/// `(seed, k)`, so runs are reproducible.
pub struct EpsSubgradientOracle<O> {
    base: O,
    gamma: GammaSchedule,
    seed: u64,
}

impl<O: SubgradientOracle> EpsSubgradientOracle<O> {
    pub fn new(base: O, gamma: GammaSchedule, seed: u64) -> Result<Self> {
        gamma.validate()?;
        Ok(EpsSubgradientOracle { base, gamma, seed })
    }

    pub fn gamma(&self, k: usize) -> f64 {
        self.gamma.at(k)
    }

    pub fn base(&self) -> &O {
        &self.base
    }
}

pub fn eps_subgradient_wrap<O: SubgradientOracle>(
    base: O,
    gamma: GammaSchedule,
    seed: u64,
) -> Result<EpsSubgradientOracle<O>> {
    EpsSubgradientOracle::new(base, gamma, seed)
}

impl<O: SubgradientOracle> SubgradientOracle for EpsSubgradientOracle<O> {
    fn value(&self, x: &[f64]) -> f64 {
        self.base.value(x)
    }

    fn subgradient(&self, x: &[f64], iteration: usize) -> Vec<f64> {
        let gamma = self.gamma.at(iteration);
        if gamma == 0.0 {
            return self.base.subgradient(x, iteration);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(iteration as u64);
        self.base.eps_subgradient(x, gamma, &mut rng)
    }
}

impl<T: SubgradientOracle + ?Sized> SubgradientOracle for Arc<T> {
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }

    fn subgradient(&self, x: &[f64], iteration: usize) -> Vec<f64> {
        (**self).subgradient(x, iteration)
    }

    fn eps_subgradient(&self, x: &[f64], gamma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (**self).eps_subgradient(x, gamma, rng)
    }
}

impl<T: SubgradientOracle + ?Sized> SubgradientOracle for &T {
    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }

    fn subgradient(&self, x: &[f64], iteration: usize) -> Vec<f64> {
        (**self).subgradient(x, iteration)
    }

    fn eps_subgradient(&self, x: &[f64], gamma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (**self).eps_subgradient(x, gamma, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn l1_examples() {
        assert_eq!(l1_value(&[0.0, 0.0, 0.0]), 0.0);
        assert_eq!(l1_value(&[3.0, -2.0, 0.0]), 5.0);
        assert_eq!(l1_value(&[-1.0; 4]), 4.0);
        assert_eq!(l1_subgradient(&[3.0, -2.0, 0.0]), vec![1.0, -1.0, 0.0]);
        assert_eq!(l1_subgradient(&[0.0; 3]), vec![0.0; 3]);
        assert_eq!(l1_subgradient(&[-5.0]), vec![-1.0]);
    }

    #[test]
    fn polyhedral_examples() {
        let abs = PolyhedralObjective::new(vec![(vec![1.0], 0.0), (vec![-1.0], 0.0)]).unwrap();
        let e = polyhedral_eval(&abs, &[2.0]);
        assert_eq!((e.value, e.subgradient.clone(), e.active_index), (2.0, vec![1.0], 0));
        let e = polyhedral_eval(&abs, &[0.0]);
        assert_eq!((e.value, e.subgradient.clone(), e.active_index), (0.0, vec![1.0], 0));
        let single = PolyhedralObjective::new(vec![(vec![2.0], 1.0)]).unwrap();
        let e = polyhedral_eval(&single, &[3.0]);
        assert_eq!((e.value, e.subgradient.clone(), e.active_index), (7.0, vec![2.0], 0));
        assert_eq!(abs.sharpness_mu(), 1.0);
    }

    #[test]
    fn polyhedral_rejects_bad_pieces() {
        assert!(PolyhedralObjective::new(vec![]).is_err());
        assert!(PolyhedralObjective::new(vec![(vec![0.0, 0.0], 1.0)]).is_err());
        assert!(PolyhedralObjective::new(vec![(vec![1.0], 0.0), (vec![1.0, 2.0], 0.0)]).is_err());
    }

    #[test]
    fn zero_gamma_wrapper_is_identity() {
        let w = eps_subgradient_wrap(L1Norm, GammaSchedule::Explicit(vec![0.0; 5]), 1).unwrap();
        let x = [1.5, -0.2, 0.0, 4.0];
        for k in 0..5 {
            assert_eq!(w.subgradient(&x, k), l1_subgradient(&x));
        }
    }

    #[test]
    fn one_dimensional_gamma_subdifferential() {
        // ∂_γ|·|(3) = [1 − γ/3, 1]
        let w = eps_subgradient_wrap(L1Norm, GammaSchedule::Explicit(vec![0.5; 50]), 3).unwrap();
        for k in 0..50 {
            let h = w.subgradient(&[3.0], k)[0];
            assert!((1.0 - 0.5 / 3.0..=1.0).contains(&h), "h = {h}");
        }
    }

    #[test]
    fn negative_gamma_rejected() {
        assert!(eps_subgradient_wrap(L1Norm, GammaSchedule::Explicit(vec![0.1, -0.1]), 0).is_err());
    }

    #[test]
    fn wrapped_l1_passes_probe_test() {
        let x = [1.0, -2.0, 0.0, 0.5, 3.0];
        let w = eps_subgradient_wrap(L1Norm, GammaSchedule::Explicit(vec![0.3; 10]), 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for k in 0..10 {
            let h = w.subgradient(&x, k);
            assert!(passes_probe_test(&L1Norm, &x, l1_value(&x), &h, 0.3, 100, 10.0, &mut rng));
        }
    }

    #[test]
    fn generic_wrapper_passes_probe_test() {
        let quad = FnOracle::new(
            |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>(),
            |x: &[f64]| x.iter().map(|v| 2.0 * v).collect(),
        );
        let w = eps_subgradient_wrap(quad, GammaSchedule::Explicit(vec![0.2; 5]), 5).unwrap();
        let x = [0.5, -1.0, 2.0];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 0..5 {
            let h = w.subgradient(&x, k);
            assert_ne!(h, vec![1.0, -2.0, 4.0]);
            assert!(passes_probe_test(w.base(), &x, 5.25, &h, 0.2, 100, 10.0, &mut rng));
        }
    }
}
