//! Exact and inexact Euclidean projections.
//!
//! An inexact projector honours `‖P^ε(y) − P(y)‖₂ ≤ ε` for every `y`. For an
//! affine set `{x | Ax = b}` this is realized by truncating conjugate
//! gradients on `AAᵀ q = Az − b` once `‖r_q‖₂ ≤ σ_min(A)·ε`, since the
//! projection error is bounded by `‖r_q‖₂ / σ_min(A)`.

use std::hash::{Hash, Hasher};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, cg_solve, norm2, CgStopRule, DenseMatrix, GramFactorization};

/// How accurately a projection should be computed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Accuracy {
    /// Guarantee `‖P^ε(y) − P(y)‖₂ ≤ ε`. `Tolerance(0.0)` is the exact projection.
    Tolerance(f64),
    /// Run a fixed number of inner iterations and report the realized error
    /// bound without guaranteeing any tolerance.
    Iterations(usize),
}

impl Accuracy {
    pub fn is_exact(&self) -> bool {
        matches!(self, Accuracy::Tolerance(e) if *e == 0.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionCertificate {
    /// `+∞` for fixed-iteration requests.
    pub requested_eps: f64,
    /// Proven upper bound on the distance to the exact projection.
    pub certified_error_bound: f64,
    pub inner_iterations: usize,
    pub residual_norm: f64,
    /// The iterative method missed its target and the direct solve was used.
    pub exact_fallback: bool,
    /// The output is provably closer to the feasible set than the input. This
    /// holds whenever the accuracy is below the input's distance to the set
    /// and may fail for coarse projections of nearly feasible points.
    pub moves_toward_set: bool,
}

impl ProjectionCertificate {
    fn exact(inner_iterations: usize, residual_norm: f64, exact_fallback: bool) -> Self {
        ProjectionCertificate {
            requested_eps: 0.0,
            certified_error_bound: 0.0,
            inner_iterations,
            residual_norm,
            exact_fallback,
            moves_toward_set: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Projection {
    pub point: Vec<f64>,
    pub certificate: ProjectionCertificate,
}

/// A projector onto a closed convex set `X`.
pub trait InexactProjector: Send + Sync {
    fn dim(&self) -> usize;

    fn project(&self, y: &[f64], accuracy: Accuracy) -> Result<Projection>;

    /// The exact projection `P⁰`.
    fn project_exact(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.project(y, Accuracy::Tolerance(0.0)).map(|p| p.point)
    }

    fn supports_exact(&self) -> bool {
        true
    }

    /// Set-specific measure of infeasibility: `‖Ax − b‖∞` for affine sets,
    /// largest bound violation for boxes.
    fn feasibility_violation(&self, x: &[f64]) -> f64;
}

fn check_accuracy(accuracy: Accuracy) -> Result<()> {
    match accuracy {
        Accuracy::Tolerance(e) if !(e >= 0.0) => Err(Error::invalid(format!(
            "projection accuracy must be >= 0, got {e}"
        ))),
        Accuracy::Iterations(0) => Err(Error::invalid("inner iteration count must be >= 1")),
        _ => Ok(()),
    }
}

/// The affine set `{x | Ax = b}` with a cached Gram factorization and
/// `σ_min(A)`.
#[derive(Clone, Debug)]
pub struct AffineSet {
    fact: GramFactorization,
    b: Vec<f64>,
    sigma_min: f64,
}

impl AffineSet {
    pub fn new(a: DenseMatrix, b: Vec<f64>) -> Result<Self> {
        check_dim("AffineSet::new", a.rows(), b.len())?;
        let fact = GramFactorization::new(a)?;
        let sigma_min = fact.sigma_min()?;
        Ok(AffineSet { fact, b, sigma_min })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        self.fact.matrix()
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    pub fn factorization(&self) -> &GramFactorization {
        &self.fact
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    pub fn dim(&self) -> usize {
        self.matrix().cols()
    }

    pub fn constraints(&self) -> usize {
        self.matrix().rows()
    }

    /// `Ax − b`
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.constraints()];
        self.matrix().matvec_into(x, &mut r);
        for (ri, bi) in r.iter_mut().zip(&self.b) {
            *ri -= bi;
        }
        r
    }

    pub fn feasibility_violation(&self, x: &[f64]) -> f64 {
        linalg::norm_inf(&self.residual(x))
    }

    fn back_substitute(&self, z: &[f64], q: &[f64]) -> Vec<f64> {
        let mut atq = vec![0.0; self.dim()];
        self.matrix().tmatvec_into(q, &mut atq);
        z.iter().zip(&atq).map(|(zi, ai)| zi - ai).collect()
    }

    pub fn project_exact(&self, z: &[f64]) -> Result<Vec<f64>> {
        check_dim("AffineSet::project_exact", self.dim(), z.len())?;
        let q = self.fact.solve(&self.residual(z))?;
        Ok(self.back_substitute(z, &q))
    }

    fn cg(&self, z: &[f64], stop: CgStopRule) -> Result<(Vec<f64>, linalg::CgOutcome, f64)> {
        let rhs = self.residual(z);
        let initial = norm2(&rhs);
        let outcome = cg_solve(|v, out| self.fact.apply_gram(v, out), &rhs, stop)?;
        Ok((rhs, outcome, initial))
    }

    /// CG projection stopped once `‖r_q‖₂ ≤ σ_min·ε`; `ε = 0` uses the direct
    /// factorized solve.
    pub fn project_cg(&self, z: &[f64], eps: f64) -> Result<Projection> {
        check_dim("AffineSet::project_cg", self.dim(), z.len())?;
        check_accuracy(Accuracy::Tolerance(eps))?;
        if eps == 0.0 {
            let q = self.fact.solve(&self.residual(z))?;
            let point = self.back_substitute(z, &q);
            let resid = linalg::norm2(&self.residual(&point));
            return Ok(Projection {
                point,
                certificate: ProjectionCertificate::exact(0, resid, false),
            });
        }
        let threshold = self.sigma_min * eps;
        let (rhs, outcome, initial) = self.cg(z, CgStopRule::threshold(threshold))?;
        if !outcome.converged {
            // Rounding kept CG above the threshold within its iteration cap.
            let q = self.fact.solve(&rhs)?;
            let point = self.back_substitute(z, &q);
            let mut cert = ProjectionCertificate::exact(outcome.iterations, 0.0, true);
            cert.requested_eps = eps;
            return Ok(Projection { point, certificate: cert });
        }
        let point = self.back_substitute(z, &outcome.solution);
        let bound = outcome.residual_norm / self.sigma_min;
        let step = linalg::distance(&point, z);
        Ok(Projection {
            point,
            certificate: ProjectionCertificate {
                requested_eps: eps,
                certified_error_bound: bound,
                inner_iterations: outcome.iterations,
                residual_norm: outcome.residual_norm,
                exact_fallback: false,
                moves_toward_set: initial == 0.0 || 2.0 * eps < step,
            },
        })
    }

    /// Exactly `min(j, iterations to zero residual)` CG steps, with the
    /// realized bound `‖r_q‖₂/σ_min` reported in the certificate.
    pub fn project_fixed_iterations(&self, z: &[f64], j: usize) -> Result<Projection> {
        check_dim("AffineSet::project_fixed_iterations", self.dim(), z.len())?;
        check_accuracy(Accuracy::Iterations(j))?;
        let stop = CgStopRule {
            residual_threshold: Some(0.0),
            max_iterations: Some(j),
        };
        let (_, outcome, _) = self.cg(z, stop)?;
        let point = self.back_substitute(z, &outcome.solution);
        let bound = outcome.residual_norm / self.sigma_min;
        let step = linalg::distance(&point, z);
        Ok(Projection {
            point,
            certificate: ProjectionCertificate {
                requested_eps: f64::INFINITY,
                certified_error_bound: bound,
                inner_iterations: outcome.iterations,
                residual_norm: outcome.residual_norm,
                exact_fallback: false,
                moves_toward_set: 2.0 * bound < step,
            },
        })
    }

    /// `2‖Ax − b‖₂/σ_min(A) + (f(x) − φ)/√n`, the Basis Pursuit estimate of
    /// the distance to the optimal set.
    pub fn bp_distance_bound(&self, x: &[f64], f_x: f64, phi: f64) -> f64 {
        distance_bound_bp(
            self.sigma_min,
            self.dim(),
            norm2(&self.residual(x)),
            f_x,
            phi,
        )
    }
}

/// Formula form of [`AffineSet::bp_distance_bound`] taking `‖Ax − b‖₂`.
pub fn distance_bound_bp(sigma_min: f64, n: usize, residual_norm: f64, f_x: f64, phi: f64) -> f64 {
    2.0 * residual_norm / sigma_min + (f_x - phi) / (n as f64).sqrt()
}

pub fn affine_project_exact(fact: &GramFactorization, b: &[f64], z: &[f64]) -> Result<Vec<f64>> {
    let a = fact.matrix();
    check_dim("affine_project_exact (b)", a.rows(), b.len())?;
    check_dim("affine_project_exact (z)", a.cols(), z.len())?;
    let mut r = a.matvec(z)?;
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri -= bi;
    }
    let q = fact.solve(&r)?;
    let atq = a.tmatvec(&q)?;
    Ok(z.iter().zip(&atq).map(|(zi, ai)| zi - ai).collect())
}

/// Projects exactly onto `{x | Ax = b}` regardless of the requested accuracy.
#[derive(Clone, Debug)]
pub struct AffineExactProjector {
    set: Arc<AffineSet>,
}

impl AffineExactProjector {
    pub fn new(set: Arc<AffineSet>) -> Self {
        AffineExactProjector { set }
    }
}

impl InexactProjector for AffineExactProjector {
    fn dim(&self) -> usize {
        self.set.dim()
    }

    fn project(&self, y: &[f64], accuracy: Accuracy) -> Result<Projection> {
        check_accuracy(accuracy)?;
        let mut p = self.set.project_cg(y, 0.0)?;
        if let Accuracy::Tolerance(e) = accuracy {
            p.certificate.requested_eps = e;
        }
        Ok(p)
    }

    fn feasibility_violation(&self, x: &[f64]) -> f64 {
        self.set.feasibility_violation(x)
    }
}

/// Truncated-CG projector onto `{x | Ax = b}`.
#[derive(Clone, Debug)]
pub struct AffineCgProjector {
    set: Arc<AffineSet>,
}

impl AffineCgProjector {
    pub fn new(set: Arc<AffineSet>) -> Self {
        AffineCgProjector { set }
    }

    pub fn set(&self) -> &Arc<AffineSet> {
        &self.set
    }
}

impl InexactProjector for AffineCgProjector {
    fn dim(&self) -> usize {
        self.set.dim()
    }

    fn project(&self, y: &[f64], accuracy: Accuracy) -> Result<Projection> {
        match accuracy {
            Accuracy::Tolerance(eps) => self.set.project_cg(y, eps),
            Accuracy::Iterations(j) => self.set.project_fixed_iterations(y, j),
        }
    }

    fn feasibility_violation(&self, x: &[f64]) -> f64 {
        self.set.feasibility_violation(x)
    }
}

/// Componentwise clamp onto `[lower, upper]`.
pub fn box_project(lower: &[f64], upper: &[f64], z: &[f64]) -> Vec<f64> {
    z.iter()
        .zip(lower.iter().zip(upper))
        .map(|(&zi, (&lo, &hi))| zi.max(lo).min(hi))
        .collect()
}

#[derive(Clone, Debug)]
pub struct BoxProjector {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxProjector {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim("BoxProjector::new", lower.len(), upper.len())?;
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::invalid("box requires lower <= upper componentwise"));
        }
        Ok(BoxProjector { lower, upper })
    }
}

impl InexactProjector for BoxProjector {
    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn project(&self, y: &[f64], accuracy: Accuracy) -> Result<Projection> {
        check_dim("BoxProjector::project", self.dim(), y.len())?;
        check_accuracy(accuracy)?;
        let point = box_project(&self.lower, &self.upper, y);
        let mut certificate = ProjectionCertificate::exact(0, 0.0, false);
        if let Accuracy::Tolerance(e) = accuracy {
            certificate.requested_eps = e;
        }
        Ok(Projection { point, certificate })
    }

    fn feasibility_violation(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&xi, (&lo, &hi))| (lo - xi).max(xi - hi).max(0.0))
            .fold(0.0, f64::max)
    }
}

/// Test double: the exact projection moved by `0.99·min(ε, max_offset)` in a
/// pseudo-random direction that depends only on the seed and the input point.
/// It meets the accuracy contract while staying close to its worst case.
#[derive(Clone, Debug)]
pub struct PerturbedExactProjector<P> {
    base: P,
    seed: u64,
    max_offset: f64,
}

pub const PERTURBATION_FACTOR: f64 = 0.99;

impl<P: InexactProjector> PerturbedExactProjector<P> {
    pub fn new(base: P, seed: u64) -> Result<Self> {
        Self::with_max_offset(base, seed, f64::INFINITY)
    }

    pub fn with_max_offset(base: P, seed: u64, max_offset: f64) -> Result<Self> {
        if !base.supports_exact() {
            return Err(Error::invalid("perturbed projector needs an exact base projector"));
        }
        if !(max_offset >= 0.0) {
            return Err(Error::invalid("max_offset must be >= 0"));
        }
        Ok(PerturbedExactProjector {
            base,
            seed,
            max_offset,
        })
    }

    fn direction(&self, y: &[f64]) -> Vec<f64> {
        let mut hasher = std::collections::hash_map::DefaultHasher::new();
        self.seed.hash(&mut hasher);
        for v in y {
            v.to_bits().hash(&mut hasher);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(hasher.finish());
        loop {
            let d: Vec<f64> = (0..y.len()).map(|_| rng.sample(StandardNormal)).collect();
            let n = norm2(&d);
            if n > 0.0 {
                return d.into_iter().map(|v| v / n).collect();
            }
        }
    }
}

impl<P: InexactProjector> InexactProjector for PerturbedExactProjector<P> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn project(&self, y: &[f64], accuracy: Accuracy) -> Result<Projection> {
        check_accuracy(accuracy)?;
        let eps = match accuracy {
            Accuracy::Tolerance(e) => e,
            Accuracy::Iterations(_) => {
                return Err(Error::invalid(
                    "perturbed projector only accepts tolerance requests",
                ))
            }
        };
        let mut point = self.base.project_exact(y)?;
        let radius = PERTURBATION_FACTOR * eps.min(self.max_offset);
        if radius > 0.0 {
            let dir = self.direction(y);
            linalg::axpy(radius, &dir, &mut point);
        }
        Ok(Projection {
            point,
            certificate: ProjectionCertificate {
                requested_eps: eps,
                certified_error_bound: radius,
                inner_iterations: 0,
                residual_norm: 0.0,
                exact_fallback: false,
                moves_toward_set: radius == 0.0,
            },
        })
    }

    fn project_exact(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.base.project_exact(y)
    }

    fn feasibility_violation(&self, x: &[f64]) -> f64 {
        self.base.feasibility_violation(x)
    }
}

impl<T: InexactProjector + ?Sized> InexactProjector for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn project(&self, y: &[f64], accuracy: Accuracy) -> Result<Projection> {
        (**self).project(y, accuracy)
    }

    fn project_exact(&self, y: &[f64]) -> Result<Vec<f64>> {
        (**self).project_exact(y)
    }

    fn supports_exact(&self) -> bool {
        (**self).supports_exact()
    }

    fn feasibility_violation(&self, x: &[f64]) -> f64 {
        (**self).feasibility_violation(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn set(rows: &[Vec<f64>], b: Vec<f64>) -> Arc<AffineSet> {
        Arc::new(AffineSet::new(DenseMatrix::from_rows(rows).unwrap(), b).unwrap())
    }

    fn random_set(m: usize, n: usize, seed: u64) -> Arc<AffineSet> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..m * n).map(|_| rng.sample(StandardNormal)).collect();
        let b = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        Arc::new(AffineSet::new(DenseMatrix::from_row_major(m, n, data).unwrap(), b).unwrap())
    }

    #[test]
    fn exact_projection_examples() {
        let s = set(&[vec![1.0]], vec![5.0]);
        assert_eq!(s.project_exact(&[2.0]).unwrap(), vec![5.0]);

        let s = set(&[vec![1.0, 0.0]], vec![3.0]);
        let x = s.project_exact(&[7.0, 9.0]).unwrap();
        assert_abs_diff_eq!(x[0], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1], 9.0, epsilon = 1e-14);

        let s = random_set(3, 6, 1);
        let feasible = s.project_exact(&[1.0, -2.0, 0.5, 3.0, 0.0, 1.0]).unwrap();
        let again = s.project_exact(&feasible).unwrap();
        assert!(linalg::distance(&feasible, &again) <= 1e-12);
    }

    #[test]
    fn free_function_matches_set_method() {
        let s = random_set(4, 9, 2);
        let z: Vec<f64> = (0..9).map(|i| i as f64 - 4.0).collect();
        let a = affine_project_exact(s.factorization(), s.rhs(), &z).unwrap();
        let b = s.project_exact(&z).unwrap();
        assert!(linalg::distance(&a, &b) <= 1e-13);
        assert!(s.feasibility_violation(&a) <= 1e-8 * (1.0 + norm2(s.rhs())));
    }

    #[test]
    fn cg_projection_identity_one_iteration() {
        let s = set(&[vec![1.0, 0.0], vec![0.0, 1.0]], vec![1.0, 2.0]);
        let p = s.project_cg(&[0.0, 0.0], 1e-12).unwrap();
        assert_eq!(p.point, vec![1.0, 2.0]);
        assert_eq!(p.certificate.inner_iterations, 1);
    }

    #[test]
    fn cg_projection_immediate_stop_returns_input() {
        let s = random_set(4, 10, 3);
        let z: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
        let r0 = norm2(&s.residual(&z));
        // Threshold sigma_min * eps exceeds the initial residual.
        let eps = 2.0 * r0 / s.sigma_min();
        let p = s.project_cg(&z, eps).unwrap();
        assert_eq!(p.certificate.inner_iterations, 0);
        assert_eq!(p.point, z);
        assert!(p.certificate.certified_error_bound <= eps);
    }

    #[test]
    fn cg_projection_meets_contract_on_random_instance() {
        let s = random_set(8, 32, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z: Vec<f64> = (0..32).map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        let p = s.project_cg(&z, 1e-3).unwrap();
        let exact = s.project_exact(&z).unwrap();
        let err = linalg::distance(&p.point, &exact);
        assert!(err <= 1e-3);
        assert!(p.certificate.certified_error_bound <= 1e-3);
        assert!(p.certificate.certified_error_bound >= err * (1.0 - 1e-9));
    }

    #[test]
    fn zero_eps_uses_direct_solve() {
        let s = random_set(5, 12, 6);
        let z = vec![1.0; 12];
        let p = s.project_cg(&z, 0.0).unwrap();
        assert_eq!(p.certificate.certified_error_bound, 0.0);
        assert_eq!(p.certificate.inner_iterations, 0);
        assert!(linalg::distance(&p.point, &s.project_exact(&z).unwrap()) <= 1e-14);
    }

    #[test]
    fn fixed_iterations() {
        let s = set(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]], vec![1.0, -1.0]);
        let p = s.project_fixed_iterations(&[4.0, 4.0, 4.0], 1).unwrap();
        assert_eq!(p.point, vec![1.0, -1.0, 4.0]);

        let s = random_set(6, 20, 7);
        let z = vec![0.5; 20];
        let p = s.project_fixed_iterations(&z, 6).unwrap();
        assert!(linalg::distance(&p.point, &s.project_exact(&z).unwrap()) <= 1e-7);

        let p = s.project_fixed_iterations(&z, 2).unwrap();
        assert_eq!(p.certificate.inner_iterations, 2);
        assert!(p.certificate.requested_eps.is_infinite());
        let err = linalg::distance(&p.point, &s.project_exact(&z).unwrap());
        assert!(p.certificate.certified_error_bound >= err * (1.0 - 1e-9));
        assert!(s.project_fixed_iterations(&z, 0).unwrap_err().is_usage());
    }

    #[test]
    fn negative_eps_rejected() {
        let s = random_set(2, 4, 8);
        assert!(s.project_cg(&[0.0; 4], -1.0).unwrap_err().is_usage());
    }

    #[test]
    fn perturbed_projector() {
        let s = random_set(3, 8, 9);
        let base = AffineExactProjector::new(s.clone());
        let y = vec![1.0, 2.0, 3.0, 4.0, -1.0, 0.0, 2.0, 1.0];
        let exact = s.project_exact(&y).unwrap();

        let p = PerturbedExactProjector::new(base.clone(), 42).unwrap();
        assert_eq!(p.project(&y, Accuracy::Tolerance(0.0)).unwrap().point, exact);
        let out = p.project(&y, Accuracy::Tolerance(0.1)).unwrap().point;
        assert_abs_diff_eq!(linalg::distance(&out, &exact), 0.099, epsilon = 1e-12);

        let q = PerturbedExactProjector::new(base.clone(), 42).unwrap();
        assert_eq!(q.project(&y, Accuracy::Tolerance(0.1)).unwrap().point, out);
        let capped = PerturbedExactProjector::with_max_offset(base, 42, 0.01).unwrap();
        let out = capped.project(&y, Accuracy::Tolerance(0.1)).unwrap().point;
        assert_abs_diff_eq!(linalg::distance(&out, &exact), 0.0099, epsilon = 1e-12);
    }

    #[test]
    fn box_projection_examples() {
        let lo = vec![0.0, 0.0];
        let hi = vec![1.0, 1.0];
        assert_eq!(box_project(&lo, &hi, &[0.2, 0.7]), vec![0.2, 0.7]);
        assert_eq!(box_project(&lo, &hi, &[-1.0, 2.0]), vec![0.0, 1.0]);
        assert_eq!(box_project(&[0.5, -2.0], &[0.5, -2.0], &[3.0, 3.0]), vec![0.5, -2.0]);
        let b = BoxProjector::new(lo, hi).unwrap();
        assert_eq!(b.feasibility_violation(&[-1.0, 1.5]), 1.0);
        assert!(BoxProjector::new(vec![1.0], vec![0.0]).is_err());
    }
}
