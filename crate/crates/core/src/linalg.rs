//! Dense kernels needed by the affine projectors: products with `A` and
//! `Aᵀ`, a Cholesky factorization of the Gram matrix `AAᵀ`, conjugate
//! gradients, and the smallest singular value of `A`.

use crate::error::{check_dim, Error, Result};

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `y += a * x`
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn distance(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

pub fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_dim("DenseMatrix::from_row_major", rows * cols, data.len())?;
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            check_dim("DenseMatrix::from_rows", cols, r.len())?;
            data.extend_from_slice(r);
        }
        Ok(DenseMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn column_norm(&self, j: usize) -> f64 {
        (0..self.rows)
            .map(|i| self.get(i, j).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Scales every nonzero column to unit Euclidean norm.
    pub fn normalize_columns(&mut self) {
        for j in 0..self.cols {
            let norm = self.column_norm(j);
            if norm > 0.0 {
                for i in 0..self.rows {
                    self.data[i * self.cols + j] /= norm;
                }
            }
        }
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        check_dim("DenseMatrix::matmul", self.cols, other.rows)?;
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &aik) in self.row(i).iter().enumerate() {
                if aik != 0.0 {
                    axpy(aik, other.row(k), out_row);
                }
            }
        }
        Ok(out)
    }

    /// `out = A x`, dimensions unchecked outside debug builds.
    pub fn matvec_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), x);
        }
    }

    /// `out = Aᵀ y`, dimensions unchecked outside debug builds.
    pub fn tmatvec_into(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &yi) in y.iter().enumerate() {
            if yi != 0.0 {
                axpy(yi, self.row(i), out);
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("matvec", self.cols, x.len())?;
        let mut out = vec![0.0; self.rows];
        self.matvec_into(x, &mut out);
        Ok(out)
    }

    pub fn tmatvec(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_dim("tmatvec", self.rows, y.len())?;
        let mut out = vec![0.0; self.cols];
        self.tmatvec_into(y, &mut out);
        Ok(out)
    }

    /// The Gram matrix `AAᵀ`.
    pub fn gram(&self) -> DenseMatrix {
        let m = self.rows;
        let mut g = DenseMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let v = dot(self.row(i), self.row(j));
                g.data[i * m + j] = v;
                g.data[j * m + i] = v;
            }
        }
        g
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }
}

pub fn matvec(a: &DenseMatrix, x: &[f64]) -> Result<Vec<f64>> {
    a.matvec(x)
}

/// Lower-triangular Cholesky factor `L` with `M = L Lᵀ`.
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    pub fn new(m: &DenseMatrix) -> Result<Self> {
        check_dim("Cholesky::new", m.rows(), m.cols())?;
        let n = m.rows();
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut diag = m.get(j, j);
            for k in 0..j {
                diag -= l[j * n + k] * l[j * n + k];
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(Error::Degenerate(format!(
                    "matrix is not positive definite (pivot {j} = {diag:e})"
                )));
            }
            let d = diag.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = m.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Ok(Cholesky { n, lower: l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn factor(&self) -> DenseMatrix {
        DenseMatrix::from_row_major(self.n, self.n, self.lower.clone())
            .expect("factor storage is n*n")
    }

    /// Solves `L Lᵀ x = rhs` in place.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        let l = &self.lower;
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= l[i * n + k] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= l[k * n + i] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        check_dim("Cholesky::solve", self.n, rhs.len())?;
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }
}

/// Cached `AAᵀ` together with its Cholesky factor.
#[derive(Clone, Debug)]
pub struct GramFactorization {
    source: DenseMatrix,
    gram: DenseMatrix,
    cholesky: Cholesky,
}

impl GramFactorization {
    /// Fails with [`Error::Degenerate`] when `A` lacks full row rank.
    pub fn new(a: DenseMatrix) -> Result<Self> {
        let gram = a.gram();
        let cholesky = Cholesky::new(&gram)?;
        Ok(GramFactorization {
            source: a,
            gram,
            cholesky,
        })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.source
    }

    pub fn gram(&self) -> &DenseMatrix {
        &self.gram
    }

    pub fn cholesky(&self) -> &Cholesky {
        &self.cholesky
    }

    /// `out = AAᵀ v` using the cached Gram matrix.
    pub fn apply_gram(&self, v: &[f64], out: &mut [f64]) {
        self.gram.matvec_into(v, out);
    }

    /// Solves `AAᵀ q = rhs` with the cached factor.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.cholesky.solve(rhs)
    }

    /// Smallest eigenvalue of `AAᵀ` by inverse iteration with Rayleigh
    /// quotients.
    pub fn smallest_gram_eigenvalue(&self) -> Result<f64> {
        let m = self.gram.rows();
        if m == 0 {
            return Err(Error::Degenerate("empty constraint matrix".into()));
        }
        // A fixed, non-symmetric start vector so no eigenvector is missed by
        // accident of symmetry.
        let mut v: Vec<f64> = (0..m).map(|i| 1.0 + (i as f64 + 1.0).sqrt() / m as f64).collect();
        let n0 = norm2(&v);
        v.iter_mut().for_each(|x| *x /= n0);

        let mut gv = vec![0.0; m];
        let mut theta = f64::INFINITY;
        let mut stagnant = 0;
        for _ in 0..20_000 {
            self.cholesky.solve_in_place(&mut v);
            let nv = norm2(&v);
            if !nv.is_finite() || nv == 0.0 {
                return Err(Error::Degenerate(
                    "inverse iteration on AAᵀ produced a non-finite vector".into(),
                ));
            }
            v.iter_mut().for_each(|x| *x /= nv);
            self.apply_gram(&v, &mut gv);
            let next = dot(&v, &gv);
            let resid = gv
                .iter()
                .zip(&v)
                .map(|(g, x)| (g - next * x).powi(2))
                .sum::<f64>()
                .sqrt();
            if (theta - next).abs() <= 4.0 * f64::EPSILON * next {
                stagnant += 1;
            } else {
                stagnant = 0;
            }
            theta = next;
            if resid <= 1e-11 * theta || stagnant >= 5 {
                break;
            }
        }
        let threshold = 1e-14 * self.gram.frobenius_norm();
        if !(theta > threshold) {
            return Err(Error::Degenerate(format!(
                "smallest eigenvalue of AAᵀ ({theta:e}) below {threshold:e}"
            )));
        }
        Ok(theta)
    }

    pub fn sigma_min(&self) -> Result<f64> {
        self.smallest_gram_eigenvalue().map(f64::sqrt)
    }
}

pub fn solve_gram(fact: &GramFactorization, rhs: &[f64]) -> Result<Vec<f64>> {
    fact.solve(rhs)
}

/// Smallest singular value of a full-row-rank matrix.
pub fn sigma_min(a: &DenseMatrix) -> Result<f64> {
    GramFactorization::new(a.clone())?.sigma_min()
}

/// When conjugate gradients stop. With both fields set the first one met wins;
/// with neither set the threshold is taken as zero.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CgStopRule {
    pub residual_threshold: Option<f64>,
    pub max_iterations: Option<usize>,
}

impl CgStopRule {
    pub fn threshold(tau: f64) -> Self {
        CgStopRule {
            residual_threshold: Some(tau),
            max_iterations: None,
        }
    }

    pub fn iterations(j: usize) -> Self {
        CgStopRule {
            residual_threshold: None,
            max_iterations: Some(j),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub solution: Vec<f64>,
    /// True residual `‖M q − rhs‖₂` of `solution`.
    pub residual_norm: f64,
    pub iterations: usize,
    /// Whether the residual threshold (if any) was met.
    pub converged: bool,
    /// Best residual seen after each iteration, starting with `‖rhs‖₂`.
    pub history: Vec<f64>,
}

/// Conjugate gradients from a zero start on an SPD operator.
///
/// The iterate with the smallest recursive residual is returned, so the
/// reported residual never grows with the iteration count. A threshold stop
/// is confirmed against the true residual; if rounding has let the recursive
/// residual drift, the method restarts from the current iterate. At most
/// `3·dim(rhs)` iterations are taken.
pub fn cg_solve<F>(mut apply: F, rhs: &[f64], stop: CgStopRule) -> Result<CgOutcome>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = rhs.len();
    let tau = stop.residual_threshold.unwrap_or(0.0);
    if !(tau >= 0.0) {
        return Err(Error::invalid(format!("CG residual threshold must be >= 0, got {tau}")));
    }
    if stop.max_iterations == Some(0) {
        return Err(Error::invalid("CG iteration limit must be >= 1"));
    }
    let use_threshold = stop.residual_threshold.is_some() || stop.max_iterations.is_none();
    let cap = 3 * n.max(1);
    let max_iter = stop.max_iterations.map_or(cap, |j| j.min(cap));

    let mut q = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut mp = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let mut best_q = q.clone();
    let mut best = rr.sqrt();
    let mut history = vec![best];
    let mut iterations = 0;

    let true_residual = |apply: &mut F, q: &[f64], mp: &mut [f64]| -> f64 {
        apply(q, mp);
        mp.iter().zip(rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    };

    let mut converged = use_threshold && best <= tau;
    while !converged && iterations < max_iter {
        apply(&p, &mut mp);
        let pmp = dot(&p, &mp);
        if !pmp.is_finite() || !rr.is_finite() {
            return Err(Error::Breakdown {
                message: format!("non-finite curvature in CG at iteration {iterations}"),
                last_iterate: Some(best_q),
            });
        }
        if pmp <= 0.0 {
            // Direction of zero or negative curvature: the operator is not SPD
            // on the explored span, or the residual is already exactly zero.
            if rr == 0.0 {
                break;
            }
            return Err(Error::Breakdown {
                message: format!("non-positive curvature {pmp:e} in CG at iteration {iterations}"),
                last_iterate: Some(best_q),
            });
        }
        let alpha = rr / pmp;
        axpy(alpha, &p, &mut q);
        axpy(-alpha, &mp, &mut r);
        iterations += 1;
        let rr_new = dot(&r, &r);
        let rnorm = rr_new.sqrt();
        if !rnorm.is_finite() {
            return Err(Error::Breakdown {
                message: format!("non-finite residual in CG at iteration {iterations}"),
                last_iterate: Some(best_q),
            });
        }
        if rnorm < best {
            best = rnorm;
            best_q.copy_from_slice(&q);
        }
        history.push(best);

        if use_threshold && rnorm <= tau {
            let actual = true_residual(&mut apply, &q, &mut mp);
            if actual <= tau {
                best_q.copy_from_slice(&q);
                best = actual;
                converged = true;
                break;
            }
            // Residual replacement: restart from the current iterate.
            for ((ri, bi), mi) in r.iter_mut().zip(rhs).zip(&mp) {
                *ri = bi - mi;
            }
            p.copy_from_slice(&r);
            rr = dot(&r, &r);
            continue;
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }

    let residual_norm = if iterations == 0 || converged {
        best
    } else {
        true_residual(&mut apply, &best_q, &mut mp)
    };
    let converged = use_threshold && residual_norm <= tau;
    Ok(CgOutcome {
        solution: best_q,
        residual_norm,
        iterations,
        converged,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn diag_apply(d: Vec<f64>) -> impl FnMut(&[f64], &mut [f64]) {
        move |x, out| {
            for i in 0..x.len() {
                out[i] = d[i] * x[i];
            }
        }
    }

    #[test]
    fn matvec_examples() {
        let id = DenseMatrix::identity(2);
        assert_eq!(matvec(&id, &[3.0, 4.0]).unwrap(), vec![3.0, 4.0]);
        let row = DenseMatrix::from_rows(&[vec![1.0, 1.0, 1.0]]).unwrap();
        assert_eq!(matvec(&row, &[1.0, 2.0, 3.0]).unwrap(), vec![6.0]);
        let d = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 3.0]]).unwrap();
        assert_eq!(matvec(&d, &[1.0, 1.0]).unwrap(), vec![2.0, 3.0]);
    }

    #[test]
    fn matvec_dimension_mismatch_is_usage_error() {
        let err = matvec(&DenseMatrix::identity(2), &[1.0]).unwrap_err();
        assert!(err.is_usage());
    }

    #[test]
    fn cg_identity_one_iteration() {
        let out = cg_solve(diag_apply(vec![1.0, 1.0]), &[5.0, 7.0], CgStopRule::threshold(0.0)).unwrap();
        assert_eq!(out.solution, vec![5.0, 7.0]);
        assert_eq!(out.iterations, 1);
        assert_eq!(out.residual_norm, 0.0);
    }

    #[test]
    fn cg_diagonal_system() {
        let out = cg_solve(diag_apply(vec![2.0, 8.0]), &[2.0, 8.0], CgStopRule::threshold(1e-12)).unwrap();
        assert_abs_diff_eq!(out.solution[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.solution[1], 1.0, epsilon = 1e-12);
        assert!(out.converged);
    }

    #[test]
    fn cg_single_step_matches_hand_computation() {
        // One CG step from zero on diag(2, 8): p = r0 = [2, 8],
        // alpha = r0·r0 / p·Mp = 68 / 520, r1 = r0 − alpha·[4, 64].
        let alpha = 68.0 / 520.0;
        let r1: [f64; 2] = [2.0 - alpha * 4.0, 8.0 - alpha * 64.0];
        let expected = (r1[0] * r1[0] + r1[1] * r1[1]).sqrt();
        let out = cg_solve(diag_apply(vec![2.0, 8.0]), &[2.0, 8.0], CgStopRule::iterations(1)).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.residual_norm > 0.0);
        assert!(out.residual_norm < norm2(&[2.0, 8.0]));
        assert_abs_diff_eq!(out.residual_norm, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(out.solution[0], 2.0 * alpha, epsilon = 1e-15);
    }

    #[test]
    fn cg_rejects_bad_stop_rules() {
        assert!(cg_solve(diag_apply(vec![1.0]), &[1.0], CgStopRule::threshold(-1.0)).is_err());
        assert!(cg_solve(diag_apply(vec![1.0]), &[1.0], CgStopRule::iterations(0)).is_err());
    }

    #[test]
    fn cg_reports_breakdown_on_nan() {
        let err = cg_solve(|_x: &[f64], out: &mut [f64]| out.fill(f64::NAN), &[1.0, 2.0], CgStopRule::threshold(0.0))
            .unwrap_err();
        assert!(matches!(err, Error::Breakdown { last_iterate: Some(_), .. }));
    }

    #[test]
    fn cg_zero_rhs_takes_no_iterations() {
        let out = cg_solve(diag_apply(vec![3.0, 4.0]), &[0.0, 0.0], CgStopRule::threshold(0.0)).unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.solution, vec![0.0, 0.0]);
    }

    #[test]
    fn solve_gram_examples() {
        let f = GramFactorization::new(DenseMatrix::identity(2)).unwrap();
        assert_eq!(solve_gram(&f, &[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
        assert_eq!(solve_gram(&f, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);

        let a = DenseMatrix::from_rows(&[vec![2.0, 0.0, 0.0], vec![0.0, 2.0, 0.0]]).unwrap();
        let f = GramFactorization::new(a).unwrap();
        let q = solve_gram(&f, &[4.0, 8.0]).unwrap();
        assert_abs_diff_eq!(q[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(q[1], 2.0, epsilon = 1e-14);
        assert!(solve_gram(&f, &[1.0]).unwrap_err().is_usage());
    }

    #[test]
    fn cholesky_reconstructs_gram() {
        let a = DenseMatrix::from_rows(&[
            vec![1.0, 2.0, 0.5, -1.0],
            vec![0.0, 1.0, 3.0, 2.0],
            vec![4.0, -1.0, 1.0, 0.0],
        ])
        .unwrap();
        let f = GramFactorization::new(a).unwrap();
        let l = f.cholesky().factor();
        let llt = l.matmul(&l.transpose()).unwrap();
        let diff: Vec<f64> = sub(llt.as_slice(), f.gram().as_slice());
        assert!(norm2(&diff) <= 1e-10 * f.gram().frobenius_norm());
    }

    #[test]
    fn sigma_min_examples() {
        let a = DenseMatrix::from_rows(&[vec![3.0, 0.0, 0.0], vec![0.0, 4.0, 0.0]]).unwrap();
        assert_abs_diff_eq!(sigma_min(&a).unwrap(), 3.0, epsilon = 3e-8);
        assert_abs_diff_eq!(sigma_min(&DenseMatrix::identity(5)).unwrap(), 1.0, epsilon = 1e-8);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a = DenseMatrix::from_rows(&[vec![s, s, 0.0, 0.0], vec![s, -s, 0.0, 0.0]]).unwrap();
        assert_abs_diff_eq!(sigma_min(&a).unwrap(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn sigma_min_rejects_rank_deficient() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0]]).unwrap();
        assert!(matches!(sigma_min(&a), Err(Error::Degenerate(_))));
    }
}
