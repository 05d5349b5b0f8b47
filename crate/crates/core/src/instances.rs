//! Basis Pursuit test instances: concatenated dictionaries, planted sparse
//! solutions certified by the exact recovery condition, and a plain text
//! file format.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, DenseMatrix};
use crate::projections::AffineSet;

pub const DESK_M: usize = 128;
pub const DESK_SUPPORT: usize = 4;
pub const PLANT_ATTEMPTS: usize = 50;

const FORMAT_TAG: &str = "isa-bp v1";

fn check_power_of_two(m: usize, what: &str) -> Result<()> {
    if m == 0 || !m.is_power_of_two() {
        return Err(Error::invalid(format!("{what} needs a power of two, got {m}")));
    }
    Ok(())
}

/// Sylvester Hadamard matrix with entries ±1.
pub fn hadamard(m: usize) -> Result<DenseMatrix> {
    check_power_of_two(m, "hadamard")?;
    let mut h = DenseMatrix::identity(1);
    let mut size = 1;
    while size < m {
        let mut next = DenseMatrix::zeros(2 * size, 2 * size);
        for i in 0..size {
            for j in 0..size {
                let v = h.get(i, j);
                next.set(i, j, v);
                next.set(i, j + size, v);
                next.set(i + size, j, v);
                next.set(i + size, j + size, -v);
            }
        }
        h = next;
        size *= 2;
    }
    Ok(h)
}

/// `[Band | BlockDiag | Hadamard | I]`, `m × 4m`, unit-norm columns.
///
/// The band block is tridiagonal; the block-diagonal part has `m/4 × m/4`
/// blocks and its last row is replaced by a full row. All random entries are
/// standard normal draws from a seeded ChaCha8 stream.
pub fn build_concat_dictionary(m: usize, seed: u64) -> Result<DenseMatrix> {
    check_power_of_two(m, "build_concat_dictionary")?;
    if m < 4 {
        return Err(Error::invalid(format!("build_concat_dictionary needs m >= 4, got {m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = || -> f64 { rng.sample(StandardNormal) };
    let mut a = DenseMatrix::zeros(m, 4 * m);

    for i in 0..m {
        for j in i.saturating_sub(1)..(i + 2).min(m) {
            a.set(i, j, gauss());
        }
    }

    let block = m / 4;
    for start in (0..m).step_by(block) {
        for i in start..start + block {
            for j in start..start + block {
                a.set(i, m + j, gauss());
            }
        }
    }
    for j in 0..m {
        a.set(m - 1, m + j, gauss());
    }

    let h = hadamard(m)?;
    for i in 0..m {
        for j in 0..m {
            a.set(i, 2 * m + j, h.get(i, j));
        }
        a.set(i, 3 * m + i, 1.0);
    }

    a.normalize_columns();
    Ok(a)
}

/// `max_{j∉S} ‖A_S⁺ a_j‖₁`; zero for an empty support.
pub fn erc_check(a: &DenseMatrix, support: &[usize]) -> Result<f64> {
    if support.is_empty() {
        return Ok(0.0);
    }
    let n = a.cols();
    let mut in_support = vec![false; n];
    for &j in support {
        if j >= n {
            return Err(Error::invalid(format!("support index {j} out of range for {n} columns")));
        }
        if in_support[j] {
            return Err(Error::invalid(format!("support index {j} repeated")));
        }
        in_support[j] = true;
    }
    let cols: Vec<Vec<f64>> = support.iter().map(|&j| a.column(j)).collect();
    let s = cols.len();
    let mut g = DenseMatrix::zeros(s, s);
    for p in 0..s {
        for q in 0..s {
            g.set(p, q, crate::linalg::dot(&cols[p], &cols[q]));
        }
    }
    let chol = Cholesky::new(&g).map_err(|_| {
        Error::Degenerate("support columns are linearly dependent; recovery cannot be certified".into())
    })?;

    let mut worst = 0.0f64;
    let mut rhs = vec![0.0; s];
    for j in (0..n).filter(|&j| !in_support[j]) {
        let aj = a.column(j);
        for (r, c) in rhs.iter_mut().zip(&cols) {
            *r = crate::linalg::dot(c, &aj);
        }
        let mut coef = rhs.clone();
        chol.solve_in_place(&mut coef);
        worst = worst.max(coef.iter().map(|c| c.abs()).sum());
    }
    Ok(worst)
}

/// A Basis Pursuit instance `min ‖x‖₁ s.t. Ax = b`.
#[derive(Clone, Debug)]
pub struct BpInstance {
    pub set: Arc<AffineSet>,
    pub x_star: Option<Vec<f64>>,
    pub erc_value: Option<f64>,
}

impl BpInstance {
    pub fn new(a: DenseMatrix, b: Vec<f64>, x_star: Option<Vec<f64>>) -> Result<Self> {
        if let Some(x) = &x_star {
            crate::error::check_dim("planted solution", a.cols(), x.len())?;
        }
        let erc_value = match &x_star {
            Some(x) => {
                let support: Vec<usize> = (0..x.len()).filter(|&i| x[i] != 0.0).collect();
                if support.len() > a.rows() {
                    None
                } else {
                    erc_check(&a, &support).ok()
                }
            }
            None => None,
        };
        let set = Arc::new(AffineSet::new(a, b)?);
        Ok(BpInstance {
            set,
            x_star,
            erc_value,
        })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        self.set.matrix()
    }

    pub fn rhs(&self) -> &[f64] {
        self.set.rhs()
    }

    pub fn sigma_min(&self) -> f64 {
        self.set.sigma_min()
    }

    pub fn m(&self) -> usize {
        self.set.constraints()
    }

    pub fn n(&self) -> usize {
        self.set.dim()
    }

    /// The planted solution is the unique minimizer.
    pub fn certified(&self) -> bool {
        self.x_star.is_some() && self.erc_value.is_some_and(|e| e < 1.0)
    }

    /// `‖x*‖₁`, when a solution is planted.
    pub fn f_star(&self) -> Option<f64> {
        self.x_star.as_deref().map(crate::oracles::l1_value)
    }

    pub fn to_text(&self) -> String {
        let a = self.matrix();
        let mut out = String::new();
        let _ = writeln!(out, "{FORMAT_TAG} {} {}", a.rows(), a.cols());
        let mut line = |v: &[f64]| {
            let mut first = true;
            for x in v {
                if !first {
                    out.push(' ');
                }
                first = false;
                let _ = write!(out, "{x:?}");
            }
            out.push('\n');
        };
        for i in 0..a.rows() {
            line(a.row(i));
        }
        line(self.rhs());
        if let Some(x) = &self.x_star {
            line(x);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| Error::invalid("empty instance file"))?;
        let rest = header
            .strip_prefix(FORMAT_TAG)
            .ok_or_else(|| Error::invalid(format!("instance header must start with `{FORMAT_TAG}`")))?;
        let dims: Vec<usize> = rest
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::invalid(format!("bad dimension `{t}` in header"))))
            .collect::<Result<_>>()?;
        let [m, n] = dims[..] else {
            return Err(Error::invalid("instance header must give m and n"));
        };
        let parse_row = |line: &str, len: usize, what: &str| -> Result<Vec<f64>> {
            let v: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::invalid(format!("bad number `{t}` in {what}"))))
                .collect::<Result<_>>()?;
            if v.len() != len {
                return Err(Error::invalid(format!("{what} has {} entries, expected {len}", v.len())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("{what} has non-finite entries")));
            }
            Ok(v)
        };
        let mut data = Vec::with_capacity(m * n);
        for i in 0..m {
            let line = lines
                .next()
                .ok_or_else(|| Error::invalid(format!("missing row {i} of A")))?;
            data.extend(parse_row(line, n, "matrix row")?);
        }
        let b = parse_row(lines.next().ok_or_else(|| Error::invalid("missing b"))?, m, "b")?;
        let x_star = lines.next().map(|l| parse_row(l, n, "x*")).transpose()?;
        if lines.next().is_some() {
            return Err(Error::invalid("trailing data after x*"));
        }
        BpInstance::new(DenseMatrix::from_row_major(m, n, data)?, b, x_star)
    }
}

/// Draws a random support and standard normal nonzeros, sets `b = A x*`, and
/// redraws the support until the exact recovery condition certifies
/// uniqueness. After the attempts run out, the attempt with the smallest ERC
/// value is returned uncertified.
pub fn plant_sparse_solution(a: &DenseMatrix, support_size: usize, seed: u64) -> Result<BpInstance> {
    let (m, n) = (a.rows(), a.cols());
    if support_size > m {
        return Err(Error::invalid(format!(
            "support size {support_size} exceeds the number of rows {m}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for _ in 0..PLANT_ATTEMPTS {
        let mut support = index::sample(&mut rng, n, support_size).into_vec();
        support.sort_unstable();
        let mut x = vec![0.0; n];
        for &j in &support {
            let mut v: f64 = rng.sample(StandardNormal);
            while v == 0.0 {
                v = rng.sample(StandardNormal);
            }
            x[j] = v;
        }
        let erc = match erc_check(a, &support) {
            Ok(e) => e,
            Err(Error::Degenerate(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        if best.as_ref().is_none_or(|(e, _)| erc < *e) {
            best = Some((erc, x));
        }
        if erc < 1.0 {
            break;
        }
    }
    let (erc, x) = best.expect("at least one attempt");
    if erc >= 1.0 {
        log::warn!("no support passed the exact recovery condition in {PLANT_ATTEMPTS} attempts (best {erc})");
    }
    let b = a.matvec(&x)?;
    let mut inst = BpInstance::new(a.clone(), b, Some(x))?;
    inst.erc_value = erc.is_finite().then_some(erc);
    Ok(inst)
}

/// `Aᵀb`
pub fn default_start(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    a.tmatvec(b)
}

/// The dictionary with `m` rows and a planted solution of the given support
/// size, both drawn from `seed`.
pub fn generate_instance(m: usize, support_size: usize, seed: u64) -> Result<BpInstance> {
    let a = build_concat_dictionary(m, seed)?;
    plant_sparse_solution(&a, support_size, seed.wrapping_add(1))
}

/// `m = 128`, `n = 512`, support size 4.
pub fn desk_instance(seed: u64) -> Result<BpInstance> {
    generate_instance(DESK_M, DESK_SUPPORT, seed)
}
