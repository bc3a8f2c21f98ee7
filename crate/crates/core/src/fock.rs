//! Brute-force Fock-space oracle for small blocks.
//!
//! Operators are dense `2^n x 2^n` complex matrices in the occupation basis.
//! Site 1 is the leftmost tensor factor; the Jordan-Wigner string of `Z`s sits
//! to the left of each site.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::entropy::{block_entropy, EntropyError};
use crate::model::{breakpoints, ChainParams};
use crate::quadrature::{integrate_periodic, QuadratureError, QuadratureSpec};
use crate::spectrum::{canonical_rotation, skew_eigenvalues, SpectrumError};
use crate::symbol::s_components;
use crate::toeplitz::{assemble, omega_from, ToeplitzError};

pub const DEFAULT_CAP: usize = 10;
pub const CAR_TOL: f64 = 1e-12;

// thresholds used by the suite's pass/fail verdict
pub const ENTROPY_TOL: f64 = 1e-9;
pub const TRACE_TOL: f64 = 1e-12;
pub const POSITIVITY_TOL: f64 = 1e-12;
pub const SPECTRUM_TOL: f64 = 1e-10;
pub const MOMENT_TOL: f64 = 1e-8;
pub const WICK_TOL: f64 = 1e-9;
pub const ODD_TOL: f64 = 1e-12;
pub const FACTORIZATION_TOL: f64 = 1e-9;
pub const ORTHONORMALITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FockError {
    #[error("block size {n} outside 1..={cap}")]
    Cap { n: usize, cap: usize },
    #[error("rotated operators violate the anticommutation relations (residual {residual:e})")]
    Car { residual: f64 },
    #[error("{0}")]
    Shape(String),
    #[error("occupation parameter {value} outside [-1, 1]")]
    Lambda { value: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Toeplitz(#[from] ToeplitzError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Entropy(#[from] EntropyError),
}

type CMat = DMatrix<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    pub n: usize,
    pub m: CMat,
}

impl FockOperator {
    pub fn identity(n: usize) -> Self {
        let d = 1 << n;
        Self {
            n,
            m: CMat::identity(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            n: self.n,
            m: self.m.adjoint(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            n: self.n,
            m: &self.m * &other.m,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            n: self.n,
            m: &self.m + &other.m,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            n: self.n,
            m: &self.m - &other.m,
        }
    }

    pub fn scale(&self, z: Complex64) -> Self {
        Self {
            n: self.n,
            m: &self.m * z,
        }
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        self.mul(other).add(&other.mul(self))
    }

    pub fn trace(&self) -> Complex64 {
        self.m.trace()
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.m.iter().fold(0.0f64, |a, z| a.max(z.norm()))
    }
}

fn check_cap(n: usize) -> Result<(), FockError> {
    if n == 0 || n > DEFAULT_CAP {
        return Err(FockError::Cap {
            n,
            cap: DEFAULT_CAP,
        });
    }
    Ok(())
}

fn kron_all(factors: &[CMat]) -> CMat {
    factors
        .iter()
        .skip(1)
        .fold(factors[0].clone(), |acc, f| acc.kronecker(f))
}

/// Annihilators `b_1, ..., b_n`.
pub fn jw_fermions(n: usize) -> Result<Vec<FockOperator>, FockError> {
    check_cap(n)?;
    let id = CMat::identity(2, 2);
    let z = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(-1.0)]));
    let b = CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
    Ok((0..n)
        .map(|j| {
            let factors: Vec<CMat> = (0..n)
                .map(|k| match k.cmp(&j) {
                    std::cmp::Ordering::Less => z.clone(),
                    std::cmp::Ordering::Equal => b.clone(),
                    std::cmp::Ordering::Greater => id.clone(),
                })
                .collect();
            FockOperator {
                n,
                m: kron_all(&factors),
            }
        })
        .collect())
}

/// `d_{2j-1} = b_j + b_j^*`, `d_{2j} = i (b_j - b_j^*)`.
pub fn majoranas(n: usize) -> Result<Vec<FockOperator>, FockError> {
    let b = jw_fermions(n)?;
    let mut d = Vec::with_capacity(2 * n);
    for bj in &b {
        let bd = bj.adjoint();
        d.push(bj.add(&bd));
        d.push(bj.sub(&bd).scale(Complex64::i()));
    }
    Ok(d)
}

/// Max residual of `{c_i, c_j} = 0` and `{c_i^*, c_j} = delta_ij`.
pub fn car_residual(ops: &[FockOperator]) -> f64 {
    let Some(first) = ops.first() else { return 0.0 };
    let id = FockOperator::identity(first.n);
    let mut worst = 0.0f64;
    for (i, ci) in ops.iter().enumerate() {
        let cid = ci.adjoint();
        for (j, cj) in ops.iter().enumerate() {
            worst = worst.max(ci.anticommutator(cj).max_abs());
            let mixed = cid.anticommutator(cj);
            let r = if i == j {
                mixed.sub(&id).max_abs()
            } else {
                mixed.max_abs()
            };
            worst = worst.max(r);
        }
    }
    worst
}

/// Max residual of `d_k^* = d_k` and `{d_k, d_l} = 2 delta_kl`.
pub fn majorana_residual(ops: &[FockOperator]) -> f64 {
    let Some(first) = ops.first() else { return 0.0 };
    let two = FockOperator::identity(first.n).scale(c(2.0));
    let mut worst = 0.0f64;
    for (k, dk) in ops.iter().enumerate() {
        worst = worst.max(dk.sub(&dk.adjoint()).max_abs());
        for (l, dl) in ops.iter().enumerate() {
            let a = dk.anticommutator(dl);
            let r = if k == l {
                a.sub(&two).max_abs()
            } else {
                a.max_abs()
            };
            worst = worst.max(r);
        }
    }
    worst
}

/// `c_i = sum_k (Q_{2i-1,k} / 2 - i Q_{2i,k} / 2) d_k`.
///
/// With `Q = 1` this reproduces `b_i`.
pub fn rotated_fermions(n: usize, q: &DMatrix<f64>) -> Result<Vec<FockOperator>, FockError> {
    check_cap(n)?;
    if q.nrows() != 2 * n || q.ncols() != 2 * n {
        return Err(FockError::Shape(format!(
            "rotation is {}x{}, expected {}x{}",
            q.nrows(),
            q.ncols(),
            2 * n,
            2 * n
        )));
    }
    let d = majoranas(n)?;
    let dim = 1 << n;
    let ops: Vec<FockOperator> = (0..n)
        .map(|i| {
            let mut m = CMat::zeros(dim, dim);
            for (k, dk) in d.iter().enumerate() {
                let w = Complex64::new(0.5 * q[(2 * i, k)], -0.5 * q[(2 * i + 1, k)]);
                if w != Complex64::new(0.0, 0.0) {
                    m += &dk.m * w;
                }
            }
            FockOperator { n, m }
        })
        .collect();
    let residual = car_residual(&ops);
    if residual > CAR_TOL {
        return Err(FockError::Car { residual });
    }
    Ok(ops)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDensityMatrix {
    pub n: usize,
    pub rho: FockOperator,
    pub lambdas_used: Vec<f64>,
    /// Difference between the products taken in forward and reverse order.
    pub ordering_residual: f64,
    pub hermitian_residual: f64,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
}

impl ReducedDensityMatrix {
    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    /// `-tr(rho log rho)` from the dense spectrum.
    pub fn entropy(&self) -> f64 {
        self.eigenvalues
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.ln())
            .sum()
    }

    /// Distance between the dense spectrum and the `2^n` products
    /// `prod_i (1 +- lambda_i) / 2`, both sorted.
    pub fn spectrum_residual(&self) -> f64 {
        let expect = product_eigenvalues(&self.lambdas_used);
        self.eigenvalues
            .iter()
            .zip(&expect)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()))
    }
}

/// All `prod_i (1 + (-1)^{e_i} lambda_i) / 2`, ascending.
pub fn product_eigenvalues(lambdas: &[f64]) -> Vec<f64> {
    let mut out = vec![1.0];
    for &l in lambdas {
        out = out
            .iter()
            .flat_map(|&p| [p * 0.5 * (1.0 + l), p * 0.5 * (1.0 - l)])
            .collect();
    }
    out.sort_by(f64::total_cmp);
    out
}

/// `rho = prod_i [(1 + lambda_i)/2 c_i^* c_i + (1 - lambda_i)/2 c_i c_i^*]`.
pub fn reduced_density_matrix(
    n: usize,
    lambdas: &[f64],
    c_ops: &[FockOperator],
) -> Result<ReducedDensityMatrix, FockError> {
    check_cap(n)?;
    if lambdas.len() != n || c_ops.len() != n {
        return Err(FockError::Shape(format!(
            "{} occupations and {} fermions for n = {n}",
            lambdas.len(),
            c_ops.len()
        )));
    }
    if let Some(&value) = lambdas.iter().find(|l| l.is_nan() || l.abs() > 1.0) {
        return Err(FockError::Lambda { value });
    }
    let factors: Vec<FockOperator> = lambdas
        .iter()
        .zip(c_ops)
        .map(|(&l, ci)| {
            let cd = ci.adjoint();
            cd.mul(ci)
                .scale(c(0.5 * (1.0 + l)))
                .add(&ci.mul(&cd).scale(c(0.5 * (1.0 - l))))
        })
        .collect();
    let id = FockOperator::identity(n);
    let rho = factors.iter().fold(id.clone(), |acc, f| acc.mul(f));
    let reversed = factors.iter().rev().fold(id, |acc, f| acc.mul(f));
    let ordering_residual = rho.sub(&reversed).max_abs();
    let hermitian_residual = rho.sub(&rho.adjoint()).max_abs();
    let herm = (&rho.m + rho.m.adjoint()) * c(0.5);
    let mut eigenvalues: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    Ok(ReducedDensityMatrix {
        n,
        rho,
        lambdas_used: lambdas.to_vec(),
        ordering_residual,
        hermitian_residual,
        eigenvalues,
    })
}

fn expect(rho: &FockOperator, a: &FockOperator) -> Complex64 {
    // tr(rho a) without forming the product
    let m = &rho.m;
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..m.nrows() {
        for k in 0..m.ncols() {
            acc += m[(i, k)] * a.m[(k, i)];
        }
    }
    acc
}

/// `max_{k,l} |tr(rho d_k d_l) - Omega_kl|`.
pub fn moment_check(
    rho: &FockOperator,
    d_ops: &[FockOperator],
    omega: &CMat,
) -> Result<f64, FockError> {
    let m = d_ops.len();
    if omega.nrows() != m || omega.ncols() != m {
        return Err(FockError::Shape(format!(
            "{m} Majoranas against a {}x{} matrix",
            omega.nrows(),
            omega.ncols()
        )));
    }
    let mut worst = 0.0f64;
    for k in 0..m {
        for l in 0..m {
            let v = expect(rho, &d_ops[k].mul(&d_ops[l]));
            worst = worst.max((v - omega[(k, l)]).norm());
        }
    }
    Ok(worst)
}

/// `max_{j,k} |tr(rho b_j^* b_k) - (1/2pi) int (s0 - s3) e^{-i(k-j) xi}|`.
///
/// With block `(j,k)` of the Majorana matrix equal to the coefficient of index
/// `k - j`, expanding `b = (d_odd - i d_even) / 2` leaves `s0 - s3` as the
/// only surviving combination.
pub fn fermion_two_point_check(
    params: &ChainParams,
    rho: &FockOperator,
    b_ops: &[FockOperator],
    spec: &QuadratureSpec,
) -> Result<f64, FockError> {
    let n = b_ops.len();
    let quad = spec.with_breakpoints(breakpoints(params));
    let mut coeff = Vec::with_capacity(2 * n);
    for x in -(n as i64 - 1)..=(n as i64 - 1) {
        let est = integrate_periodic(
            |xi| {
                // gapless points are panel endpoints and never sampled
                let w = s_components(params, xi).map(|s| s.s0 - s.s3).unwrap_or(0.5);
                Complex64::from_polar(w, -(x as f64) * xi)
            },
            &quad,
        )?;
        coeff.push(est.value);
    }
    let mut worst = 0.0f64;
    for j in 0..n {
        let bjd = b_ops[j].adjoint();
        for k in 0..n {
            let v = expect(rho, &bjd.mul(&b_ops[k]));
            let x = k as i64 - j as i64 + n as i64 - 1;
            worst = worst.max((v - coeff[x as usize]).norm());
        }
    }
    Ok(worst)
}

fn pairing_sum(idx: &[usize], two_point: &dyn Fn(usize, usize) -> Complex64) -> Complex64 {
    if idx.is_empty() {
        return c(1.0);
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 1..idx.len() {
        let rest: Vec<usize> = idx[1..]
            .iter()
            .enumerate()
            .filter(|(p, _)| p + 1 != j)
            .map(|(_, &v)| v)
            .collect();
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        acc += two_point(idx[0], idx[j]) * sign * pairing_sum(&rest, two_point);
    }
    acc
}

/// `|tr(rho d_{k1} ... d_{km}) - pairing sum|` for even `m`, `|tr(rho d_{k1} ... d_{km})|`
/// for odd `m`. Indices are zero-based positions into `d_ops`.
pub fn wick_check(
    rho: &FockOperator,
    d_ops: &[FockOperator],
    indices: &[usize],
) -> Result<f64, FockError> {
    if indices.len() > 8 {
        return Err(FockError::Shape(format!(
            "monomial of degree {} exceeds 8",
            indices.len()
        )));
    }
    if let Some(&k) = indices.iter().find(|&&k| k >= d_ops.len()) {
        return Err(FockError::Shape(format!("Majorana index {k} out of range")));
    }
    let id = FockOperator::identity(rho.n);
    let product = indices.iter().fold(id, |acc, &k| acc.mul(&d_ops[k]));
    let full = expect(rho, &product);
    if indices.len() % 2 == 1 {
        return Ok(full.norm());
    }
    let positions: Vec<usize> = (0..indices.len()).collect();
    let pair = |a: usize, b: usize| expect(rho, &d_ops[indices[a]].mul(&d_ops[indices[b]]));
    Ok((full - pairing_sum(&positions, &pair)).norm())
}

/// `e_11 = c^* c`, `e_12 = c^*`, `e_21 = c`, `e_22 = c c^*`, indexed `[a][b]` with `a, b` in `{0, 1}`.
pub fn e_operators(ci: &FockOperator) -> [[FockOperator; 2]; 2] {
    let cd = ci.adjoint();
    [[cd.mul(ci), cd.clone()], [ci.clone(), ci.mul(&cd)]]
}

fn multi_index(mut code: usize, n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .map(|_| {
            let pair = (code & 1, (code >> 1) & 1);
            code >>= 2;
            pair
        })
        .collect()
}

fn product_of(es: &[[[FockOperator; 2]; 2]], idx: &[(usize, usize)]) -> FockOperator {
    let id = FockOperator::identity(es[0][0][0].n);
    es.iter()
        .zip(idx)
        .fold(id, |acc, (e, &(a, b))| acc.mul(&e[a][b]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FactorizationReport {
    pub cases: usize,
    pub residual: f64,
    pub com1_residual: f64,
    pub com2_residual: f64,
}

impl FactorizationReport {
    pub fn max_residual(&self) -> f64 {
        self.residual
            .max(self.com1_residual)
            .max(self.com2_residual)
    }
}

/// Checks `tr(rho prod_i e^(i)_{a_i b_i}) = prod_i delta_{a_i b_i} tr(rho e^(i)_{a_i a_i})`
/// over all `4^n` multi-indices, and both commutation rules of the `e`s.
pub fn factorization_check(
    n: usize,
    c_ops: &[FockOperator],
    rho: &FockOperator,
) -> Result<FactorizationReport, FockError> {
    if n == 0 || n > 4 || c_ops.len() != n {
        return Err(FockError::Shape(format!(
            "factorization check needs 1 <= n <= 4 fermions, got n = {n}"
        )));
    }
    let es: Vec<_> = c_ops.iter().map(e_operators).collect();
    let diag: Vec<[Complex64; 2]> = es
        .iter()
        .map(|e| [expect(rho, &e[0][0]), expect(rho, &e[1][1])])
        .collect();
    let cases = 1 << (2 * n);
    let residual = (0..cases)
        .into_par_iter()
        .map(|code| {
            let idx = multi_index(code, n);
            let lhs = expect(rho, &product_of(&es, &idx));
            let rhs = idx.iter().zip(&diag).fold(
                c(1.0),
                |acc, (&(a, b), d)| if a == b { acc * d[a] } else { c(0.0) },
            );
            (lhs - rhs).norm()
        })
        .reduce(|| 0.0, f64::max);

    let mut com1 = 0.0f64;
    let mut com2 = 0.0f64;
    let quads: Vec<(usize, usize, usize, usize)> = (0..16)
        .map(|k| (k & 1, (k >> 1) & 1, (k >> 2) & 1, (k >> 3) & 1))
        .collect();
    for i in 0..n {
        for j in 0..n {
            for &(a, b, g, d) in &quads {
                let lhs = es[i][a][b].mul(&es[j][g][d]);
                if i != j {
                    // (a+b)(g+d) parity with one-based labels equals that of zero-based ones
                    let sign = if ((a + b) * (g + d)) % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    };
                    let rhs = es[j][g][d].mul(&es[i][a][b]).scale(c(sign));
                    com1 = com1.max(lhs.sub(&rhs).max_abs());
                } else {
                    let r = if b == g {
                        lhs.sub(&es[i][a][d]).max_abs()
                    } else {
                        lhs.max_abs()
                    };
                    com2 = com2.max(r);
                }
            }
        }
    }
    Ok(FactorizationReport {
        cases,
        residual,
        com1_residual: com1,
        com2_residual: com2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrthonormalityReport {
    pub pairs: usize,
    pub residual: f64,
    /// `max_l |tr(e^(l)_{aa}) - 2^{n-1}|`
    pub trace_residual: f64,
}

/// `tr(E_A E_B^*) = delta_AB` over all pairs of products `E = prod_i e^(i)_{a_i b_i}`.
pub fn basis_orthonormality_check(
    n: usize,
    c_ops: &[FockOperator],
) -> Result<OrthonormalityReport, FockError> {
    if n == 0 || n > 3 || c_ops.len() != n {
        return Err(FockError::Shape(format!(
            "orthonormality check needs 1 <= n <= 3 fermions, got n = {n}"
        )));
    }
    let es: Vec<_> = c_ops.iter().map(e_operators).collect();
    let count = 1 << (2 * n);
    let basis: Vec<FockOperator> = (0..count)
        .map(|code| product_of(&es, &multi_index(code, n)))
        .collect();
    let residual = (0..count * count)
        .into_par_iter()
        .map(|p| {
            let (a, b) = (p / count, p % count);
            let v = basis[a].mul(&basis[b].adjoint()).trace();
            let target = if a == b { 1.0 } else { 0.0 };
            (v - c(target)).norm()
        })
        .reduce(|| 0.0, f64::max);
    let half = (1usize << (n - 1)) as f64;
    let trace_residual = es
        .iter()
        .flat_map(|e| [e[0][0].trace(), e[1][1].trace()])
        .fold(0.0f64, |acc, t| acc.max((t - c(half)).norm()));
    Ok(OrthonormalityReport {
        pairs: count * count,
        residual,
        trace_residual,
    })
}

/// Everything the oracle checks for one parameter point and block size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub params: ChainParams,
    pub n: usize,
    pub lambdas: Vec<f64>,
    pub entropy_fock: f64,
    pub entropy_toeplitz: f64,
    pub entropy_residual: f64,
    pub trace: f64,
    pub min_eigenvalue: f64,
    pub spectrum_residual: f64,
    pub ordering_residual: f64,
    pub car_residual: f64,
    pub moment_residual: f64,
    pub fermion_two_point_residual: f64,
    /// `max |tr(rho c_i c_j)|`
    pub mixed_moment_residual: f64,
    /// `max |tr(rho c_i^* c_j) - delta_ij (1 + lambda_i) / 2|`
    pub occupation_residual: f64,
    /// Exhaustive over degree-4 monomials, only for `n <= 3`.
    pub wick_residual: Option<f64>,
    /// Exhaustive over degree-3 monomials, only for `n <= 3`.
    pub odd_residual: Option<f64>,
    pub factorization: Option<FactorizationReport>,
    pub orthonormality: Option<OrthonormalityReport>,
    pub passed: bool,
}

fn all_monomials(m: usize, degree: usize) -> Vec<Vec<usize>> {
    (0..m.pow(degree as u32))
        .map(|mut code| {
            (0..degree)
                .map(|_| {
                    let k = code % m;
                    code /= m;
                    k
                })
                .collect()
        })
        .collect()
}

pub fn run_oracle_suite(
    params: &ChainParams,
    n: usize,
    spec: &QuadratureSpec,
) -> Result<OracleReport, FockError> {
    check_cap(n)?;
    let t = assemble(params, n, spec)?;
    let rotation = canonical_rotation(&t.entries)?;
    let spectrum = skew_eigenvalues(&t.entries)?;
    let entropy_toeplitz = block_entropy(&spectrum)?;

    let c_ops = rotated_fermions(n, &rotation.q)?;
    let car_residual = car_residual(&c_ops);
    let rdm = reduced_density_matrix(n, &rotation.lambdas, &c_ops)?;
    let rho = &rdm.rho;
    let d_ops = majoranas(n)?;
    let b_ops = jw_fermions(n)?;
    let moment_residual = moment_check(rho, &d_ops, &omega_from(&t))?;
    let fermion_two_point_residual = fermion_two_point_check(params, rho, &b_ops, spec)?;

    let mut mixed = 0.0f64;
    let mut occupation = 0.0f64;
    for (i, ci) in c_ops.iter().enumerate() {
        let cid = ci.adjoint();
        for (j, cj) in c_ops.iter().enumerate() {
            mixed = mixed.max(expect(rho, &ci.mul(cj)).norm());
            let target = if i == j {
                0.5 * (1.0 + rotation.lambdas[i])
            } else {
                0.0
            };
            occupation = occupation.max((expect(rho, &cid.mul(cj)) - c(target)).norm());
        }
    }

    let (wick_residual, odd_residual) = if n <= 3 {
        let max_over = |degree: usize| {
            all_monomials(2 * n, degree)
                .par_iter()
                .map(|idx| wick_check(rho, &d_ops, idx))
                .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
        };
        (Some(max_over(4)?), Some(max_over(3)?))
    } else {
        (None, None)
    };
    let factorization = if n <= 4 {
        Some(factorization_check(n, &c_ops, rho)?)
    } else {
        None
    };
    let orthonormality = if n <= 3 {
        Some(basis_orthonormality_check(n, &c_ops)?)
    } else {
        None
    };

    let entropy_fock = rdm.entropy();
    let entropy_residual = (entropy_fock - entropy_toeplitz).abs();
    let trace = rdm.trace();
    let passed = entropy_residual <= ENTROPY_TOL
        && (trace - 1.0).abs() <= TRACE_TOL
        && rdm.min_eigenvalue() >= -POSITIVITY_TOL
        && rdm.spectrum_residual() <= SPECTRUM_TOL
        && moment_residual <= MOMENT_TOL
        && fermion_two_point_residual <= MOMENT_TOL
        && mixed <= WICK_TOL
        && occupation <= MOMENT_TOL
        && wick_residual.is_none_or(|r| r <= WICK_TOL)
        && odd_residual.is_none_or(|r| r <= ODD_TOL)
        && factorization.is_none_or(|f| f.max_residual() <= FACTORIZATION_TOL)
        && orthonormality.is_none_or(|o| o.residual.max(o.trace_residual) <= ORTHONORMALITY_TOL);

    Ok(OracleReport {
        params: *params,
        n,
        entropy_fock,
        entropy_toeplitz,
        entropy_residual,
        trace,
        min_eigenvalue: rdm.min_eigenvalue(),
        spectrum_residual: rdm.spectrum_residual(),
        ordering_residual: rdm.ordering_residual,
        lambdas: rotation.lambdas,
        car_residual,
        moment_residual,
        fermion_two_point_residual,
        mixed_moment_residual: mixed,
        occupation_residual: occupation,
        wick_residual,
        odd_residual,
        factorization,
        orthonormality,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::entropy_h;
    use crate::toeplitz::omega;

    fn reference() -> ChainParams {
        ChainParams::new(1.0, 3.0, 0.5, 0.3).unwrap()
    }

    fn canonical_state(
        p: &ChainParams,
        n: usize,
    ) -> (Vec<f64>, Vec<FockOperator>, ReducedDensityMatrix) {
        let t = assemble(p, n, &QuadratureSpec::default()).unwrap();
        let rot = canonical_rotation(&t.entries).unwrap();
        let c_ops = rotated_fermions(n, &rot.q).unwrap();
        let rdm = reduced_density_matrix(n, &rot.lambdas, &c_ops).unwrap();
        (rot.lambdas, c_ops, rdm)
    }

    #[test]
    fn single_site_operators() {
        let b = &jw_fermions(1).unwrap()[0];
        let expect = CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        assert_eq!(b.m, expect);
        let anti = b.adjoint().anticommutator(b);
        assert_eq!(anti, FockOperator::identity(1));
        let d = majoranas(1).unwrap();
        assert_eq!(d[0].mul(&d[0]), FockOperator::identity(1));
        assert_eq!(d[0].anticommutator(&d[1]).max_abs(), 0.0);
    }

    #[test]
    fn car_and_majorana_relations() {
        let b2 = jw_fermions(2).unwrap();
        assert_eq!(b2[0].anticommutator(&b2[1]).max_abs(), 0.0);
        assert!(car_residual(&jw_fermions(3).unwrap()) < 1e-13);
        assert!(majorana_residual(&majoranas(2).unwrap()) < 1e-13);
        assert!(matches!(jw_fermions(11), Err(FockError::Cap { .. })));
        assert!(matches!(majoranas(0), Err(FockError::Cap { .. })));
    }

    #[test]
    fn identity_rotation_gives_jordan_wigner() {
        for n in 1..=3 {
            let c_ops = rotated_fermions(n, &DMatrix::identity(2 * n, 2 * n)).unwrap();
            assert_eq!(c_ops, jw_fermions(n).unwrap());
        }
    }

    #[test]
    fn random_orthogonal_rotation_keeps_car() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let a = DMatrix::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0));
        let q = a.qr().q();
        assert!(car_residual(&rotated_fermions(2, &q).unwrap()) <= 1e-12);
        let mut bad = q.clone();
        bad[(0, 0)] += 0.1;
        assert!(matches!(
            rotated_fermions(2, &bad),
            Err(FockError::Car { .. })
        ));
    }

    #[test]
    fn single_site_density_matrices() {
        let b = jw_fermions(1).unwrap();
        let r0 = reduced_density_matrix(1, &[0.0], &b).unwrap();
        assert_eq!(r0.rho, FockOperator::identity(1).scale(c(0.5)));
        let r = reduced_density_matrix(1, &[0.6], &b).unwrap();
        assert!((r.eigenvalues[0] - 0.2).abs() < 1e-15 && (r.eigenvalues[1] - 0.8).abs() < 1e-15);
        assert!(matches!(
            reduced_density_matrix(1, &[1.5], &b),
            Err(FockError::Lambda { .. })
        ));
    }

    #[test]
    fn entropy_matches_occupations_at_reference() {
        let (lambdas, _, rdm) = canonical_state(&reference(), 3);
        let sum: f64 = lambdas.iter().map(|&l| entropy_h(l).unwrap()).sum();
        assert!((rdm.entropy() - sum).abs() < 1e-9);
        assert!((rdm.trace() - 1.0).abs() < 1e-12);
        assert!(rdm.spectrum_residual() < 1e-10);
        assert!(rdm.ordering_residual < 1e-14);
        assert!(rdm.eigenvalues.iter().all(|&p| p > 0.0 && p < 1.0));
    }

    #[test]
    fn moments_at_infinite_temperature() {
        let p = ChainParams::infinite_temperature(0.5, 0.3).unwrap();
        let spec = QuadratureSpec::default();
        let (_, _, rdm) = canonical_state(&p, 2);
        let om = omega(&p, 2, &spec).unwrap();
        assert!(moment_check(&rdm.rho, &majoranas(2).unwrap(), &om).unwrap() <= 1e-12);
        assert!((&rdm.rho.m - CMat::identity(4, 4) * c(0.25)).camax() <= 1e-12);
    }

    #[test]
    fn moments_at_reference() {
        let p = reference();
        let spec = QuadratureSpec::default();
        for n in [2, 3] {
            let (lambdas, c_ops, rdm) = canonical_state(&p, n);
            let d = majoranas(n).unwrap();
            let om = omega(&p, n, &spec).unwrap();
            assert!(moment_check(&rdm.rho, &d, &om).unwrap() <= 1e-8);
            for dk in &d {
                assert!((expect(&rdm.rho, &dk.mul(dk)) - c(1.0)).norm() < 1e-14);
            }
            let b = jw_fermions(n).unwrap();
            assert!(fermion_two_point_check(&p, &rdm.rho, &b, &spec).unwrap() <= 1e-8);
            for (i, ci) in c_ops.iter().enumerate() {
                let occ = expect(&rdm.rho, &ci.adjoint().mul(ci));
                assert!((occ - c(0.5 * (1.0 + lambdas[i]))).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn wick_examples() {
        let (_, _, rdm) = canonical_state(&reference(), 2);
        let d = majoranas(2).unwrap();
        assert!(wick_check(&rdm.rho, &d, &[0, 1, 2]).unwrap() <= 1e-12);
        assert!(wick_check(&rdm.rho, &d, &[0, 1, 2, 3]).unwrap() <= 1e-9);
        let (_, _, rdm3) = canonical_state(&reference(), 3);
        let d3 = majoranas(3).unwrap();
        assert!(wick_check(&rdm3.rho, &d3, &[0, 2, 3, 5]).unwrap() <= 1e-9);
        // a state that is not quasi-free fails the pairing rule
        let mut skewed = rdm.rho.clone();
        skewed.m[(0, 0)] += c(0.05);
        skewed.m[(3, 3)] -= c(0.05);
        assert!(wick_check(&skewed, &d, &[0, 1, 2, 3]).unwrap() > 1e-3);
    }

    #[test]
    fn factorization_and_orthonormality() {
        let b1 = jw_fermions(1).unwrap();
        let r1 = reduced_density_matrix(1, &[0.4], &b1).unwrap();
        let f1 = factorization_check(1, &b1, &r1.rho).unwrap();
        assert_eq!((f1.cases, f1.max_residual()), (4, 0.0));
        let o1 = basis_orthonormality_check(1, &b1).unwrap();
        assert_eq!((o1.pairs, o1.residual), (16, 0.0));

        let (_, c2, rdm2) = canonical_state(&reference(), 2);
        let f2 = factorization_check(2, &c2, &rdm2.rho).unwrap();
        assert!(f2.cases == 16 && f2.max_residual() <= 1e-10);
        let o2 = basis_orthonormality_check(2, &c2).unwrap();
        assert!(o2.pairs == 256 && o2.residual <= 1e-12 && o2.trace_residual <= 1e-12);

        let (_, c3, rdm3) = canonical_state(&reference(), 3);
        let f3 = factorization_check(3, &c3, &rdm3.rho).unwrap();
        assert!(f3.cases == 64 && f3.max_residual() <= 1e-9);
    }

    #[test]
    fn suite_passes_at_reference() {
        let r = run_oracle_suite(&reference(), 3, &QuadratureSpec::default()).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.wick_residual.is_some() && r.factorization.is_some());
    }

    #[test]
    fn product_eigenvalue_multiset() {
        let ev = product_eigenvalues(&[0.6, 0.2]);
        let expect = [0.08, 0.12, 0.32, 0.48];
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((ev.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
