//! Paired spectra of real skew-symmetric matrices and their real canonical
//! form `Q T Q^t = ⊕_j λ_j iσ₂`.
//!
//! Eigenvalues come from the Hermitian matrix `iT`, whose spectrum is
//! `{±λ_j}`. The rotation `Q` is assembled from its eigenvectors: for
//! `iT v = λ v` with `v = x + i y`, the real vectors satisfy `T x = λ y`,
//! `T y = -λ x`, so the plane `(√2 y, √2 x)` carries the block `+λ iσ₂`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

pub const SKEW_TOL: f64 = 1e-12;
pub const PAIRING_TOL: f64 = 1e-10;
pub const OVERSHOOT_TOL: f64 = 1e-9;
pub const ORTHOGONALITY_TOL: f64 = 1e-10;
pub const CANONICAL_TOL: f64 = 1e-8;

/// Upper clamp for reported `λ`, keeping `h(λ)` and `log(1 - λ)` finite.
pub const LAMBDA_CEILING: f64 = 1.0 - 1e-15;

// Relative size below which eigenvalues of iT are treated as one cluster
// around zero; their eigenvectors are not trusted to separate +λ from -λ.
const ZERO_CLUSTER: f64 = 1e-6;
const MAX_DEPTH: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectrumError {
    #[error("matrix must be square with even dimension, got {rows}x{cols}")]
    Shape { rows: usize, cols: usize },
    #[error("matrix is not skew-symmetric (max |T + T^t| = {residual:e})")]
    NotSkew { residual: f64 },
    #[error("eigenvalues of iT do not pair as ±λ (residual {residual:e})")]
    Pairing { residual: f64 },
    #[error("eigenvalue {value} exceeds 1 beyond tolerance")]
    Overshoot { value: f64 },
    #[error("could not build an orthonormal canonical basis: {0}")]
    Degenerate(String),
    #[error("canonical form residual {residual:e} exceeds tolerance")]
    Canonical { residual: f64 },
}

/// The `n` nonnegative numbers `λ_1 >= ... >= λ_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockSpectrum {
    pub n: usize,
    pub lambdas: Vec<f64>,
    pub pairing_residual: f64,
}

/// Orthogonal `Q` with `Q T Q^t = diag(λ) ⊗ iσ₂`, `λ` in the order of
/// [`BlockSpectrum::lambdas`].
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalRotation {
    pub n: usize,
    pub q: DMatrix<f64>,
    pub lambdas: Vec<f64>,
    pub canonical_residual: f64,
    pub orthogonality_residual: f64,
}

fn check_skew(t: &DMatrix<f64>) -> Result<usize, SpectrumError> {
    let (rows, cols) = t.shape();
    if rows != cols || rows % 2 != 0 {
        return Err(SpectrumError::Shape { rows, cols });
    }
    let residual = (t + t.transpose()).amax();
    if residual > SKEW_TOL * t.amax().max(1.0) {
        return Err(SpectrumError::NotSkew { residual });
    }
    Ok(rows / 2)
}

fn times_i(t: &DMatrix<f64>) -> DMatrix<Complex64> {
    t.map(|v| Complex64::new(0.0, v))
}

/// Unsigned paired eigenvalues of a real skew-symmetric matrix, descending.
pub fn skew_eigenvalues(t: &DMatrix<f64>) -> Result<BlockSpectrum, SpectrumError> {
    let n = check_skew(t)?;
    if t.iter().all(|&v| v == 0.0) {
        return Ok(BlockSpectrum {
            n,
            lambdas: vec![0.0; n],
            pairing_residual: 0.0,
        });
    }
    let mut ev: Vec<f64> = times_i(t).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    let dim = 2 * n;
    let mut lambdas = Vec::with_capacity(n);
    let mut pairing_residual = 0.0f64;
    for k in 0..n {
        let (lo, hi) = (ev[k], ev[dim - 1 - k]);
        pairing_residual = pairing_residual.max((hi + lo).abs());
        lambdas.push(0.5 * (hi - lo));
    }
    if pairing_residual > PAIRING_TOL {
        return Err(SpectrumError::Pairing {
            residual: pairing_residual,
        });
    }
    for l in lambdas.iter_mut() {
        if *l > 1.0 + OVERSHOOT_TOL {
            return Err(SpectrumError::Overshoot { value: *l });
        }
        *l = l.clamp(0.0, LAMBDA_CEILING);
    }
    Ok(BlockSpectrum {
        n,
        lambdas,
        pairing_residual,
    })
}

/// Rows spanning the canonical planes of `t` together with the block values.
fn canonical_rows(
    t: &DMatrix<f64>,
    depth: usize,
) -> Result<(DMatrix<f64>, Vec<f64>), SpectrumError> {
    let dim = t.nrows();
    let scale = t.amax();
    if scale == 0.0 || depth >= MAX_DEPTH {
        return Ok(identity_rows(t));
    }
    let eig = SymmetricEigen::new(times_i(&(t / scale)));
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let planes: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&k| eig.eigenvalues[k] > ZERO_CLUSTER)
        .collect();
    let p = planes.len();
    if 2 * p > dim {
        return Err(SpectrumError::Degenerate(format!(
            "{p} positive eigenvalues in dimension {dim}"
        )));
    }
    let mut rows = DMatrix::<f64>::zeros(dim, dim);
    let mut lambdas = Vec::with_capacity(dim / 2);
    let sqrt2 = std::f64::consts::SQRT_2;
    for (j, &k) in planes.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let mut r1: Vec<f64> = v.iter().map(|z| sqrt2 * z.im).collect();
        let mut r2: Vec<f64> = v.iter().map(|z| sqrt2 * z.re).collect();
        let value = bilinear(t, &r1, &r2);
        if value < 0.0 {
            std::mem::swap(&mut r1, &mut r2);
        }
        for c in 0..dim {
            rows[(2 * j, c)] = r1[c];
            rows[(2 * j + 1, c)] = r2[c];
        }
        lambdas.push(eig.eigenvalues[k] * scale);
    }

    let z = dim - 2 * p;
    if z > 0 {
        // Real orthonormal basis of the near-kernel: real and imaginary parts
        // of the clustered eigenvectors, with the plane rows projected out.
        let cluster: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&k| eig.eigenvalues[k].abs() <= ZERO_CLUSTER)
            .collect();
        let mut cand = DMatrix::<f64>::zeros(dim, 2 * cluster.len());
        for (c, &k) in cluster.iter().enumerate() {
            let v = eig.eigenvectors.column(k);
            for r in 0..dim {
                cand[(r, 2 * c)] = v[r].re;
                cand[(r, 2 * c + 1)] = v[r].im;
            }
        }
        if p > 0 {
            let taken = rows.rows(0, 2 * p).into_owned();
            cand -= taken.transpose() * (&taken * &cand);
        }
        let svd = cand.svd(true, false);
        let u = svd
            .u
            .ok_or_else(|| SpectrumError::Degenerate("SVD failed".into()))?;
        let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
        idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        if idx.len() < z || svd.singular_values[idx[z - 1]] < 0.1 {
            return Err(SpectrumError::Degenerate(format!(
                "near-kernel of dimension {z} is rank deficient"
            )));
        }
        let basis = DMatrix::from_fn(dim, z, |r, c| u[(r, idx[c])]);
        let projected = basis.transpose() * t * &basis;
        let projected = (&projected - projected.transpose()) * 0.5;
        let (sub_rows, sub_lambdas) = canonical_rows(&projected, depth + 1)?;
        let lifted = sub_rows * basis.transpose();
        rows.rows_mut(2 * p, z).copy_from(&lifted);
        lambdas.extend(sub_lambdas);
    }
    Ok((rows, lambdas))
}

fn identity_rows(t: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>) {
    let dim = t.nrows();
    let mut rows = DMatrix::<f64>::identity(dim, dim);
    let mut lambdas = Vec::with_capacity(dim / 2);
    for j in 0..dim / 2 {
        let v = t[(2 * j, 2 * j + 1)];
        if v < 0.0 {
            rows.swap_rows(2 * j, 2 * j + 1);
        }
        lambdas.push(v.abs());
    }
    (rows, lambdas)
}

fn bilinear(t: &DMatrix<f64>, a: &[f64], b: &[f64]) -> f64 {
    let dim = a.len();
    let mut acc = 0.0;
    for r in 0..dim {
        let mut row = 0.0;
        for c in 0..dim {
            row += t[(r, c)] * b[c];
        }
        acc += a[r] * row;
    }
    acc
}

/// Modified Gram-Schmidt over the rows, in order.
fn orthonormalize_rows(q: &mut DMatrix<f64>) -> Result<(), SpectrumError> {
    let dim = q.nrows();
    for r in 0..dim {
        for s in 0..r {
            let d = q.row(r).dot(&q.row(s));
            let prev = q.row(s).into_owned();
            let mut row = q.row_mut(r);
            row -= prev * d;
        }
        let norm = q.row(r).norm();
        if norm < 0.5 {
            return Err(SpectrumError::Degenerate(format!(
                "row {r} lost rank during orthonormalization"
            )));
        }
        let mut row = q.row_mut(r);
        row /= norm;
    }
    Ok(())
}

/// Canonical block form of `t`: `Q T Q^t = diag(λ_1, ..., λ_n) ⊗ iσ₂` with
/// `λ` descending and nonnegative.
pub fn canonical_rotation(t: &DMatrix<f64>) -> Result<CanonicalRotation, SpectrumError> {
    let n = check_skew(t)?;
    let t = (t - t.transpose()) * 0.5;
    let (mut q, mut lambdas) = canonical_rows(&t, 0)?;
    orthonormalize_rows(&mut q)?;

    let c = &q * &t * q.transpose();
    for (j, l) in lambdas.iter_mut().enumerate() {
        *l = c[(2 * j, 2 * j + 1)];
    }
    let mut canonical_residual = 0.0f64;
    for r in 0..2 * n {
        for s in 0..2 * n {
            let target = if r / 2 == s / 2 && r != s {
                if r % 2 == 0 {
                    lambdas[r / 2]
                } else {
                    -lambdas[r / 2]
                }
            } else {
                0.0
            };
            canonical_residual = canonical_residual.max((c[(r, s)] - target).abs());
        }
    }
    let orthogonality_residual = (&q * q.transpose() - DMatrix::identity(2 * n, 2 * n)).amax();
    if orthogonality_residual > ORTHOGONALITY_TOL {
        return Err(SpectrumError::Degenerate(format!(
            "Q Q^t deviates from identity by {orthogonality_residual:e}"
        )));
    }
    if canonical_residual > CANONICAL_TOL {
        return Err(SpectrumError::Canonical {
            residual: canonical_residual,
        });
    }
    Ok(CanonicalRotation {
        n,
        q,
        lambdas,
        canonical_residual,
        orthogonality_residual,
    })
}

/// `⊕_j λ_j iσ₂` as a dense matrix.
pub fn canonical_form(lambdas: &[f64]) -> DMatrix<f64> {
    let dim = 2 * lambdas.len();
    let mut m = DMatrix::zeros(dim, dim);
    for (j, &l) in lambdas.iter().enumerate() {
        m[(2 * j, 2 * j + 1)] = l;
        m[(2 * j + 1, 2 * j)] = -l;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ChainParams;
    use crate::quadrature::QuadratureSpec;
    use crate::toeplitz::assemble;

    fn reference_t(n: usize) -> DMatrix<f64> {
        let p = ChainParams::new(1.0, 3.0, 0.5, 0.3).unwrap();
        assemble(&p, n, &QuadratureSpec::default()).unwrap().entries
    }

    #[test]
    fn zero_matrix() {
        let z = DMatrix::<f64>::zeros(4, 4);
        let s = skew_eigenvalues(&z).unwrap();
        assert_eq!(s.lambdas, vec![0.0, 0.0]);
        let q = canonical_rotation(&z).unwrap();
        assert_eq!(q.q, DMatrix::identity(4, 4));
    }

    #[test]
    fn canonical_input() {
        let t = canonical_form(&[0.3, 0.7]);
        let s = skew_eigenvalues(&t).unwrap();
        assert!((s.lambdas[0] - 0.7).abs() < 1e-15 && (s.lambdas[1] - 0.3).abs() < 1e-15);
        let q = canonical_rotation(&t).unwrap();
        assert!(q.canonical_residual <= 1e-12);
        assert!((q.lambdas[0] - 0.7).abs() < 1e-14 && (q.lambdas[1] - 0.3).abs() < 1e-14);
        // Q only permutes/rotates within the two planes
        for r in 0..2 {
            for c in 0..2 {
                assert!(q.q[(r, c)].abs() < 1e-12 && q.q[(r + 2, c + 2)].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_and_zero_modes() {
        let t = canonical_form(&[0.5, 0.0, 0.5, 1e-9, 0.0]);
        let q = canonical_rotation(&t).unwrap();
        assert!(q.canonical_residual < 1e-12, "{}", q.canonical_residual);
        assert!((q.lambdas[0] - 0.5).abs() < 1e-12 && (q.lambdas[1] - 0.5).abs() < 1e-12);
        assert!((q.lambdas[2] - 1e-9).abs() < 1e-15);
        let s = skew_eigenvalues(&t).unwrap();
        assert_eq!(s.lambdas.len(), 5);
    }

    #[test]
    fn rejects_non_skew_and_bad_shapes() {
        let mut t = canonical_form(&[0.4]);
        t[(0, 0)] = 0.1;
        assert!(matches!(
            skew_eigenvalues(&t),
            Err(SpectrumError::NotSkew { .. })
        ));
        assert!(matches!(
            skew_eigenvalues(&DMatrix::zeros(3, 3)),
            Err(SpectrumError::Shape { .. })
        ));
    }

    #[test]
    fn overshoot_is_an_error() {
        let t = canonical_form(&[1.5]);
        assert!(matches!(
            skew_eigenvalues(&t),
            Err(SpectrumError::Overshoot { .. })
        ));
        let s = skew_eigenvalues(&canonical_form(&[1.0 + 1e-12])).unwrap();
        assert_eq!(s.lambdas[0], LAMBDA_CEILING);
    }

    #[test]
    fn reference_bound_and_canonical_form() {
        let t4 = reference_t(4);
        let s = skew_eigenvalues(&t4).unwrap();
        assert!(s.lambdas.iter().all(|&l| l <= 1.95f64.tanh()));
        assert!(s.pairing_residual <= PAIRING_TOL);

        let t3 = reference_t(3);
        let q = canonical_rotation(&t3).unwrap();
        let s3 = skew_eigenvalues(&t3).unwrap();
        let lhs = &q.q * &t3 * q.q.transpose();
        let rhs = canonical_form(&s3.lambdas);
        assert!((lhs - rhs).amax() < 1e-8);
        assert!(q.orthogonality_residual < 1e-10);
    }

    #[test]
    fn pfaffian_squared_matches_determinant() {
        for n in 1..=8 {
            let t = reference_t(n);
            let s = skew_eigenvalues(&t).unwrap();
            let prod: f64 = s.lambdas.iter().map(|l| l * l).product();
            let det = t.clone().determinant();
            assert!(
                (prod - det).abs() <= 1e-6 * det.abs(),
                "n={n}: {prod} vs {det}"
            );
        }
    }

    #[test]
    fn multiset_matches_hermitian_spectrum() {
        let t = reference_t(6);
        let s = skew_eigenvalues(&t).unwrap();
        let mut signed: Vec<f64> = s.lambdas.iter().flat_map(|&l| [l, -l]).collect();
        signed.sort_by(f64::total_cmp);
        let mut ev: Vec<f64> = times_i(&t)
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        for (a, b) in signed.iter().zip(&ev) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
