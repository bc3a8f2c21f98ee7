//! Truncated block Toeplitz matrices `T_n[a]` and the Majorana correlation
//! matrix `Ω_n = 1 + i T_n[a]`.
//!
//! Block `(j, k)` (block rows and columns counted from 1) is the Fourier
//! coefficient `â_{k-j}`, so that the odd-odd entries read
//! `(Ω_n)_{2j-1,2k-1} = δ_jk - (1/2π) ∫ φ_{δ,β} sign κ e^{-i(k-j)ξ} dξ`.

use std::collections::HashMap;
use std::sync::RwLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{breakpoints, ChainParams};
use crate::quadrature::{fourier_coefficient, QuadratureError, QuadratureSpec};
use crate::symbol::{symbol_a, Mat2};

/// Imaginary parts and skew defects above this signal a convention or
/// quadrature bug rather than noise.
pub const STRUCTURE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ToeplitzError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("block count must be at least 1")]
    EmptyBlock,
    #[error("Toeplitz structure violated: imaginary residual {imag:e}, skew residual {skew:e}")]
    Structure { imag: f64, skew: f64 },
}

/// Fourier coefficients of the symbol, computed on demand and kept for reuse
/// across block counts.
pub struct CoefficientCache {
    params: ChainParams,
    spec: QuadratureSpec,
    coeffs: RwLock<HashMap<i64, Mat2>>,
}

impl CoefficientCache {
    pub fn new(params: ChainParams, spec: &QuadratureSpec) -> Self {
        Self {
            params,
            spec: spec.with_breakpoints(breakpoints(&params)),
            coeffs: RwLock::new(HashMap::new()),
        }
    }

    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    pub fn spec(&self) -> &QuadratureSpec {
        &self.spec
    }

    /// Makes sure `â_x` is available for every `|x| < n`.
    pub fn ensure(&self, n: usize) -> Result<(), QuadratureError> {
        let span = n as i64 - 1;
        let missing: Vec<i64> = {
            let map = self.coeffs.read().expect("coefficient cache poisoned");
            (-span..=span).filter(|x| !map.contains_key(x)).collect()
        };
        if missing.is_empty() {
            return Ok(());
        }
        let params = self.params;
        let computed: Vec<(i64, Mat2)> = missing
            .par_iter()
            .map(|&x| {
                fourier_coefficient(|xi| symbol_a(&params, xi).m, x, &self.spec)
                    .map(|e| (x, e.value))
            })
            .collect::<Result<_, _>>()?;
        let mut map = self.coeffs.write().expect("coefficient cache poisoned");
        for (x, c) in computed {
            // concurrent callers compute identical values; first write wins
            map.entry(x).or_insert(c);
        }
        Ok(())
    }

    /// `â_x`, computing it if needed.
    pub fn get(&self, x: i64) -> Result<Mat2, QuadratureError> {
        if let Some(c) = self
            .coeffs
            .read()
            .expect("coefficient cache poisoned")
            .get(&x)
        {
            return Ok(*c);
        }
        let c = fourier_coefficient(|xi| symbol_a(&self.params, xi).m, x, &self.spec)?.value;
        Ok(*self
            .coeffs
            .write()
            .expect("coefficient cache poisoned")
            .entry(x)
            .or_insert(c))
    }

    pub fn len(&self) -> usize {
        self.coeffs
            .read()
            .expect("coefficient cache poisoned")
            .len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Real skew-symmetric `2n x 2n` block Toeplitz matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockToeplitz {
    pub n: usize,
    pub entries: DMatrix<f64>,
    /// Largest imaginary part discarded when taking the real part.
    pub imag_residual: f64,
    /// Largest `|T + T^t|` entry before skew-symmetrization.
    pub skew_residual: f64,
}

impl BlockToeplitz {
    /// Largest deviation from the block shift identity
    /// `T[k + 2i, l + 2i] = T[k, l]`.
    pub fn shift_residual(&self) -> f64 {
        let dim = 2 * self.n;
        let mut worst = 0.0f64;
        for k in 0..dim {
            for l in 0..dim {
                if k + 2 < dim && l + 2 < dim {
                    worst = worst.max((self.entries[(k + 2, l + 2)] - self.entries[(k, l)]).abs());
                }
            }
        }
        worst
    }
}

pub fn assemble(
    params: &ChainParams,
    n: usize,
    spec: &QuadratureSpec,
) -> Result<BlockToeplitz, ToeplitzError> {
    assemble_with_cache(&CoefficientCache::new(*params, spec), n)
}

pub fn assemble_with_cache(
    cache: &CoefficientCache,
    n: usize,
) -> Result<BlockToeplitz, ToeplitzError> {
    if n == 0 {
        return Err(ToeplitzError::EmptyBlock);
    }
    cache.ensure(n)?;
    let span = n as i64 - 1;
    let coeffs: HashMap<i64, Mat2> = (-span..=span)
        .map(|x| cache.get(x).map(|c| (x, c)))
        .collect::<Result<_, _>>()?;

    let dim = 2 * n;
    let mut raw = DMatrix::<f64>::zeros(dim, dim);
    let mut imag_residual = 0.0f64;
    for j in 0..n {
        for k in 0..n {
            let block = coeffs[&(k as i64 - j as i64)];
            for a in 0..2 {
                for b in 0..2 {
                    let z: Complex64 = block[(a, b)];
                    imag_residual = imag_residual.max(z.im.abs());
                    raw[(2 * j + a, 2 * k + b)] = z.re;
                }
            }
        }
    }
    let mut skew_residual = 0.0f64;
    let mut entries = DMatrix::<f64>::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            skew_residual = skew_residual.max((raw[(r, c)] + raw[(c, r)]).abs());
            entries[(r, c)] = 0.5 * (raw[(r, c)] - raw[(c, r)]);
        }
    }
    if imag_residual > STRUCTURE_TOL || skew_residual > STRUCTURE_TOL {
        return Err(ToeplitzError::Structure {
            imag: imag_residual,
            skew: skew_residual,
        });
    }
    Ok(BlockToeplitz {
        n,
        entries,
        imag_residual,
        skew_residual,
    })
}

/// `Ω_n = 1 + i T_n[a]`.
pub fn omega_from(t: &BlockToeplitz) -> DMatrix<Complex64> {
    let dim = 2 * t.n;
    DMatrix::from_fn(dim, dim, |r, c| {
        Complex64::new(if r == c { 1.0 } else { 0.0 }, t.entries[(r, c)])
    })
}

pub fn omega(
    params: &ChainParams,
    n: usize,
    spec: &QuadratureSpec,
) -> Result<DMatrix<Complex64>, ToeplitzError> {
    Ok(omega_from(&assemble(params, n, spec)?))
}

/// Spectral norm (largest singular value).
pub fn operator_norm(t: &BlockToeplitz) -> f64 {
    if t.entries.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    t.entries.clone().singular_values().max()
}
