//! Components of the two-point operator density and the 2x2 block symbol
//! `a(xi)` whose Fourier coefficients fill the Majorana correlation matrix.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::model::ChainParams;

/// Below this `mu` the direction vector `r(xi)` is not evaluated.
pub const MU_SINGULAR_TOL: f64 = 1e-14;

pub type Mat2 = Matrix2<Complex64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymbolError {
    #[error("mu({xi}) = {mu} vanishes; the two-point components are singular there")]
    Singular { xi: f64, mu: f64 },
}

/// Pauli components of the two-point density `s(xi) = sum_k s_k sigma_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SComponents {
    pub xi: f64,
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl SComponents {
    /// The 2x2 matrix `s0 sigma0 + s1 sigma1 + s2 sigma2 + s3 sigma3`.
    pub fn matrix(&self) -> Mat2 {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        Matrix2::new(
            c(self.s0 + self.s3, 0.0),
            c(self.s1, -self.s2),
            c(self.s1, self.s2),
            c(self.s0 - self.s3, 0.0),
        )
    }
}

/// Symbol value at one angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolValue {
    pub xi: f64,
    pub m: Mat2,
}

impl SymbolValue {
    /// Largest singular value of the 2x2 block.
    pub fn norm(&self) -> f64 {
        // a is normal (anti-Hermitian), so the norm is the largest |eigenvalue|
        // of the Hermitian matrix i a.
        hermitian_eigenvalues(&(self.m * Complex64::i()))
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }
}

/// Closed-form eigenvalues of a 2x2 Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(h: &Mat2) -> [f64; 2] {
    let a = h[(0, 0)].re;
    let d = h[(1, 1)].re;
    let b = h[(0, 1)];
    let mean = 0.5 * (a + d);
    let half = (0.5 * (a - d)).hypot(b.norm());
    [mean - half, mean + half]
}

/// `s0, ..., s3` at `xi`.
///
/// Fails at gapless points where `r(xi) = (0, -gamma sin xi, cos xi - lambda) / mu`
/// is undefined.
pub fn s_components(params: &ChainParams, xi: f64) -> Result<SComponents, SymbolError> {
    let mu = params.mu(xi);
    if mu <= MU_SINGULAR_TOL {
        return Err(SymbolError::Singular { xi, mu });
    }
    let phi_bd = crate::model::phi(params.beta(), params.delta(), mu);
    let phi_db = crate::model::phi(params.delta(), params.beta(), mu);
    let (s, c) = xi.sin_cos();
    let r2 = -params.gamma() * s / mu;
    let r3 = (c - params.lambda()) / mu;
    Ok(SComponents {
        xi,
        s0: 0.5 - 0.5 * phi_db * params.kappa_sign(xi),
        s1: 0.0,
        s2: -0.5 * phi_bd * r2,
        s3: -0.5 * phi_bd * r3,
    })
}

/// `a(xi) = (2/i) [[s0 - 1/2, s2 - i s3], [s2 + i s3, s0 - 1/2]]`.
pub fn symbol_from_components(s: &SComponents) -> SymbolValue {
    let pref = Complex64::new(0.0, -2.0);
    let d = Complex64::new(s.s0 - 0.5, 0.0);
    let m = Matrix2::new(
        d,
        Complex64::new(s.s2, -s.s3),
        Complex64::new(s.s2, s.s3),
        d,
    ) * pref;
    SymbolValue { xi: s.xi, m }
}

/// `a(xi) = i [[phi_db sign kappa, (q/mu) phi_bd], [(conj q/mu) phi_bd, phi_db sign kappa]]`.
///
/// At gapless points the off-diagonal entries take their limit 0.
pub fn symbol_a(params: &ChainParams, xi: f64) -> SymbolValue {
    let mu = params.mu(xi);
    let diag = crate::model::phi(params.delta(), params.beta(), mu) * params.kappa_sign(xi);
    let off = if mu <= MU_SINGULAR_TOL {
        Complex64::new(0.0, 0.0)
    } else {
        params.q(xi) * (crate::model::phi(params.beta(), params.delta(), mu) / mu)
    };
    let i = Complex64::i();
    let d = i * diag;
    let m = Matrix2::new(d, i * off, i * off.conj(), d);
    SymbolValue { xi, m }
}
