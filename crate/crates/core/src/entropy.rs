//! Block entropies, the limiting entropy density and its equilibrium
//! comparisons.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{breakpoints, spectral_bound_rho, ChainParams, ModelError};
use crate::quadrature::{integrate_periodic, QuadratureError, QuadratureSpec};
use crate::spectrum::{skew_eigenvalues, BlockSpectrum, SpectrumError};
use crate::toeplitz::{assemble_with_cache, CoefficientCache, ToeplitzError};

/// Arguments of `h` may exceed 1 in magnitude by this much before it is an
/// error; they are clamped.
pub const DOMAIN_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EntropyError {
    #[error("entropy function argument {x} lies outside [-1, 1]")]
    Domain { x: f64 },
    #[error("block size list must be nonempty and strictly ascending")]
    BadLadder,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Toeplitz(#[from] ToeplitzError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

fn xlogx(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        t * t.ln()
    }
}

fn h_unchecked(x: f64) -> f64 {
    let x = x.clamp(-1.0, 1.0);
    -xlogx(0.5 * (1.0 + x)) - xlogx(0.5 * (1.0 - x))
}

/// Binary entropy of the occupation `(1 + x) / 2`, extended by `h(±1) = 0`.
pub fn entropy_h(x: f64) -> Result<f64, EntropyError> {
    if x.is_nan() || x.abs() > 1.0 + DOMAIN_SLACK {
        return Err(EntropyError::Domain { x });
    }
    Ok(h_unchecked(x))
}

/// `h(th(u / 2))` written as `log(1 + e^{-|u|}) + |u| / (1 + e^{|u|})`, which
/// stays accurate when `th` rounds to 1.
pub fn h_of_tanh(u: f64) -> f64 {
    let u = u.abs();
    (-u).exp().ln_1p() + u / (1.0 + u.exp())
}

/// `S = Σ_i h(λ_i)`.
pub fn block_entropy(spec: &BlockSpectrum) -> Result<f64, EntropyError> {
    spec.lambdas.iter().map(|&l| entropy_h(l)).sum()
}

/// Limit entropy density
/// `C = (1/2)(1/2π) ∫ [h(th(β_R μ/2)) + h(th(β_L μ/2))] dξ`.
pub fn szego_constant(params: &ChainParams, spec: &QuadratureSpec) -> Result<f64, EntropyError> {
    let quad = spec.with_breakpoints(breakpoints(params).mu_zeros_only());
    let (bl, br) = (params.beta_left(), params.beta_right());
    let est = integrate_periodic(
        |xi| {
            let mu = params.mu(xi);
            0.5 * (h_of_tanh(br * mu) + h_of_tanh(bl * mu))
        },
        &quad,
    )?;
    Ok(est.value)
}

/// Entropy density of the equilibrium state at inverse temperature `beta_eq`:
/// `(1/2π) ∫ h(th(beta_eq μ/2)) dξ`.
pub fn equilibrium_constant(
    beta_eq: f64,
    gamma: f64,
    lambda: f64,
    spec: &QuadratureSpec,
) -> Result<f64, EntropyError> {
    let params = ChainParams::new(beta_eq, beta_eq, gamma, lambda)?;
    let quad = spec.with_breakpoints(breakpoints(&params).mu_zeros_only());
    let est = integrate_periodic(|xi| h_of_tanh(beta_eq * params.mu(xi)), &quad)?;
    Ok(est.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyRow {
    pub n: usize,
    pub entropy: f64,
    pub density: f64,
    /// `|S_n / n - C|`
    pub error: f64,
    /// `S_n - C n`
    pub remainder: f64,
    pub max_lambda: f64,
}

/// Least-squares fit `S_n - C n ≈ constant + log_coefficient · ln n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RemainderFit {
    pub constant: f64,
    pub log_coefficient: f64,
    pub rms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntropyReport {
    pub params: ChainParams,
    pub theorem_domain: bool,
    pub rows: Vec<EntropyRow>,
    pub c: f64,
    pub c_eq_beta: f64,
    pub c_eq_left: f64,
    pub c_eq_right: f64,
    pub rho_bound: f64,
    pub h_rho: f64,
    pub remainder_fit: Option<RemainderFit>,
}

impl EntropyReport {
    /// `C - (C_eq(β_L) + C_eq(β_R)) / 2`
    pub fn split_residual(&self) -> f64 {
        self.c - 0.5 * (self.c_eq_left + self.c_eq_right)
    }

    pub fn errors_strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].error < w[0].error)
    }
}

/// Entropy of one block size through the Toeplitz route.
pub fn entropy_for(
    cache: &CoefficientCache,
    n: usize,
) -> Result<(f64, BlockSpectrum), EntropyError> {
    let t = assemble_with_cache(cache, n)?;
    let spectrum = skew_eigenvalues(&t.entries)?;
    Ok((block_entropy(&spectrum)?, spectrum))
}

fn fit_remainder(rows: &[EntropyRow]) -> Option<RemainderFit> {
    if rows.len() < 2 {
        return None;
    }
    let m = rows.len() as f64;
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.remainder).collect();
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let constant = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - constant - slope * x).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    Some(RemainderFit {
        constant,
        log_coefficient: slope,
        rms,
    })
}

pub fn convergence_report(
    params: &ChainParams,
    n_list: &[usize],
    spec: &QuadratureSpec,
) -> Result<EntropyReport, EntropyError> {
    if n_list.is_empty() || n_list[0] == 0 || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(EntropyError::BadLadder);
    }
    let c = szego_constant(params, spec)?;
    let cache = CoefficientCache::new(*params, spec);
    cache.ensure(*n_list.last().expect("nonempty"))?;
    let rows: Vec<EntropyRow> = n_list
        .par_iter()
        .map(|&n| {
            let (s, spectrum) = entropy_for(&cache, n)?;
            let density = s / n as f64;
            Ok(EntropyRow {
                n,
                entropy: s,
                density,
                error: (density - c).abs(),
                remainder: s - c * n as f64,
                max_lambda: spectrum.lambdas.first().copied().unwrap_or(0.0),
            })
        })
        .collect::<Result<_, EntropyError>>()?;

    let (g, l) = (params.gamma(), params.lambda());
    let rho_bound = spectral_bound_rho(params);
    Ok(EntropyReport {
        params: *params,
        theorem_domain: params.theorem_domain(),
        remainder_fit: fit_remainder(&rows),
        rows,
        c,
        c_eq_beta: equilibrium_constant(params.beta(), g, l, spec)?,
        c_eq_left: equilibrium_constant(params.beta_left(), g, l, spec)?,
        c_eq_right: equilibrium_constant(params.beta_right(), g, l, spec)?,
        rho_bound,
        h_rho: h_unchecked(rho_bound),
    })
}
