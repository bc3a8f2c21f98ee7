//! Physical parameters of the XY chain steady state and the scalar spectral
//! functions the two-point symbol is built from.
//!
//! Everything here is a pure function of its inputs. Angles are reduced mod
//! 2π where it matters (breakpoints); the trigonometric functions themselves
//! are periodic so `mu`, `kappa` and `q` accept any finite angle.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance used to merge breakpoints and to accept a candidate zero.
pub const BREAKPOINT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },
    #[error("spectral bound is zero (beta_R = 0); a strictly positive bound was required")]
    DegenerateBound { rho: f64 },
}

/// Reservoir temperatures and coupling constants of the chain.
///
/// `beta` and `delta` are derived on construction and cannot be set
/// independently.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainParams {
    beta_left: f64,
    beta_right: f64,
    gamma: f64,
    lambda: f64,
    beta: f64,
    delta: f64,
}

impl ChainParams {
    /// Validates and builds a parameter set.
    ///
    /// Inverse temperatures must be finite and nonnegative (zero temperature
    /// is outside what this crate computes), `gamma` must lie strictly inside
    /// (-1, 1) and `lambda` must be finite.
    pub fn new(
        beta_left: f64,
        beta_right: f64,
        gamma: f64,
        lambda: f64,
    ) -> Result<Self, ModelError> {
        check_beta("beta_L", beta_left)?;
        check_beta("beta_R", beta_right)?;
        if !(gamma > -1.0 && gamma < 1.0) {
            return Err(ModelError::InvalidParameter {
                name: "gamma",
                message: "gamma must lie in (-1,1)".into(),
            });
        }
        if !lambda.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "lambda",
                message: "lambda must be finite".into(),
            });
        }
        Ok(Self {
            beta_left,
            beta_right,
            gamma,
            lambda,
            beta: 0.5 * (beta_right + beta_left),
            delta: 0.5 * (beta_right - beta_left),
        })
    }

    /// Both reservoirs at infinite temperature.
    pub fn infinite_temperature(gamma: f64, lambda: f64) -> Result<Self, ModelError> {
        Self::new(0.0, 0.0, gamma, lambda)
    }

    pub fn beta_left(&self) -> f64 {
        self.beta_left
    }

    pub fn beta_right(&self) -> f64 {
        self.beta_right
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Mean inverse temperature `(beta_R + beta_L) / 2`.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Half difference `(beta_R - beta_L) / 2`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// True iff `0 <= delta < beta < inf`, the regime where the linear entropy
    /// law is established.
    pub fn theorem_domain(&self) -> bool {
        0.0 <= self.delta && self.delta < self.beta && self.beta.is_finite()
    }

    /// Human-readable reason the parameters fall outside the theorem domain.
    pub fn domain_warning(&self) -> Option<String> {
        if self.theorem_domain() {
            return None;
        }
        if self.delta < 0.0 {
            Some(format!(
                "beta_R = {} < beta_L = {} (delta < 0): outside the theorem domain",
                self.beta_right, self.beta_left
            ))
        } else {
            Some(format!(
                "beta_L = {} (delta = beta): outside the theorem domain",
                self.beta_left
            ))
        }
    }

    /// `((cos xi - lambda)^2 + gamma^2 sin^2 xi)^(1/2)`
    pub fn mu(&self, xi: f64) -> f64 {
        let (s, c) = xi.sin_cos();
        (c - self.lambda).hypot(self.gamma * s)
    }

    /// `2 lambda sin xi - (1 - gamma^2) sin 2xi`
    pub fn kappa(&self, xi: f64) -> f64 {
        2.0 * self.lambda * xi.sin() - (1.0 - self.gamma * self.gamma) * (2.0 * xi).sin()
    }

    /// Sign of `kappa`, with `sign(0) = 0`.
    pub fn kappa_sign(&self, xi: f64) -> f64 {
        let k = self.kappa(xi);
        if k > 0.0 {
            1.0
        } else if k < 0.0 {
            -1.0
        } else {
            0.0
        }
    }

    /// `-gamma sin xi - i (cos xi - lambda)`; its modulus is `mu(xi)`.
    pub fn q(&self, xi: f64) -> Complex64 {
        let (s, c) = xi.sin_cos();
        Complex64::new(-self.gamma * s, -(c - self.lambda))
    }

    /// `phi_{beta,delta}(xi)`, the weight of the off-diagonal symbol part.
    pub fn phi_beta_delta(&self, xi: f64) -> f64 {
        phi(self.beta, self.delta, self.mu(xi))
    }

    /// `phi_{delta,beta}(xi)`, the weight of the diagonal (current carrying) part.
    pub fn phi_delta_beta(&self, xi: f64) -> f64 {
        phi(self.delta, self.beta, self.mu(xi))
    }
}

fn check_beta(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_nan() || value < 0.0 {
        return Err(ModelError::InvalidParameter {
            name,
            message: format!("{name} must be a nonnegative inverse temperature, got {value}"),
        });
    }
    if value.is_infinite() {
        return Err(ModelError::InvalidParameter {
            name,
            message: format!("{name} = inf (zero temperature) is not supported"),
        });
    }
    Ok(())
}

/// `sh(alpha mu) / (ch(alpha mu) + ch(alpha' mu))`.
///
/// For large arguments numerator and denominator are rescaled by
/// `exp(-max(|alpha|, |alpha'|) mu)` so that nothing overflows.
pub fn phi(alpha: f64, alpha_prime: f64, mu: f64) -> f64 {
    let x = alpha * mu;
    let y = alpha_prime * mu;
    let m = x.abs().max(y.abs());
    if m == 0.0 {
        return 0.0;
    }
    if m < 20.0 {
        return x.sinh() / (x.cosh() + y.cosh());
    }
    let num = (x - m).exp() - (-x - m).exp();
    let den = (x - m).exp() + (-x - m).exp() + (y - m).exp() + (-y - m).exp();
    num / den
}

/// Bound on the spectral radius of every truncated Toeplitz matrix:
/// `th(beta_R (1 + |lambda|) / 2)`.
pub fn spectral_bound_rho(params: &ChainParams) -> f64 {
    (0.5 * params.beta_right() * (1.0 + params.lambda().abs())).tanh()
}

/// Same as [`spectral_bound_rho`] but fails when the bound degenerates to 0.
pub fn strictly_positive_rho(params: &ChainParams) -> Result<f64, ModelError> {
    let rho = spectral_bound_rho(params);
    if rho > 0.0 {
        Ok(rho)
    } else {
        Err(ModelError::DegenerateBound { rho })
    }
}

/// An angle in `[0, 2π)` where the symbol may fail to be smooth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Breakpoint {
    pub angle: f64,
    /// `kappa` vanishes here, so `sign(kappa)` may jump.
    pub kappa_zero: bool,
    /// `mu` vanishes here (gapless point).
    pub mu_zero: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Breakpoints {
    points: Vec<Breakpoint>,
}

impl Breakpoints {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Untagged breakpoints for an arbitrary integrand.
    pub fn from_angles<I: IntoIterator<Item = f64>>(angles: I) -> Self {
        let mut bp = Self::default();
        for a in angles {
            bp.insert(a, false, false);
        }
        bp
    }

    fn insert(&mut self, angle: f64, kappa_zero: bool, mu_zero: bool) {
        let mut a = angle.rem_euclid(TAU);
        if TAU - a <= BREAKPOINT_TOL {
            a = 0.0;
        }
        if let Some(p) = self
            .points
            .iter_mut()
            .find(|p| (p.angle - a).abs() <= BREAKPOINT_TOL)
        {
            p.kappa_zero |= kappa_zero;
            p.mu_zero |= mu_zero;
            return;
        }
        self.points.push(Breakpoint {
            angle: a,
            kappa_zero,
            mu_zero,
        });
        self.points.sort_by(|x, y| x.angle.total_cmp(&y.angle));
    }

    pub fn points(&self) -> &[Breakpoint] {
        &self.points
    }

    pub fn angles(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.angle)
    }

    pub fn kappa_zeros(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().filter(|p| p.kappa_zero).map(|p| p.angle)
    }

    pub fn mu_zeros(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().filter(|p| p.mu_zero).map(|p| p.angle)
    }

    /// Only the gapless points; used for integrands that do not involve
    /// `sign(kappa)`.
    pub fn mu_zeros_only(&self) -> Self {
        Self {
            points: self.points.iter().filter(|p| p.mu_zero).copied().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Zeros of `kappa` and of `mu` on `[0, 2π)`.
pub fn breakpoints(params: &ChainParams) -> Breakpoints {
    let mut bp = Breakpoints::default();
    bp.insert(0.0, true, false);
    bp.insert(PI, true, false);

    // kappa = 2 sin xi (lambda - (1 - gamma^2) cos xi)
    let c = params.lambda() / (1.0 - params.gamma() * params.gamma());
    if c.abs() <= 1.0 {
        let a = c.acos();
        bp.insert(a, true, false);
        bp.insert(TAU - a, true, false);
    }

    // mu = 0 needs cos xi = lambda and gamma sin xi = 0.
    let mut candidates = vec![0.0, PI];
    if params.lambda().abs() <= 1.0 {
        let a = params.lambda().acos();
        candidates.push(a);
        candidates.push(TAU - a);
    }
    for xi in candidates {
        if params.mu(xi) <= BREAKPOINT_TOL {
            bp.insert(xi, false, true);
        }
    }
    bp
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> ChainParams {
        ChainParams::new(1.0, 3.0, 0.5, 0.3).unwrap()
    }

    #[test]
    fn mu_examples() {
        let p = reference();
        assert!((p.mu(0.0) - 0.7).abs() < 1e-15);
        assert!((p.mu(PI / 2.0) - 0.34f64.sqrt()).abs() < 1e-15);
        assert!((p.mu(PI / 2.0) - 0.583_095_189_484_530_0).abs() < 1e-15);
        let gapless = ChainParams::new(1.0, 1.0, 0.7, 1.0).unwrap();
        assert_eq!(gapless.mu(0.0), 0.0);
    }

    #[test]
    fn kappa_examples() {
        let p = reference();
        assert_eq!(p.kappa(0.0), 0.0);
        assert_eq!(p.kappa_sign(0.0), 0.0);
        assert!((p.kappa(PI / 2.0) - 0.6).abs() < 1e-15);
        assert!(p.kappa(1.159279).abs() < 1e-6);
        assert!((0.4f64.acos() - 1.159279).abs() < 1e-6);
    }

    #[test]
    fn q_examples() {
        let p = reference();
        let q0 = p.q(0.0);
        assert!(q0.re.abs() < 1e-15 && (q0.im + 0.7).abs() < 1e-15);
        let q1 = p.q(PI / 2.0);
        assert!((q1.re + 0.5).abs() < 1e-15 && (q1.im - 0.3).abs() < 1e-15);
        for k in 0..100 {
            let xi = 0.0731 * k as f64;
            assert!((p.q(xi).norm() - p.mu(xi)).abs() < 1e-14);
        }
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi(0.0, 1.0, 0.7), 0.0);
        let direct = 1.4f64.sinh() / (1.4f64.cosh() + 0.7f64.cosh());
        assert!((phi(2.0, 1.0, 0.7) - direct).abs() < 1e-15);
        assert!((phi(2.0, 1.0, 0.7) - 0.5590).abs() < 1e-4);
        let sum = phi(2.0, 1.0, 0.7) + phi(1.0, 2.0, 0.7);
        assert!((sum - (1.5f64 * 0.7).tanh()).abs() < 1e-14);
    }

    #[test]
    fn phi_large_arguments_do_not_overflow() {
        let v = phi(1e4, 9.9e3, 1.3);
        assert!(v.is_finite() && v > 0.0 && v <= 1.0);
        // beta_R mu / 2 huge: the two phis add to tanh -> 1.
        let s = phi(1e4, 1e2, 1.3) + phi(1e2, 1e4, 1.3);
        assert!((s - 1.0).abs() < 1e-14);
        // continuity across the rescaling switch
        let a = phi(2.0, 1.0, 9.999_999);
        let b = phi(2.0, 1.0, 10.000_001);
        assert!((a - b).abs() < 1e-6);
    }

    #[test]
    fn rho_examples() {
        let p0 = ChainParams::new(0.0, 0.0, 0.5, 0.3).unwrap();
        assert_eq!(spectral_bound_rho(&p0), 0.0);
        assert!(
            matches!(strictly_positive_rho(&p0), Err(ModelError::DegenerateBound { rho }) if rho == 0.0)
        );
        let p = reference();
        assert!((spectral_bound_rho(&p) - 1.95f64.tanh()).abs() < 1e-15);
        assert!((spectral_bound_rho(&p) - 0.96036).abs() < 1e-4);
        let p2 = ChainParams::new(1.0, 2.0, 0.5, 0.5).unwrap();
        assert!((spectral_bound_rho(&p2) - 0.90515).abs() < 1e-5);
    }

    #[test]
    fn derived_temperatures_and_domain() {
        let p = reference();
        assert_eq!(p.beta(), 2.0);
        assert_eq!(p.delta(), 1.0);
        assert!(p.theorem_domain());
        let swapped = ChainParams::new(3.0, 1.0, 0.5, 0.3).unwrap();
        assert!(!swapped.theorem_domain());
        assert!(swapped.domain_warning().is_some());
        assert!(!ChainParams::new(0.0, 2.0, 0.5, 0.3)
            .unwrap()
            .theorem_domain());
        assert!(ChainParams::new(2.0, 2.0, 0.5, 0.3)
            .unwrap()
            .theorem_domain());
        assert!(ChainParams::new(1.0, 1.0, 1.0, 0.0).is_err());
        assert!(ChainParams::new(1.0, f64::INFINITY, 0.5, 0.0).is_err());
        assert!(ChainParams::new(-1.0, 1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn breakpoint_examples() {
        let bp = breakpoints(&reference());
        let kz: Vec<f64> = bp.kappa_zeros().collect();
        let expect = [0.0, 0.4f64.acos(), PI, TAU - 0.4f64.acos()];
        assert_eq!(kz.len(), 4);
        for (a, b) in kz.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((kz[1] - 1.159279).abs() < 1e-6 && (kz[3] - 5.123906).abs() < 1e-6);
        assert_eq!(bp.mu_zeros().count(), 0);

        let strong = ChainParams::new(1.0, 1.0, 0.5, 2.0).unwrap();
        let bp = breakpoints(&strong);
        assert_eq!(bp.kappa_zeros().collect::<Vec<_>>(), vec![0.0, PI]);
        assert_eq!(bp.mu_zeros().count(), 0);

        let xx = ChainParams::new(1.0, 1.0, 0.0, 0.5).unwrap();
        let mz: Vec<f64> = breakpoints(&xx).mu_zeros().collect();
        assert_eq!(mz.len(), 2);
        assert!((mz[0] - PI / 3.0).abs() < 1e-12);
        assert!((mz[1] - 5.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn breakpoints_are_zeros() {
        for &(g, l) in &[
            (0.5, 0.3),
            (0.0, 0.5),
            (-0.4, 1.2),
            (0.3, 1.0),
            (0.3, -1.0),
            (0.6, 0.64),
        ] {
            let p = ChainParams::new(1.0, 2.0, g, l).unwrap();
            let bp = breakpoints(&p);
            let angles: Vec<f64> = bp.angles().collect();
            assert!(angles.windows(2).all(|w| w[1] - w[0] > BREAKPOINT_TOL));
            for a in bp.kappa_zeros() {
                assert!(p.kappa(a).abs() <= 1e-12, "{g} {l} {a}");
            }
            for a in bp.mu_zeros() {
                assert!(p.mu(a) <= 1e-12);
            }
        }
    }

    #[test]
    fn symmetry_and_bounds_on_grid() {
        let p = reference();
        let rho = spectral_bound_rho(&p);
        for k in 0..1000 {
            let xi = TAU * (k as f64 + 0.5) / 1000.0;
            assert!((p.mu(xi) - p.mu(TAU - xi)).abs() < 1e-14);
            assert!((p.kappa(xi) + p.kappa(TAU - xi)).abs() < 1e-14);
            let a = p.phi_beta_delta(xi);
            let b = p.phi_delta_beta(xi);
            assert!((0.0..1.0).contains(&a) && (0.0..1.0).contains(&b));
            let th = (0.5 * (p.beta() + p.delta()) * p.mu(xi)).tanh();
            assert!((a + b - th).abs() < 1e-13);
            assert!(a + b <= rho);
        }
    }
}
