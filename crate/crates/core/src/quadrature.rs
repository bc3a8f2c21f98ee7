//! Adaptive Gauss-Kronrod quadrature on the circle.
//!
//! Integrals are normalized as `(1/2π) ∫_0^{2π} f(ξ) dξ`. The interval is
//! first cut at the supplied breakpoints (0 and 2π are always panel ends),
//! and panels are bisected globally, worst error first, until the summed
//! error estimate meets `max(abs_tol, rel_tol |I|)`. The 15-point Kronrod
//! rule gives the value; its difference to the embedded 7-point Gauss rule
//! is the error estimate. Both rules are open, so breakpoints are never
//! sampled.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::model::Breakpoints;
use crate::symbol::Mat2;

pub const DEFAULT_ABS_TOL: f64 = 1e-12;
pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_SUBDIVISIONS: usize = 2000;
pub const DEFAULT_MAX_FOURIER_INDEX: u64 = 4096;

// Kronrod abscissae on [-1, 1] (non-negative half); odd indices are the
// 7-point Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("quadrature did not converge: error estimate {estimate:e} above tolerance {tolerance:e} after {subdivisions} subdivisions")]
    NonConvergence {
        estimate: f64,
        tolerance: f64,
        subdivisions: usize,
    },
    #[error("invalid quadrature settings: {0}")]
    InvalidSpec(String),
    #[error("Fourier index {index} exceeds the configured cap {cap}")]
    IndexTooLarge { index: i64, cap: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub max_fourier_index: u64,
    #[serde(skip)]
    pub breakpoints: Breakpoints,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: DEFAULT_ABS_TOL,
            rel_tol: DEFAULT_REL_TOL,
            max_subdivisions: DEFAULT_MAX_SUBDIVISIONS,
            max_fourier_index: DEFAULT_MAX_FOURIER_INDEX,
            breakpoints: Breakpoints::empty(),
        }
    }
}

impl QuadratureSpec {
    pub fn with_breakpoints(&self, breakpoints: Breakpoints) -> Self {
        Self {
            breakpoints,
            ..self.clone()
        }
    }

    pub fn with_abs_tol(&self, abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), QuadratureError> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(QuadratureError::InvalidSpec(
                "abs_tol must be positive".into(),
            ));
        }
        if !(self.rel_tol >= 0.0 && self.rel_tol.is_finite()) {
            return Err(QuadratureError::InvalidSpec(
                "rel_tol must be nonnegative".into(),
            ));
        }
        if self.max_subdivisions < 1 {
            return Err(QuadratureError::InvalidSpec(
                "max_subdivisions must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Values that can be integrated: closed under addition and real scaling,
/// with a max-abs magnitude for error control.
pub trait QuadValue: Copy {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn scale(self, s: f64) -> Self;
    fn magnitude(&self) -> f64;

    fn sub(self, other: Self) -> Self {
        self.add(other.scale(-1.0))
    }
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn magnitude(&self) -> f64 {
        self.re.abs().max(self.im.abs())
    }
}

impl QuadValue for Mat2 {
    fn zero() -> Self {
        Mat2::zeros()
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, s: f64) -> Self {
        self.map(|z| z * s)
    }
    fn magnitude(&self) -> f64 {
        self.iter()
            .fold(0.0f64, |acc, z| acc.max(z.re.abs()).max(z.im.abs()))
    }
}

/// Normalized integral with its error estimate.
#[derive(Debug, Clone, Copy)]
pub struct Estimate<V> {
    pub value: V,
    pub error: f64,
    pub panels: usize,
    pub evaluations: usize,
}

struct Panel<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
}

impl<V> PartialEq for Panel<V> {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl<V> Eq for Panel<V> {}
impl<V> PartialOrd for Panel<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Panel<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// 15/7-point Kronrod/Gauss pair on `[a, b]`, unnormalized.
fn gauss_kronrod<V: QuadValue, F: Fn(f64) -> V>(f: &F, a: f64, b: f64) -> Panel<V> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc.scale(WGK[7]);
    let mut gauss = fc.scale(WG[3]);
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx).add(f(center + dx));
        kronrod = kronrod.add(pair.scale(WGK[j]));
        if j % 2 == 1 {
            gauss = gauss.add(pair.scale(WG[j / 2]));
        }
    }
    let value = kronrod.scale(half);
    let error = kronrod.sub(gauss).scale(half).magnitude();
    Panel { a, b, value, error }
}

/// Panel ends on `[0, 2π]` from the breakpoints.
fn base_partition(breakpoints: &Breakpoints) -> Vec<f64> {
    let mut ends = vec![0.0];
    ends.extend(breakpoints.angles().filter(|&a| a > 0.0 && a < TAU));
    ends.push(TAU);
    ends
}

fn adaptive<V: QuadValue, F: Fn(f64) -> V>(
    f: F,
    ends: &[f64],
    spec: &QuadratureSpec,
) -> Result<Estimate<V>, QuadratureError> {
    spec.validate()?;
    let norm = 1.0 / TAU;
    let mut heap = BinaryHeap::new();
    let mut done: Vec<Panel<V>> = Vec::new();
    let mut total = V::zero();
    let mut err_sum = 0.0;
    for w in ends.windows(2) {
        if w[1] > w[0] {
            let p = gauss_kronrod(&f, w[0], w[1]);
            total = total.add(p.value);
            err_sum += p.error;
            heap.push(p);
        }
    }
    let tolerance = |value: &V| spec.abs_tol.max(spec.rel_tol * value.magnitude() * norm);
    let mut subdivisions = 0;
    while err_sum * norm > tolerance(&total) {
        if subdivisions >= spec.max_subdivisions {
            return Err(QuadratureError::NonConvergence {
                estimate: err_sum * norm,
                tolerance: tolerance(&total),
                subdivisions,
            });
        }
        let Some(worst) = heap.pop() else {
            // every remaining panel is at the resolution limit
            return Err(QuadratureError::NonConvergence {
                estimate: err_sum * norm,
                tolerance: tolerance(&total),
                subdivisions,
            });
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b || (worst.b - worst.a) < 1e-13 {
            done.push(worst);
            continue;
        }
        let left = gauss_kronrod(&f, worst.a, mid);
        let right = gauss_kronrod(&f, mid, worst.b);
        total = total.sub(worst.value).add(left.value).add(right.value);
        err_sum += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
    }
    // resum to shed the drift of the incremental updates
    let panels: Vec<Panel<V>> = heap.into_vec().into_iter().chain(done).collect();
    let mut value = V::zero();
    let mut error = 0.0;
    for p in &panels {
        value = value.add(p.value);
        error += p.error;
    }
    Ok(Estimate {
        value: value.scale(norm),
        error: error * norm,
        panels: panels.len(),
        evaluations: 15 * (ends.len() - 1 + 2 * subdivisions),
    })
}

/// `(1/2π) ∫_0^{2π} f(ξ) dξ` with panels split at `spec.breakpoints`.
pub fn integrate_periodic<V: QuadValue, F: Fn(f64) -> V>(
    f: F,
    spec: &QuadratureSpec,
) -> Result<Estimate<V>, QuadratureError> {
    adaptive(f, &base_partition(&spec.breakpoints), spec)
}

/// Matrix Fourier coefficient `(1/2π) ∫ a(ξ) e^{-i x ξ} dξ`.
///
/// Each breakpoint panel is pre-cut into pieces no longer than half a period
/// of `e^{-i x ξ}`; `max_subdivisions` bounds the adaptive bisections on top
/// of that partition.
pub fn fourier_coefficient<F: Fn(f64) -> Mat2>(
    sym: F,
    x: i64,
    spec: &QuadratureSpec,
) -> Result<Estimate<Mat2>, QuadratureError> {
    if x.unsigned_abs() > spec.max_fourier_index {
        return Err(QuadratureError::IndexTooLarge {
            index: x,
            cap: spec.max_fourier_index,
        });
    }
    let base = base_partition(&spec.breakpoints);
    let ends = if x == 0 {
        base
    } else {
        let max_width = PI / x.unsigned_abs() as f64;
        let mut ends = vec![base[0]];
        for w in base.windows(2) {
            let pieces = ((w[1] - w[0]) / max_width).ceil().max(1.0) as usize;
            let h = (w[1] - w[0]) / pieces as f64;
            for k in 1..pieces {
                ends.push(w[0] + h * k as f64);
            }
            ends.push(w[1]);
        }
        ends
    };
    let xf = x as f64;
    adaptive(
        |xi| {
            let (s, c) = (xf * xi).sin_cos();
            sym(xi) * Complex64::new(c, -s)
        },
        &ends,
        spec,
    )
}
