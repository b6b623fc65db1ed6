use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smoothness of the continuous kernel; fixed, never fitted.
pub const MATERN_NU: f64 = 2.5;

const SQRT5: f64 = 2.236_067_977_499_79;

/// A point in the mixed space: one arm index per categorical variable and
/// raw continuous coordinates (mm for the drawing problem).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedInput {
    pub categorical: Vec<usize>,
    pub continuous: Vec<f64>,
}

/// Arity of each categorical variable and the box of the continuous ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSpace {
    pub arities: Vec<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl InputSpace {
    pub fn new(arities: Vec<usize>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::LengthMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(Error::InvalidConfig(
                "continuous box must have lower < upper".into(),
            ));
        }
        if arities.iter().any(|&a| a < 2) {
            return Err(Error::InvalidConfig(
                "categorical arity must be at least 2".into(),
            ));
        }
        Ok(Self {
            arities,
            lower,
            upper,
        })
    }

    pub fn categorical_dims(&self) -> usize {
        self.arities.len()
    }

    pub fn continuous_dims(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self, z: &MixedInput) -> Result<()> {
        if z.categorical.len() != self.arities.len() {
            return Err(Error::LengthMismatch {
                expected: self.arities.len(),
                got: z.categorical.len(),
            });
        }
        if z.continuous.len() != self.lower.len() {
            return Err(Error::LengthMismatch {
                expected: self.lower.len(),
                got: z.continuous.len(),
            });
        }
        for (&h, &a) in z.categorical.iter().zip(&self.arities) {
            if h >= a {
                return Err(Error::ArmOutOfRange { arm: h, arms: a });
            }
        }
        for ((&x, &l), &u) in z.continuous.iter().zip(&self.lower).zip(&self.upper) {
            if !(x >= l && x <= u) {
                return Err(Error::InvalidConfig(format!(
                    "continuous value {x} outside [{l}, {u}]"
                )));
            }
        }
        Ok(())
    }

    /// Continuous coordinates rescaled to the unit cube.
    pub fn to_unit(&self, continuous: &[f64]) -> Vec<f64> {
        continuous
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(x, (l, u))| (x - l) / (u - l))
            .collect()
    }

    pub fn encode(&self, z: &MixedInput) -> Encoded {
        Encoded {
            categorical: z.categorical.clone(),
            unit: self.to_unit(&z.continuous),
        }
    }
}

/// A [`MixedInput`] with continuous coordinates already in the unit cube.
#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub categorical: Vec<usize>,
    pub unit: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    /// Per-dimension lengthscales in unit-cube coordinates.
    pub lengthscales: Vec<f64>,
    pub signal_variance: f64,
    pub categorical_variance: f64,
    /// λ in `(1-λ)(k_h + k_x) + λ k_h k_x`.
    pub mix_weight: f64,
    pub noise_variance: f64,
}

impl KernelParams {
    /// Starting values used until enough data exists to fit.
    pub fn defaults(continuous_dims: usize) -> Self {
        Self {
            lengthscales: vec![0.5; continuous_dims],
            signal_variance: 1.0,
            categorical_variance: 1.0,
            mix_weight: 0.5,
            noise_variance: 0.01,
        }
    }

    pub fn matern_nu(&self) -> f64 {
        MATERN_NU
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !self.lengthscales.iter().all(|&l| pos(l)) {
            return Err(Error::InvalidParams("lengthscales must be positive".into()));
        }
        if !pos(self.signal_variance) || !pos(self.categorical_variance) {
            return Err(Error::InvalidParams("variances must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.mix_weight) {
            return Err(Error::InvalidParams(format!(
                "mix weight {} not in [0, 1]",
                self.mix_weight
            )));
        }
        if !(self.noise_variance >= 0.0) || !self.noise_variance.is_finite() {
            return Err(Error::InvalidParams("noise variance must be >= 0".into()));
        }
        Ok(())
    }

    /// `k(z, z)`, identical for every input.
    pub fn prior_variance(&self) -> f64 {
        combine(
            self.categorical_variance,
            self.signal_variance,
            self.mix_weight,
        )
    }
}

/// Matérn 5/2 covariance at a lengthscale-free distance `r`:
/// `σ²(1 + √5 r/ℓ + 5r²/(3ℓ²)) exp(-√5 r/ℓ)`.
pub fn matern52(distance: f64, lengthscale: f64, signal_variance: f64) -> Result<f64> {
    if distance < 0.0 || distance.is_nan() {
        return Err(Error::NegativeDistance(distance));
    }
    if !(lengthscale > 0.0) || !(signal_variance > 0.0) {
        return Err(Error::InvalidParams(
            "lengthscale and variance must be positive".into(),
        ));
    }
    Ok(matern52_scaled(distance / lengthscale, signal_variance))
}

/// Matérn 5/2 at an already lengthscale-scaled distance.
#[inline]
pub fn matern52_scaled(r: f64, signal_variance: f64) -> f64 {
    if r.is_infinite() {
        return 0.0;
    }
    let s = SQRT5 * r;
    signal_variance * (1.0 + s + s * s / 3.0) * (-s).exp()
}

/// Anisotropic Euclidean distance with per-dimension lengthscales.
pub fn scaled_distance(a: &[f64], b: &[f64], lengthscales: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .zip(lengthscales)
        .map(|((x, y), l)| ((x - y) / l).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Fraction of matching categories scaled by the categorical variance.
pub fn overlap_kernel(h: &[usize], h2: &[usize], categorical_variance: f64) -> Result<f64> {
    if h.len() != h2.len() {
        return Err(Error::LengthMismatch {
            expected: h.len(),
            got: h2.len(),
        });
    }
    if h.is_empty() {
        return Ok(categorical_variance);
    }
    let matches = h.iter().zip(h2).filter(|(a, b)| a == b).count();
    Ok(categorical_variance * matches as f64 / h.len() as f64)
}

#[inline]
pub(crate) fn combine(k_h: f64, k_x: f64, mix: f64) -> f64 {
    (1.0 - mix) * (k_h + k_x) + mix * (k_h * k_x)
}

/// Sum-plus-product of the categorical overlap and continuous Matérn kernels.
pub fn mixed_kernel(a: &Encoded, b: &Encoded, params: &KernelParams) -> Result<f64> {
    let k_h = overlap_kernel(&a.categorical, &b.categorical, params.categorical_variance)?;
    if a.unit.len() != b.unit.len() || a.unit.len() != params.lengthscales.len() {
        return Err(Error::LengthMismatch {
            expected: params.lengthscales.len(),
            got: a.unit.len(),
        });
    }
    let r = scaled_distance(&a.unit, &b.unit, &params.lengthscales);
    let k_x = matern52_scaled(r, params.signal_variance);
    Ok(combine(k_h, k_x, params.mix_weight))
}
