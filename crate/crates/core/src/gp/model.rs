use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::kernel::{
    combine, matern52_scaled, mixed_kernel, Encoded, InputSpace, KernelParams, MixedInput,
};
use crate::error::{Error, Result};
use crate::linalg::Cholesky;

/// First jitter, relative to the signal variance.
const JITTER_START: f64 = 1e-8;
/// Last jitter tried before giving up, relative to the signal variance.
const JITTER_MAX: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
pub struct GpDataset {
    space: InputSpace,
    inputs: Vec<MixedInput>,
    encoded: Vec<Encoded>,
    targets: Vec<f64>,
}

impl GpDataset {
    pub fn new(space: InputSpace) -> Self {
        Self {
            space,
            inputs: Vec::new(),
            encoded: Vec::new(),
            targets: Vec::new(),
        }
    }

    pub fn from_parts(
        space: InputSpace,
        inputs: Vec<MixedInput>,
        targets: Vec<f64>,
    ) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::LengthMismatch {
                expected: inputs.len(),
                got: targets.len(),
            });
        }
        let mut d = Self::new(space);
        for (z, y) in inputs.into_iter().zip(targets) {
            d.push(z, y)?;
        }
        Ok(d)
    }

    pub fn push(&mut self, input: MixedInput, target: f64) -> Result<()> {
        self.space.validate(&input)?;
        if !target.is_finite() {
            return Err(Error::InvalidParams(format!("non-finite target {target}")));
        }
        self.encoded.push(self.space.encode(&input));
        self.inputs.push(input);
        self.targets.push(target);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn space(&self) -> &InputSpace {
        &self.space
    }

    pub fn inputs(&self) -> &[MixedInput] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub(crate) fn encoded(&self) -> &[Encoded] {
        &self.encoded
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpPosterior {
    pub mean: f64,
    /// Latent-function variance, clamped at 0.
    pub variance: f64,
}

/// Parameter-independent pairwise quantities of a dataset, so that Gram
/// matrices for many candidate parameters are cheap to assemble.
#[derive(Debug, Clone)]
pub(crate) struct PairCache {
    n: usize,
    dims: usize,
    /// Fraction of matching categories, row-major `n × n`.
    overlap: Vec<f64>,
    /// Squared unit-cube differences, `n × n × dims`.
    sq: Vec<f64>,
}

impl PairCache {
    pub(crate) fn new(encoded: &[Encoded]) -> Self {
        let n = encoded.len();
        let dims = encoded.first().map_or(0, |e| e.unit.len());
        let mut overlap = vec![0.0; n * n];
        let mut sq = vec![0.0; n * n * dims];
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (&encoded[i], &encoded[j]);
                let cats = a.categorical.len();
                overlap[i * n + j] = if cats == 0 {
                    1.0
                } else {
                    a.categorical
                        .iter()
                        .zip(&b.categorical)
                        .filter(|(x, y)| x == y)
                        .count() as f64
                        / cats as f64
                };
                for k in 0..dims {
                    sq[(i * n + j) * dims + k] = (a.unit[k] - b.unit[k]).powi(2);
                }
            }
        }
        Self {
            n,
            dims,
            overlap,
            sq,
        }
    }

    fn gram(&self, params: &KernelParams) -> Vec<f64> {
        let n = self.n;
        let inv_l2: Vec<f64> = params.lengthscales.iter().map(|l| 1.0 / (l * l)).collect();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let base = (i * n + j) * self.dims;
                let r2: f64 = (0..self.dims).map(|d| self.sq[base + d] * inv_l2[d]).sum();
                let k_x = matern52_scaled(r2.sqrt(), params.signal_variance);
                let k_h = params.categorical_variance * self.overlap[i * n + j];
                let v = combine(k_h, k_x, params.mix_weight);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        k
    }
}

/// Factorizes `K + (σ_n² + jitter) I`, escalating the jitter tenfold from
/// `1e-8 σ_f²` up to `1e-2 σ_f²`.
fn factor_with_jitter(gram: &[f64], n: usize, params: &KernelParams) -> Result<(Cholesky, f64)> {
    let mut rel = JITTER_START;
    loop {
        let jitter = rel * params.signal_variance;
        let mut a = gram.to_vec();
        for i in 0..n {
            a[i * n + i] += params.noise_variance + jitter;
        }
        if let Some(c) = Cholesky::factor(&a, n) {
            return Ok((c, jitter));
        }
        if rel >= JITTER_MAX * (1.0 - 1e-9) {
            return Err(Error::NotPositiveDefinite { jitter });
        }
        rel *= 10.0;
    }
}

/// A GP conditioned on a dataset under fixed kernel parameters.
#[derive(Debug, Clone)]
pub struct Gp {
    space: InputSpace,
    params: KernelParams,
    encoded: Vec<Encoded>,
    chol: Cholesky,
    alpha: Vec<f64>,
    jitter: f64,
    lml: f64,
}

impl Gp {
    pub fn condition(data: &GpDataset, params: &KernelParams) -> Result<Self> {
        params.validate()?;
        if params.lengthscales.len() != data.space.continuous_dims() {
            return Err(Error::LengthMismatch {
                expected: data.space.continuous_dims(),
                got: params.lengthscales.len(),
            });
        }
        Self::condition_cached(data, &PairCache::new(data.encoded()), params)
    }

    pub(crate) fn condition_cached(
        data: &GpDataset,
        cache: &PairCache,
        params: &KernelParams,
    ) -> Result<Self> {
        let n = data.len();
        let gram = cache.gram(params);
        let (chol, jitter) = factor_with_jitter(&gram, n, params)?;
        let alpha = chol.solve(&data.targets);
        let fit: f64 = data.targets.iter().zip(&alpha).map(|(y, a)| y * a).sum();
        let lml = -0.5 * fit - 0.5 * chol.log_det() - 0.5 * n as f64 * (2.0 * PI).ln();
        Ok(Self {
            space: data.space.clone(),
            params: params.clone(),
            encoded: data.encoded().to_vec(),
            chol,
            alpha,
            jitter,
            lml,
        })
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    /// Jitter that was added to the diagonal to factorize.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.lml
    }

    pub fn predict(&self, query: &MixedInput) -> Result<GpPosterior> {
        self.space.validate(query)?;
        Ok(self.predict_encoded(&self.space.encode(query)))
    }

    pub(crate) fn predict_encoded(&self, q: &Encoded) -> GpPosterior {
        let prior = self.params.prior_variance();
        if self.encoded.is_empty() {
            return GpPosterior {
                mean: 0.0,
                variance: prior,
            };
        }
        let mut v: Vec<f64> = self
            .encoded
            .iter()
            .map(|z| mixed_kernel(z, q, &self.params).expect("dimensions validated"))
            .collect();
        let mean = v.iter().zip(&self.alpha).map(|(k, a)| k * a).sum();
        self.chol.forward(&mut v);
        let explained: f64 = v.iter().map(|x| x * x).sum();
        GpPosterior {
            mean,
            variance: (prior - explained).max(0.0),
        }
    }

    pub fn space(&self) -> &InputSpace {
        &self.space
    }
}

/// Zero-mean GP predictive distribution at `query`.
pub fn gp_posterior(
    data: &GpDataset,
    params: &KernelParams,
    query: &MixedInput,
) -> Result<GpPosterior> {
    Gp::condition(data, params)?.predict(query)
}

/// `-½ yᵀ(K+σ²I)⁻¹y - ½ log|K+σ²I| - (n/2) log 2π`.
pub fn log_marginal_likelihood(data: &GpDataset, params: &KernelParams) -> Result<f64> {
    Gp::condition(data, params).map(|g| g.log_marginal_likelihood())
}
