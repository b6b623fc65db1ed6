//! Maximum-likelihood kernel hyperparameters by multi-start Nelder–Mead in
//! log-parameter space, clamped to a box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::KernelParams;
use super::model::{Gp, GpDataset, PairCache};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds {
    pub lengthscale: (f64, f64),
    pub signal_variance: (f64, f64),
    pub categorical_variance: (f64, f64),
    pub noise_variance: (f64, f64),
}

impl Default for ParamBounds {
    fn default() -> Self {
        Self {
            lengthscale: (0.01, 10.0),
            signal_variance: (0.01, 100.0),
            categorical_variance: (0.01, 100.0),
            noise_variance: (1e-6, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitBudget {
    /// Total number of starting points, the defaults included.
    pub starts: usize,
    /// Likelihood evaluations allowed per start.
    pub evals_per_start: usize,
    pub seed: u64,
}

impl Default for FitBudget {
    fn default() -> Self {
        Self {
            starts: 4,
            evals_per_start: 150,
            seed: 0,
        }
    }
}

/// Outcome of a fit, with the likelihood at the defaults for comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub params: KernelParams,
    pub lml: f64,
    pub default_lml: f64,
}

struct Objective<'a> {
    data: &'a GpDataset,
    cache: PairCache,
    template: KernelParams,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Objective<'_> {
    fn dims(&self) -> usize {
        self.lo.len()
    }

    fn clamp(&self, theta: &mut [f64]) {
        for ((t, l), h) in theta.iter_mut().zip(&self.lo).zip(&self.hi) {
            *t = t.clamp(*l, *h);
        }
    }

    fn to_params(&self, theta: &[f64]) -> KernelParams {
        let d = self.template.lengthscales.len();
        KernelParams {
            lengthscales: theta[..d].iter().map(|t| t.exp()).collect(),
            signal_variance: theta[d].exp(),
            categorical_variance: theta[d + 1].exp(),
            mix_weight: self.template.mix_weight,
            noise_variance: theta[d + 2].exp(),
        }
    }

    fn to_theta(&self, p: &KernelParams) -> Vec<f64> {
        let mut t: Vec<f64> = p.lengthscales.iter().map(|l| l.ln()).collect();
        t.push(p.signal_variance.ln());
        t.push(p.categorical_variance.ln());
        t.push(p.noise_variance.max(f64::MIN_POSITIVE).ln());
        self.clamp(&mut t);
        t
    }

    /// Log marginal likelihood, `-inf` when the Gram matrix cannot be factorized.
    fn lml(&self, theta: &[f64]) -> f64 {
        match Gp::condition_cached(self.data, &self.cache, &self.to_params(theta)) {
            Ok(gp) if gp.log_marginal_likelihood().is_finite() => gp.log_marginal_likelihood(),
            _ => f64::NEG_INFINITY,
        }
    }
}

/// Maximizes `-f` (i.e. minimizes `f = -lml`) from `start`; returns the best
/// point seen and its likelihood. The start itself is always evaluated, so
/// the result is never worse than it.
fn nelder_mead(obj: &Objective, start: Vec<f64>, max_evals: usize) -> (Vec<f64>, f64) {
    let n = obj.dims();
    let f = |x: &[f64]| -obj.lml(x);
    let mut evals = 0usize;
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = f(&start);
    evals += 1;
    simplex.push((start.clone(), f0));
    for i in 0..n {
        let mut x = start.clone();
        let step = 0.5;
        x[i] = if x[i] + step <= obj.hi[i] {
            x[i] + step
        } else {
            x[i] - step
        };
        obj.clamp(&mut x);
        let fx = f(&x);
        evals += 1;
        simplex.push((x, fx));
    }

    let order = |s: &mut Vec<(Vec<f64>, f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));
    while evals < max_evals {
        order(&mut simplex);
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if (worst - best).abs() <= 1e-9 * (1.0 + best.abs()) && worst.is_finite() {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let toward = |t: f64| {
            let mut x: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (w - c))
                .collect();
            obj.clamp(&mut x);
            x
        };
        let xr = toward(-1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < simplex[0].1 {
            let xe = toward(-2.0);
            let fe = f(&xe);
            evals += 1;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let x = toward(-0.5);
                let fx = f(&x);
                (x, fx)
            } else {
                let x = toward(0.5);
                let fx = f(&x);
                (x, fx)
            };
            evals += 1;
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                // Shrink toward the best vertex.
                let b = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    let mut x: Vec<f64> = b
                        .iter()
                        .zip(&v.0)
                        .map(|(bi, vi)| bi + 0.5 * (vi - bi))
                        .collect();
                    obj.clamp(&mut x);
                    v.1 = f(&x);
                    v.0 = x;
                    evals += 1;
                }
            }
        }
    }
    order(&mut simplex);
    let (x, fx) = simplex.swap_remove(0);
    (x, -fx)
}

/// Fits lengthscales, both variances and the noise; the mix weight is kept
/// from the defaults. Starting points are the defaults, then `warm` starts,
/// then log-uniform random draws, `budget.starts` in total. If every start
/// fails the defaults are returned.
pub fn fit_hyperparams(
    data: &GpDataset,
    bounds: &ParamBounds,
    budget: &FitBudget,
    warm: &[KernelParams],
) -> FitReport {
    let d = data.space().continuous_dims();
    let defaults = KernelParams::defaults(d);
    let mut lo = vec![bounds.lengthscale.0.ln(); d];
    let mut hi = vec![bounds.lengthscale.1.ln(); d];
    for (l, h) in [
        bounds.signal_variance,
        bounds.categorical_variance,
        bounds.noise_variance,
    ] {
        lo.push(l.ln());
        hi.push(h.ln());
    }
    let obj = Objective {
        data,
        cache: PairCache::new(data.encoded()),
        template: defaults.clone(),
        lo,
        hi,
    };

    let default_lml = obj.lml(&obj.to_theta(&defaults));
    let total = budget.starts.max(1);
    let mut starts = vec![obj.to_theta(&defaults)];
    starts.extend(warm.iter().map(|p| obj.to_theta(p)));
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    while starts.len() < total {
        let t: Vec<f64> = obj
            .lo
            .iter()
            .zip(&obj.hi)
            .map(|(l, h)| if l < h { rng.gen_range(*l..=*h) } else { *l })
            .collect();
        starts.push(t);
    }
    starts.truncate(total);

    let results: Vec<(Vec<f64>, f64)> = starts
        .into_par_iter()
        .map(|s| nelder_mead(&obj, s, budget.evals_per_start.max(obj.dims() + 1)))
        .collect();

    let mut best: Option<(Vec<f64>, f64)> = None;
    for (theta, lml) in results {
        if lml.is_finite() && best.as_ref().is_none_or(|b| lml > b.1) {
            best = Some((theta, lml));
        }
    }
    match best {
        Some((theta, lml)) => FitReport {
            params: obj.to_params(&theta),
            lml,
            default_lml,
        },
        None => FitReport {
            params: defaults,
            lml: default_lml,
            default_lml,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::kernel::{InputSpace, MixedInput};
    use crate::gp::model::log_marginal_likelihood;
    use crate::linalg::Cholesky;
    use rand::Rng;

    fn unit_space() -> InputSpace {
        InputSpace::new(vec![], vec![0.0], vec![1.0]).unwrap()
    }

    /// Draws a GP sample with Matérn 5/2, ℓ = 0.3 on [0, 1].
    fn synthetic(n: usize, seed: u64) -> GpDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..n)
            .map(|i| (i as f64 + rng.gen_range(0.0..1.0)) / n as f64)
            .collect();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                k[i * n + j] =
                    crate::gp::kernel::matern52((xs[i] - xs[j]).abs(), 0.3, 1.0).unwrap();
            }
            k[i * n + i] += 1e-4;
        }
        let c = Cholesky::factor(&k, n).unwrap();
        let z: Vec<f64> = (0..n).map(|_| std_normal(&mut rng)).collect();
        let y = lower_times(&c, &k, &z);
        let inputs = xs
            .iter()
            .map(|&x| MixedInput {
                categorical: vec![],
                continuous: vec![x],
            })
            .collect();
        GpDataset::from_parts(unit_space(), inputs, y).unwrap()
    }

    fn std_normal(rng: &mut impl Rng) -> f64 {
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Computes `L z` where `K = L Lᵀ`: `L z = K (Lᵀ)⁻¹ z`.
    fn lower_times(c: &Cholesky, k: &[f64], z: &[f64]) -> Vec<f64> {
        let mut w = z.to_vec();
        c.backward(&mut w);
        crate::linalg::mat_vec(k, c.dim(), &w)
    }

    #[test]
    fn recovers_lengthscale() {
        let data = synthetic(30, 17);
        let budget = FitBudget {
            starts: 6,
            evals_per_start: 300,
            seed: 1,
        };
        let fit = fit_hyperparams(&data, &ParamBounds::default(), &budget, &[]);
        let l = fit.params.lengthscales[0];
        assert!((0.1..=0.9).contains(&l), "fitted lengthscale {l}");
        assert!(fit.lml >= fit.default_lml);
    }

    #[test]
    fn constant_targets() {
        let inputs: Vec<MixedInput> = (0..8)
            .map(|i| MixedInput {
                categorical: vec![],
                continuous: vec![i as f64 / 7.0],
            })
            .collect();
        let data = GpDataset::from_parts(unit_space(), inputs, vec![0.0; 8]).unwrap();
        let fit = fit_hyperparams(&data, &ParamBounds::default(), &FitBudget::default(), &[]);
        assert!(fit.params.signal_variance < 0.1, "{:?}", fit.params);
        let gp = Gp::condition(&data, &fit.params).unwrap();
        let post = gp
            .predict(&MixedInput {
                categorical: vec![],
                continuous: vec![0.5],
            })
            .unwrap();
        assert!(post.mean.abs() < 1e-6);
    }

    #[test]
    fn single_point_box_returns_it() {
        let data = synthetic(10, 3);
        let bounds = ParamBounds {
            lengthscale: (0.2, 0.2),
            signal_variance: (2.0, 2.0),
            categorical_variance: (0.5, 0.5),
            noise_variance: (0.01, 0.01),
        };
        let fit = fit_hyperparams(
            &data,
            &bounds,
            &FitBudget {
                starts: 1,
                evals_per_start: 50,
                seed: 0,
            },
            &[],
        );
        assert!((fit.params.lengthscales[0] - 0.2).abs() < 1e-12);
        assert!((fit.params.signal_variance - 2.0).abs() < 1e-12);
        assert!((fit.params.categorical_variance - 0.5).abs() < 1e-12);
        assert!((fit.params.noise_variance - 0.01).abs() < 1e-12);
    }

    #[test]
    fn never_worse_than_any_start() {
        let data = synthetic(15, 8);
        let warm = KernelParams {
            lengthscales: vec![2.0],
            signal_variance: 3.0,
            categorical_variance: 0.2,
            mix_weight: 0.5,
            noise_variance: 0.05,
        };
        let fit = fit_hyperparams(
            &data,
            &ParamBounds::default(),
            &FitBudget::default(),
            std::slice::from_ref(&warm),
        );
        assert!(fit.lml >= log_marginal_likelihood(&data, &warm).unwrap());
        assert!(fit.lml >= fit.default_lml);
        let check = log_marginal_likelihood(&data, &fit.params).unwrap();
        assert!((check - fit.lml).abs() < 1e-9);
    }

    #[test]
    fn deterministic() {
        let data = synthetic(12, 4);
        let b = FitBudget::default();
        let a = fit_hyperparams(&data, &ParamBounds::default(), &b, &[]);
        let c = fit_hyperparams(&data, &ParamBounds::default(), &b, &[]);
        assert_eq!(a, c);
    }
}
