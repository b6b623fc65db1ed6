//! EXP3 agents for the categorical variables and the reward scaling that
//! keeps their updates bounded.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weights are rescaled once the largest exceeds this.
const WEIGHT_CEILING: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exp3Agent {
    weights: Vec<f64>,
    gamma: f64,
}

impl Exp3Agent {
    pub fn new(arms: usize, gamma: f64) -> Result<Self> {
        if arms < 2 {
            return Err(Error::InvalidConfig(format!(
                "EXP3 needs at least 2 arms, got {arms}"
            )));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "gamma {gamma} must be in (0, 1]"
            )));
        }
        Ok(Self {
            weights: vec![1.0; arms],
            gamma,
        })
    }

    /// Agent with explicit starting weights. Weights must be positive and
    /// finite; `gamma` may be 0 here for analysis.
    pub fn with_weights(weights: Vec<f64>, gamma: f64) -> Result<Self> {
        if weights.len() < 2 || weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidConfig(
                "weights must be >= 2 positive finite values".into(),
            ));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidConfig(format!(
                "gamma {gamma} must be in [0, 1]"
            )));
        }
        Ok(Self { weights, gamma })
    }

    pub fn arms(&self) -> usize {
        self.weights.len()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Mixture of the normalized weights with the uniform distribution:
    /// `p_i = (1 - γ) w_i / Σw + γ / K`.
    pub fn probabilities(&self) -> Vec<f64> {
        let k = self.arms() as f64;
        let total: f64 = self.weights.iter().sum();
        self.weights
            .iter()
            .map(|w| (1.0 - self.gamma) * (w / total) + self.gamma / k)
            .collect()
    }

    /// Draws an arm with one uniform variate from `rng`.
    pub fn select<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.probabilities(), rng.gen::<f64>())
    }

    /// Importance-weighted exponential update of the pulled arm only.
    pub fn update(&mut self, arm: usize, unit_reward: f64) -> Result<()> {
        if arm >= self.arms() {
            return Err(Error::ArmOutOfRange {
                arm,
                arms: self.arms(),
            });
        }
        if !(0.0..=1.0).contains(&unit_reward) {
            return Err(Error::RewardOutOfRange(unit_reward));
        }
        let p = self.probabilities()[arm];
        let k = self.arms() as f64;
        self.weights[arm] *= (self.gamma * (unit_reward / p) / k).exp();
        let max = self.weights.iter().copied().fold(0.0, f64::max);
        if max > WEIGHT_CEILING {
            for w in &mut self.weights {
                *w /= max;
            }
        }
        Ok(())
    }
}

/// Inverse-CDF lookup: first index whose cumulative probability exceeds `u`.
fn sample_index(p: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    // u landed in the round-off gap above the last cumulative sum.
    p.iter().rposition(|&pi| pi > 0.0).unwrap_or(p.len() - 1)
}

/// Z-scores raw voltages against the statistics of the initial samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardNormalizer {
    pub mean: f64,
    /// Population standard deviation (divide by n).
    pub std: f64,
}

impl RewardNormalizer {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidConfig(
                "no samples for reward normalization".into(),
            ));
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        if !(std > 0.0) {
            return Err(Error::DegenerateNormalizer { value: mean });
        }
        Ok(Self { mean, std })
    }

    pub fn normalize(&self, volts: f64) -> f64 {
        (volts - self.mean) / self.std
    }
}

/// Maps the ±3σ band of a normalized reward affinely onto `[0, 1]`.
pub fn squash_to_unit(normalized: f64) -> f64 {
    ((normalized + 3.0) / 6.0).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn probabilities_examples() {
        let a = Exp3Agent::new(3, 0.3).unwrap();
        for p in a.probabilities() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        let full = Exp3Agent::with_weights(vec![5.0, 1.0], 1.0).unwrap();
        assert_eq!(full.probabilities(), vec![0.5, 0.5]);
        let prop = Exp3Agent::with_weights(vec![2.0, 1.0], 0.0).unwrap();
        let p = prop.probabilities();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15 && (p[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn update_examples() {
        let mut a = Exp3Agent::new(2, 0.1).unwrap();
        a.update(0, 1.0).unwrap();
        assert!((a.weights()[0] - 1.105_170_918_075_647_7).abs() < 1e-12);
        assert_eq!(a.weights()[1], 1.0);

        let before = a.clone();
        a.update(1, 0.0).unwrap();
        assert_eq!(a, before);

        assert!(matches!(a.update(0, 1.5), Err(Error::RewardOutOfRange(_))));
        assert!(matches!(a.update(0, -0.1), Err(Error::RewardOutOfRange(_))));
        assert!(matches!(a.update(2, 0.5), Err(Error::ArmOutOfRange { .. })));
    }

    #[test]
    fn repeated_reward_increases_toward_limit() {
        let mut a = Exp3Agent::new(2, 0.1).unwrap();
        let limit = 1.0 - 0.1 + 0.1 / 2.0;
        let mut last = a.probabilities()[0];
        for _ in 0..1000 {
            a.update(0, 1.0).unwrap();
            let p = a.probabilities()[0];
            assert!(p > last || (p - limit).abs() < 1e-12);
            assert!(p <= limit + 1e-12);
            last = p;
        }
        assert!((last - limit).abs() < 1e-6);
    }

    #[test]
    fn renormalization_keeps_probabilities() {
        let mut a = Exp3Agent::with_weights(vec![9.9e5, 1.0], 0.1).unwrap();
        let p_before = {
            let mut b = a.clone();
            b.weights[0] *= (0.1 * (1.0 / b.probabilities()[0]) / 2.0).exp();
            b.probabilities()
        };
        a.update(0, 1.0).unwrap();
        assert!(a.weights().iter().all(|w| *w <= 1.0));
        for (x, y) in a.probabilities().iter().zip(&p_before) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn select_degenerate_and_deterministic() {
        let a = Exp3Agent::with_weights(vec![1.0, 1e-300], 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            assert_eq!(a.select(&mut rng), 0);
        }
        let b = Exp3Agent::with_weights(vec![3.0, 1.0], 0.2).unwrap();
        let draw = |seed| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|_| b.select(&mut r)).collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
    }

    #[test]
    fn select_frequency_monte_carlo() {
        // p = (0.7, 0.3) with γ = 0: weights 7:3.
        let a = Exp3Agent::with_weights(vec![7.0, 3.0], 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let hits = (0..n).filter(|_| a.select(&mut rng) == 0).count();
        let freq = hits as f64 / n as f64;
        assert!((0.69..=0.71).contains(&freq), "freq {freq}");
    }

    #[test]
    fn normalizer() {
        let n = RewardNormalizer::from_samples(&[8.0, 10.0, 12.0]).unwrap();
        assert_eq!(n.mean, 10.0);
        // Population std of {8, 10, 12} is sqrt(8/3).
        let std = (8.0f64 / 3.0).sqrt();
        assert!((n.std - std).abs() < 1e-15);
        assert!((n.normalize(12.0) - 2.0 / std).abs() < 1e-15);
        assert_eq!(n.normalize(10.0), 0.0);
        assert!((n.normalize(10.0 + n.std) - 1.0).abs() < 1e-15);
        assert!(matches!(
            RewardNormalizer::from_samples(&[3.0, 3.0, 3.0]),
            Err(Error::DegenerateNormalizer { .. })
        ));
    }

    #[test]
    fn squash() {
        assert_eq!(squash_to_unit(0.0), 0.5);
        assert_eq!(squash_to_unit(3.0), 1.0);
        assert_eq!(squash_to_unit(-3.0), 0.0);
        assert_eq!(squash_to_unit(10.0), 1.0);
        assert_eq!(squash_to_unit(-10.0), 0.0);
    }

    proptest! {
        #[test]
        fn simplex(ws in proptest::collection::vec(1e-6f64..1e6, 2..6), gamma in 0.01f64..1.0) {
            let a = Exp3Agent::with_weights(ws.clone(), gamma).unwrap();
            let p = a.probabilities();
            let k = ws.len() as f64;
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            for &pi in &p {
                prop_assert!(pi >= gamma / k - 1e-15 && pi <= 1.0 + 1e-15);
            }
        }

        #[test]
        fn scale_invariance(ws in proptest::collection::vec(1e-3f64..1e3, 2..6), c in 0.5f64..4.0) {
            // Powers of two scale exactly in floating point.
            let c = c.round().exp2();
            let a = Exp3Agent::with_weights(ws.clone(), 0.1).unwrap();
            let b = Exp3Agent::with_weights(ws.iter().map(|w| w / c).collect(), 0.1).unwrap();
            prop_assert_eq!(a.probabilities(), b.probabilities());
        }

        #[test]
        fn update_is_local(ws in proptest::collection::vec(0.1f64..10.0, 2..6), r in 0.0f64..=1.0, pick in 0usize..6) {
            let mut a = Exp3Agent::with_weights(ws.clone(), 0.1).unwrap();
            let arm = pick % ws.len();
            a.update(arm, r).unwrap();
            for (i, (w0, w1)) in ws.iter().zip(a.weights()).enumerate() {
                if i != arm {
                    prop_assert_eq!(w0, w1);
                }
            }
        }
    }
}
