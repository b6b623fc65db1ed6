//! The mixed-variable optimization loop: EXP3 agents pick the categorical
//! values, then a GP-UCB search over the continuous box picks the rest.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandit::{squash_to_unit, Exp3Agent, RewardNormalizer};
use crate::circuit::{Pattern, ShapeKind, OFFSET_COUNT, OFFSET_LIMIT, SHAPE_COUNT};
use crate::error::{Error, Result};
use crate::gp::{
    fit_hyperparams, FitBudget, FitReport, Gp, GpDataset, GpPosterior, InputSpace, KernelParams,
    MixedInput, ParamBounds,
};

/// Hyperparameters are fitted once the dataset holds this many points.
pub const MIN_FIT_POINTS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub n_init: usize,
    pub n_iter: usize,
    /// UCB exploration weight κ.
    pub kappa: f64,
    /// Uniform random probes of the acquisition per suggestion.
    pub acquisition_samples: usize,
    /// Best probes polished by coordinate search.
    pub acquisition_refinements: usize,
    pub seed: u64,
    /// EXP3 exploration rate γ.
    pub gamma: f64,
    /// Continuous suggestions are rounded to this grid (mm).
    pub resolution: f64,
    pub fit_starts: usize,
    pub fit_evals: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            n_init: 5,
            n_iter: 40,
            kappa: 2.0,
            acquisition_samples: 1000,
            acquisition_refinements: 5,
            seed: 0,
            gamma: 0.1,
            resolution: 1e-3,
            fit_starts: 4,
            fit_evals: 150,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n_init < 2 {
            return bad("n_init must be at least 2");
        }
        if self.n_iter < 1 {
            return bad("n_iter must be at least 1");
        }
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return bad("kappa must be >= 0");
        }
        if self.acquisition_samples < 1 {
            return bad("acquisition_samples must be at least 1");
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must be in (0, 1]");
        }
        if !(self.resolution > 0.0) {
            return bad("resolution must be positive");
        }
        Ok(())
    }
}

/// One evaluated trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// 1-based position in the run, initial design first.
    pub iteration: usize,
    pub input: MixedInput,
    pub voltage: f64,
    pub normalized_reward: f64,
    pub best_so_far: f64,
    /// Per categorical variable, the arm distribution when it was chosen.
    pub arm_probabilities: Vec<Vec<f64>>,
}

impl TrialRecord {
    pub fn pattern(&self) -> Result<Pattern> {
        input_to_pattern(&self.input)
    }

    /// Probability of arm 1 (circle) for each categorical variable.
    pub fn p_circle(&self) -> Vec<f64> {
        self.arm_probabilities
            .iter()
            .map(|p| p.get(1).copied().unwrap_or(0.0))
            .collect()
    }
}

/// GP upper confidence bound `μ + κσ`.
pub fn ucb(posterior: &GpPosterior, kappa: f64) -> f64 {
    posterior.mean + kappa * posterior.variance.max(0.0).sqrt()
}

/// The mixed space of drawing patterns: five binary shape choices and three
/// offsets in ±20 mm.
pub fn pattern_space() -> InputSpace {
    InputSpace::new(
        vec![2; SHAPE_COUNT],
        vec![-OFFSET_LIMIT; OFFSET_COUNT],
        vec![OFFSET_LIMIT; OFFSET_COUNT],
    )
    .expect("static space is valid")
}

pub fn pattern_to_input(p: &Pattern) -> MixedInput {
    MixedInput {
        categorical: p.shapes.iter().map(|s| s.index()).collect(),
        continuous: p.offsets.to_vec(),
    }
}

pub fn input_to_pattern(z: &MixedInput) -> Result<Pattern> {
    if z.categorical.len() != SHAPE_COUNT || z.continuous.len() != OFFSET_COUNT {
        return Err(Error::InvalidPattern(format!(
            "input has wrong dimensions: {z:?}"
        )));
    }
    let mut shapes = [ShapeKind::Line; SHAPE_COUNT];
    for (s, &h) in shapes.iter_mut().zip(&z.categorical) {
        *s = ShapeKind::from_index(h).ok_or_else(|| {
            Error::InvalidPattern(format!("category {h} is neither line nor circle"))
        })?;
    }
    let mut offsets = [0.0; OFFSET_COUNT];
    offsets.copy_from_slice(&z.continuous);
    Pattern::new(shapes, offsets)
}

/// Snaps to the resolution grid. Dividing by the reciprocal step yields the
/// double nearest the decimal value, so printed offsets parse back exactly.
fn quantize(x: f64, resolution: f64, lo: f64, hi: f64) -> f64 {
    let per_unit = (1.0 / resolution).round();
    ((x * per_unit).round() / per_unit).clamp(lo, hi)
}

/// Derivative-free box maximization: `samples` uniform probes, then
/// coordinate search from the best `refinements` probes with steps halving
/// from a quarter of each box width down to `min_step`. Probes are drawn
/// before any evaluation; ties resolve to the lowest probe index.
pub fn maximize_box<F, R>(
    f: F,
    lower: &[f64],
    upper: &[f64],
    samples: usize,
    refinements: usize,
    min_step: f64,
    rng: &mut R,
) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64 + Sync,
    R: Rng + ?Sized,
{
    let d = lower.len();
    let probes: Vec<Vec<f64>> = (0..samples.max(1))
        .map(|_| (0..d).map(|k| rng.gen_range(lower[k]..=upper[k])).collect())
        .collect();
    let values: Vec<f64> = probes.par_iter().map(|x| f(x)).collect();
    let mut order: Vec<usize> = (0..probes.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order.truncate(refinements.max(1));

    let polished: Vec<(Vec<f64>, f64)> = order
        .par_iter()
        .map(|&i| {
            let mut x = probes[i].clone();
            let mut fx = values[i];
            let mut scale = 0.25;
            loop {
                let mut moved = false;
                for k in 0..d {
                    let step = scale * (upper[k] - lower[k]);
                    for dir in [1.0, -1.0] {
                        let mut y = x.clone();
                        y[k] = (x[k] + dir * step).clamp(lower[k], upper[k]);
                        if y[k] == x[k] {
                            continue;
                        }
                        let fy = f(&y);
                        if fy > fx {
                            x = y;
                            fx = fy;
                            moved = true;
                            break;
                        }
                    }
                }
                if !moved {
                    scale *= 0.5;
                    let smallest = (0..d)
                        .map(|k| scale * (upper[k] - lower[k]))
                        .fold(f64::INFINITY, f64::min);
                    if smallest < min_step {
                        break;
                    }
                }
            }
            (x, fx)
        })
        .collect();

    let mut best = polished[0].clone();
    for cand in polished.into_iter().skip(1) {
        if cand.1 > best.1 {
            best = cand;
        }
    }
    best
}

/// A proposal awaiting its objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct Suggestion {
    pub input: MixedInput,
    pub arm_probabilities: Vec<Vec<f64>>,
}

/// Optimizer state across one run.
#[derive(Debug, Clone)]
pub struct Optimizer {
    space: InputSpace,
    config: OptimizerConfig,
    agents: Vec<Exp3Agent>,
    data: GpDataset,
    params: KernelParams,
    normalizer: Option<RewardNormalizer>,
    rng: ChaCha8Rng,
    history: Vec<TrialRecord>,
    fits: Vec<FitReport>,
}

impl Optimizer {
    pub fn new(space: InputSpace, config: OptimizerConfig) -> Result<Self> {
        config.validate()?;
        let agents = space
            .arities
            .iter()
            .map(|&k| Exp3Agent::new(k, config.gamma))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            params: KernelParams::defaults(space.continuous_dims()),
            data: GpDataset::new(space.clone()),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            space,
            config,
            agents,
            normalizer: None,
            history: Vec::new(),
            fits: Vec::new(),
        })
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.config
    }

    pub fn history(&self) -> &[TrialRecord] {
        &self.history
    }

    pub fn fits(&self) -> &[FitReport] {
        &self.fits
    }

    pub fn dataset(&self) -> &GpDataset {
        &self.data
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn agents(&self) -> &[Exp3Agent] {
        &self.agents
    }

    pub fn normalizer(&self) -> Option<&RewardNormalizer> {
        self.normalizer.as_ref()
    }

    fn random_input(&mut self) -> MixedInput {
        let categorical = self
            .space
            .arities
            .iter()
            .map(|&a| self.rng.gen_range(0..a))
            .collect();
        let continuous = (0..self.space.continuous_dims())
            .map(|k| {
                let (lo, hi) = (self.space.lower[k], self.space.upper[k]);
                quantize(self.rng.gen_range(lo..=hi), self.config.resolution, lo, hi)
            })
            .collect();
        MixedInput {
            categorical,
            continuous,
        }
    }

    /// `n_init` uniform draws over the mixed space.
    pub fn initial_design(&mut self) -> Vec<MixedInput> {
        (0..self.config.n_init)
            .map(|_| self.random_input())
            .collect()
    }

    fn current_probabilities(&self) -> Vec<Vec<f64>> {
        self.agents.iter().map(|a| a.probabilities()).collect()
    }

    fn record(&mut self, input: MixedInput, voltage: f64, reward: f64, probs: Vec<Vec<f64>>) {
        let best_so_far = self
            .history
            .last()
            .map_or(voltage, |r| r.best_so_far.max(voltage));
        self.history.push(TrialRecord {
            iteration: self.history.len() + 1,
            input,
            voltage,
            normalized_reward: reward,
            best_so_far,
            arm_probabilities: probs,
        });
    }

    /// Seeds the normalizer and the GP with the initial design. The bandits
    /// are left untouched: EXP3 did not choose these arms.
    pub fn initialize(&mut self, inputs: Vec<MixedInput>, voltages: &[f64]) -> Result<()> {
        if inputs.len() != voltages.len() {
            return Err(Error::LengthMismatch {
                expected: inputs.len(),
                got: voltages.len(),
            });
        }
        let normalizer = RewardNormalizer::from_samples(voltages)?;
        self.normalizer = Some(normalizer);
        for (z, &v) in inputs.into_iter().zip(voltages) {
            let r = normalizer.normalize(v);
            self.data.push(z.clone(), r)?;
            let probs = self.current_probabilities();
            self.record(z, v, r, probs);
        }
        self.refit();
        Ok(())
    }

    fn refit(&mut self) {
        if self.data.len() < MIN_FIT_POINTS {
            self.params = KernelParams::defaults(self.space.continuous_dims());
            return;
        }
        let budget = FitBudget {
            starts: self.config.fit_starts,
            evals_per_start: self.config.fit_evals,
            seed: self.config.seed ^ (self.data.len() as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
        };
        let warm = [self.params.clone()];
        let report = fit_hyperparams(&self.data, &ParamBounds::default(), &budget, &warm);
        self.params = report.params.clone();
        self.fits.push(report);
    }

    /// Bandit draws for the categorical part, then UCB search over the
    /// continuous box with those categories held fixed.
    pub fn suggest(&mut self) -> Result<Suggestion> {
        if self.normalizer.is_none() {
            return Err(Error::InvalidConfig(
                "suggest called before initialize".into(),
            ));
        }
        let arm_probabilities = self.current_probabilities();
        let categorical: Vec<usize> = self
            .agents
            .iter()
            .map(|a| a.select(&mut self.rng))
            .collect();
        let gp = Gp::condition(&self.data, &self.params)?;
        let space = &self.space;
        let kappa = self.config.kappa;
        let acq = |x: &[f64]| {
            let q = crate::gp::Encoded {
                categorical: categorical.clone(),
                unit: space.to_unit(x),
            };
            ucb(&gp.predict_encoded(&q), kappa)
        };
        let (x, _) = maximize_box(
            acq,
            &space.lower,
            &space.upper,
            self.config.acquisition_samples,
            self.config.acquisition_refinements,
            self.config.resolution,
            &mut self.rng,
        );
        let continuous = x
            .iter()
            .enumerate()
            .map(|(k, &v)| quantize(v, self.config.resolution, space.lower[k], space.upper[k]))
            .collect();
        let input = MixedInput {
            categorical,
            continuous,
        };
        self.space.validate(&input)?;
        Ok(Suggestion {
            input,
            arm_probabilities,
        })
    }

    /// Feeds back the objective value of a suggestion.
    pub fn observe(&mut self, suggestion: Suggestion, voltage: f64) -> Result<&TrialRecord> {
        let normalizer = self
            .normalizer
            .ok_or_else(|| Error::InvalidConfig("observe called before initialize".into()))?;
        let r = normalizer.normalize(voltage);
        let unit = squash_to_unit(r);
        for (agent, &arm) in self.agents.iter_mut().zip(&suggestion.input.categorical) {
            agent.update(arm, unit)?;
        }
        self.data.push(suggestion.input.clone(), r)?;
        self.record(suggestion.input, voltage, r, suggestion.arm_probabilities);
        self.refit();
        Ok(self.history.last().expect("just recorded"))
    }

    pub fn into_parts(self) -> (Vec<TrialRecord>, Vec<FitReport>) {
        (self.history, self.fits)
    }
}

/// Full history of a run together with every hyperparameter fit.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub records: Vec<TrialRecord>,
    pub fits: Vec<FitReport>,
}

/// Initial design, normalizer, then `n_iter` suggest/observe rounds.
pub fn run<F>(mut objective: F, config: &OptimizerConfig) -> Result<RunTrace>
where
    F: FnMut(&Pattern) -> Result<f64>,
{
    let mut opt = Optimizer::new(pattern_space(), config.clone())?;
    let design = opt.initial_design();
    let mut voltages = Vec::with_capacity(design.len());
    for (i, z) in design.iter().enumerate() {
        let v = objective(&input_to_pattern(z)?).map_err(|e| Error::Objective {
            iteration: i + 1,
            source: Box::new(e),
        })?;
        voltages.push(v);
    }
    opt.initialize(design, &voltages)?;
    for it in 0..config.n_iter {
        let s = opt.suggest()?;
        let iteration = config.n_init + it + 1;
        let v = objective(&input_to_pattern(&s.input)?).map_err(|e| Error::Objective {
            iteration,
            source: Box::new(e),
        })?;
        opt.observe(s, v)?;
    }
    let (records, fits) = opt.into_parts();
    Ok(RunTrace { records, fits })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantized_offsets_survive_printing() {
        for k in -20_000..=20_000 {
            let x = quantize(k as f64 * 1e-3 + 1e-7, 1e-3, -20.0, 20.0);
            assert_eq!(format!("{x:.3}").parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn ucb_examples() {
        let p = GpPosterior {
            mean: 0.7,
            variance: 4.0,
        };
        assert_eq!(ucb(&p, 0.0), 0.7);
        assert_eq!(
            ucb(
                &GpPosterior {
                    mean: 0.0,
                    variance: 1.0
                },
                2.0
            ),
            2.0
        );
        assert_eq!(
            ucb(
                &GpPosterior {
                    mean: -1.5,
                    variance: 0.0
                },
                5.0
            ),
            -1.5
        );
    }

    #[test]
    fn maximize_quadratic() {
        let target = [7.3, -12.6, 15.1];
        let f = |x: &[f64]| {
            -x.iter()
                .zip(&target)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (x, _) = maximize_box(f, &[-20.0; 3], &[20.0; 3], 1000, 5, 1e-3, &mut rng);
        for (a, b) in x.iter().zip(&target) {
            assert!((a - b).abs() < 0.5, "{x:?}");
        }
    }

    #[test]
    fn maximize_respects_box() {
        let f = |x: &[f64]| x.iter().sum::<f64>();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (x, _) = maximize_box(f, &[-20.0; 3], &[20.0; 3], 50, 3, 1e-3, &mut rng);
        assert!(x.iter().all(|v| (*v - 20.0).abs() < 1e-2 && *v <= 20.0));
    }

    #[test]
    fn pattern_input_roundtrip() {
        let p = Pattern::parse("CLCLC", "1.5,-2.25,20").unwrap();
        assert_eq!(input_to_pattern(&pattern_to_input(&p)).unwrap(), p);
        assert!(input_to_pattern(&MixedInput {
            categorical: vec![2; 5],
            continuous: vec![0.0; 3]
        })
        .is_err());
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig::default().validate().is_ok());
        for bad in [
            OptimizerConfig {
                n_init: 1,
                ..Default::default()
            },
            OptimizerConfig {
                n_iter: 0,
                ..Default::default()
            },
            OptimizerConfig {
                kappa: -1.0,
                ..Default::default()
            },
            OptimizerConfig {
                acquisition_samples: 0,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
