//! Multi-layer perceptron with sigmoid hidden layers and a linear output,
//! trained by full-batch backpropagation.
//!
//! Weights of layer `k` form an `N_{k+1} x N_k` row-major matrix. A neuron's
//! net input is `sum_i w_pi y_i - threshold_p`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::norm::{pitch_bounds, wind_bounds, Bounds, P_PU_BOUNDS};
use crate::refgen::ReferenceDataset;
use crate::turbine::TurbineParams;

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpNetwork {
    layer_sizes: Vec<usize>,
    weights: Vec<Vec<f64>>,
    thresholds: Vec<Vec<f64>>,
    input_bounds: Vec<Bounds>,
    output_bounds: Vec<Bounds>,
}

/// Descent direction `-1/2 grad(eps)`, shaped like the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<Vec<f64>>,
    pub thresholds: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpTrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Mean squared error per sample (normalized units) at which training stops.
    pub target_error: f64,
    pub seed: u64,
    pub init_scale: f64,
    pub hidden_units: usize,
}

impl Default for MlpTrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.03,
            max_epochs: 20_000,
            target_error: 1e-4,
            seed: 1,
            init_scale: 0.5,
            hidden_units: 5,
        }
    }
}

impl MlpTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid("learning_rate", "must be positive"));
        }
        if self.max_epochs == 0 {
            return Err(invalid("max_epochs", "must be at least 1"));
        }
        if !(self.target_error > 0.0) {
            return Err(invalid("target_error", "must be positive"));
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return Err(invalid("init_scale", "must be non-negative"));
        }
        if self.hidden_units == 0 {
            return Err(invalid("hidden_units", "must be at least 1"));
        }
        Ok(())
    }
}

/// Normalized `(input, target)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<N> {
    pub net: N,
    /// Total error after each epoch.
    pub history: Vec<f64>,
}

impl MlpNetwork {
    /// Network with every weight and threshold zero and unit bounds.
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(invalid("layer_sizes", "need at least two non-empty layers"));
        }
        let weights = layer_sizes
            .windows(2)
            .map(|w| vec![0.0; w[0] * w[1]])
            .collect();
        let thresholds = layer_sizes[1..].iter().map(|&n| vec![0.0; n]).collect();
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            thresholds,
            input_bounds: vec![Bounds::new(0.0, 1.0); layer_sizes[0]],
            output_bounds: vec![Bounds::new(0.0, 1.0); *layer_sizes.last().unwrap()],
        })
    }

    /// Parameters drawn uniformly from `[-scale, scale]`.
    pub fn random(layer_sizes: &[usize], scale: f64, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(layer_sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || {
            if scale > 0.0 {
                rng.random_range(-scale..=scale)
            } else {
                0.0
            }
        };
        for (w, th) in net.weights.iter_mut().zip(net.thresholds.iter_mut()) {
            w.iter_mut().for_each(|x| *x = draw());
            th.iter_mut().for_each(|x| *x = draw());
        }
        Ok(net)
    }

    /// Untrained `2-H-1` pitch controller over `(v, p_pu)`.
    pub fn pitch_controller(params: &TurbineParams, cfg: &MlpTrainConfig) -> Result<Self> {
        let net = Self::random(&[2, cfg.hidden_units, 1], cfg.init_scale, cfg.seed)?;
        net.with_bounds(
            vec![wind_bounds(params), P_PU_BOUNDS],
            vec![pitch_bounds(params)],
        )
    }

    pub fn with_bounds(mut self, inputs: Vec<Bounds>, outputs: Vec<Bounds>) -> Result<Self> {
        self.check_len(inputs.len(), self.input_dim())?;
        self.check_len(outputs.len(), self.output_dim())?;
        if !inputs.iter().chain(&outputs).all(Bounds::is_valid) {
            return Err(invalid("bounds", "need finite lo < hi"));
        }
        self.input_bounds = inputs;
        self.output_bounds = outputs;
        Ok(self)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn input_bounds(&self) -> &[Bounds] {
        &self.input_bounds
    }

    pub fn output_bounds(&self) -> &[Bounds] {
        &self.output_bounds
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn thresholds(&self) -> &[Vec<f64>] {
        &self.thresholds
    }

    pub fn weights_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.weights
    }

    pub fn thresholds_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.thresholds
    }

    fn check_len(&self, got: usize, expected: usize) -> Result<()> {
        if got == expected {
            Ok(())
        } else {
            Err(Error::Dimension { expected, got })
        }
    }

    /// Checks that stored parameter shapes agree with `layer_sizes`.
    pub fn validate(&self) -> Result<()> {
        let s = &self.layer_sizes;
        if s.len() < 2 || s.contains(&0) {
            return Err(invalid("layer_sizes", "need at least two non-empty layers"));
        }
        self.check_len(self.weights.len(), s.len() - 1)?;
        self.check_len(self.thresholds.len(), s.len() - 1)?;
        for k in 0..s.len() - 1 {
            self.check_len(self.weights[k].len(), s[k] * s[k + 1])?;
            self.check_len(self.thresholds[k].len(), s[k + 1])?;
        }
        self.check_len(self.input_bounds.len(), s[0])?;
        self.check_len(self.output_bounds.len(), s[s.len() - 1])?;
        if !self
            .weights
            .iter()
            .chain(&self.thresholds)
            .flatten()
            .all(|x| x.is_finite())
        {
            return Err(invalid("weights", "must be finite"));
        }
        Ok(())
    }

    /// Activations of every layer, input first and output last.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_len(input.len(), self.input_dim())?;
        let last = self.weights.len() - 1;
        let mut acts = Vec::with_capacity(self.layer_sizes.len());
        acts.push(input.to_vec());
        for (k, (w, th)) in self.weights.iter().zip(&self.thresholds).enumerate() {
            let prev = &acts[k];
            let n_in = prev.len();
            let next: Vec<f64> = th
                .iter()
                .enumerate()
                .map(|(p, t)| {
                    let row = &w[p * n_in..(p + 1) * n_in];
                    let net = row.iter().zip(prev).map(|(a, b)| a * b).sum::<f64>() - t;
                    if k == last {
                        net
                    } else {
                        sigmoid(net)
                    }
                })
                .collect();
            acts.push(next);
        }
        Ok(acts)
    }

    pub fn output(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(input)?.pop().unwrap())
    }

    /// `sum_n sum_j (target - output)^2`.
    pub fn total_error(&self, patterns: &[Pattern]) -> Result<f64> {
        let mut eps = 0.0;
        for pat in patterns {
            let y = self.output(&pat.input)?;
            self.check_len(pat.target.len(), y.len())?;
            eps += y
                .iter()
                .zip(&pat.target)
                .map(|(y, t)| (t - y) * (t - y))
                .sum::<f64>();
        }
        Ok(eps)
    }

    /// Summed backpropagation terms over all patterns: `sum delta_p y_i` for
    /// weights and `-sum delta_p` for thresholds.
    pub fn gradient(&self, patterns: &[Pattern]) -> Result<Gradient> {
        let mut g = Gradient {
            weights: self.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            thresholds: self.thresholds.iter().map(|t| vec![0.0; t.len()]).collect(),
        };
        let layers = self.weights.len();
        for pat in patterns {
            let acts = self.forward(&pat.input)?;
            let out = &acts[layers];
            self.check_len(pat.target.len(), out.len())?;
            let mut delta: Vec<f64> = out.iter().zip(&pat.target).map(|(y, t)| t - y).collect();
            for k in (0..layers).rev() {
                let prev = &acts[k];
                let n_in = prev.len();
                for (p, d) in delta.iter().enumerate() {
                    let row = &mut g.weights[k][p * n_in..(p + 1) * n_in];
                    row.iter_mut().zip(prev).for_each(|(gw, y)| *gw += d * y);
                    g.thresholds[k][p] -= d;
                }
                if k > 0 {
                    let w = &self.weights[k];
                    delta = (0..n_in)
                        .map(|i| {
                            let back: f64 = delta
                                .iter()
                                .enumerate()
                                .map(|(p, d)| d * w[p * n_in + i])
                                .sum();
                            prev[i] * (1.0 - prev[i]) * back
                        })
                        .collect();
                }
            }
        }
        Ok(g)
    }

    fn apply(&mut self, g: &Gradient, rate: f64) {
        for (w, gw) in self.weights.iter_mut().zip(&g.weights) {
            w.iter_mut().zip(gw).for_each(|(w, d)| *w += rate * d);
        }
        for (t, gt) in self.thresholds.iter_mut().zip(&g.thresholds) {
            t.iter_mut().zip(gt).for_each(|(t, d)| *t += rate * d);
        }
    }

    /// Physical inputs to normalized network inputs.
    pub fn normalize_input(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.input_bounds)
            .map(|(x, b)| b.scale(*x))
            .collect()
    }

    /// Normalized `(v, p_pu) -> beta_star` patterns.
    pub fn patterns(&self, dataset: &ReferenceDataset) -> Result<Vec<Pattern>> {
        self.check_len(self.input_dim(), 2)?;
        self.check_len(self.output_dim(), 1)?;
        Ok(dataset
            .samples()
            .iter()
            .map(|s| Pattern {
                input: self.normalize_input(&[s.v, s.p_pu]),
                target: vec![self.output_bounds[0].scale(s.beta_star)],
            })
            .collect())
    }

    /// Commanded pitch in degrees, clamped into the output range.
    pub fn predict_pitch(&self, v: f64, p_pu: f64) -> f64 {
        let input = self.normalize_input(&[v, p_pu]);
        let y = self.output(&input).map(|y| y[0]).unwrap_or(0.0);
        let b = self.output_bounds[0];
        b.clamp(b.unscale(y))
    }
}

/// One full-batch step. Returns the total error of the updated network.
pub fn train_epoch(
    net: &mut MlpNetwork,
    patterns: &[Pattern],
    cfg: &MlpTrainConfig,
    epoch: usize,
) -> Result<f64> {
    if patterns.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let g = net.gradient(patterns)?;
    net.apply(&g, cfg.learning_rate);
    let eps = net.total_error(patterns)?;
    if !eps.is_finite() {
        return Err(Error::Divergence { epoch, error: eps });
    }
    Ok(eps)
}

/// Trains until the mean squared error drops below `target_error` or the
/// epoch budget runs out.
pub fn train_patterns(
    mut net: MlpNetwork,
    patterns: &[Pattern],
    cfg: &MlpTrainConfig,
) -> Result<TrainOutcome<MlpNetwork>> {
    cfg.validate()?;
    let threshold = cfg.target_error * patterns.len() as f64;
    let mut history = Vec::new();
    for epoch in 1..=cfg.max_epochs {
        let eps = train_epoch(&mut net, patterns, cfg, epoch)?;
        history.push(eps);
        if eps < threshold {
            break;
        }
    }
    Ok(TrainOutcome { net, history })
}

pub fn train(
    net: MlpNetwork,
    dataset: &ReferenceDataset,
    cfg: &MlpTrainConfig,
) -> Result<TrainOutcome<MlpNetwork>> {
    let patterns = net.patterns(dataset)?;
    train_patterns(net, &patterns, cfg)
}

/// Fresh pitch controller trained on `dataset`.
pub fn train_pitch_controller(
    params: &TurbineParams,
    dataset: &ReferenceDataset,
    cfg: &MlpTrainConfig,
) -> Result<TrainOutcome<MlpNetwork>> {
    cfg.validate()?;
    train(MlpNetwork::pitch_controller(params, cfg)?, dataset, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refgen::build_training_set;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn random_patterns(n: usize, dims: (usize, usize), seed: u64) -> Vec<Pattern> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| Pattern {
                input: (0..dims.0).map(|_| rng.random_range(0.0..1.0)).collect(),
                target: (0..dims.1).map(|_| rng.random_range(-1.0..1.0)).collect(),
            })
            .collect()
    }

    #[test]
    fn sigmoid_examples() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(sigmoid(40.0), 1.0);
    }

    proptest! {
        #[test]
        fn sigmoid_is_point_symmetric(x in -30.0f64..30.0) {
            prop_assert!((sigmoid(-x) - (1.0 - sigmoid(x))).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = MlpNetwork::zeros(&[2, 5, 1]).unwrap();
        let acts = net.forward(&[0.3, 0.9]).unwrap();
        assert_eq!(acts[1], vec![0.5; 5]);
        assert_eq!(acts[2], vec![0.0]);
    }

    #[test]
    fn single_path_hand_trace() {
        let mut net = MlpNetwork::zeros(&[1, 1, 1]).unwrap();
        net.weights_mut()[0][0] = 1.0;
        net.weights_mut()[1][0] = 3.0;
        assert_eq!(net.output(&[0.0]).unwrap(), vec![1.5]);
    }

    #[test]
    fn wrong_input_length_is_rejected() {
        let net = MlpNetwork::zeros(&[2, 5, 1]).unwrap();
        assert!(matches!(
            net.forward(&[1.0]),
            Err(Error::Dimension {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn hidden_permutation_leaves_output_unchanged() {
        let net = MlpNetwork::random(&[2, 5, 1], 1.0, 3).unwrap();
        let perm = [3, 0, 4, 1, 2];
        let mut permuted = net.clone();
        for (new, &old) in perm.iter().enumerate() {
            permuted.weights[0][new * 2..new * 2 + 2]
                .copy_from_slice(&net.weights[0][old * 2..old * 2 + 2]);
            permuted.thresholds[0][new] = net.thresholds[0][old];
            permuted.weights[1][new] = net.weights[1][old];
        }
        for pat in random_patterns(10, (2, 1), 4) {
            let a = net.output(&pat.input).unwrap()[0];
            let b = permuted.output(&pat.input).unwrap()[0];
            assert!((a - b).abs() < 1e-14);
        }
    }

    /// Largest relative disagreement between backprop and central differences.
    pub(crate) fn gradient_check(net: &MlpNetwork, patterns: &[Pattern]) -> f64 {
        let h = 1e-5;
        let g = net.gradient(patterns).unwrap();
        let mut worst: f64 = 0.0;
        let mut compare = |analytic: f64, numeric: f64| {
            let scale = analytic.abs().max(numeric.abs()).max(1e-7);
            worst = worst.max((analytic - numeric).abs() / scale);
        };
        for k in 0..net.weights.len() {
            for j in 0..net.weights[k].len() {
                let mut plus = net.clone();
                let mut minus = net.clone();
                plus.weights[k][j] += h;
                minus.weights[k][j] -= h;
                let fd = (plus.total_error(patterns).unwrap()
                    - minus.total_error(patterns).unwrap())
                    / (2.0 * h);
                compare(-2.0 * g.weights[k][j], fd);
            }
            for j in 0..net.thresholds[k].len() {
                let mut plus = net.clone();
                let mut minus = net.clone();
                plus.thresholds[k][j] += h;
                minus.thresholds[k][j] -= h;
                let fd = (plus.total_error(patterns).unwrap()
                    - minus.total_error(patterns).unwrap())
                    / (2.0 * h);
                compare(-2.0 * g.thresholds[k][j], fd);
            }
        }
        worst
    }

    #[test]
    fn backprop_matches_finite_differences() {
        for seed in 0..5 {
            let net = MlpNetwork::random(&[2, 5, 1], 1.0, seed).unwrap();
            let pats = random_patterns(10, (2, 1), 100 + seed);
            let err = gradient_check(&net, &pats);
            assert!(err <= 1e-4, "seed {seed}: {err}");
        }
        let deep = MlpNetwork::random(&[3, 4, 3, 2], 1.0, 9).unwrap();
        assert!(gradient_check(&deep, &random_patterns(6, (3, 2), 10)) <= 1e-4);
    }

    #[test]
    fn exact_fit_is_a_fixed_point() {
        let net = MlpNetwork::random(&[2, 5, 1], 0.5, 2).unwrap();
        let input = vec![0.2, 0.7];
        let target = net.output(&input).unwrap();
        let pats = [Pattern { input, target }];
        let mut trained = net.clone();
        let eps = train_epoch(&mut trained, &pats, &MlpTrainConfig::default(), 1).unwrap();
        assert_eq!(eps, 0.0);
        assert_eq!(trained, net);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let mut net = MlpNetwork::zeros(&[2, 5, 1]).unwrap();
        assert!(matches!(
            train_epoch(&mut net, &[], &MlpTrainConfig::default(), 1),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn huge_learning_rate_reports_divergence() {
        let p = TurbineParams::default();
        let ds = build_training_set(&p, 4.0, 25.0, 0.5).unwrap();
        let cfg = MlpTrainConfig {
            learning_rate: 1e6,
            max_epochs: 200,
            ..MlpTrainConfig::default()
        };
        let err = train_pitch_controller(&p, &ds, &cfg).unwrap_err();
        assert!(matches!(err, Error::Divergence { .. }), "{err}");
    }

    #[test]
    fn error_decreases_early_in_training() {
        let p = TurbineParams::default();
        let (train_set, _) = build_training_set(&p, 4.0, 25.0, 0.5)
            .unwrap()
            .holdout_split();
        let cfg = MlpTrainConfig {
            learning_rate: 0.01,
            max_epochs: 10,
            target_error: 1e-12,
            ..MlpTrainConfig::default()
        };
        let out = train_pitch_controller(&p, &train_set, &cfg).unwrap();
        assert_eq!(out.history.len(), 10);
        let rises = out.history.windows(2).filter(|w| w[1] > w[0]).count();
        assert!(rises <= 1, "{:?}", out.history);
    }

    #[test]
    fn reported_error_matches_recomputation() {
        let p = TurbineParams::default();
        let ds = build_training_set(&p, 4.0, 25.0, 0.5).unwrap();
        let cfg = MlpTrainConfig {
            max_epochs: 50,
            ..MlpTrainConfig::default()
        };
        let out = train_pitch_controller(&p, &ds, &cfg).unwrap();
        let pats = out.net.patterns(&ds).unwrap();
        let direct: f64 = pats
            .iter()
            .map(|pat| (pat.target[0] - out.net.output(&pat.input).unwrap()[0]).powi(2))
            .sum();
        assert_relative_eq!(*out.history.last().unwrap(), direct, max_relative = 1e-12);
    }

    #[test]
    fn infinite_target_stops_after_one_epoch() {
        let p = TurbineParams::default();
        let ds = build_training_set(&p, 4.0, 25.0, 0.5).unwrap();
        let cfg = MlpTrainConfig {
            target_error: f64::INFINITY,
            ..MlpTrainConfig::default()
        };
        let initial = MlpNetwork::pitch_controller(&p, &cfg).unwrap();
        let out = train(initial.clone(), &ds, &cfg).unwrap();
        assert_eq!(out.history.len(), 1);
        assert_ne!(out.net, initial);
    }

    #[test]
    fn same_seed_same_weights() {
        let p = TurbineParams::default();
        let ds = build_training_set(&p, 4.0, 25.0, 0.5).unwrap();
        let cfg = MlpTrainConfig {
            max_epochs: 200,
            ..MlpTrainConfig::default()
        };
        let a = train_pitch_controller(&p, &ds, &cfg).unwrap();
        let b = train_pitch_controller(&p, &ds, &cfg).unwrap();
        assert_eq!(a.net, b.net);
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn prediction_is_clamped_to_actuator_range() {
        let p = TurbineParams::default();
        let mut net = MlpNetwork::pitch_controller(&p, &MlpTrainConfig::default()).unwrap();
        net.thresholds_mut()[1][0] = -100.0;
        assert_eq!(net.predict_pitch(16.0, 1.0), 30.0);
        net.thresholds_mut()[1][0] = 100.0;
        assert_eq!(net.predict_pitch(16.0, 1.0), -2.0);
    }
}
