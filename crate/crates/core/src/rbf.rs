//! Gaussian radial-basis-function network with a linear output layer.
//!
//! Centers and widths are placed once from the training data and then frozen;
//! only the output weights are trained, by per-sample LMS.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mlp::{Pattern, TrainOutcome};
use crate::norm::{pitch_bounds, wind_bounds, Bounds, OMEGA_PU_BOUNDS, P_PU_BOUNDS};
use crate::refgen::ReferenceDataset;
use crate::turbine::TurbineParams;

/// Width multiplier applied to the mean nearest-neighbour center distance.
pub const WIDTH_OVERLAP: f64 = 1.5;

/// `exp(-(|u - c| / sigma)^2)`.
pub fn rbf_activation(u: &[f64], c: &[f64], sigma: f64) -> f64 {
    let d2: f64 = u.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
    (-d2 / (sigma * sigma)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CenterStrategy {
    /// Training rows evenly spaced through the (v-sorted) dataset.
    #[default]
    Sample,
    /// Regular grid over the normalized input box.
    Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbfNetwork {
    centers: Vec<Vec<f64>>,
    widths: Vec<f64>,
    /// `L x H`, one row per output.
    out_weights: Vec<Vec<f64>>,
    input_bounds: Vec<Bounds>,
    output_bounds: Vec<Bounds>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RbfTrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Mean squared error per sample (normalized units) at which training stops.
    pub target_error: f64,
    pub seed: u64,
    pub center_strategy: CenterStrategy,
    pub hidden_units: usize,
}

impl Default for RbfTrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            max_epochs: 5000,
            target_error: 1e-4,
            seed: 1,
            center_strategy: CenterStrategy::Sample,
            hidden_units: 10,
        }
    }
}

impl RbfTrainConfig {
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
        if self.hidden_units == 0 {
            return Err(invalid("hidden_units", "must be at least 1"));
        }
        Ok(())
    }
}

/// Mean nearest-neighbour distance between centers times [`WIDTH_OVERLAP`].
/// Falls back to a unit distance when all centers coincide.
pub fn shared_width(centers: &[Vec<f64>]) -> f64 {
    let dist = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    let nn: Vec<f64> = centers
        .iter()
        .enumerate()
        .filter_map(|(i, c)| {
            centers
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, d)| dist(c, d))
                .min_by(f64::total_cmp)
        })
        .collect();
    let mean = if nn.is_empty() {
        0.0
    } else {
        nn.iter().sum::<f64>() / nn.len() as f64
    };
    WIDTH_OVERLAP * if mean > 0.0 { mean } else { 1.0 }
}

/// Row indices `offset + floor(i N / H)` for `i in 0..H`.
pub fn evenly_spaced_indices(n: usize, h: usize, offset: usize) -> Vec<usize> {
    (0..h).map(|i| offset + i * n / h).collect()
}

/// Chooses `H` centers among normalized `inputs` (rows sorted by wind speed)
/// and a common width for all of them.
pub fn place_centers(
    inputs: &[Vec<f64>],
    h: usize,
    strategy: CenterStrategy,
    seed: u64,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    if h == 0 {
        return Err(invalid("hidden_units", "must be at least 1"));
    }
    let dim = inputs.first().map(Vec::len).ok_or(Error::EmptyDataset)?;
    let centers: Vec<Vec<f64>> = match strategy {
        CenterStrategy::Sample => {
            let n = inputs.len();
            if n < h {
                return Err(Error::TooFewSamples {
                    rows: n,
                    centers: h,
                });
            }
            let slack = n - 1 - (h - 1) * n / h;
            let offset = ChaCha8Rng::seed_from_u64(seed).random_range(0..=slack);
            evenly_spaced_indices(n, h, offset)
                .into_iter()
                .map(|i| inputs[i].clone())
                .collect()
        }
        CenterStrategy::Grid => {
            let mut k = 1usize;
            while k.pow(dim as u32) < h {
                k += 1;
            }
            let cells = k.pow(dim as u32);
            (0..h)
                .map(|i| {
                    let mut cell = i * cells / h;
                    (0..dim)
                        .map(|_| {
                            let j = cell % k;
                            cell /= k;
                            (j as f64 + 0.5) / k as f64
                        })
                        .collect()
                })
                .collect()
        }
    };
    let width = shared_width(&centers);
    Ok((centers, vec![width; h]))
}

impl RbfNetwork {
    pub fn new(
        centers: Vec<Vec<f64>>,
        widths: Vec<f64>,
        out_weights: Vec<Vec<f64>>,
        input_bounds: Vec<Bounds>,
        output_bounds: Vec<Bounds>,
    ) -> Result<Self> {
        let net = Self {
            centers,
            widths,
            out_weights,
            input_bounds,
            output_bounds,
        };
        net.validate()?;
        Ok(net)
    }

    /// Untrained 3-input pitch controller over `(v, p_pu, omega_pu)` with
    /// centers placed from `dataset`.
    pub fn pitch_controller(
        params: &TurbineParams,
        dataset: &ReferenceDataset,
        cfg: &RbfTrainConfig,
    ) -> Result<Self> {
        let input_bounds = vec![wind_bounds(params), P_PU_BOUNDS, OMEGA_PU_BOUNDS];
        let inputs: Vec<Vec<f64>> = dataset
            .samples()
            .iter()
            .map(|s| normalize(&input_bounds, &[s.v, s.p_pu, s.omega_pu]))
            .collect();
        let (centers, widths) =
            place_centers(&inputs, cfg.hidden_units, cfg.center_strategy, cfg.seed)?;
        let h = centers.len();
        Self::new(
            centers,
            widths,
            vec![vec![0.0; h]],
            input_bounds,
            vec![pitch_bounds(params)],
        )
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.centers.len();
        if h == 0 {
            return Err(invalid("centers", "need at least one center"));
        }
        let dim = self.input_bounds.len();
        for c in &self.centers {
            if c.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: c.len(),
                });
            }
        }
        if self.widths.len() != h {
            return Err(Error::Dimension {
                expected: h,
                got: self.widths.len(),
            });
        }
        if !self.widths.iter().all(|w| *w > 0.0 && w.is_finite()) {
            return Err(invalid("widths", "must be positive"));
        }
        if self.out_weights.len() != self.output_bounds.len() || self.out_weights.is_empty() {
            return Err(Error::Dimension {
                expected: self.output_bounds.len(),
                got: self.out_weights.len(),
            });
        }
        for row in &self.out_weights {
            if row.len() != h {
                return Err(Error::Dimension {
                    expected: h,
                    got: row.len(),
                });
            }
        }
        if !self
            .input_bounds
            .iter()
            .chain(&self.output_bounds)
            .all(Bounds::is_valid)
        {
            return Err(invalid("bounds", "need finite lo < hi"));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.input_bounds.len()
    }

    pub fn hidden_units(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn out_weights(&self) -> &[Vec<f64>] {
        &self.out_weights
    }

    pub fn out_weights_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.out_weights
    }

    pub fn input_bounds(&self) -> &[Bounds] {
        &self.input_bounds
    }

    pub fn output_bounds(&self) -> &[Bounds] {
        &self.output_bounds
    }

    /// Hidden-layer activations `F_j(u)` for a normalized input.
    pub fn hidden(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                got: u.len(),
            });
        }
        Ok(self
            .centers
            .iter()
            .zip(&self.widths)
            .map(|(c, s)| rbf_activation(u, c, *s))
            .collect())
    }

    /// `y_i = sum_j W_ij F_j(u)` for a normalized input.
    pub fn forward(&self, u: &[f64]) -> Result<Vec<f64>> {
        let f = self.hidden(u)?;
        Ok(self
            .out_weights
            .iter()
            .map(|row| row.iter().zip(&f).map(|(w, f)| w * f).sum())
            .collect())
    }

    pub fn total_error(&self, patterns: &[Pattern]) -> Result<f64> {
        let mut eps = 0.0;
        for pat in patterns {
            let y = self.forward(&pat.input)?;
            eps += y
                .iter()
                .zip(&pat.target)
                .map(|(y, t)| (t - y) * (t - y))
                .sum::<f64>();
        }
        Ok(eps)
    }

    /// Largest learning rate for which every single-sample LMS update shrinks
    /// that sample's residual: `2 / max_n sum_j F_j(u_n)^2`.
    pub fn lms_stability_bound(&self, patterns: &[Pattern]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for pat in patterns {
            let f = self.hidden(&pat.input)?;
            worst = worst.max(f.iter().map(|x| x * x).sum());
        }
        Ok(if worst > 0.0 {
            2.0 / worst
        } else {
            f64::INFINITY
        })
    }

    pub fn normalize_input(&self, x: &[f64]) -> Vec<f64> {
        normalize(&self.input_bounds, x)
    }

    pub fn patterns(&self, dataset: &ReferenceDataset) -> Result<Vec<Pattern>> {
        if self.input_dim() != 3 {
            return Err(Error::Dimension {
                expected: 3,
                got: self.input_dim(),
            });
        }
        Ok(dataset
            .samples()
            .iter()
            .map(|s| Pattern {
                input: self.normalize_input(&[s.v, s.p_pu, s.omega_pu]),
                target: vec![self.output_bounds[0].scale(s.beta_star)],
            })
            .collect())
    }

    /// Commanded pitch in degrees, clamped into the output range.
    pub fn predict_pitch(&self, v: f64, p_pu: f64, omega_pu: f64) -> f64 {
        let u = self.normalize_input(&[v, p_pu, omega_pu]);
        let y = self.forward(&u).map(|y| y[0]).unwrap_or(0.0);
        let b = self.output_bounds[0];
        b.clamp(b.unscale(y))
    }
}

fn normalize(bounds: &[Bounds], x: &[f64]) -> Vec<f64> {
    x.iter().zip(bounds).map(|(x, b)| b.scale(*x)).collect()
}

/// One sweep of per-sample LMS updates in dataset order. Returns the total
/// error of the updated network.
pub fn lms_epoch(
    net: &mut RbfNetwork,
    patterns: &[Pattern],
    rate: f64,
    epoch: usize,
) -> Result<f64> {
    if patterns.is_empty() {
        return Err(Error::EmptyDataset);
    }
    for pat in patterns {
        let f = net.hidden(&pat.input)?;
        for (row, t) in net.out_weights.iter_mut().zip(&pat.target) {
            let y: f64 = row.iter().zip(&f).map(|(w, f)| w * f).sum();
            let err = t - y;
            row.iter_mut()
                .zip(&f)
                .for_each(|(w, f)| *w += rate * err * f);
        }
    }
    let eps = net.total_error(patterns)?;
    if !eps.is_finite() {
        return Err(Error::Divergence { epoch, error: eps });
    }
    Ok(eps)
}

pub fn train_patterns(
    mut net: RbfNetwork,
    patterns: &[Pattern],
    cfg: &RbfTrainConfig,
) -> Result<TrainOutcome<RbfNetwork>> {
    cfg.validate()?;
    let threshold = cfg.target_error * patterns.len() as f64;
    let mut history = Vec::new();
    for epoch in 1..=cfg.max_epochs {
        let eps = lms_epoch(&mut net, patterns, cfg.learning_rate, epoch)?;
        history.push(eps);
        if eps < threshold {
            break;
        }
    }
    Ok(TrainOutcome { net, history })
}

pub fn train(
    net: RbfNetwork,
    dataset: &ReferenceDataset,
    cfg: &RbfTrainConfig,
) -> Result<TrainOutcome<RbfNetwork>> {
    let patterns = net.patterns(dataset)?;
    train_patterns(net, &patterns, cfg)
}

/// Places centers from `dataset` and trains the output layer on it.
pub fn train_pitch_controller(
    params: &TurbineParams,
    dataset: &ReferenceDataset,
    cfg: &RbfTrainConfig,
) -> Result<TrainOutcome<RbfNetwork>> {
    cfg.validate()?;
    train(
        RbfNetwork::pitch_controller(params, dataset, cfg)?,
        dataset,
        cfg,
    )
}
