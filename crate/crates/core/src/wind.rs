//! Turbulent wind: mean speed plus an ARMA-driven fluctuation.
//!
//! The white noise driving the ARMA recursion is drawn from a ChaCha8 stream
//! (`rand_chacha::ChaCha8Rng::seed_from_u64(seed)`) through the Ziggurat
//! standard normal sampler of `rand_distr`. Both are portable, so a seed
//! reproduces the same series on every platform.

use std::collections::VecDeque;
use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Samples discarded before the recorded series starts, so the zero-history
/// start-up transient does not leak into the statistics.
pub const BURN_IN_SAMPLES: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmaParams {
    /// Autoregressive coefficients, lag 1 first.
    pub ar_coeffs: Vec<f64>,
    /// Moving-average coefficients, lag 1 first. Enter with a minus sign.
    pub ma_coeffs: Vec<f64>,
    pub noise_std: f64,
}

impl Default for ArmaParams {
    fn default() -> Self {
        Self {
            ar_coeffs: vec![1.0, -0.25],
            ma_coeffs: vec![0.5],
            noise_std: 1.0,
        }
    }
}

impl ArmaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_std > 0.0 && self.noise_std.is_finite()) {
            return Err(invalid("noise_std", "must be positive and finite"));
        }
        if self
            .ar_coeffs
            .iter()
            .chain(&self.ma_coeffs)
            .any(|c| !c.is_finite())
        {
            return Err(invalid("ar_coeffs/ma_coeffs", "must be finite"));
        }
        if !check_stationarity(self) {
            return Err(Error::NonStationary(self.ar_coeffs.clone()));
        }
        Ok(())
    }
}

/// True iff the AR part is stationary, i.e. every root of
/// `z^n - d1 z^(n-1) - ... - dn` lies strictly inside the unit circle.
///
/// Uses the Schur-Cohn step-down recursion: the polynomial is stable iff every
/// reflection coefficient has magnitude below one.
pub fn check_stationarity(arma: &ArmaParams) -> bool {
    // a(z) = 1 + a1 z^-1 + ... + an z^-n with a_i = -d_i
    let mut a: Vec<f64> = arma.ar_coeffs.iter().map(|d| -d).collect();
    while let Some(&k) = a.last() {
        if !k.is_finite() || k.abs() >= 1.0 {
            return false;
        }
        let m = a.len();
        let denom = 1.0 - k * k;
        let next: Vec<f64> = (0..m - 1)
            .map(|i| (a[i] - k * a[m - 2 - i]) / denom)
            .collect();
        a = next;
    }
    true
}

/// Recursive ARMA filter holding the past outputs and past noise samples.
#[derive(Debug, Clone)]
pub struct ArmaFilter {
    params: ArmaParams,
    /// Past outputs, most recent first.
    past_output: VecDeque<f64>,
    /// Past noise samples, most recent first.
    past_noise: VecDeque<f64>,
}

impl ArmaFilter {
    /// Zero-padded history.
    pub fn new(params: ArmaParams) -> Self {
        let past_output = VecDeque::from(vec![0.0; params.ar_coeffs.len()]);
        let past_noise = VecDeque::from(vec![0.0; params.ma_coeffs.len()]);
        Self {
            params,
            past_output,
            past_noise,
        }
    }

    /// Starts from an explicit history (most recent first). Missing entries are zero.
    pub fn with_history(params: ArmaParams, outputs: &[f64], noise: &[f64]) -> Self {
        let mut f = Self::new(params);
        for (slot, &x) in f.past_output.iter_mut().zip(outputs) {
            *slot = x;
        }
        for (slot, &x) in f.past_noise.iter_mut().zip(noise) {
            *slot = x;
        }
        f
    }

    /// Advances one sample with innovation `eta` and returns the new output.
    pub fn step(&mut self, eta: f64) -> f64 {
        let ar: f64 = self
            .params
            .ar_coeffs
            .iter()
            .zip(&self.past_output)
            .map(|(d, g)| d * g)
            .sum();
        let ma: f64 = self
            .params
            .ma_coeffs
            .iter()
            .zip(&self.past_noise)
            .map(|(th, e)| th * e)
            .sum();
        let out = ar + eta - ma;
        if !self.past_output.is_empty() {
            self.past_output.pop_back();
            self.past_output.push_front(out);
        }
        if !self.past_noise.is_empty() {
            self.past_noise.pop_back();
            self.past_noise.push_front(eta);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindConfig {
    /// Mean hub-height speed, m/s.
    pub v_mean: f64,
    /// Standard deviation over mean.
    pub turbulence_intensity: f64,
    /// Sample interval, s.
    pub dt: f64,
    /// Series length, s.
    pub duration: f64,
    pub seed: u64,
}

impl Default for WindConfig {
    fn default() -> Self {
        Self {
            v_mean: 16.0,
            turbulence_intensity: 0.16,
            dt: 1.0,
            duration: 600.0,
            seed: 1,
        }
    }
}

impl WindConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_mean > 0.0 && self.v_mean.is_finite()) {
            return Err(invalid("v_mean", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.turbulence_intensity) {
            return Err(invalid("turbulence_intensity", "must lie in [0, 1)"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", "must be positive"));
        }
        if !(self.duration >= self.dt && self.duration.is_finite()) {
            return Err(invalid("duration", "must be at least dt"));
        }
        Ok(())
    }

    /// Number of samples, endpoints included.
    pub fn sample_count(&self) -> usize {
        (self.duration / self.dt + 1e-9).floor() as usize + 1
    }
}

/// Wind speed on a uniform time grid starting at t = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct WindSeries {
    dt: f64,
    t: Vec<f64>,
    v: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl SeriesStats {
    /// Population statistics of a nonempty slice.
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let (min, max) = xs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                (lo.min(x), hi.max(x))
            });
        Self {
            mean,
            std: var.sqrt(),
            min,
            max,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct WindRow {
    t: f64,
    v_w: f64,
}

impl WindSeries {
    /// Builds a series sampled every `dt` seconds from t = 0.
    pub fn from_samples(dt: f64, v: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(invalid("dt", "must be positive"));
        }
        if v.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if v.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::Invariant(
                "wind speeds must be finite and >= 0".into(),
            ));
        }
        let t = (0..v.len()).map(|i| i as f64 * dt).collect();
        Ok(Self { dt, t, v })
    }

    /// Constant wind, handy for steady-state experiments.
    pub fn constant(v: f64, dt: f64, duration: f64) -> Result<Self> {
        let n = (duration / dt + 1e-9).floor() as usize + 1;
        Self::from_samples(dt, vec![v; n])
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn speeds(&self) -> &[f64] {
        &self.v
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn duration(&self) -> f64 {
        *self.t.last().unwrap_or(&0.0)
    }

    /// Linear interpolation, held constant beyond either end.
    pub fn at(&self, t: f64) -> f64 {
        if t <= 0.0 || self.v.len() == 1 {
            return self.v[0];
        }
        let pos = t / self.dt;
        let i = pos.floor() as usize;
        if i + 1 >= self.v.len() {
            return *self.v.last().unwrap();
        }
        let frac = pos - i as f64;
        self.v[i] + frac * (self.v[i + 1] - self.v[i])
    }

    pub fn stats(&self) -> SeriesStats {
        SeriesStats::of(&self.v)
    }

    /// CSV with header `t,v_w`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for (&t, &v_w) in self.t.iter().zip(&self.v) {
            w.serialize(WindRow { t, v_w })?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a `t,v_w` CSV. The time column must be a uniform grid from 0.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let rows: Vec<WindRow> = r.deserialize().collect::<std::result::Result<_, _>>()?;
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let dt = if rows.len() > 1 {
            rows[1].t - rows[0].t
        } else {
            1.0
        };
        for (i, row) in rows.iter().enumerate() {
            let expected = i as f64 * dt;
            if (row.t - expected).abs() > 1e-6 * dt.max(1.0) {
                return Err(Error::Parse(format!(
                    "wind time column is not a uniform grid from 0 (row {i}: t = {})",
                    row.t
                )));
            }
        }
        Self::from_samples(dt, rows.into_iter().map(|r| r.v_w).collect())
    }
}

/// Generates `v(t) = v_mean + TI * v_mean * g(t)` where `g` is the ARMA output
/// standardised to zero sample mean and unit sample variance.
pub fn generate_wind(cfg: &WindConfig, arma: &ArmaParams) -> Result<WindSeries> {
    cfg.validate()?;
    arma.validate()?;

    let n = cfg.sample_count();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut filter = ArmaFilter::new(arma.clone());
    let draw = |rng: &mut ChaCha8Rng| -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        arma.noise_std * z
    };
    for _ in 0..BURN_IN_SAMPLES {
        filter.step(draw(&mut rng));
    }
    let raw: Vec<f64> = (0..n).map(|_| filter.step(draw(&mut rng))).collect();

    let s = SeriesStats::of(&raw);
    let sigma = cfg.turbulence_intensity * cfg.v_mean;
    let v = raw
        .iter()
        .map(|g| {
            let g_hat = if s.std > 0.0 {
                (g - s.mean) / s.std
            } else {
                0.0
            };
            (cfg.v_mean + sigma * g_hat).max(0.0)
        })
        .collect();
    WindSeries::from_samples(cfg.dt, v)
}
