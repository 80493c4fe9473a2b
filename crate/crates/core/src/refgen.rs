//! Reference pitch schedule used to train every controller.
//!
//! Below rated wind the pitch sits at its mechanical minimum and the rotor
//! tracks the optimal tip-speed ratio. Above rated the rotor is held at rated
//! speed and the pitch is the root of `Cp(lambda, beta) = required_cp(v)`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::turbine::{aerodynamic_power, tip_speed_ratio, TurbineParams};

const CP_TOLERANCE: f64 = 1e-6;
const MAX_BISECTIONS: usize = 200;

/// Cp needed to deliver rated power at wind speed `v`. Not capped.
pub fn required_cp(v: f64, params: &TurbineParams) -> f64 {
    params.p_rated / params.wind_power(v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchSolution {
    pub beta: f64,
    /// Even maximum pitch leaves more than rated power in the rotor.
    pub saturated: bool,
}

/// Pitch that yields rated power at `(v, omega)`, or minimum pitch below rated.
pub fn optimal_pitch(v: f64, omega: f64, params: &TurbineParams) -> Result<PitchSolution> {
    if !(params.v_cutin..=params.v_cutout).contains(&v) {
        return Err(Error::Domain(format!(
            "wind speed {v} outside [{}, {}]",
            params.v_cutin, params.v_cutout
        )));
    }
    let at_min = PitchSolution {
        beta: params.beta_min,
        saturated: false,
    };
    if v <= params.v_rated {
        return Ok(at_min);
    }
    let lambda = tip_speed_ratio(omega, v, params.radius)?;
    let target = required_cp(v, params);
    let gap = |beta: f64| params.cp(lambda, beta) - target;

    let (mut lo, mut hi) = (params.beta_min, params.beta_max);
    if gap(lo) <= 0.0 {
        return Ok(at_min);
    }
    if gap(hi) > 0.0 {
        return Ok(PitchSolution {
            beta: hi,
            saturated: true,
        });
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let g = gap(mid);
        if g.abs() < CP_TOLERANCE {
            return Ok(PitchSolution {
                beta: mid,
                saturated: false,
            });
        }
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(PitchSolution {
        beta: 0.5 * (lo + hi),
        saturated: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSample {
    pub v: f64,
    pub p_pu: f64,
    pub omega_pu: f64,
    pub beta_star: f64,
    #[serde(skip)]
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceDataset {
    samples: Vec<ReferenceSample>,
    v_grid_step: f64,
}

/// Rotor speed at steady operation: optimal tip-speed ratio capped at rated.
pub fn equilibrium_omega(v: f64, params: &TurbineParams) -> f64 {
    let rated = params.rated_point();
    (rated.lambda_star * v / params.radius).min(rated.omega_rated)
}

pub fn build_training_set(
    params: &TurbineParams,
    v_min: f64,
    v_max: f64,
    step: f64,
) -> Result<ReferenceDataset> {
    params.validate()?;
    if !(step > 0.0) {
        return Err(invalid("step", "must be positive"));
    }
    if !(params.v_cutin <= v_min && v_min <= v_max && v_max <= params.v_cutout) {
        return Err(invalid(
            "v_min",
            "need v_cutin <= v_min <= v_max <= v_cutout",
        ));
    }
    let rated = params.rated_point();
    let count = ((v_max - v_min) / step + 1e-9).floor() as usize + 1;
    let mut samples = Vec::with_capacity(count);
    for i in 0..count {
        let v = v_min + i as f64 * step;
        let omega = (rated.lambda_star * v / params.radius).min(rated.omega_rated);
        let sol = optimal_pitch(v, omega, params)?;
        let aero = aerodynamic_power(v, omega, sol.beta, params)?;
        samples.push(ReferenceSample {
            v,
            p_pu: (aero.power / params.p_rated).min(1.0),
            omega_pu: omega / rated.omega_rated,
            beta_star: sol.beta,
            saturated: sol.saturated,
        });
    }
    let ds = ReferenceDataset {
        samples,
        v_grid_step: step,
    };
    ds.check_monotone(params.v_rated)?;
    Ok(ds)
}

impl ReferenceDataset {
    /// Builds a dataset from arbitrary rows, sorting by wind speed.
    pub fn from_samples(mut samples: Vec<ReferenceSample>) -> Result<Self> {
        if samples.iter().any(|s| {
            ![s.v, s.p_pu, s.omega_pu, s.beta_star]
                .iter()
                .all(|x| x.is_finite())
        }) {
            return Err(Error::Parse("non-finite value in dataset".into()));
        }
        samples.sort_by(|a, b| a.v.total_cmp(&b.v));
        let v_grid_step = match samples.as_slice() {
            [first, second, ..] => second.v - first.v,
            _ => 0.0,
        };
        Ok(Self {
            samples,
            v_grid_step,
        })
    }

    pub fn samples(&self) -> &[ReferenceSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn v_grid_step(&self) -> f64 {
        self.v_grid_step
    }

    /// Rejects a decreasing `beta_star` among rows with `v >= v_rated`.
    pub fn check_monotone(&self, v_rated: f64) -> Result<()> {
        let above: Vec<_> = self.samples.iter().filter(|s| s.v >= v_rated).collect();
        for pair in above.windows(2) {
            if pair[1].beta_star < pair[0].beta_star {
                return Err(Error::Invariant(format!(
                    "beta_star decreases from {} at v = {} to {} at v = {}",
                    pair[0].beta_star, pair[0].v, pair[1].beta_star, pair[1].v
                )));
            }
        }
        Ok(())
    }

    /// Root-mean-square error of `predict` against `beta_star`, in degrees.
    pub fn pitch_rmse(&self, predict: impl Fn(&ReferenceSample) -> f64) -> f64 {
        let sq: f64 = self
            .samples
            .iter()
            .map(|s| (predict(s) - s.beta_star).powi(2))
            .sum();
        (sq / self.samples.len().max(1) as f64).sqrt()
    }

    /// Deterministic interleaved split: every `stride`-th row starting at
    /// `offset` is held out. Returns `(train, held_out)`.
    pub fn split_interleaved(&self, stride: usize, offset: usize) -> (Self, Self) {
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for (i, s) in self.samples.iter().enumerate() {
            if stride > 0 && i % stride == offset % stride {
                test.push(*s);
            } else {
                train.push(*s);
            }
        }
        let wrap = |samples| Self {
            samples,
            v_grid_step: self.v_grid_step,
        };
        (wrap(train), wrap(test))
    }

    /// The 80/20 split used throughout: rows with index 2 mod 5 are held out.
    pub fn holdout_split(&self) -> (Self, Self) {
        self.split_interleaved(5, 2)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for s in &self.samples {
            w.serialize(s)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        let expected = ["v", "p_pu", "omega_pu", "beta_star"];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Parse(format!(
                "dataset header must be `{}`, got `{}`",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let samples = r
            .deserialize()
            .collect::<std::result::Result<Vec<ReferenceSample>, _>>()?;
        Self::from_samples(samples)
    }
}
