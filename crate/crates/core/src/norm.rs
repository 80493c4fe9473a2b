//! Affine scaling between physical units and the unit interval.

use serde::{Deserialize, Serialize};

use crate::turbine::TurbineParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: f64,
    pub hi: f64,
}

impl Bounds {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    /// Maps `lo..hi` onto `0..1` (no clamping).
    pub fn scale(&self, x: f64) -> f64 {
        (x - self.lo) / (self.hi - self.lo)
    }

    pub fn unscale(&self, y: f64) -> f64 {
        self.lo + y * (self.hi - self.lo)
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    pub fn is_valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi
    }
}

/// Per-unit power range seen by the controllers.
pub const P_PU_BOUNDS: Bounds = Bounds::new(0.0, 1.05);
/// Per-unit rotor speed range seen by the RBF controller.
pub const OMEGA_PU_BOUNDS: Bounds = Bounds::new(0.0, 1.2);

pub fn wind_bounds(params: &TurbineParams) -> Bounds {
    Bounds::new(params.v_cutin, params.v_cutout)
}

pub fn pitch_bounds(params: &TurbineParams) -> Bounds {
    Bounds::new(params.beta_min, params.beta_max)
}
