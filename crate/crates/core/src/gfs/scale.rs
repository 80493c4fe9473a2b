use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// The seven linguistic values, coded 1 (very small) to 7 (very large).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Term {
    VerySmall = 1,
    Small = 2,
    MediumSmall = 3,
    Medium = 4,
    MediumLarge = 5,
    Large = 6,
    VeryLarge = 7,
}

impl Term {
    pub const ALL: [Term; 7] = [
        Term::VerySmall,
        Term::Small,
        Term::MediumSmall,
        Term::Medium,
        Term::MediumLarge,
        Term::Large,
        Term::VeryLarge,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            1..=7 => Ok(Self::ALL[code as usize - 1]),
            _ => Err(Error::Parse(format!(
                "linguistic code {code} is not in 1..=7"
            ))),
        }
    }

    pub fn index(self) -> usize {
        self as usize - 1
    }

    pub fn abbrev(self) -> &'static str {
        ["VS", "S", "MS", "M", "ML", "L", "VL"][self.index()]
    }

    pub fn name(self) -> &'static str {
        [
            "VERY SMALL",
            "SMALL",
            "MEDIUM SMALL",
            "MEDIUM",
            "MEDIUM LARGE",
            "LARGE",
            "VERY LARGE",
        ][self.index()]
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.abbrev())
    }
}

/// Triangle with `left <= peak <= right`. `left == peak` (or `right == peak`)
/// marks a shoulder that stays at 1 beyond the peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Triangle {
    pub left: f64,
    pub peak: f64,
    pub right: f64,
}

impl Triangle {
    pub fn degree(&self, x: f64) -> f64 {
        if x == self.peak {
            1.0
        } else if x < self.peak {
            if self.left == self.peak {
                1.0
            } else {
                ((x - self.left) / (self.peak - self.left)).max(0.0)
            }
        } else if self.right == self.peak {
            1.0
        } else {
            ((self.right - x) / (self.right - self.peak)).max(0.0)
        }
    }
}

/// Seven triangular membership functions over `[lo, hi]`. Each triangle
/// reaches from the previous peak to the next one; the end ones are
/// shouldered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinguisticScale {
    lo: f64,
    hi: f64,
    triangles: [Triangle; 7],
}

impl LinguisticScale {
    /// Evenly spaced peaks from `lo` to `hi`.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let step = (hi - lo) / 6.0;
        let mut peaks = [0.0; 7];
        for (i, p) in peaks.iter_mut().enumerate() {
            *p = lo + i as f64 * step;
        }
        peaks[6] = hi;
        Self::from_peaks(peaks)
    }

    /// Scale spanning `[peaks[0], peaks[6]]` with strictly increasing peaks.
    pub fn from_peaks(peaks: [f64; 7]) -> Result<Self> {
        if !peaks.iter().all(|p| p.is_finite()) || !peaks.windows(2).all(|w| w[0] < w[1]) {
            return Err(invalid("peaks", "must be finite and strictly increasing"));
        }
        let triangles = std::array::from_fn(|i| Triangle {
            left: peaks[i.saturating_sub(1)],
            peak: peaks[i],
            right: peaks[(i + 1).min(6)],
        });
        Ok(Self {
            lo: peaks[0],
            hi: peaks[6],
            triangles,
        })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn peaks(&self) -> [f64; 7] {
        self.triangles.map(|t| t.peak)
    }

    pub fn peak(&self, term: Term) -> f64 {
        self.triangles[term.index()].peak
    }

    pub fn triangle(&self, term: Term) -> Triangle {
        self.triangles[term.index()]
    }

    /// Degree of `x` in `term`; `x` outside the range is clamped onto it.
    pub fn membership(&self, x: f64, term: Term) -> f64 {
        self.triangles[term.index()].degree(x.clamp(self.lo, self.hi))
    }

    /// Term with the highest membership; ties go to the lower code.
    pub fn classify(&self, x: f64) -> Term {
        let mut best = Term::VerySmall;
        let mut best_mu = f64::NEG_INFINITY;
        for term in Term::ALL {
            let mu = self.membership(x, term);
            if mu > best_mu {
                best = term;
                best_mu = mu;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_round_trip() {
        for (i, t) in Term::ALL.iter().enumerate() {
            assert_eq!(t.code() as usize, i + 1);
            assert_eq!(Term::from_code(t.code()).unwrap(), *t);
        }
        assert!(Term::from_code(0).is_err());
        assert!(Term::from_code(8).is_err());
    }

    #[test]
    fn peak_and_midpoint_degrees() {
        let s = LinguisticScale::uniform(4.0, 25.0).unwrap();
        for t in Term::ALL {
            assert_eq!(s.membership(s.peak(t), t), 1.0);
        }
        for w in Term::ALL.windows(2) {
            let mid = 0.5 * (s.peak(w[0]) + s.peak(w[1]));
            assert!((s.membership(mid, w[0]) - 0.5).abs() < 1e-12);
            assert!((s.membership(mid, w[1]) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn partition_of_unity() {
        for (lo, hi) in [(4.0, 25.0), (-2.0, 30.0)] {
            let s = LinguisticScale::uniform(lo, hi).unwrap();
            let n = ((hi - lo) / 0.01).round() as usize;
            for i in 0..=n {
                let x = lo + i as f64 * 0.01;
                let total: f64 = Term::ALL.iter().map(|t| s.membership(x, *t)).sum();
                assert!((total - 1.0).abs() < 1e-9, "x = {x}: {total}");
            }
        }
    }

    #[test]
    fn shoulders_hold_outside_range() {
        let s = LinguisticScale::uniform(4.0, 25.0).unwrap();
        assert_eq!(s.membership(1.0, Term::VerySmall), 1.0);
        assert_eq!(s.membership(30.0, Term::VeryLarge), 1.0);
        assert_eq!(s.membership(30.0, Term::Large), 0.0);
    }

    #[test]
    fn classify_picks_nearest_peak() {
        let s = LinguisticScale::uniform(-2.0, 30.0).unwrap();
        assert_eq!(s.classify(-2.0), Term::VerySmall);
        assert_eq!(s.classify(15.3), Term::Medium);
        assert_eq!(s.classify(30.0), Term::VeryLarge);
    }

    #[test]
    fn rejects_unordered_peaks() {
        assert!(LinguisticScale::from_peaks([0.0, 1.0, 2.0, 2.0, 4.0, 5.0, 6.0]).is_err());
    }
}
