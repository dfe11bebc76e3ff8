use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Equal-width margin bins over `[lo, hi)`; scores outside clamp to the edge
/// bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinLayout {
    pub lo: f64,
    pub hi: f64,
    pub n_bins: u32,
}

impl Default for BinLayout {
    fn default() -> Self {
        BinLayout {
            lo: 1.0,
            hi: 1.5,
            n_bins: 500,
        }
    }
}

impl BinLayout {
    pub fn new(lo: f64, hi: f64, n_bins: u32) -> Result<Self> {
        let layout = BinLayout { lo, hi, n_bins };
        layout.validate()?;
        Ok(layout)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::config(format!(
                "bin layout needs finite lo < hi, got [{}, {})",
                self.lo, self.hi
            )));
        }
        if self.n_bins == 0 {
            return Err(Error::config("bin layout needs at least one bin"));
        }
        Ok(())
    }

    pub fn bin_of(&self, margin: f64) -> u32 {
        let width = (self.hi - self.lo) / self.n_bins as f64;
        let idx = ((margin - self.lo) / width).floor();
        if idx <= 0.0 {
            0
        } else if idx >= (self.n_bins - 1) as f64 {
            self.n_bins - 1
        } else {
            idx as u32
        }
    }
}

impl std::str::FromStr for BinLayout {
    type Err = Error;

    /// `lo:hi:n_bins`, e.g. `1.0:1.5:500`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::config(format!("bin layout must be lo:hi:n_bins, got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo = parts[0].trim().parse().map_err(|_| bad())?;
        let hi = parts[1].trim().parse().map_err(|_| bad())?;
        let n = parts[2].trim().parse().map_err(|_| bad())?;
        BinLayout::new(lo, hi, n)
    }
}
