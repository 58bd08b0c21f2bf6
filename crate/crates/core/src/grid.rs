use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform sampling grid starting at t = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct TimeGrid {
    sampling_rate: f64,
    n_samples: usize,
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    sampling_rate: f64,
    n_samples: usize,
}

impl TryFrom<RawGrid> for TimeGrid {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        TimeGrid::new(raw.sampling_rate, raw.n_samples)
    }
}

impl From<TimeGrid> for RawGrid {
    fn from(g: TimeGrid) -> Self {
        RawGrid {
            sampling_rate: g.sampling_rate,
            n_samples: g.n_samples,
        }
    }
}

impl Default for TimeGrid {
    /// 1000 samples at 100 Hz.
    fn default() -> Self {
        Self {
            sampling_rate: 100.0,
            n_samples: 1000,
        }
    }
}

impl TimeGrid {
    pub fn new(sampling_rate: f64, n_samples: usize) -> Result<Self> {
        if !(sampling_rate.is_finite() && sampling_rate > 0.0) {
            return Err(Error::invalid(format!(
                "sampling rate must be positive, got {sampling_rate}"
            )));
        }
        if n_samples == 0 {
            return Err(Error::invalid("grid needs at least one sample"));
        }
        Ok(Self {
            sampling_rate,
            n_samples,
        })
    }

    /// Grid covering `duration` seconds: `n_samples = round(rate * duration)`.
    pub fn with_duration(sampling_rate: f64, duration: f64) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::invalid(format!(
                "duration must be positive, got {duration}"
            )));
        }
        let n = (sampling_rate * duration).round();
        if n < 1.0 {
            return Err(Error::invalid("duration shorter than one sample"));
        }
        Self::new(sampling_rate, n as usize)
    }

    pub fn sampling_rate(&self) -> f64 {
        self.sampling_rate
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn duration(&self) -> f64 {
        self.n_samples as f64 / self.sampling_rate
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sampling_rate
    }

    #[inline]
    pub fn time(&self, index: usize) -> f64 {
        index as f64 / self.sampling_rate
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_samples).map(move |k| self.time(k))
    }

    /// Nearest sample index for time `t`, if it falls on the grid.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let k = (t * self.sampling_rate).round();
        (k >= 0.0 && k < self.n_samples as f64).then_some(k as usize)
    }

    /// Whole number of samples closest to `seconds`.
    pub fn samples_in(&self, seconds: f64) -> isize {
        (seconds * self.sampling_rate).round() as isize
    }

    /// Sample offsets `k` with `k / rate` inside the closed interval `[start, end]`.
    pub fn offsets_within(&self, start: f64, end: f64) -> std::ops::RangeInclusive<isize> {
        const EPS: f64 = 1e-9;
        let lo = (start * self.sampling_rate - EPS).ceil() as isize;
        let hi = (end * self.sampling_rate + EPS).floor() as isize;
        lo..=hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_ten_seconds_at_100hz() {
        let g = TimeGrid::default();
        assert_eq!(g.n_samples(), 1000);
        assert_eq!(g.sampling_rate(), 100.0);
        assert_eq!(g.duration(), 10.0);
    }

    #[test]
    fn with_duration_rounds() {
        assert_eq!(TimeGrid::with_duration(100.0, 10.0).unwrap().n_samples(), 1000);
        assert_eq!(TimeGrid::with_duration(250.0, 2.001).unwrap().n_samples(), 500);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TimeGrid::new(0.0, 10).is_err());
        assert!(TimeGrid::new(f64::NAN, 10).is_err());
        assert!(TimeGrid::new(100.0, 0).is_err());
        assert!(serde_json::from_str::<TimeGrid>(r#"{"sampling_rate":-1,"n_samples":3}"#).is_err());
    }

    #[test]
    fn window_offsets_are_robust_to_float_products() {
        let g = TimeGrid::default();
        // 0.04 * 100 is 4.000000000000001 in floating point
        assert_eq!(g.offsets_within(0.04, 0.12), 4..=12);
        assert_eq!(g.offsets_within(-0.04, 0.04), -4..=4);
    }
}
