//! Additive Gaussian beat model.
//!
//! A beat is the sum of five Gaussian kernels (P, Q, R, S, T), each
//! `a * exp(-(t - t_c)^2 / (2 b^2))` with center `t_c` measured from the beat
//! onset (start of the P-wave window). Components are kept as separate traces
//! so the lead projection can weight each wave independently.

use std::ops::{Index, IndexMut};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::grid::TimeGrid;
use crate::record::Label;

/// Rejection-sampling cap for beat parameters.
pub const MAX_SAMPLE_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Wave {
    P,
    Q,
    R,
    S,
    T,
}

impl Wave {
    pub const ALL: [Wave; 5] = [Wave::P, Wave::Q, Wave::R, Wave::S, Wave::T];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// One value per wave, serialized as `{"p": .., "q": .., ...}`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerWave<T> {
    pub p: T,
    pub q: T,
    pub r: T,
    pub s: T,
    pub t: T,
}

impl<T> PerWave<T> {
    pub fn from_fn(mut f: impl FnMut(Wave) -> T) -> Self {
        PerWave {
            p: f(Wave::P),
            q: f(Wave::Q),
            r: f(Wave::R),
            s: f(Wave::S),
            t: f(Wave::T),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Wave, &T)> {
        Wave::ALL.into_iter().map(move |w| (w, &self[w]))
    }
}

impl<T> Index<Wave> for PerWave<T> {
    type Output = T;

    fn index(&self, w: Wave) -> &T {
        match w {
            Wave::P => &self.p,
            Wave::Q => &self.q,
            Wave::R => &self.r,
            Wave::S => &self.s,
            Wave::T => &self.t,
        }
    }
}

impl<T> IndexMut<Wave> for PerWave<T> {
    fn index_mut(&mut self, w: Wave) -> &mut T {
        match w {
            Wave::P => &mut self.p,
            Wave::Q => &mut self.q,
            Wave::R => &mut self.r,
            Wave::S => &mut self.s,
            Wave::T => &mut self.t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveKernel {
    /// Seconds from beat onset.
    pub center: f64,
    /// Millivolts, signed.
    pub amplitude: f64,
    /// Gaussian width in seconds.
    pub width: f64,
}

impl WaveKernel {
    pub fn new(center: f64, amplitude: f64, width: f64) -> Self {
        Self {
            center,
            amplitude,
            width,
        }
    }

    #[inline]
    fn eval(&self, t: f64) -> f64 {
        let d = t - self.center;
        self.amplitude * (-(d * d) / (2.0 * self.width * self.width)).exp()
    }
}

/// `a * exp(-(t - t_c)^2 / (2 b^2))`.
pub fn gaussian_kernel_value(t: f64, kernel: &WaveKernel) -> Result<f64> {
    ensure_finite("t", t)?;
    ensure_finite("kernel center", kernel.center)?;
    ensure_finite("kernel amplitude", kernel.amplitude)?;
    ensure_finite("kernel width", kernel.width)?;
    if kernel.width <= 0.0 {
        return Err(Error::invalid(format!(
            "kernel width must be positive, got {}",
            kernel.width
        )));
    }
    Ok(kernel.eval(t))
}

/// Five kernels describing one beat.
pub type BeatParams = PerWave<WaveKernel>;

impl PerWave<WaveKernel> {
    /// Finite values, positive widths, positive R, strictly ordered centers.
    pub fn validate(&self) -> Result<()> {
        for (w, k) in self.iter() {
            if !(k.center.is_finite() && k.amplitude.is_finite() && k.width.is_finite()) {
                return Err(Error::invalid(format!("{w:?} kernel has non-finite values")));
            }
            if k.width <= 0.0 {
                return Err(Error::invalid(format!("{w:?} width must be positive")));
            }
        }
        if self.r.amplitude <= 0.0 {
            return Err(Error::invalid("R amplitude must be positive"));
        }
        let ordered = Wave::ALL
            .windows(2)
            .all(|pair| self[pair[0]].center < self[pair[1]].center);
        if !ordered {
            return Err(Error::invalid("wave centers must satisfy P < Q < R < S < T"));
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gauss {
    pub mean: f64,
    pub sd: f64,
}

impl Gauss {
    pub const fn new(mean: f64, sd: f64) -> Self {
        Self { mean, sd }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.mean + self.sd * z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelDistribution {
    pub center: Gauss,
    pub amplitude: Gauss,
    pub width: Gauss,
}

impl KernelDistribution {
    const fn new(center: Gauss, amplitude: Gauss, width: Gauss) -> Self {
        Self {
            center,
            amplitude,
            width,
        }
    }

    fn means(&self) -> WaveKernel {
        WaveKernel::new(self.center.mean, self.amplitude.mean, self.width.mean)
    }
}

/// Class-conditioned normal distributions over every kernel parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDistribution {
    pub label: Label,
    pub waves: PerWave<KernelDistribution>,
}

const fn g(mean: f64, sd: f64) -> Gauss {
    Gauss::new(mean, sd)
}

impl ParamDistribution {
    /// Implementation defaults for a healthy adult beat.
    pub fn normal() -> Self {
        Self {
            label: Label::Normal,
            waves: PerWave {
                p: KernelDistribution::new(g(0.10, 0.008), g(0.15, 0.02), g(0.025, 0.003)),
                q: KernelDistribution::new(g(0.23, 0.004), g(-0.10, 0.02), g(0.010, 0.001)),
                r: KernelDistribution::new(g(0.25, 0.004), g(1.20, 0.10), g(0.012, 0.001)),
                s: KernelDistribution::new(g(0.27, 0.004), g(-0.25, 0.04), g(0.010, 0.001)),
                t: KernelDistribution::new(g(0.45, 0.015), g(0.30, 0.04), g(0.050, 0.005)),
            },
        }
    }

    /// Baseline morphology for MI records, before the infarction transform.
    ///
    /// Slightly lower R, flatter and more variable T.
    pub fn mi() -> Self {
        let mut d = Self::normal();
        d.label = Label::Mi;
        d.waves.r.amplitude = g(1.10, 0.12);
        d.waves.t.amplitude = g(0.25, 0.06);
        d
    }

    pub fn for_label(label: Label) -> Self {
        match label {
            Label::Normal => Self::normal(),
            Label::Mi => Self::mi(),
        }
    }

    pub fn means(&self) -> BeatParams {
        PerWave::from_fn(|w| self.waves[w].means())
    }

    pub fn validate(&self) -> Result<()> {
        for (w, k) in self.waves.iter() {
            for (name, gauss) in [("center", k.center), ("amplitude", k.amplitude), ("width", k.width)] {
                if !(gauss.mean.is_finite() && gauss.sd.is_finite() && gauss.sd >= 0.0) {
                    return Err(Error::invalid(format!(
                        "{w:?} {name}: mean must be finite and sd finite and non-negative"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Draws a beat from `dist`, redrawing until the beat is valid.
pub fn sample_beat_params<R: Rng + ?Sized>(dist: &ParamDistribution, rng: &mut R) -> Result<BeatParams> {
    dist.validate()?;
    for _ in 0..MAX_SAMPLE_ATTEMPTS {
        let params = PerWave::from_fn(|w| {
            let k = &dist.waves[w];
            WaveKernel::new(k.center.draw(rng), k.amplitude.draw(rng), k.width.draw(rng))
        });
        if params.is_valid() {
            return Ok(params);
        }
    }
    Err(Error::DegenerateDistribution {
        attempts: MAX_SAMPLE_ATTEMPTS,
    })
}

/// Five component traces (P, Q, R, S, T) on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceRecord {
    grid: TimeGrid,
    components: PerWave<Vec<f64>>,
}

impl SourceRecord {
    pub fn zeros(grid: TimeGrid) -> Self {
        Self {
            grid,
            components: PerWave::from_fn(|_| vec![0.0; grid.n_samples()]),
        }
    }

    pub fn from_components(grid: TimeGrid, components: PerWave<Vec<f64>>) -> Result<Self> {
        for (w, c) in components.iter() {
            if c.len() != grid.n_samples() {
                return Err(Error::invalid(format!(
                    "{w:?} component has {} samples, grid has {}",
                    c.len(),
                    grid.n_samples()
                )));
            }
        }
        Ok(Self { grid, components })
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn component(&self, w: Wave) -> &[f64] {
        &self.components[w]
    }

    pub fn components(&self) -> &PerWave<Vec<f64>> {
        &self.components
    }

    /// Scalar source beat train: sum of the five components.
    pub fn sum(&self) -> Vec<f64> {
        (0..self.grid.n_samples())
            .map(|k| Wave::ALL.iter().map(|&w| self.components[w][k]).sum())
            .collect()
    }

    fn add_beat(&mut self, params: &BeatParams, onset: f64) {
        for w in Wave::ALL {
            let kernel = WaveKernel {
                center: params[w].center + onset,
                ..params[w]
            };
            for (k, v) in self.components[w].iter_mut().enumerate() {
                *v += kernel.eval(self.grid.time(k));
            }
        }
    }
}

fn check_onset(onset: f64, grid: &TimeGrid) -> Result<()> {
    if !(onset.is_finite() && onset >= 0.0 && onset < grid.duration()) {
        return Err(Error::invalid(format!(
            "beat onset {onset} outside [0, {})",
            grid.duration()
        )));
    }
    Ok(())
}

/// Samples one beat starting at `beat_onset` seconds.
pub fn synth_beat(params: &BeatParams, grid: TimeGrid, beat_onset: f64) -> Result<SourceRecord> {
    params.validate()?;
    check_onset(beat_onset, &grid)?;
    let mut out = SourceRecord::zeros(grid);
    out.add_beat(params, beat_onset);
    Ok(out)
}

/// Linear superposition of beats; onsets must be strictly increasing.
pub fn assemble_beat_train(beats: &[(f64, BeatParams)], grid: TimeGrid) -> Result<SourceRecord> {
    let mut prev = f64::NEG_INFINITY;
    for (onset, params) in beats {
        check_onset(*onset, &grid)?;
        if *onset <= prev {
            return Err(Error::invalid("beat onsets must be strictly increasing"));
        }
        params.validate()?;
        prev = *onset;
    }
    let mut out = SourceRecord::zeros(grid);
    for (onset, params) in beats {
        out.add_beat(params, *onset);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use approx::assert_relative_eq;

    fn lone_r(amplitude: f64, width: f64) -> BeatParams {
        let mut p = ParamDistribution::normal().means();
        for w in Wave::ALL {
            p[w].amplitude = 0.0;
        }
        p.r = WaveKernel::new(0.25, amplitude, width);
        p
    }

    #[test]
    fn kernel_peak_and_half_width() {
        let k = WaveKernel::new(0.3, -0.7, 0.02);
        assert_eq!(gaussian_kernel_value(0.3, &k).unwrap(), -0.7);
        let k = WaveKernel::new(1.0, 1.0, 0.05);
        assert_relative_eq!(gaussian_kernel_value(1.05, &k).unwrap(), (-0.5f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(gaussian_kernel_value(1.05, &k).unwrap(), 0.60653, epsilon = 1e-5);
        let k = WaveKernel::new(1.0, 0.0, 0.05);
        assert_eq!(gaussian_kernel_value(-3.0, &k).unwrap(), 0.0);
    }

    #[test]
    fn kernel_rejects_bad_input() {
        let k = WaveKernel::new(0.0, 1.0, 0.0);
        assert!(gaussian_kernel_value(0.0, &k).is_err());
        let k = WaveKernel::new(0.0, 1.0, 0.1);
        assert!(gaussian_kernel_value(f64::NAN, &k).is_err());
        let k = WaveKernel::new(f64::INFINITY, 1.0, 0.1);
        assert!(gaussian_kernel_value(0.0, &k).is_err());
    }

    #[test]
    fn zero_sd_returns_means() {
        let mut dist = ParamDistribution::normal();
        for w in Wave::ALL {
            dist.waves[w].center.sd = 0.0;
            dist.waves[w].amplitude.sd = 0.0;
            dist.waves[w].width.sd = 0.0;
        }
        let p = sample_beat_params(&dist, &mut SeededRng::new(5)).unwrap();
        assert_eq!(p, dist.means());
    }

    #[test]
    fn sampling_is_deterministic() {
        let dist = ParamDistribution::normal();
        let a = sample_beat_params(&dist, &mut SeededRng::new(11)).unwrap();
        let b = sample_beat_params(&dist, &mut SeededRng::new(11)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn r_amplitude_sample_mean() {
        let dist = ParamDistribution::normal();
        assert_eq!(dist.waves.r.amplitude, Gauss::new(1.2, 0.1));
        let mut rng = SeededRng::new(2024);
        let n = 10_000;
        let mean = (0..n)
            .map(|_| sample_beat_params(&dist, &mut rng).unwrap().r.amplitude)
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.2).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn impossible_ordering_is_a_degenerate_distribution() {
        let mut dist = ParamDistribution::normal();
        dist.waves.q.center = Gauss::new(0.5, 0.0);
        assert!(matches!(
            sample_beat_params(&dist, &mut SeededRng::new(1)),
            Err(Error::DegenerateDistribution { attempts: 100 })
        ));
        let mut dist = ParamDistribution::normal();
        dist.waves.t.width.sd = -1.0;
        assert!(sample_beat_params(&dist, &mut SeededRng::new(1)).is_err());
    }

    #[test]
    fn zero_amplitudes_give_zero_traces() {
        let mut p = ParamDistribution::normal().means();
        for w in Wave::ALL {
            p[w].amplitude = 0.0;
        }
        // R amplitude must stay positive for a valid beat, so build the traces directly.
        let mut rec = SourceRecord::zeros(TimeGrid::default());
        rec.add_beat(&p, 1.0);
        for w in Wave::ALL {
            assert!(rec.component(w).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn lone_r_peaks_at_its_center() {
        let grid = TimeGrid::default();
        let onset = 2.013;
        let rec = synth_beat(&lone_r(1.0, 0.02), grid, onset).unwrap();
        let r = rec.component(Wave::R);
        let argmax = (0..r.len()).max_by(|&a, &b| r[a].total_cmp(&r[b])).unwrap();
        assert_eq!(Some(argmax), grid.index_of(onset + 0.25));
    }

    #[test]
    fn component_sum_matches_pointwise_kernels() {
        let grid = TimeGrid::default();
        let params = sample_beat_params(&ParamDistribution::normal(), &mut SeededRng::new(3)).unwrap();
        let onset = 4.0;
        let rec = synth_beat(&params, grid, onset).unwrap();
        let k = grid.index_of(onset + params.r.center).unwrap();
        let t = grid.time(k);
        let oracle: f64 = Wave::ALL
            .iter()
            .map(|&w| {
                let mut kern = params[w];
                kern.center += onset;
                gaussian_kernel_value(t, &kern).unwrap()
            })
            .sum();
        assert_relative_eq!(rec.sum()[k], oracle, epsilon = 1e-12);
    }

    #[test]
    fn train_identities() {
        let grid = TimeGrid::default();
        let empty = assemble_beat_train(&[], grid).unwrap();
        assert!(empty.sum().iter().all(|&v| v == 0.0));

        let p = sample_beat_params(&ParamDistribution::normal(), &mut SeededRng::new(8)).unwrap();
        let one = assemble_beat_train(&[(1.5, p)], grid).unwrap();
        assert_eq!(one, synth_beat(&p, grid, 1.5).unwrap());
    }

    #[test]
    fn separated_beats_match_single_beats_locally() {
        let grid = TimeGrid::default();
        let mut rng = SeededRng::new(12);
        let a = sample_beat_params(&ParamDistribution::normal(), &mut rng).unwrap();
        let b = sample_beat_params(&ParamDistribution::normal(), &mut rng).unwrap();
        let train = assemble_beat_train(&[(1.0, a), (6.0, b)], grid).unwrap().sum();
        let sa = synth_beat(&a, grid, 1.0).unwrap().sum();
        let sb = synth_beat(&b, grid, 6.0).unwrap().sum();
        // windows of 2 s around each beat
        for k in 80..300 {
            assert!((train[k] - sa[k]).abs() < 1e-9);
        }
        for k in 580..800 {
            assert!((train[k] - sb[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn train_rejects_bad_onsets() {
        let grid = TimeGrid::default();
        let p = ParamDistribution::normal().means();
        assert!(assemble_beat_train(&[(2.0, p), (2.0, p)], grid).is_err());
        assert!(assemble_beat_train(&[(3.0, p), (2.0, p)], grid).is_err());
        assert!(assemble_beat_train(&[(10.0, p)], grid).is_err());
        assert!(synth_beat(&p, grid, -0.1).is_err());
    }
}
