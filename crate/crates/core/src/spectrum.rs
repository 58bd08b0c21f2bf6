//! FFT plumbing shared by the rhythm, noise and PSD code.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

pub(crate) fn fft(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    if !buf.is_empty() {
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    }
    buf
}

/// Inverse of [`fft`] for a Hermitian spectrum; returns the real part.
pub(crate) fn ifft_real(mut spectrum: Vec<Complex64>) -> Vec<f64> {
    let n = spectrum.len();
    if n == 0 {
        return Vec::new();
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut spectrum);
    spectrum.iter().map(|c| c.re / n as f64).collect()
}

/// Frequency of bin `j` of an `n`-point transform, folded to `[0, rate/2]`.
pub(crate) fn bin_frequency(j: usize, n: usize, rate: f64) -> f64 {
    let folded = if j <= n / 2 { j } else { n - j };
    folded as f64 * rate / n as f64
}

/// Periodic Hann window.
pub(crate) fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / n as f64).cos())
        .collect()
}

/// One-sided periodogram of a windowed segment, scaled to power per Hz.
///
/// Matches the density scaling of `scipy.signal.periodogram`.
pub(crate) fn one_sided_density(segment: &[f64], window: &[f64], rate: f64) -> Vec<f64> {
    let n = segment.len();
    let windowed: Vec<f64> = segment.iter().zip(window).map(|(x, w)| x * w).collect();
    let spectrum = fft(&windowed);
    let norm = rate * window.iter().map(|w| w * w).sum::<f64>();
    let half = n / 2;
    (0..=half)
        .map(|j| {
            let p = spectrum[j].norm_sqr() / norm;
            let edge = j == 0 || (n.is_multiple_of(2) && j == half);
            if edge {
                p
            } else {
                2.0 * p
            }
        })
        .collect()
}
