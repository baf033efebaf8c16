use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// PHAT regularization floor.
pub const PHAT_EPSILON: f64 = 1e-12;

/// Minimum frame length accepted by [`gcc`].
pub const MIN_GCC_LEN: usize = 16;

/// Cross-spectrum weighting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Phase transform: every bin whitened to unit magnitude.
    Phat,
    /// Constant weighting, i.e. plain cross-correlation.
    Const,
}

/// `1 / max(|X1(w) X2(w)*|, eps)` for one cross-spectrum bin.
pub fn phat_weight(cross_spectrum_bin: Complex64) -> f64 {
    1.0 / cross_spectrum_bin.norm().max(PHAT_EPSILON)
}

/// Generalized cross-correlation over the symmetric lag range `-max_lag..=max_lag`.
///
/// `value_at(l)` is `sum_n x1[n] * x2[n + l]` after weighting, so a copy of
/// `x1` delayed by `d` samples in `x2` peaks at lag `+d`.
#[derive(Debug, Clone, PartialEq)]
pub struct GccFunction {
    max_lag: usize,
    values: Vec<f64>,
}

impl GccFunction {
    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    pub fn lags(&self) -> impl Iterator<Item = i64> {
        let m = self.max_lag as i64;
        -m..=m
    }

    /// Values in lag order, starting at `-max_lag`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at `lag`; zero outside the stored range.
    #[inline]
    pub fn value_at(&self, lag: i64) -> f64 {
        let idx = lag + self.max_lag as i64;
        if idx < 0 || idx as usize >= self.values.len() {
            0.0
        } else {
            self.values[idx as usize]
        }
    }

    /// Lag of the largest value; the most negative lag wins ties.
    pub fn argmax_lag(&self) -> i64 {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        best as i64 - self.max_lag as i64
    }
}

/// Zero-padded spectra of a set of equal-length channels, shared by all pairs.
pub(crate) struct ChannelSpectra {
    fft_len: usize,
    spectra: Vec<Vec<Complex64>>,
}

impl ChannelSpectra {
    /// FFT length is the next power of two at or above twice the frame
    /// length, so the circular correlation never wraps.
    pub(crate) fn new(channels: &[&[f64]]) -> Self {
        let n = channels.first().map_or(0, |c| c.len());
        let fft_len = (2 * n).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(fft_len);
        let spectra = channels
            .iter()
            .map(|ch| {
                let mut buf: Vec<Complex64> = ch.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                buf.resize(fft_len, Complex64::new(0.0, 0.0));
                fft.process(&mut buf);
                buf
            })
            .collect();
        Self { fft_len, spectra }
    }

    /// Weighted correlation of channels `a` and `b` for lags up to `max_lag`.
    pub(crate) fn correlate(
        &self,
        a: usize,
        b: usize,
        weighting: Weighting,
        max_lag: usize,
        planner: &mut FftPlanner<f64>,
    ) -> GccFunction {
        let ifft = planner.plan_fft_inverse(self.fft_len);
        let mut cross: Vec<Complex64> = self.spectra[a]
            .iter()
            .zip(&self.spectra[b])
            .map(|(x1, x2)| {
                let bin = x1.conj() * x2;
                match weighting {
                    Weighting::Const => bin,
                    Weighting::Phat => bin * phat_weight(bin),
                }
            })
            .collect();
        ifft.process(&mut cross);
        let scale = 1.0 / self.fft_len as f64;
        let max_lag = max_lag.min(self.fft_len / 2 - 1);
        let values = (-(max_lag as i64)..=max_lag as i64)
            .map(|lag| {
                let idx = lag.rem_euclid(self.fft_len as i64) as usize;
                cross[idx].re * scale
            })
            .collect();
        GccFunction { max_lag, values }
    }

    /// Zero-lag weighted autocorrelation of channel `a`.
    pub(crate) fn zero_lag_energy(&self, a: usize, weighting: Weighting) -> f64 {
        let sum: f64 = self.spectra[a]
            .iter()
            .map(|x| {
                let p = x.norm_sqr();
                match weighting {
                    Weighting::Const => p,
                    Weighting::Phat => p * phat_weight(Complex64::new(p, 0.0)),
                }
            })
            .sum();
        sum / self.fft_len as f64
    }
}

/// Weighted cross-correlation of two equally long channels over every lag
/// `-(N-1)..=N-1`.
pub fn gcc(x1: &[f64], x2: &[f64], weighting: Weighting) -> Result<GccFunction> {
    if x1.len() != x2.len() {
        return Err(Error::Shape(format!(
            "gcc inputs differ in length: {} vs {}",
            x1.len(),
            x2.len()
        )));
    }
    if x1.len() < MIN_GCC_LEN {
        return Err(Error::Shape(format!(
            "gcc needs at least {MIN_GCC_LEN} samples, got {}",
            x1.len()
        )));
    }
    let spectra = ChannelSpectra::new(&[x1, x2]);
    let mut planner = FftPlanner::new();
    Ok(spectra.correlate(0, 1, weighting, x1.len() - 1, &mut planner))
}
